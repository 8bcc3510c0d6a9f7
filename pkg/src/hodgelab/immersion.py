"""Structural equations of surfaces in R^4 and their weak continuity.

The connection matrix of an immersed flat torus, in the frame
``(e_1, e_2, nu_1, nu_2)``, is the antisymmetric 4x4 matrix of 1-forms

    Omega = [[ 0,          -II(., dx) ],
             [ II(., dx),   nabla^perp ]]

with ``Omega[2+a][i] = sum_j II^a_ij dx^j``. Gauss, Codazzi and Ricci together
read ``d Omega + Omega ^ Omega = 0``. The Clifford torus gives an exact
constant-coefficient solution; oscillating Hessian perturbations of its
second fundamental form give approximate solutions whose weak limit is the
Clifford torus again.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import pi
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .errors import ExponentError, GateError, GridError, HypothesisWarning, ShapeError
from .forms import Form, exterior_derivative, lp_norm, neg_sobolev_norm, wedge
from .harness import ConvergenceTable, ExperimentResult, Verdict, weak_weak_wedge
from .hodge import coexact_projection
from .sequences import check_resolution, decay_slope, extrapolate
from .torus import TorusGrid

__all__ = ["SecondFundamentalForm", "ConnectionForm", "clifford_baseline", "assemble_connection",
           "structural_residual", "structural_form", "hessian_perturbation", "critical_exponent",
           "weak_continuity_experiment", "low_pass"]


def critical_exponent(n_dim: int) -> float:
    return 2.0 * n_dim / (n_dim + 1.0)


@dataclass
class SecondFundamentalForm:
    """``components[a, i, j] = II^a_ij``, an array of shape ``(k, 2, 2) + grid.shape``."""

    grid: TorusGrid
    components: np.ndarray

    def __post_init__(self):
        if self.grid.dim != 2:
            raise GridError("second fundamental forms are modelled on 2-tori only")
        c = np.asarray(self.components, dtype=float)
        if c.shape[1:] == (2, 2):
            c = np.broadcast_to(c.reshape(c.shape + (1, 1)), c.shape + self.grid.shape).copy()
        if c.ndim != 5 or c.shape[1:3] != (2, 2) or c.shape[3:] != self.grid.shape:
            raise ShapeError(f"components must have shape (k, 2, 2) + {self.grid.shape}")
        if not np.array_equal(c, np.swapaxes(c, 1, 2)):
            raise ShapeError("II^a_ij must be symmetric in i, j")
        self.components = c

    @property
    def codimension(self) -> int:
        return self.components.shape[0]

    def row(self, a: int, i: int) -> Form:
        """The 1-form ``sum_j II^a_ij dx^j``."""
        return Form(self.grid, 1, self.components[a, i].copy())

    def __add__(self, other: "SecondFundamentalForm") -> "SecondFundamentalForm":
        return SecondFundamentalForm(self.grid, self.components + other.components)


@dataclass
class ConnectionForm:
    """Square antisymmetric matrix of 1-forms; ``None`` entries mean zero."""

    grid: TorusGrid
    entries: list

    def __post_init__(self):
        m = len(self.entries)
        if any(len(row) != m for row in self.entries):
            raise ShapeError("connection matrix must be square")
        for A in range(m):
            for B in range(m):
                e = self.entries[A][B]
                if e is not None and (e.degree != 1 or e.grid != self.grid):
                    raise ShapeError("entries must be 1-forms on the common grid")
        if not self.is_antisymmetric():
            raise ShapeError("connection matrix must be antisymmetric")

    @property
    def size(self) -> int:
        return len(self.entries)

    def entry(self, A: int, B: int) -> Form:
        e = self.entries[A][B]
        return Form.zeros(self.grid, 1) if e is None else e

    def is_antisymmetric(self) -> bool:
        for A in range(self.size):
            for B in range(A, self.size):
                a, b = self.entries[A][B], self.entries[B][A]
                da = 0.0 if a is None else a.data
                db = 0.0 if b is None else b.data
                if np.any(np.asarray(da + db) != 0):
                    return False
        return True

    def scaled(self, t: float) -> "ConnectionForm":
        return ConnectionForm(self.grid, [[None if e is None else e * t for e in row]
                                          for row in self.entries])

    def map(self, fn) -> "ConnectionForm":
        return ConnectionForm(self.grid, [[None if e is None else fn(e) for e in row]
                                          for row in self.entries])

    def max_abs_difference(self, other: "ConnectionForm") -> float:
        if other.size != self.size:
            raise ShapeError("connection sizes differ")
        return max(float(np.max(np.abs(self.entry(A, B).data - other.entry(A, B).data)))
                   for A in range(self.size) for B in range(self.size))


def assemble_connection(II: SecondFundamentalForm,
                        normal_connection: Optional[Sequence[Sequence[Optional[Form]]]] = None
                        ) -> ConnectionForm:
    """Cartan matrix from ``II`` and the normal connection (flat tangential block)."""
    grid, k = II.grid, II.codimension
    if normal_connection is None:
        normal_connection = [[None] * k for _ in range(k)]
    if len(normal_connection) != k or any(len(r) != k for r in normal_connection):
        raise ShapeError(f"normal connection must be {k}x{k} for codimension {k}")
    m = 2 + k
    entries = [[None] * m for _ in range(m)]
    for a in range(k):
        for i in range(2):
            row = II.row(a, i)
            if np.any(row.data):
                entries[2 + a][i] = row
                entries[i][2 + a] = -row
        for b in range(k):
            entries[2 + a][2 + b] = normal_connection[a][b]
    return ConnectionForm(grid, entries)


def clifford_baseline(grid: TorusGrid):
    """``II`` and ``Omega`` of ``x -> (cos 2pi x1, sin 2pi x1, cos 2pi x2, sin 2pi x2) / 2pi``."""
    if grid.dim != 2:
        raise GridError("the Clifford torus lives over a 2-torus")
    c = np.zeros((2, 2, 2))
    c[0, 0, 0] = 2 * pi / grid.lengths[0]
    c[1, 1, 1] = 2 * pi / grid.lengths[1]
    II = SecondFundamentalForm(grid, c)
    return II, assemble_connection(II)


def structural_form(omega: ConnectionForm, weak: bool = False) -> list:
    """Entries of ``d Omega + Omega ^ Omega`` as 2-forms (``None`` for zero)."""
    m = omega.size
    prod = wedge if not weak else (lambda a, b: weak_weak_wedge(a, b).to_form())
    out = [[None] * m for _ in range(m)]
    for A in range(m):
        for B in range(m):
            acc = None
            e = omega.entries[A][B]
            if e is not None:
                acc = exterior_derivative(e)
            for C in range(m):
                x, y = omega.entries[A][C], omega.entries[C][B]
                if x is None or y is None:
                    continue
                term = prod(x, y)
                acc = term if acc is None else acc + term
            out[A][B] = acc
    return out


def structural_residual(omega: ConnectionForm, p: float, weak: bool = False) -> float:
    """``sum_{A,B} ||(d Omega + Omega ^ Omega)_AB||_{W^{-1,p}}``."""
    p = float(p)
    if not 1.0 < p < np.inf:
        raise ExponentError(f"need 1 < p < inf, got {p}")
    return float(sum(neg_sobolev_norm(f, p) for row in structural_form(omega, weak)
                     for f in row if f is not None))


def hessian_perturbation(grid: TorusGrid, n: int, amplitude: float, normal: int = 0,
                         codimension: int = 2) -> SecondFundamentalForm:
    """``Hess(phi) nu_normal`` with ``phi = A n^-2 sin(2 pi n x1) sin(2 pi n x2)``.

    Each row ``d(d_i phi)`` is exact, so coexact parts are untouched while the
    quadratic terms of the structural equations oscillate at frequency ``n``.
    """
    x1, x2 = grid.coords()
    w1, w2 = 2 * pi * n / grid.lengths[0], 2 * pi * n / grid.lengths[1]
    a = amplitude / n**2
    s1, c1, s2, c2 = np.sin(w1 * x1), np.cos(w1 * x1), np.sin(w2 * x2), np.cos(w2 * x2)
    h = np.zeros((codimension, 2, 2) + grid.shape)
    h[normal, 0, 0] = -a * w1 * w1 * s1 * s2
    h[normal, 1, 1] = -a * w2 * w2 * s1 * s2
    h[normal, 0, 1] = h[normal, 1, 0] = a * w1 * w2 * c1 * c2
    return SecondFundamentalForm(grid, h)


def low_pass(form: Form, cutoff: float) -> Form:
    """Keep Fourier modes with ``max |k_j| < cutoff`` (integer wavenumbers)."""
    grid = form.grid
    spec = np.fft.fftn(form.data, axes=tuple(range(1, grid.dim + 1)))
    keep = np.ones(grid.shape, dtype=bool)
    for ax, r in enumerate(grid.shape):
        k = np.abs(np.fft.fftfreq(r, 1.0 / r))
        keep &= (k < cutoff).reshape([-1 if j == ax else 1 for j in range(grid.dim)])
    spec[:, ~keep] = 0
    return Form(grid, form.degree, np.fft.ifftn(spec, axes=tuple(range(1, grid.dim + 1))).real)


def _normal_connection(grid, coeffs, k):
    if coeffs is None or not np.any(coeffs):
        return None
    c = np.broadcast_to(np.asarray(coeffs, dtype=float), (2,))
    f = Form.constant(grid, 1, c)
    nc = [[None] * k for _ in range(k)]
    nc[0][1], nc[1][0] = f, -f
    return nc


def _coexact_rows(II: SecondFundamentalForm) -> list:
    return [coexact_projection(II.row(a, i)) for a in range(II.codimension) for i in range(2)]


def _weak_limit_residual(grid, n, cutoff, amplitude, normal, p, normal_conn):
    """Residual of the member at ``n`` after removing modes at or above ``cutoff``."""
    base, _ = clifford_baseline(grid)
    nc = _normal_connection(grid, normal_conn, base.codimension)
    omega = assemble_connection(base + hessian_perturbation(grid, n, amplitude, normal), nc)
    return structural_residual(omega.map(lambda f: low_pass(f, cutoff)), p)


def weak_continuity_experiment(cfg: ExperimentConfig, override_gate: bool = False) -> ExperimentResult:
    """Perturbed Clifford family: residual decay, coexact drift and the weak limit.

    Options: ``amplitude`` (0.5), ``normal`` (1-based, 1), ``weak`` (True),
    ``normal_connection`` (constant coefficients, zero), ``oracle_factor`` (4),
    ``override_gate``. The exponent is ``cfg.exponents[0]`` (default 2).
    """
    grid = cfg.grid
    if grid.dim != 2:
        raise GridError("the immersion experiment runs on 2-tori")
    p = float(cfg.exponents[0]) if cfg.exponents else 2.0
    if not 1.0 < p < np.inf:
        raise ExponentError(f"need 1 < p < inf, got {p}")
    p_crit = critical_exponent(2)
    override = override_gate or bool(cfg.opt("override_gate", False))
    in_range = p > p_crit
    if not in_range and not override:
        raise GateError(f"p = {p:g} is at or below the critical exponent {p_crit:g}; "
                        "set override_gate to run anyway")
    gate = {"p": p, "p_critical": p_crit,
            "status": "OK" if in_range else "EXPONENT_OUT_OF_RANGE", "overridden": not in_range}

    ns = tuple(cfg.n_schedule) or (4, 8, 16)
    for n in ns:
        check_resolution(grid, n)
    amplitude = float(cfg.opt("amplitude", 0.5))
    normal = int(cfg.opt("normal", 1)) - 1
    weak = bool(cfg.opt("weak", True))
    normal_conn = cfg.opt("normal_connection", None)
    p_dual = p / (p - 1.0)

    base, _ = clifford_baseline(grid)
    nc = _normal_connection(grid, normal_conn, base.codimension)
    baseline_residual = structural_residual(assemble_connection(base, nc), p)
    fixed = _coexact_rows(base)
    drift, residuals = [], []
    for n in ns:
        II = base + hessian_perturbation(grid, n, amplitude, normal)
        rows = _coexact_rows(II)
        drift.append(sum(lp_norm(r - f, p_dual) for r, f in zip(rows, fixed)))
        residuals.append(structural_residual(assemble_connection(II, nc), p, weak))

    extrapolated = extrapolate(ns, residuals).value
    slope = decay_slope(ns, residuals, floor=1e-12)
    # weak limit: the largest member tested against modes below min(ns)/2
    cutoff = min(ns) / 2.0
    limit = _weak_limit_residual(grid, ns[-1], cutoff, amplitude, normal, p, normal_conn)
    factor = int(cfg.opt("oracle_factor", 4))
    fine = TorusGrid(tuple(r * factor for r in grid.shape), grid.lengths)
    oracle = _weak_limit_residual(fine, ns[-1], cutoff, amplitude, normal, p, normal_conn)

    tol_limit = cfg.tol("limit", 1e-3)
    checks = {
        "baseline_exact": baseline_residual <= cfg.tol("baseline", 1e-10) if nc is None else True,
        "coexact_drift": max(drift) <= cfg.tol("drift", 1e-10),
        "member_residual_decay": slope <= cfg.tol("slope", -0.5) or max(residuals) <= 1e-10,
        "limit_residual": abs(limit) <= tol_limit,
        "limit_matches_oracle": abs(limit - oracle) <= tol_limit,
    }
    conclusions = ("limit_residual", "limit_matches_oracle")
    notes = []
    if not in_range:
        msg = (f"p = {p:g} is not above {p_crit:g}; weak continuity is not asserted "
               "and the conclusions are reported as diagnostics")
        warnings.warn(msg, HypothesisWarning, stacklevel=2)
        notes.append(msg)
    diags = {"residual_slope": slope, "baseline_residual": baseline_residual,
             "extrapolated_member_residual": extrapolated, "oracle_grid": list(fine.shape)}
    verdict = Verdict.from_checks(checks, diags, tainted=not in_range,
                                  conclusions=conclusions, notes=notes)
    table = ConvergenceTable("residuals", ns, ("structural_residual",),
                             np.array(residuals)[:, None], np.array([limit]), {"slope": slope})
    extras = {"residuals": {"members": dict(zip(ns, residuals)), "limit": limit, "oracle": oracle,
                            "extrapolated_members": extrapolated, "baseline": baseline_residual},
              "coexact_drift": dict(zip(ns, drift)), "gate": gate}
    return ExperimentResult("immersion", [table], None, verdict, extras)
