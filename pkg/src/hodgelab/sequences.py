"""Test families of forms and estimators for their limits.

Three concrete families are provided: oscillations ``h(n xi.x) lambda``,
concentrating bubbles ``n^((N-p)/p) Gamma(n(x - x0))`` and mollified atoms
``n^N rho(n(x - x0)) v``. A :class:`FormSequence` wraps any of them (or a
user callable) with its claimed weak limit and an admissible schedule of
``n``; the estimators turn a sequence into pairing tables, extrapolated
limits and coarse-grained limit measures with atom detection.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, gamma, pi
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import DegreeError, ExponentError, GridError, ResolutionError
from .forms import Form, exterior_derivative, pair_with_test
from .torus import TorusGrid

__all__ = [
    "PeriodicProfile",
    "FormSequence",
    "Atom",
    "RadonMeasureEstimate",
    "Extrapolation",
    "WeakLimitTable",
    "check_resolution",
    "bubble_profile",
    "bump_mass",
    "oscillator",
    "bubble",
    "mollified_atom",
    "oscillator_sequence",
    "bubble_sequence",
    "mollified_atom_sequence",
    "custom_sequence",
    "extrapolate",
    "decay_slope",
    "weak_limit_estimate",
    "measure_limit_estimate",
    "box_mass",
    "periodic_displacement",
]

KINDS = ("oscillator", "bubble", "mollified_atom", "mollified_family", "custom")


# --------------------------------------------------------------------------
# profiles

@dataclass(frozen=True)
class PeriodicProfile:
    """1-periodic profile ``h(t) = a0 + sum_m a_m cos(2 pi m t) + b_m sin(2 pi m t)``.

    ``modes`` holds triples ``(m, a_m, b_m)`` with ``m >= 1``.
    """

    modes: tuple = ((1, 0.0, 1.0),)
    a0: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, float(self.a0))
        for m, a, b in self.modes:
            if a:
                out = out + a * np.cos(2 * pi * m * t)
            if b:
                out = out + b * np.sin(2 * pi * m * t)
        return out

    @property
    def mean(self) -> float:
        return float(self.a0)

    @property
    def max_mode(self) -> int:
        return max((m for m, _, _ in self.modes), default=0)

    def l2_norm(self) -> float:
        """``(int_0^1 h^2)^(1/2)`` from the coefficients."""
        return float(np.sqrt(self.a0**2 + sum(a * a + b * b for _, a, b in self.modes) / 2))


def bubble_profile(y: Sequence[np.ndarray], tilt: Optional[Sequence[float]] = None) -> np.ndarray:
    """``(1 + c.y)(1 - |y|^2)^3`` on the unit ball, zero outside (``c = 0`` by default)."""
    r2 = sum(c**2 for c in y)
    base = np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 3, 0.0)
    if tilt is not None:
        base = base * (1.0 + sum(c * t for c, t in zip(y, tilt)))
    return base


def _bump(r2):
    inside = r2 < 1.0
    out = np.zeros_like(r2, dtype=float)
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def bump_mass(n_dim: int) -> float:
    """``int_{R^N} exp(-1/(1-|y|^2)) dy`` over the unit ball."""
    sphere = 2 * pi ** (n_dim / 2) / gamma(n_dim / 2)
    radial, _ = integrate.quad(lambda r: np.exp(-1.0 / (1.0 - r * r)) * r ** (n_dim - 1), 0, 1)
    return sphere * radial


def periodic_displacement(grid: TorusGrid, x0: Sequence[float]) -> list:
    """Broadcastable per-axis displacements ``x - x0`` wrapped into ``[-L/2, L/2)``."""
    out = []
    for c, L, x in zip(grid.coords(), grid.lengths, x0):
        out.append((c - x + L / 2) % L - L / 2)
    return out


def check_resolution(grid: TorusGrid, n: int) -> None:
    """Enforce ``n <= min(R_i)/16``: at least 16 points per scale ``1/n``."""
    if n < 1 or n > min(grid.shape) // 16:
        raise ResolutionError(
            f"n = {n} violates the resolution contract n <= {min(grid.shape) // 16}")


# --------------------------------------------------------------------------
# single members

def _infer_degree(grid, coeffs, degree):
    # N coefficients default to a 1-form (ambiguous with N-1 forms when N = 3)
    if degree is None:
        sizes = [l for l in range(grid.dim + 1) if comb(grid.dim, l) == coeffs.size]
        if not sizes:
            raise DegreeError(f"{coeffs.size} coefficients match no degree in dimension {grid.dim}")
        degree = 1 if 1 in sizes else sizes[0]
    if coeffs.size != comb(grid.dim, degree):
        raise DegreeError("coefficient count does not match the degree")
    return degree


def oscillator(grid: TorusGrid, xi: Sequence[int], coefficients, n: int,
               profile: PeriodicProfile = PeriodicProfile(), degree: Optional[int] = None) -> Form:
    """``h(n xi.x) lambda`` with ``lambda`` a constant form given by its coefficients."""
    check_resolution(grid, n)
    coeffs = np.atleast_1d(np.asarray(coefficients, dtype=float))
    degree = _infer_degree(grid, coeffs, degree)
    for k, r in zip(xi, grid.shape):
        if abs(int(k)) * n * profile.max_mode >= r // 2:
            raise ResolutionError("oscillation frequency reaches the Nyquist limit")
    phase = sum(k * c / L for k, c, L in zip(xi, grid.coords(), grid.lengths))
    h = profile(n * phase)
    h = np.broadcast_to(h, grid.shape)
    data = coeffs.reshape((-1,) + (1,) * grid.dim) * h[None]
    return Form(grid, degree, data)


def bubble(grid: TorusGrid, x0: Sequence[float], p: float, n: int,
           tilt: Optional[Sequence[float]] = None, amplitude: float = 1.0) -> Form:
    """Scalar bubble ``a n^((N-p)/p) Gamma(n(x - x0))`` (periodized).

    The scaling keeps ``||d bubble||_{L^p}`` independent of ``n``. At ``p = N``
    the bubble itself stays bounded while its differential concentrates.
    """
    check_resolution(grid, n)
    if not 1.0 < p <= grid.dim:
        raise ExponentError(f"bubble exponent must lie in (1, {grid.dim}], got {p}")
    disp = periodic_displacement(grid, x0)
    y = [n * d for d in disp]
    values = amplitude * n ** ((grid.dim - p) / p) * bubble_profile(y, tilt)
    return Form.scalar(grid, values)


def mollified_atom(grid: TorusGrid, v, x0: Sequence[float], n: int,
                   degree: Optional[int] = None) -> Form:
    """``n^N rho(n(x - x0)) v`` with ``rho`` the unit-mass bump."""
    check_resolution(grid, n)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    degree = _infer_degree(grid, v, degree)
    disp = periodic_displacement(grid, x0)
    r2 = sum((n * d) ** 2 for d in disp)
    rho = n**grid.dim * _bump(np.broadcast_to(r2, grid.shape)) / bump_mass(grid.dim)
    return Form(grid, degree, v.reshape((-1,) + (1,) * grid.dim) * rho[None])


# --------------------------------------------------------------------------
# sequences

@dataclass
class FormSequence:
    """A family ``n -> omega^n`` with its claimed weak limit.

    Members are generated on demand and cached. Every ``n`` in the schedule
    must satisfy the resolution contract of the grid.
    """

    grid: TorusGrid
    degree: int
    kind: str
    generator: Callable[[int], Form]
    claimed_limit: Form
    n_schedule: tuple
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        sched = tuple(int(n) for n in self.n_schedule)
        if list(sched) != sorted(set(sched)):
            raise ValueError("n_schedule must be strictly increasing")
        for n in sched:
            check_resolution(self.grid, n)
        self.n_schedule = sched
        if self.claimed_limit.degree != self.degree or self.claimed_limit.grid != self.grid:
            raise DegreeError("claimed limit does not match the sequence")

    def __call__(self, n: int) -> Form:
        if n not in self._cache:
            check_resolution(self.grid, n)
            member = self.generator(n)
            if member.degree != self.degree or member.grid != self.grid:
                raise DegreeError("generator returned a form of the wrong type")
            self._cache[n] = member
        return self._cache[n]

    def members(self):
        return [(n, self(n)) for n in self.n_schedule]

    def map(self, fn: Callable[[Form], Form], kind: Optional[str] = None,
            limit: Optional[Form] = None) -> "FormSequence":
        """Apply a linear map termwise (e.g. ``d`` or ``*``)."""
        lim = fn(self.claimed_limit) if limit is None else limit
        return FormSequence(self.grid, lim.degree, kind or self.kind,
                            lambda n: fn(self(n)), lim, self.n_schedule, dict(self.params))


def oscillator_sequence(grid, xi, coefficients, schedule, profile=PeriodicProfile(),
                        degree=None) -> FormSequence:
    first = oscillator(grid, xi, coefficients, schedule[0], profile, degree)
    coeffs = np.atleast_1d(np.asarray(coefficients, dtype=float))
    limit = Form.constant(grid, first.degree, profile.mean * coeffs)
    return FormSequence(grid, first.degree, "oscillator",
                        lambda n: oscillator(grid, xi, coeffs, n, profile, first.degree),
                        limit, tuple(schedule),
                        {"xi": tuple(xi), "coefficients": coeffs.tolist()})


def bubble_sequence(grid, x0, p, schedule, tilt=None, amplitude=1.0,
                    differentiate=True) -> FormSequence:
    """Bubbles, or (default) their differentials ``d bubble``, which are exact 1-forms."""
    def gen(n):
        b = bubble(grid, x0, p, n, tilt, amplitude)
        return exterior_derivative(b) if differentiate else b

    degree = 1 if differentiate else 0
    return FormSequence(grid, degree, "bubble", gen, Form.zeros(grid, degree), tuple(schedule),
                        {"x0": tuple(x0), "p": p, "tilt": tilt, "amplitude": amplitude})


def mollified_atom_sequence(grid, v, x0, schedule, degree=None) -> FormSequence:
    first = mollified_atom(grid, v, x0, schedule[0], degree)
    return FormSequence(grid, first.degree, "mollified_atom",
                        lambda n: mollified_atom(grid, v, x0, n, first.degree),
                        Form.zeros(grid, first.degree), tuple(schedule),
                        {"v": list(np.atleast_1d(v)), "x0": tuple(x0)})


def custom_sequence(grid, degree, generator, limit, schedule,
                    kind: str = "custom") -> FormSequence:
    return FormSequence(grid, degree, kind, generator, limit, tuple(schedule))


# --------------------------------------------------------------------------
# extrapolation

@dataclass(frozen=True)
class Extrapolation:
    value: float
    error: float
    method: str            # "converged" | "aitken" | "richardson" | "last"
    monotone: bool
    order: Optional[float] = None


def extrapolate(ns: Sequence[float], values: Sequence[float], noise: float = 1e-12) -> Extrapolation:
    """Limit of ``values`` as ``n -> infinity``.

    The last three values fix the observed order ``s`` of an ``n^-s`` tail
    and the Aitken correction removes it; with two values a first-order
    Richardson step in ``1/n`` is used. Oscillating or growing differences
    fall back to the last value with the last increment as error bar.
    """
    ns = [float(n) for n in ns]
    v = [float(x) for x in values]
    if not v:
        raise ValueError("nothing to extrapolate")
    scale = max(max(abs(x) for x in v), 1e-300)
    if len(v) == 1:
        return Extrapolation(v[0], float("inf"), "last", True)
    d2 = v[-1] - v[-2]
    if abs(d2) <= noise * scale:
        return Extrapolation(v[-1], abs(d2), "converged", True)
    if len(v) == 2:
        n1, n2 = ns[-2], ns[-1]
        corr = d2 * n1 / (n2 - n1)
        return Extrapolation(v[-1] + corr, abs(corr), "richardson", True, 1.0)
    d1 = v[-2] - v[-3]
    monotone = d1 != 0 and np.sign(d1) == np.sign(d2)
    r = d2 / d1 if d1 != 0 else np.inf
    if monotone and 0 < r < 1:
        corr = d2 * r / (1 - r)
        order = float(np.log(r) / np.log(ns[-3] / ns[-2])) if ns[-2] != ns[-3] else None
        if order is not None and ns[-1] / ns[-2] != ns[-2] / ns[-3]:
            # unequal steps: rescale with the fitted order
            h = (ns[-2] / ns[-1]) ** order
            corr = d2 * h / (1 - h)
        return Extrapolation(v[-1] + corr, abs(corr), "aitken", True, order)
    return Extrapolation(v[-1], abs(d2), "last", bool(monotone))


def decay_slope(ns: Sequence[float], values: Sequence[float], floor: float = 0.0) -> float:
    """Least-squares slope of ``log|value|`` against ``log n``.

    Values at or below ``floor`` are clamped to it; if every value is at the
    floor the sequence is already converged and ``-inf`` is returned.
    """
    mags = np.maximum(np.abs(np.asarray(values, dtype=float)), floor)
    if floor > 0 and np.all(mags <= floor):
        return float("-inf")
    if np.any(mags == 0):
        return float("-inf")
    x = np.log(np.asarray(ns, dtype=float))
    return float(np.polyfit(x, np.log(mags), 1)[0])


@dataclass
class WeakLimitTable:
    ns: tuple
    test_ids: tuple
    values: np.ndarray          # shape (len(ns), len(tests))
    limits: list                # Extrapolation per test
    slopes: list                # decay slope of |value - claimed| per test
    claimed: np.ndarray

    def rows(self):
        for i, n in enumerate(self.ns):
            for j, t in enumerate(self.test_ids):
                yield n, t, float(self.values[i, j]), abs(float(self.values[i, j]) - self.limits[j].value)


def weak_limit_estimate(seq: FormSequence, tests: Sequence[Form],
                        test_ids: Optional[Sequence[str]] = None,
                        floor: float = 1e-13) -> WeakLimitTable:
    """Pairings ``int omega^n ^ Xi`` per ``n`` and test, with extrapolated limits."""
    n_dim = seq.grid.dim
    for t in tests:
        if t.degree + seq.degree != n_dim:
            raise DegreeError("tests must have complementary degree")
    ids = tuple(test_ids) if test_ids is not None else tuple(f"T{j}" for j in range(len(tests)))
    vals = np.array([[pair_with_test(w, t) for t in tests] for _, w in seq.members()])
    claimed = np.array([pair_with_test(seq.claimed_limit, t) for t in tests])
    limits, slopes = [], []
    for j in range(len(tests)):
        limits.append(extrapolate(seq.n_schedule, vals[:, j]))
        scale = max(1.0, float(np.max(np.abs(vals[:, j]))))
        slopes.append(decay_slope(seq.n_schedule, vals[:, j] - claimed[j], floor * scale))
    return WeakLimitTable(seq.n_schedule, ids, vals, limits, slopes, claimed)


# --------------------------------------------------------------------------
# limit measures

@dataclass(frozen=True)
class Atom:
    location: tuple
    mass: float
    retention: float       # mass(half box) / mass(box) at the location


@dataclass
class RadonMeasureEstimate:
    cells: tuple
    cell_masses: np.ndarray
    atoms: list
    diffuse: float
    total: float
    n: int

    @property
    def atom_mass(self) -> float:
        return float(sum(a.mass for a in self.atoms))


def box_mass(density: np.ndarray, grid: TorusGrid, center: Sequence[float],
             half_widths: Sequence[float]) -> float:
    """Integral of a sampled density over a periodic box."""
    idx = []
    for ax, (r, L, c, hw) in enumerate(zip(grid.shape, grid.lengths, center, half_widths)):
        x = np.arange(r) * (L / r)
        d = (x - c + L / 2) % L - L / 2
        idx.append(np.nonzero(np.abs(d) <= hw + 1e-12 * L)[0])
    return float(np.sum(density[np.ix_(*idx)]) * grid.cell_volume)


def _centroid(density, grid, center, half_widths):
    idx, disp = [], []
    for r, L, c, hw in zip(grid.shape, grid.lengths, center, half_widths):
        x = np.arange(r) * (L / r)
        d = (x - c + L / 2) % L - L / 2
        sel = np.nonzero(np.abs(d) <= hw)[0]
        idx.append(sel)
        disp.append(d[sel])
    block = density[np.ix_(*idx)]
    tot = block.sum()
    if tot <= 0:
        return tuple(center)
    out = []
    for ax, d in enumerate(disp):
        shp = [1] * grid.dim
        shp[ax] = d.size
        out.append(float(center[ax] + np.sum(block * d.reshape(shp)) / tot))
    return tuple(x % L for x, L in zip(out, grid.lengths))


def measure_limit_estimate(seq: FormSequence, limit: Optional[Form] = None, p: float = 1.0,
                           cells: int = 8, n: Optional[int] = None,
                           candidate_fraction: float = 1e-3,
                           retention_threshold: float = 0.9) -> RadonMeasureEstimate:
    """Coarse-grained estimate of the limit of ``|omega^n - limit|^p dvol``.

    Cells are ``cells`` per axis. A cell carrying more than
    ``candidate_fraction`` of the total is tested for an atom: the box of one
    cell width centred at the local mass centroid is halved, and the cell is
    an atom if at least ``retention_threshold`` of its mass stays inside.
    """
    if p < 1:
        raise ExponentError("measure estimates need p >= 1")
    grid = seq.grid
    if any(r % cells for r in grid.shape):
        raise GridError("grid resolution must be divisible by the cell count")
    n = seq.n_schedule[-1] if n is None else n
    limit = seq.claimed_limit if limit is None else limit
    density = (seq(n) - limit).modulus() ** p
    return measure_from_density(density, grid, n, cells, candidate_fraction, retention_threshold)


def measure_from_density(density: np.ndarray, grid: TorusGrid, n: int = 0, cells: int = 8,
                         candidate_fraction: float = 1e-3,
                         retention_threshold: float = 0.9) -> RadonMeasureEstimate:
    shape = []
    for r in grid.shape:
        shape += [cells, r // cells]
    blocks = density.reshape(shape)
    cell_masses = blocks.sum(axis=tuple(range(1, 2 * grid.dim, 2))) * grid.cell_volume
    total = float(np.sum(density) * grid.cell_volume)
    h = [L / cells for L in grid.lengths]
    atoms = []
    if total > 0:
        order = np.argsort(cell_masses, axis=None)[::-1]
        for flat in order:
            m = cell_masses.flat[flat]
            if m <= candidate_fraction * total:
                break
            cell = np.unravel_index(flat, cell_masses.shape)
            center = tuple((c + 0.5) * hh for c, hh in zip(cell, h))
            if any(_near(center, a.location, h, grid.lengths) for a in atoms):
                continue
            loc = _centroid(density, grid, center, [1.5 * hh for hh in h])
            full = box_mass(density, grid, loc, [hh / 2 for hh in h])
            half = box_mass(density, grid, loc, [hh / 4 for hh in h])
            ret = half / full if full > 0 else 0.0
            if ret >= retention_threshold:
                atoms.append(Atom(loc, full, ret))
    diffuse = total - sum(a.mass for a in atoms)
    return RadonMeasureEstimate((cells,) * grid.dim, cell_masses, atoms, diffuse, total, n)


def _near(a, b, h, lengths):
    for x, y, hh, L in zip(a, b, h, lengths):
        d = abs((x - y + L / 2) % L - L / 2)
        if d > 1.5 * hh:
            return False
    return True
