"""Auxiliary estimates: quadratic defect measures, the endpoint elliptic bound, Gaffney."""
from __future__ import annotations

from math import gamma as gamma_fn, pi

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError, DegreeError, ExponentError
from .forms import (Form, codifferential, exterior_derivative, gradient_lp_norm, lp_norm,
                    random_form)
from .harness import ExperimentResult, Verdict, build_factors
from .hodge import coexact_projection, green_operator
from .sequences import bubble, extrapolate, mollified_atom
from .torus import TorusGrid

__all__ = ["cell_integrals", "quadratic_defect_check", "endpoint_elliptic_check",
           "single_mode_elliptic_ratio", "elliptic_ratio", "gaffney_ratio", "gaffney_check"]

QUADRATICS = {
    "product": lambda u, w: u * w,
    "square_sum": lambda u, w: u * u + w * w,
}


def cell_integrals(values: np.ndarray, grid: TorusGrid, cells: int) -> np.ndarray:
    """Integrals of a sampled scalar over the ``cells^N`` coarse cells."""
    if any(r % cells for r in grid.shape):
        raise ConfigError("grid resolution must be divisible by the cell count")
    shape = []
    for r in grid.shape:
        shape += [cells, r // cells]
    return values.reshape(shape).sum(axis=tuple(range(1, 2 * grid.dim, 2))) * grid.cell_volume


def _extrapolate_cells(ns, stack):
    flat = stack.reshape(len(ns), -1)
    out = np.array([extrapolate(ns, flat[:, c]).value for c in range(flat.shape[1])])
    return out.reshape(stack.shape[1:])


def quadratic_defect_check(cfg: ExperimentConfig) -> ExperimentResult:
    """Cellwise defect of ``q(u_n, u'_n)`` and its Hoelder-type bound.

    ``varpi`` is the extrapolated cell mass of ``q(u_n, u'_n) - q(u, u')``;
    ``lambda`` and ``lambda'`` are those of ``|u_n - u|^r`` and ``|u'_n - u'|^r'``.
    For each quadratic one constant ``C_q`` with
    ``|varpi| <= C_q lambda^(1/r) lambda'^(1/r')`` on every cell is reported;
    it is infinite when some cell carries a defect but no concentration.
    """
    factors = build_factors(cfg)
    if len(factors) != 2 or any(f.degree != 0 for f in factors):
        raise DegreeError("the quadratic check needs two scalar sequences")
    r, rp = (float(x) for x in cfg.exponents[:2])
    if not (1 < r < np.inf and abs(1 / r + 1 / rp - 1) < 1e-12):
        raise ExponentError("need 1 < r < inf and r' its dual exponent")
    su, sw = factors
    grid, ns = cfg.grid, tuple(cfg.n_schedule)
    cells = int(cfg.tests.get("cells", 8))
    names = cfg.opt("quadratics", ("product", "square_sum"))
    names = (names,) if isinstance(names, str) else tuple(names)
    ubar, wbar = su.claimed_limit.data[0], sw.claimed_limit.data[0]
    lam, lamp, gaps = [], [], {q: [] for q in names}
    for n in ns:
        u, w = su(n).data[0], sw(n).data[0]
        lam.append(cell_integrals(np.abs(u - ubar) ** r, grid, cells))
        lamp.append(cell_integrals(np.abs(w - wbar) ** rp, grid, cells))
        for q in names:
            fq = QUADRATICS[q]
            gaps[q].append(cell_integrals(fq(u, w) - fq(ubar, wbar), grid, cells))
    lam = np.maximum(_extrapolate_cells(ns, np.array(lam)), 0.0)
    lamp = np.maximum(_extrapolate_cells(ns, np.array(lamp)), 0.0)
    cell_vol = grid.volume / cells**grid.dim
    floor = cfg.tol("defect_floor", 1e-9) * cell_vol
    denom = lam ** (1 / r) * lamp ** (1 / rp)
    varpi, consts = {}, {}
    for q in names:
        vq = _extrapolate_cells(ns, np.array(gaps[q]))
        varpi[q] = vq
        active = np.abs(vq) > floor
        if not active.any():
            consts[q] = 0.0
        elif np.any(denom[active] <= 0):
            consts[q] = float("inf")
        else:
            consts[q] = float(np.max(np.abs(vq[active]) / denom[active]))
    checks = {f"holder_constant_finite[{q}]": np.isfinite(c) for q, c in consts.items()}
    diags = {"cell_volume": cell_vol, "constants": consts,
             "varpi_range": {q: [float(v.min()), float(v.max())] for q, v in varpi.items()},
             "lambda_range": [float(lam.min()), float(lam.max())],
             "lambda_prime_range": [float(lamp.min()), float(lamp.max())]}
    verdict = Verdict.from_checks(checks, diags)
    extras = {"varpi": {q: v.tolist() for q, v in varpi.items()}, "lambda": lam.tolist(),
              "lambda_prime": lamp.tolist(), "holder_constants": consts}
    return ExperimentResult("quadratic", [], None, verdict, extras)


# --------------------------------------------------------------------------
# endpoint elliptic estimate

def elliptic_ratio(xi: Form) -> float:
    """``||d G xi||_{L^N'} / ||xi||_{L^1}`` for ``xi`` with ``||xi||_1 > 0``."""
    n_dim = xi.grid.dim
    l1 = lp_norm(xi, 1)
    if not l1 > 0:
        raise ValueError("the elliptic ratio needs a nonzero form")
    if xi.degree >= n_dim:
        return 0.0
    sigma = green_operator(xi)
    return lp_norm(exterior_derivative(sigma), n_dim / (n_dim - 1.0)) / l1


def single_mode_elliptic_ratio(n_dim: int, k: int, samples: int | None = None) -> float:
    """Closed form of the ratio for ``xi = sin(2 pi k x_N) dx_1`` on the unit torus.

    ``d G xi = -cos(2 pi k x_N) / (2 pi k) dx_N ^ dx_1`` up to sign, so the ratio is
    ``||cos||_{N'} / (2 pi k ||sin||_1)``. With ``samples`` the two one-dimensional
    norms use the periodic rectangle rule of the grid; without it
    they are the continuum values, giving ``1/(4 sqrt 2 k)`` when ``N = 2``.
    """
    s = n_dim / (n_dim - 1.0)
    if samples is None:
        mean_abs_cos_s = gamma_fn((s + 1) / 2) / (np.sqrt(pi) * gamma_fn(s / 2 + 1))
        return mean_abs_cos_s ** (1 / s) / (4 * k)
    t = 2 * pi * k * np.arange(samples) / samples
    cos_norm = np.mean(np.abs(np.cos(t)) ** s) ** (1 / s)
    return cos_norm / (2 * pi * k * np.mean(np.abs(np.sin(t))))


def endpoint_elliptic_check(cfg: ExperimentConfig) -> ExperimentResult:
    """``||d sigma||_{N'} / ||xi||_1`` over coexact families, ``sigma = G xi``.

    The concentrating family is the Leray projection of mollified atoms; a
    bounded ratio across ``n`` is the content of the estimate.
    """
    grid, ns = cfg.grid, tuple(cfg.n_schedule)
    n_dim = grid.dim
    v = cfg.opt("v", (1.0,) + (0.0,) * (n_dim - 1))
    x0 = cfg.opt("x0", (0.3,) * n_dim)
    family, precond = [], []
    for n in ns:
        xi = coexact_projection(mollified_atom(grid, v, x0, n, degree=1))
        precond.append(lp_norm(codifferential(xi), 2) / max(lp_norm(xi, 2), 1e-300))
        family.append(elliptic_ratio(xi))
    ratio0 = family[0]
    checks = {"mollified_no_blowup": max(family) <= cfg.tol("blowup", 2.0) * ratio0,
              "coexact_precondition": max(precond) <= 1e-10}

    # single Fourier modes against their closed form
    x_last = grid.coords()[-1]
    modes = {}
    for k in (1, 2, 3):
        field = np.broadcast_to(np.sin(2 * pi * k * x_last / grid.lengths[-1]), grid.shape)
        xi = Form.from_components(grid, 1, {(1,): field})
        modes[k] = (elliptic_ratio(xi), single_mode_elliptic_ratio(n_dim, k, grid.shape[-1]),
                    single_mode_elliptic_ratio(n_dim, k))
    if all(L == 1.0 for L in grid.lengths):
        checks["single_mode_closed_form"] = all(abs(a - b) <= 1e-10 * b
                                                for a, b, _ in modes.values())

    # other coexact families, reported
    rng = np.random.default_rng(cfg.seed)
    rand = [elliptic_ratio(coexact_projection(random_form(grid, 1, rng, 4, mean=False)))
            for _ in range(int(cfg.opt("random_samples", 20)))]
    bub = []
    p = float(cfg.opt("bubble_p", 1.5))
    for n in ns:
        b = bubble(grid, x0, min(p, n_dim), n)
        form = Form.from_components(grid, 1, {(1,): b.data[0]})
        bub.append(elliptic_ratio(coexact_projection(form)))
    diags = {"mollified_ratios": dict(zip(ns, family)), "ratio_n0": ratio0,
             "max_over_n0": max(family) / ratio0,
             "single_modes": {k: {"measured": a, "closed_form": b, "continuum": c}
                              for k, (a, b, c) in modes.items()},
             "random_max": max(rand) if rand else None, "bubble_ratios": dict(zip(ns, bub))}
    verdict = Verdict.from_checks(checks, diags)
    return ExperimentResult("elliptic", [], None, verdict,
                            {"ratios": {"mollified_family": family, "bubble_family": bub,
                                        "random": rand}})


# --------------------------------------------------------------------------
# Gaffney

def gaffney_ratio(form: Form, q: float) -> float:
    """``||grad w||_q / (||dw||_q + ||d*w||_q + ||w||_q)``."""
    n_dim = form.grid.dim
    den = lp_norm(form, q)
    if form.degree < n_dim:
        den += lp_norm(exterior_derivative(form), q)
    if form.degree > 0:
        den += lp_norm(codifferential(form), q)
    return gradient_lp_norm(form, q) / den


def gaffney_check(cfg: ExperimentConfig) -> ExperimentResult:
    """Empirical Gaffney constants over random band-limited forms of every degree."""
    grid = cfg.grid
    qs = cfg.opt("q", (4 / 3, 2.0, 3.0))
    qs = (qs,) if isinstance(qs, (int, float)) else tuple(float(q) for q in qs)
    samples = int(cfg.opt("samples", 100))
    bandwidth = int(cfg.opt("bandwidth", 4))
    zero_mean = bool(cfg.opt("zero_mean", False))
    rng = np.random.default_rng(cfg.seed)
    ratios = {}
    for deg in range(grid.dim + 1):
        forms = [random_form(grid, deg, rng, bandwidth, mean=not zero_mean) for _ in range(samples)]
        for q in qs:
            ratios[(deg, q)] = np.array([gaffney_ratio(w, q) for w in forms])
    checks, diags = {}, {}
    for (deg, q), r in ratios.items():
        key = f"degree={deg},q={q:.4g}"
        diags[key] = {"max": float(r.max()), "min": float(r.min()),
                      "spread": float(r.max() / r.min())}
        if abs(q - 2.0) < 1e-12:
            checks[f"spectral_identity[{key}]"] = bool(np.all(r <= 1 + 1e-9))
        else:
            checks[f"finite_stable[{key}]"] = bool(np.all(np.isfinite(r)) and r.max() / r.min() <= 2.0)
    constants = {f"q={q:.4g}": float(max(ratios[(d, q)].max() for d in range(grid.dim + 1)))
                 for q in qs}
    diags["constants"] = constants
    verdict = Verdict.from_checks(checks, diags)
    return ExperimentResult("gaffney", [], None, verdict, {"constants": constants})
