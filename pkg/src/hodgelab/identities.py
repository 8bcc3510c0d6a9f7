"""Randomized sweeps of the calculus and decomposition identities.

Each sweep draws band-limited forms of every degree and returns the worst
relative error seen for each identity. Forms drawn at the same sample index
are reused as partners (the adjoint test uses the degree ``l+1`` draw, the
product test the degree ``0`` or ``1`` draw), which keeps the sweeps cheap.
"""
from __future__ import annotations

import numpy as np

from .forms import (_view, codifferential, exterior_derivative, hodge_star, inner_pairing,
                    lp_norm, random_form, wedge)
from .hodge import coexact_projection, exact_projection, hodge_decompose
from .torus import TorusGrid

__all__ = ["calculus_sweep", "hodge_sweep"]


def _rel(num, den):
    return float(num) / den if den > 0 else float(num)


def calculus_sweep(grid: TorusGrid, samples: int, rng: np.random.Generator,
                   bandwidth: int = 4) -> dict:
    n = grid.dim
    worst = dict.fromkeys(["dd", "codiff_codiff", "star_star", "adjoint", "leibniz"], 0.0)
    for _ in range(samples):
        forms = [random_form(grid, l, rng, bandwidth) for l in range(n + 1)]
        norms = [lp_norm(f, 2) for f in forms]
        diffs = [exterior_derivative(f) for f in forms[:-1]]
        for l, w in enumerate(forms):
            if l <= n - 2:
                worst["dd"] = max(worst["dd"],
                                  _rel(lp_norm(exterior_derivative(diffs[l]), 2), norms[l]))
            if l >= 2:
                cc = codifferential(codifferential(w))
                worst["codiff_codiff"] = max(worst["codiff_codiff"], _rel(lp_norm(cc, 2), norms[l]))
            sign = -1.0 if (l * (n - l)) % 2 else 1.0
            ss = hodge_star(hodge_star(w))
            gap = _view(ss)[0] - sign * _view(w)[0]
            worst["star_star"] = max(worst["star_star"], float(np.max(np.abs(gap))))
            if l < n:
                beta = forms[l + 1]
                lhs = inner_pairing(diffs[l], beta)
                rhs = inner_pairing(w, codifferential(beta))
                scale = lp_norm(diffs[l], 2) * norms[l + 1]
                worst["adjoint"] = max(worst["adjoint"], _rel(abs(lhs - rhs), scale))
            if l < n - 1:
                m = int(rng.integers(0, n - l))  # partner degree, keeps l + m < n
                eta, d_eta = forms[m], diffs[m]
                lhs = exterior_derivative(wedge(w, eta))
                rhs = wedge(diffs[l], eta) + (-1.0) ** l * wedge(w, d_eta)
                err = lp_norm(lhs - rhs, 2)
                worst["leibniz"] = max(worst["leibniz"], _rel(err, norms[l] * norms[m]))
    return worst


def hodge_sweep(grid: TorusGrid, samples: int, rng: np.random.Generator,
                bandwidth: int = 4, ratio_exponents=(4 / 3, 3.0), ratio_samples: int = 20) -> dict:
    n = grid.dim
    keys = ["reconstruction", "gauge", "potential_mean", "orthogonality",
            "exact_idempotent", "leray_idempotent", "leray_coclosed", "exact_norm"]
    worst = dict.fromkeys(keys, 0.0)
    # off L^2 the projection is not asserted to be a contraction; the ratios are only
    # recorded, on the first few samples since each needs physical-space norms
    for p in ratio_exponents:
        worst[f"exact_ratio_p={p:.4g}"] = 0.0
    for sample in range(samples):
        for l in range(n + 1):
            w = random_form(grid, l, rng, bandwidth)
            sq = lp_norm(w, 2)
            parts = hodge_decompose(w)
            rec = lp_norm(parts.recombine() - w, 2)
            worst["reconstruction"] = max(worst["reconstruction"], _rel(rec, sq))
            if parts.potential is not None:
                g = parts.potential
                if l >= 2:
                    worst["gauge"] = max(worst["gauge"],
                                         _rel(lp_norm(codifferential(g), 2), sq))
                worst["potential_mean"] = max(worst["potential_mean"],
                                              float(np.max(np.abs(g.mean()))) / sq)
            if parts.copotential is not None:
                k = parts.copotential
                if l + 1 < n:
                    worst["gauge"] = max(worst["gauge"],
                                         _rel(lp_norm(exterior_derivative(k), 2), sq))
                worst["potential_mean"] = max(worst["potential_mean"],
                                              float(np.max(np.abs(k.mean()))) / sq)
            pieces = [parts.exact, parts.coexact, parts.harmonic]
            for i in range(3):
                for j in range(i + 1, 3):
                    worst["orthogonality"] = max(
                        worst["orthogonality"], abs(inner_pairing(pieces[i], pieces[j])) / sq**2)
            ex = parts.exact
            ex2 = exact_projection(ex)
            worst["exact_idempotent"] = max(worst["exact_idempotent"],
                                            _rel(lp_norm(ex2 - ex, 2), sq))
            worst["exact_norm"] = max(worst["exact_norm"], lp_norm(ex, 2) / sq)
            for p in ratio_exponents if sample < ratio_samples else ():
                key = f"exact_ratio_p={p:.4g}"
                worst[key] = max(worst[key], _rel(lp_norm(ex, p), lp_norm(w, p)))
            le = coexact_projection(w)
            le2 = coexact_projection(le)
            worst["leray_idempotent"] = max(worst["leray_idempotent"],
                                            _rel(lp_norm(le2 - le, 2), sq))
            if l > 0:
                worst["leray_coclosed"] = max(worst["leray_coclosed"],
                                              _rel(lp_norm(codifferential(le), 2), sq))
    return worst
