"""Hodge decomposition on the flat torus.

Every potential is taken in the zero-mean, minimal gauge: ``d* gamma = 0``
and ``d k = 0``. On a flat torus the harmonic forms are exactly the
constant-coefficient forms, so the harmonic projection is the mean.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .forms import Form, _map_spectrum, _symbol, apply_multiplier, codifferential, exterior_derivative

__all__ = [
    "HodgeParts",
    "hodge_decompose",
    "green_operator",
    "harmonic_projection",
    "exact_projection",
    "coexact_projection",
]


@dataclass(frozen=True)
class HodgeParts:
    """``form = exact + coexact + harmonic`` with ``exact = d potential``
    and ``coexact = d* copotential``. Potentials are ``None`` in the
    degenerate degrees (no exact part for functions, no coexact part for
    top forms)."""

    exact: Form
    coexact: Form
    harmonic: Form
    potential: Optional[Form]
    copotential: Optional[Form]

    def recombine(self) -> Form:
        return self.exact + self.coexact + self.harmonic


def green_operator(form: Form) -> Form:
    """Zero-mean solution ``s`` of ``Laplacian(s) = form - mean(form)``."""
    return apply_multiplier(form, _symbol(form.grid, "green"))


def harmonic_projection(form: Form) -> Form:
    """Componentwise mean, returned as a constant form."""
    origin = (slice(None),) + (0,) * form.grid.dim

    def keep_mean(arr):
        out = np.zeros_like(arr)
        out[origin] = arr[origin].real
        return out

    return _map_spectrum(form, keep_mean)


def hodge_decompose(form: Form) -> HodgeParts:
    grid, deg = form.grid, form.degree
    harmonic = harmonic_projection(form)
    if deg > 0:
        potential = green_operator(codifferential(form))
        exact = exterior_derivative(potential)
    else:
        potential = None
        exact = _map_spectrum(form, np.zeros_like)
    if deg < grid.dim:
        copotential = green_operator(exterior_derivative(form))
        coexact = codifferential(copotential)
    else:
        copotential = None
        coexact = _map_spectrum(form, np.zeros_like)
    return HodgeParts(exact, coexact, harmonic, potential, copotential)


def exact_projection(form: Form) -> Form:
    """Projection onto the exact part, ``d G d*``."""
    if form.degree == 0:
        return _map_spectrum(form, np.zeros_like)
    return exterior_derivative(green_operator(codifferential(form)))


def coexact_projection(form: Form) -> Form:
    """Leray-type projection ``Id - d G d*``: coexact plus harmonic parts."""
    return form - exact_projection(form)
