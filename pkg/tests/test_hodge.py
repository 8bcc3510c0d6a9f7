import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hodgelab import Form, TorusGrid, codifferential, exterior_derivative, lp_norm, random_form
from hodgelab.forms import inner_pairing, laplacian
from hodgelab.hodge import (coexact_projection, exact_projection, green_operator,
                            harmonic_projection, hodge_decompose)
from hodgelab.identities import calculus_sweep, hodge_sweep

G2 = TorusGrid.cube(2, 32)
G3 = TorusGrid.cube(3, 24)
TWO_PI = 2 * np.pi


def sin_x(grid=G2):
    x, y = grid.coords()
    return np.sin(TWO_PI * x) + 0 * y


def test_constant_is_harmonic():
    w = Form.constant(G2, 1, [2.0, -1.0])
    parts = hodge_decompose(w)
    assert lp_norm(parts.harmonic - w, np.inf) < 1e-14
    assert lp_norm(parts.exact, np.inf) < 1e-14
    assert lp_norm(parts.coexact, np.inf) < 1e-14


def test_exact_input():
    w = exterior_derivative(Form.scalar(G2, sin_x()))
    parts = hodge_decompose(w)
    assert lp_norm(parts.exact - w, 2) < 1e-13
    assert lp_norm(parts.coexact, 2) < 1e-13
    assert lp_norm(parts.harmonic, 2) < 1e-13


@pytest.mark.parametrize("grid", [G2, G3])
def test_degenerate_degrees(grid):
    rng = np.random.default_rng(0)
    f = hodge_decompose(random_form(grid, 0, rng))
    top = hodge_decompose(random_form(grid, grid.dim, rng))
    assert f.potential is None and lp_norm(f.exact, 2) == 0
    assert top.copotential is None and lp_norm(top.coexact, 2) == 0


def test_green_examples():
    s = green_operator(Form.scalar(G2, sin_x()))
    assert np.allclose(s.data[0], sin_x() / (4 * np.pi**2), atol=1e-14)
    assert lp_norm(green_operator(Form.constant(G2, 1, [1.0, 3.0])), np.inf) == 0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), deg=st.integers(0, 3))
def test_green_inverts_laplacian(seed, deg):
    w = random_form(G3, deg, np.random.default_rng(seed))
    back = laplacian(green_operator(w)) + harmonic_projection(w)
    assert lp_norm(back - w, 2) <= 1e-10 * lp_norm(w, 2)


def test_projection_examples():
    rng = np.random.default_rng(1)
    ex = exterior_derivative(random_form(G2, 0, rng))
    assert lp_norm(exact_projection(ex) - ex, 2) < 1e-12 * lp_norm(ex, 2)
    assert lp_norm(exact_projection(Form.constant(G2, 1, [1.0, 1.0])), 2) == 0
    co = codifferential(random_form(G2, 2, rng))
    assert lp_norm(coexact_projection(co) - co, 2) < 1e-12 * lp_norm(co, 2)
    assert lp_norm(coexact_projection(ex), 2) < 1e-12 * lp_norm(ex, 2)
    w = random_form(G2, 1, rng)
    parts = hodge_decompose(w)
    assert lp_norm(coexact_projection(w) - parts.coexact - parts.harmonic, 2) < 1e-12


def test_harmonic_projection_examples():
    c = Form.constant(G2, 1, [0.5, 4.0])
    assert lp_norm(harmonic_projection(c) - c, np.inf) < 1e-14
    assert lp_norm(harmonic_projection(Form.scalar(G2, sin_x())), np.inf) < 1e-15
    w = random_form(G3, 2, np.random.default_rng(2))
    assert np.allclose(harmonic_projection(w).data[:, 0, 0, 0], w.data.mean(axis=(1, 2, 3)))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), deg=st.integers(0, 3))
def test_exact_projection_is_l2_contraction(seed, deg):
    w = random_form(G3, deg, np.random.default_rng(seed))
    assert lp_norm(exact_projection(w), 2) <= lp_norm(w, 2) * (1 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), deg=st.integers(1, 3))
def test_harmonic_shift_keeps_parts(seed, deg):
    rng = np.random.default_rng(seed)
    w = random_form(G3, deg, rng)
    h = Form.constant(G3, deg, rng.standard_normal(w.n_components))
    a, b = hodge_decompose(w), hodge_decompose(w + h)
    assert lp_norm(a.exact - b.exact, 2) < 1e-12 * lp_norm(w, 2)
    assert lp_norm(b.harmonic - a.harmonic - h, 2) < 1e-12 * lp_norm(w + h, 2)
    assert abs(inner_pairing(b.exact, b.harmonic)) < 1e-10 * lp_norm(w + h, 2) ** 2


@pytest.mark.parametrize("grid", [TorusGrid.cube(2, 64), TorusGrid.cube(3, 32)])
def test_small_sweeps(grid):
    rng = np.random.default_rng(7)
    calc = calculus_sweep(grid, 10, rng)
    assert max(calc.values()) < 1e-10
    hodge = hodge_sweep(grid, 10, rng)
    assert hodge.pop("exact_norm") <= 1 + 1e-12
    ratios = {k: hodge.pop(k) for k in list(hodge) if k.startswith("exact_ratio")}
    assert all(np.isfinite(v) and v > 0 for v in ratios.values())
    assert max(hodge.values()) < 1e-10
