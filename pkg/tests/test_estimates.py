import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hodgelab import Form, TorusGrid, random_form
from hodgelab.errors import ConfigError, DegreeError, ExponentError
from hodgelab.estimates import (cell_integrals, elliptic_ratio, endpoint_elliptic_check,
                                gaffney_check, gaffney_ratio, quadratic_defect_check,
                                single_mode_elliptic_ratio)
from hodgelab.presets import preset

G = TorusGrid.cube(2, 64)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.sampled_from([1, 2, 4, 8]))
def test_cell_integrals_sum_to_total(seed, cells):
    vals = np.random.default_rng(seed).standard_normal(G.shape)
    parts = cell_integrals(vals, G, cells)
    assert parts.shape == (cells, cells)
    assert parts.sum() == pytest.approx(vals.sum() * G.cell_volume, abs=1e-12)


def test_cell_integrals_divisibility():
    with pytest.raises(ConfigError):
        cell_integrals(np.zeros(G.shape), G, 7)


@pytest.mark.parametrize("name,expected_product", [("quadratic", 0.5), ("quadratic_independent", 0.0)])
def test_quadratic_defect(name, expected_product):
    res = quadratic_defect_check(preset(name))
    cell_vol = res.verdict.diagnostics["cell_volume"]
    varpi = np.array(res.extras["varpi"]["product"]) / cell_vol
    assert np.allclose(varpi, expected_product, atol=1e-3)
    assert res.verdict.status == "PASS"
    assert np.isfinite(res.extras["holder_constants"]["product"])


def test_quadratic_square_sum_constant():
    res = quadratic_defect_check(preset("quadratic_independent"))
    assert res.extras["holder_constants"]["square_sum"] == pytest.approx(2.0, rel=1e-6)


def test_quadratic_rejects_non_dual_exponents():
    with pytest.raises(ExponentError):
        quadratic_defect_check(preset("quadratic").replace(exponents=(2.0, 3.0)))


def test_quadratic_needs_scalars():
    cfg = preset("quadratic")
    facs = [dict(f, degree=1, coefficients=(1.0, 0.0)) for f in cfg.factors]
    with pytest.raises(DegreeError):
        quadratic_defect_check(cfg.replace(factors=facs))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_single_mode_elliptic_ratio(k):
    grid = TorusGrid.cube(2, 256)
    x = grid.coords()[1]
    xi = Form.from_components(grid, 1, {(1,): np.sin(2 * np.pi * k * x)})
    assert elliptic_ratio(xi) == pytest.approx(single_mode_elliptic_ratio(2, k, 256), rel=1e-10)
    assert single_mode_elliptic_ratio(2, k) == pytest.approx(1 / (4 * np.sqrt(2) * k), rel=1e-12)


def test_elliptic_ratio_zero_form():
    with pytest.raises(ValueError):
        elliptic_ratio(Form.zeros(G, 1))


def test_elliptic_check_no_blowup():
    res = endpoint_elliptic_check(preset("elliptic").with_grid((256, 256)))
    assert res.verdict.status == "PASS"
    fam = res.extras["ratios"]["mollified_family"]
    assert max(fam) <= 2 * fam[0]


@pytest.mark.parametrize("degree", [0, 1, 2])
def test_gaffney_l2_identity(degree):
    rng = np.random.default_rng(degree)
    for _ in range(5):
        assert gaffney_ratio(random_form(G, degree, rng), 2.0) <= 1 + 1e-9


def test_gaffney_zero_mean_l2_equality():
    # without a mean, Parseval makes grad and d + d* agree; the L^2 term is extra
    rng = np.random.default_rng(0)
    w = random_form(G, 1, rng, mean=False)
    assert gaffney_ratio(w, 2.0) < 1.0


def test_gaffney_check_small():
    cfg = preset("gaffney").replace(options={"samples": 10, "q": (4 / 3, 2.0, 3.0)})
    res = gaffney_check(cfg)
    assert res.verdict.status == "PASS"
    assert set(res.extras["constants"]) == {"q=1.333", "q=2", "q=3"}
