import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hodgelab import Form, TorusGrid, exterior_derivative, lp_norm
from hodgelab.errors import DegreeError, ExponentError, ResolutionError
from hodgelab.sequences import (PeriodicProfile, bubble, bubble_sequence, bump_mass,
                                check_resolution, custom_sequence, decay_slope, extrapolate,
                                measure_limit_estimate, mollified_atom,
                                mollified_atom_sequence, oscillator, oscillator_sequence,
                                weak_limit_estimate)

G = TorusGrid.cube(2, 128)
G3 = TorusGrid.cube(3, 32)


def test_oscillator_closed_form():
    w = oscillator(G, (1, 0), (1.0, 0.0), 4)
    x, _ = G.coords()
    assert np.allclose(w.data[0], np.sin(8 * np.pi * x))
    assert lp_norm(exterior_derivative(w), 2) < 1e-12


@pytest.mark.parametrize("n", [2, 4, 8])
def test_oscillator_norm_independent_of_n(n):
    w = oscillator(G, (1, 1), (1.0, 0.0), n)
    assert lp_norm(w, 2) == pytest.approx(2**-0.5, rel=1e-12)


def test_profile_norm():
    prof = PeriodicProfile(((1, 0.5, 1.0), (3, 0.0, 0.25)), a0=0.1)
    t = np.linspace(0, 1, 4096, endpoint=False)
    assert prof.l2_norm() == pytest.approx(np.sqrt(np.mean(prof(t) ** 2)), rel=1e-12)
    assert prof.max_mode == 3


@pytest.mark.parametrize("p", [4 / 3, 1.5, 2.0])
def test_bubble_gradient_norm_invariant(p):
    norms = [lp_norm(exterior_derivative(bubble(G, (0.3, 0.55), p, n)), p) for n in (2, 4, 8)]
    assert max(norms) / min(norms) == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("p", [1.0, 2.5])
def test_bubble_exponent_range(p):
    with pytest.raises(ExponentError):
        bubble(G, (0.5, 0.5), p, 4)


@pytest.mark.parametrize("n", [0, 9, 64])
def test_resolution_contract(n):
    with pytest.raises(ResolutionError):
        check_resolution(G, n)


@pytest.mark.parametrize("grid", [G, G3])
def test_mollified_atom_mass(grid):
    v = np.arange(1, grid.dim + 1, dtype=float)
    w = mollified_atom(grid, v, (0.4,) * grid.dim, 2)
    assert np.allclose(w.mean(), v, rtol=1e-6)


def test_bump_mass_2d():
    r = np.linspace(0, 1, 200001)[:-1]
    approx = 2 * np.pi * np.trapezoid(np.exp(-1 / (1 - r**2)) * r, r)
    assert bump_mass(2) == pytest.approx(approx, rel=1e-6)


def test_mollified_atom_degree_mismatch():
    with pytest.raises(DegreeError):
        mollified_atom(G, [1.0, 2.0, 3.0], (0.5, 0.5), 2)


def test_sequence_caching_and_limit():
    seq = oscillator_sequence(G, (1, 0), (1.0, 0.0), (2, 4, 8))
    assert seq(4) is seq(4)
    assert lp_norm(seq.claimed_limit, 2) == 0
    assert [n for n, _ in seq.members()] == [2, 4, 8]


def test_sequence_schedule_must_increase():
    with pytest.raises(ValueError):
        oscillator_sequence(G, (1, 0), (1.0, 0.0), (4, 2))


def test_sequence_map():
    seq = mollified_atom_sequence(G, (1.0, 0.0), (0.5, 0.5), (2, 4))
    doubled = seq.map(lambda f: f * 2.0)
    assert np.allclose(doubled(4).data, 2 * seq(4).data)


def test_custom_sequence():
    lim = Form.constant(G, 0, [1.0])
    seq = custom_sequence(G, 0, lambda n: lim + Form.constant(G, 0, [1.0 / n]), lim, (2, 4, 8))
    assert seq(8).data[0, 0, 0] == pytest.approx(1.125)


@pytest.mark.parametrize("order", [1.0, 2.0, 0.5])
def test_extrapolate_power_tail(order):
    ns = [4, 8, 16]
    vals = [3.0 + 2.0 * n**-order for n in ns]
    ex = extrapolate(ns, vals)
    assert ex.method == "aitken"
    assert ex.value == pytest.approx(3.0, abs=1e-10)
    assert ex.order == pytest.approx(order)


def test_extrapolate_degenerate():
    assert extrapolate([1, 2], [5.0, 5.0]).method == "converged"
    assert extrapolate([1], [2.0]).method == "last"
    assert extrapolate([1, 2, 4], [1.0, -1.0, 1.0]).method == "last"
    with pytest.raises(ValueError):
        extrapolate([], [])


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.1, 10.0))
def test_decay_slope_recovers_power(s, c):
    ns = [4, 8, 16, 32]
    assert decay_slope(ns, [c * n**-s for n in ns]) == pytest.approx(-s, abs=1e-9)


def test_decay_slope_floor():
    assert decay_slope([1, 2], [0.0, 0.0], floor=1e-12) == float("-inf")


def test_weak_limit_of_oscillator():
    seq = oscillator_sequence(G, (1, 0), (1.0, 0.0), (2, 4, 8))
    x, y = G.coords()
    phi = np.broadcast_to(np.exp(np.cos(2 * np.pi * x) + np.sin(2 * np.pi * y)), G.shape)
    tests = [Form.constant(G, 1, [0.0, 1.0]), Form(G, 1, np.stack([phi, phi]))]
    tab = weak_limit_estimate(seq, tests)
    assert np.max(np.abs(tab.values[-1])) < 1e-10


def test_weak_limit_degree_check():
    seq = oscillator_sequence(G, (1, 0), (1.0, 0.0), (2, 4))
    with pytest.raises(DegreeError):
        weak_limit_estimate(seq, [Form.constant(G, 0, [1.0])])


def test_measure_detects_bubble_atom():
    x0 = (0.3, 0.55)
    seq = bubble_sequence(TorusGrid.cube(2, 512), x0, 2.0, (8, 16, 32), differentiate=True)
    est = measure_limit_estimate(seq, p=2.0)
    assert len(est.atoms) == 1
    loc = est.atoms[0].location
    assert np.hypot(loc[0] - x0[0], loc[1] - x0[1]) < 1 / 8
    assert est.atoms[0].mass == pytest.approx(est.total, rel=0.02)


def test_measure_of_oscillation_is_diffuse():
    seq = oscillator_sequence(G, (1, 0), (1.0, 0.0), (2, 4, 8))
    est = measure_limit_estimate(seq, p=2.0)
    assert est.atoms == []
    assert est.diffuse == pytest.approx(0.5, rel=1e-9)


def test_measure_rejects_small_p():
    seq = oscillator_sequence(G, (1, 0), (1.0, 0.0), (2, 4))
    with pytest.raises(ExponentError):
        measure_limit_estimate(seq, p=0.5)
