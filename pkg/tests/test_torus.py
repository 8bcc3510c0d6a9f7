from math import comb

import pytest
from hypothesis import given, strategies as st

from hodgelab import DegreeError, GridError, TorusGrid, merge_indices, multi_indices, star_complement


@pytest.mark.parametrize("n, l, expected", [
    (2, 1, [(1,), (2,)]),
    (3, 2, [(1, 2), (1, 3), (2, 3)]),
    (3, 0, [()]),
])
def test_multi_indices_examples(n, l, expected):
    assert list(multi_indices(n, l)) == expected


@pytest.mark.parametrize("n, l", [(2, 3), (3, -1), (2, -2)])
def test_multi_indices_out_of_range(n, l):
    with pytest.raises(DegreeError):
        multi_indices(n, l)


@pytest.mark.parametrize("i, j, expected", [
    ((1,), (2,), (1, (1, 2))),
    ((2,), (1,), (-1, (1, 2))),
    ((1,), (1,), (0, None)),
    ((1, 3), (2,), (-1, (1, 2, 3))),
])
def test_merge_examples(i, j, expected):
    assert merge_indices(i, j) == expected


@pytest.mark.parametrize("i, n, expected", [
    ((1,), 2, (1, (2,))),
    ((2,), 2, (-1, (1,))),
    ((), 2, (1, (1, 2))),
    ((1,), 3, (1, (2, 3))),
    ((2,), 3, (-1, (1, 3))),
])
def test_star_complement_examples(i, n, expected):
    assert star_complement(i, n) == expected


index_strategy = st.integers(2, 3).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, n)).flatmap(
        lambda t: st.tuples(st.just(t[0]), st.sampled_from(multi_indices(*t)))))


@given(index_strategy)
def test_double_complement_sign(arg):
    n, i = arg
    s1, ic = star_complement(i, n)
    s2, back = star_complement(ic, n)
    assert back == i
    l = len(i)
    assert s1 * s2 == (-1) ** (l * (n - l))


@given(st.integers(2, 3).flatmap(lambda n: st.tuples(
    st.sets(st.integers(1, n), max_size=n), st.sets(st.integers(1, n), max_size=n))))
def test_supercommutativity(sets):
    i, j = tuple(sorted(sets[0])), tuple(sorted(sets[1]))
    s_ij, k_ij = merge_indices(i, j)
    s_ji, k_ji = merge_indices(j, i)
    assert k_ij == k_ji
    if s_ij:
        assert s_ij == (-1) ** (len(i) * len(j)) * s_ji
    else:
        assert s_ji == 0


@given(st.integers(2, 3), st.integers(0, 3))
def test_index_count(n, l):
    if l <= n:
        idx = multi_indices(n, l)
        assert len(idx) == comb(n, l)
        assert list(idx) == sorted(idx)
        assert all(list(t) == sorted(set(t)) for t in idx)


@pytest.mark.parametrize("shape, lengths", [
    ((8,), None), ((8, 8, 8, 8), None), ((9, 8), None), ((6, 8), None),
    ((8, 8), (1.0, 0.0)), ((8, 8), (1.0, -2.0)), ((8, 8), (1.0,)),
])
def test_grid_validation(shape, lengths):
    with pytest.raises(GridError):
        TorusGrid(shape, lengths)


def test_grid_geometry():
    g = TorusGrid((8, 16), (2.0, 0.5))
    assert g.dim == 2
    assert g.spacing == (0.25, 0.03125)
    assert g.cell_volume == pytest.approx(0.25 * 0.03125)
    assert g.volume == pytest.approx(1.0)
    assert g.spectral_shape == (8, 9)
    assert g.refine(2).shape == (16, 32)
    hash(g)
