import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from increment_lab.gridfun import (DomainError, GridFunction, GridSpec, ShapeError, cumulate,
                                   difference, eval_rect, from_density, sup_distance, sup_norm,
                                   to_density)


def direct_cdf(cell_mass):
    """Independent oracle: every lattice value as an explicit sum over cells."""
    m = cell_mass.shape[0]
    d = cell_mass.ndim
    out = np.zeros((m + 1,) * d)
    for idx in itertools.product(range(m + 1), repeat=d):
        out[idx] = cell_mass[tuple(slice(0, k) for k in idx)].sum()
    return out


@st.composite
def grid_functions(draw, max_d=3, max_m=5, integer=False):
    d = draw(st.integers(1, max_d))
    m = draw(st.integers(1, max_m))
    if integer:
        elems = st.integers(-5, 5).map(float)
    else:
        elems = st.floats(-3, 3, allow_nan=False)
    cells = draw(arrays(float, (m,) * d, elements=elems))
    return GridFunction.from_cell_mass(GridSpec(d, m), cells)


def test_spec_validation():
    with pytest.raises(ShapeError):
        GridSpec(1, 0)
    with pytest.raises(ShapeError):
        GridSpec(0, 3)
    spec = GridSpec(2, 4)
    assert spec.to_index((0.25, 1.0)) == (1, 4)
    with pytest.raises(DomainError):
        spec.to_index((0.3, 0.5))
    with pytest.raises(ShapeError):
        spec.to_index((0.25,))


def test_identity_density_d1():
    f = from_density(GridSpec(1, 2), [1, 1])
    np.testing.assert_array_equal(f.cdf, [0.0, 0.5, 1.0])


def test_zero_density_d2():
    f = from_density(GridSpec(2, 1), [0])
    assert np.all(f.cdf == 0)


def test_random_density_matches_double_sum_oracle():
    rng = np.random.default_rng(3)
    spec = GridSpec(2, 4)
    g = rng.uniform(-1, 1, spec.cell_shape)
    f = from_density(spec, g)
    oracle = direct_cdf(g * spec.cell_volume)
    assert f.cdf.shape == (5, 5)
    np.testing.assert_allclose(f.cdf, oracle, rtol=0, atol=1e-15)


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        from_density(GridSpec(1, 3), [1.0, 2.0])


def test_eval_rect_lebesgue_square():
    f = from_density(GridSpec(2, 4), np.ones((4, 4)))
    assert eval_rect(f, (0.25, 0.25), (0.75, 0.75)) == pytest.approx(0.25, abs=1e-15)


def test_eval_rect_errors():
    f = GridFunction.zero(GridSpec(2, 4))
    with pytest.raises(DomainError):
        eval_rect(f, (0.5, 0.25), (0.25, 0.75))
    with pytest.raises(DomainError):
        eval_rect(f, (0.1, 0.25), (0.5, 0.75))


def test_eval_rect_d3_matches_cell_sum():
    rng = np.random.default_rng(11)
    spec = GridSpec(3, 4)
    cells = rng.integers(-7, 8, spec.cell_shape).astype(float)
    f = GridFunction.from_cell_mass(spec, cells)
    for _ in range(50):
        lo = rng.integers(0, 5, 3)
        hi = np.array([rng.integers(a, 5) for a in lo])
        expected = cells[tuple(slice(a, b) for a, b in zip(lo, hi))].sum()
        assert eval_rect(f, lo / 4, hi / 4) == expected


@given(grid_functions())
def test_cdf_matches_oracle_and_boundary(f):
    np.testing.assert_allclose(f.cdf, direct_cdf(f.cell_mass), atol=1e-12 * f.spec.n_cells)
    for ax in range(f.spec.d):
        assert np.all(np.take(f.cdf, 0, axis=ax) == 0)
    assert f.total_mass == pytest.approx(f.cell_mass.sum(), abs=1e-12 * f.spec.n_cells)
    assert f((1.0,) * f.spec.d) == f.cdf[(-1,) * f.spec.d]


@given(grid_functions())
def test_difference_inverts_cumulate(f):
    np.testing.assert_allclose(difference(f.cdf), f.cell_mass, atol=1e-12 * f.spec.n_cells)
    inc = f.cell_mass
    for idx in itertools.product(range(f.spec.m), repeat=f.spec.d):
        lo = np.array(idx) / f.spec.m
        hi = (np.array(idx) + 1) / f.spec.m
        assert eval_rect(f, lo, hi) == pytest.approx(inc[idx], abs=1e-12 * f.spec.n_cells)


@given(grid_functions(integer=True))
def test_density_roundtrip_exact_for_integer_masses(f):
    g = to_density(f)
    back = from_density(f.spec, g)
    np.testing.assert_array_equal(back.cell_mass, f.cell_mass)


@given(grid_functions(max_d=2))
def test_sup_norm_is_exhaustive_scan(f):
    assert sup_norm(f) == max(abs(float(v)) for v in f.cdf.ravel())


@given(st.data())
def test_sup_distance_is_a_metric(data):
    f = data.draw(grid_functions(max_d=2, max_m=4))
    shape = f.spec.cell_shape
    g = GridFunction.from_cell_mass(f.spec, data.draw(arrays(float, shape, elements=st.floats(-3, 3))))
    h = GridFunction.from_cell_mass(f.spec, data.draw(arrays(float, shape, elements=st.floats(-3, 3))))
    assert sup_distance(f, f) == 0
    assert sup_distance(f, g) == sup_distance(g, f)
    assert sup_distance(f, h) <= sup_distance(f, g) + sup_distance(g, h) + 1e-15


def test_sup_norm_examples():
    assert sup_norm(GridFunction.zero(GridSpec(2, 3))) == 0
    f = from_density(GridSpec(2, 4), np.ones((4, 4)))
    assert sup_norm(f) == pytest.approx(1.0)
    assert np.argmax(np.abs(f.cdf)) == f.cdf.size - 1
    with pytest.raises(ShapeError):
        sup_distance(f, GridFunction.zero(GridSpec(2, 3)))


def test_eval_rect_additive_over_partition():
    rng = np.random.default_rng(2)
    f = GridFunction.from_cell_mass(GridSpec(2, 6), rng.normal(size=(6, 6)))
    whole = eval_rect(f, (0, 0), (1, 1))
    parts = sum(eval_rect(f, (i / 6, j / 6), ((i + 1) / 6, (j + 1) / 6))
                for i in range(6) for j in range(6))
    assert whole == pytest.approx(parts, abs=1e-12 * 36)
    assert eval_rect(f, (0.5, 0.5), (0.5, 0.5)) == 0


@given(grid_functions())
def test_json_roundtrip(f):
    back = GridFunction.from_json(f.to_json())
    assert back.spec == f.spec
    np.testing.assert_array_equal(back.cell_mass, f.cell_mass)
    assert json.loads(f.to_json())["d"] == f.spec.d


def test_arithmetic_and_immutability():
    spec = GridSpec(1, 3)
    f = from_density(spec, [1, 2, 3])
    g = from_density(spec, [1, 1, 1])
    np.testing.assert_allclose((f - g).density, [0, 1, 2])
    np.testing.assert_allclose((f + g).density, [2, 3, 4])
    np.testing.assert_allclose((f * 2.0).density, [2, 4, 6])
    with pytest.raises(ValueError):
        f.cdf[1] = 5.0
