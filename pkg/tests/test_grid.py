import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from buot.grid import (FluxField, ScalarField, divergence, gradient, inner_h, make_grid,
                       norm_h2, objective_flux, operator_norm_bound, power_iteration_norm)


def rand_flux(grid, rng):
    return FluxField(grid, rng.standard_normal((grid.d, grid.n_points)))


def rand_scalar(grid, rng):
    return ScalarField(grid, rng.standard_normal(grid.n_points))


# make_grid -------------------------------------------------------------------

def test_make_grid_examples():
    g = make_grid(2, 1.0, 256)
    assert g.h == 1 / 256
    g = make_grid(1, 1.0, 1)
    assert g.h == 1.0 and g.n_points == 2
    g = make_grid(3, 2.0, 4)
    assert g.h == 0.5 and g.n_points == 125


@pytest.mark.parametrize("args", [(0, 1.0, 4), (2, 1.0, 0), (2, 0.0, 4), (2, -1.0, 4)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_anisotropic_box():
    g = make_grid(2, (1.0, 2.0), (4, 8))
    assert g.spacings == (0.25, 0.25)
    g = make_grid(2, (1.0, 3.0), (4, 4))
    assert g.cell_volume == pytest.approx(0.25 * 0.75)
    with pytest.raises(ValueError):
        g.h


# fields ----------------------------------------------------------------------

def test_scalar_field_size_checked():
    g = make_grid(2, 1.0, 2)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros(8))


def test_flux_boundary_enforced():
    g = make_grid(2, 1.0, 3)
    m = FluxField(g, np.ones((2, g.n_points)))
    for i in range(2):
        at_L = g.coordinates(i) == g.lengths[i]
        assert np.all(m.values[i, at_L] == 0.0)
        assert np.all(m.values[i, ~at_L] == 1.0)
    m.set_component(0, np.full(g.n_points, 5.0))
    assert np.all(m.values[0, g.coordinates(0) == 1.0] == 0.0)


# divergence / gradient -------------------------------------------------------

def test_divergence_1d_example():
    g = make_grid(1, 1.0, 2)
    m = FluxField(g, np.array([1.0, 1.0, 0.0]))
    np.testing.assert_array_equal(divergence(m).values, [2.0, 0.0, -2.0])


def test_divergence_2d_single_entry():
    g = make_grid(2, 1.0, 1)
    v = np.zeros((2, 4))
    v[0, 0] = 1.0  # point (0, 0), axis 0
    d = divergence(FluxField(g, v)).as_array()
    expected = np.zeros((2, 2))
    expected[0, 0], expected[1, 0] = 1.0, -1.0
    np.testing.assert_array_equal(d, expected)


def test_gradient_1d_example():
    g = make_grid(1, 1.0, 2)
    grad = gradient(ScalarField(g, np.array([0.0, 1.0, 1.0])))
    np.testing.assert_array_equal(grad.values[0], [2.0, 0.0, 0.0])


def test_gradient_of_constant_is_zero():
    g = make_grid(3, 1.0, 3)
    assert not gradient(ScalarField(g, np.full(g.n_points, 2.5))).values.any()


def test_adjoint_on_3x4_grid():
    rng = np.random.default_rng(1)
    g = make_grid(2, (1.0, 1.5), (2, 3))
    m, u = rand_flux(g, rng), rand_scalar(g, rng)
    lhs = inner_h(divergence(m), u)
    rhs = -inner_h(m, gradient(u))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_divergence_matches_dense_stencil():
    # independent loop implementation of the three-case stencil
    rng = np.random.default_rng(2)
    g = make_grid(2, 1.0, (3, 4))
    m = rand_flux(g, rng)
    mv = m.as_array()
    out = np.zeros(g.shape)
    for i in range(2):
        h = g.spacings[i]
        for idx in np.ndindex(*g.shape):
            c = idx[i]
            prev = list(idx)
            prev[i] -= 1
            here = mv[i][idx]
            if c == 0:
                out[idx] += here / h
            elif c == g.shape[i] - 1:
                out[idx] += -mv[i][tuple(prev)] / h
            else:
                out[idx] += (here - mv[i][tuple(prev)]) / h
    np.testing.assert_allclose(divergence(m).as_array(), out, rtol=0, atol=1e-12)


grids = st.builds(lambda d, n, L: make_grid(d, L, n),
                  st.integers(1, 3), st.integers(1, 8), st.sampled_from([0.5, 1.0, 2.0]))


@settings(max_examples=60, deadline=None)
@given(grid=grids, seed=st.integers(0, 2**32 - 1))
def test_adjoint_property(grid, seed):
    rng = np.random.default_rng(seed)
    m, u = rand_flux(grid, rng), rand_scalar(grid, rng)
    err = abs(inner_h(divergence(m), u) + inner_h(m, gradient(u)))
    assert err <= 1e-12 * (1 + norm_h2(m) * norm_h2(u))


@settings(max_examples=60, deadline=None)
@given(grid=grids, seed=st.integers(0, 2**32 - 1))
def test_conservation_property(grid, seed):
    m = rand_flux(grid, np.random.default_rng(seed))
    assert abs(divergence(m).values.sum()) <= 1e-12 * max(1.0, np.abs(m.values).sum() / grid.h)


@settings(max_examples=40, deadline=None)
@given(grid=grids, seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_linearity(grid, seed, a, b):
    rng = np.random.default_rng(seed)
    m1, m2 = rand_flux(grid, rng), rand_flux(grid, rng)
    combo = FluxField(grid, a * m1.values + b * m2.values)
    np.testing.assert_allclose(divergence(combo).values,
                               a * divergence(m1).values + b * divergence(m2).values,
                               atol=1e-9 * (1 + abs(a) + abs(b)) / grid.h)
    u1, u2 = rand_scalar(grid, rng), rand_scalar(grid, rng)
    lin = ScalarField(grid, a * u1.values + b * u2.values)
    np.testing.assert_allclose(gradient(lin).values,
                               a * gradient(u1).values + b * gradient(u2).values,
                               atol=1e-9 * (1 + abs(a) + abs(b)) / grid.h)


@settings(max_examples=40, deadline=None)
@given(grid=grids, seed=st.integers(0, 2**32 - 1))
def test_gradient_kernel_is_constants(grid, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal()
    u = ScalarField(grid, np.full(grid.n_points, c))
    assert not gradient(u).values.any()
    # a field with zero gradient is constant: perturb one point and the gradient sees it
    v = u.values.copy()
    v[rng.integers(grid.n_points)] += 1.0
    assert np.abs(gradient(ScalarField(grid, v)).values).max() > 0


@settings(max_examples=40, deadline=None)
@given(grid=grids, seed=st.integers(0, 2**32 - 1))
def test_boundary_invariant_after_gradient(grid, seed):
    grad = gradient(rand_scalar(grid, np.random.default_rng(seed)))
    assert not grad.values[grid.outflow_mask()].any()


# inner products and norms ----------------------------------------------------

def test_inner_h_examples():
    g = make_grid(1, 1.0, 1)
    assert inner_h(ScalarField(g, [1.0, 2.0]), ScalarField(g, [3.0, 4.0])) == 11.0
    g = make_grid(2, 1.0, 2)
    ones = ScalarField(g, np.ones(9))
    assert inner_h(ones, ones) == pytest.approx(2.25)


def test_inner_h_symmetric_and_checks_kind():
    rng = np.random.default_rng(3)
    g = make_grid(2, 1.0, 4)
    a, b = rand_flux(g, rng), rand_flux(g, rng)
    assert inner_h(a, b) == pytest.approx(inner_h(b, a), rel=1e-14)
    with pytest.raises(TypeError):
        inner_h(a, rand_scalar(g, rng))
    with pytest.raises(ValueError):
        inner_h(rand_scalar(g, rng), rand_scalar(make_grid(2, 1.0, 3), rng))


def test_norm_examples():
    g = make_grid(1, 1.0, 1)
    assert norm_h2(g.zeros()) == 0.0
    assert norm_h2(ScalarField(g, [3.0, 4.0])) == 5.0
    a = rand_scalar(make_grid(2, 1.0, 5), np.random.default_rng(4))
    assert norm_h2(ScalarField(a.grid, -2.5 * a.values)) == pytest.approx(2.5 * norm_h2(a))


def test_objective_flux_examples():
    rng = np.random.default_rng(5)
    g1 = make_grid(1, 1.0, 7)
    m = rand_flux(g1, rng)
    assert objective_flux(m, 1) == objective_flux(m, 2)
    g2 = make_grid(2, 2.0, 2)  # h = 1
    v = np.zeros((2, 9))
    v[:, 0] = (3.0, 4.0)
    m2 = FluxField(g2, v)
    assert objective_flux(m2, 2) == 5.0
    assert objective_flux(m2, 1) == 7.0
    assert objective_flux(g2.zero_flux(), 2) == 0.0
    with pytest.raises(ValueError):
        objective_flux(m2, 3)


# operator norm ---------------------------------------------------------------

def test_operator_norm_bound_examples():
    g = make_grid(2, 1.0, 4)
    assert operator_norm_bound(g) == 128.0
    assert operator_norm_bound(g, with_source=True) == 129.0


@pytest.mark.parametrize("d,N", [(1, 8), (2, 6), (3, 3)])
def test_power_iteration_below_bound(d, N):
    g = make_grid(d, 1.0, N)
    est = power_iteration_norm(g)
    assert est <= operator_norm_bound(g) * (1 + 1e-12)
    assert est >= 0.5 * operator_norm_bound(g)
    assert power_iteration_norm(g, with_source=True) <= operator_norm_bound(g, True) * (1 + 1e-12)


def test_finite_threshold_value():
    from buot.grid import finite_convergence_threshold
    assert finite_convergence_threshold(make_grid(2, 1.0, 8)) == 1.0
    assert math.isclose(finite_convergence_threshold(make_grid(3, 2.0, 4)), 3.0)
