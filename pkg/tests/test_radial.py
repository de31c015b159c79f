import math

import numpy as np
import pytest

import nls_ground
from nls_ground.radial import (
    GridMismatch,
    RadialField,
    StateVector,
    make_grid,
    sphere_area,
)


def _gaussian(grid, width=1.0):
    return RadialField.from_function(
        grid, lambda r: np.exp(-0.5 * (r / width) ** 2)
    )


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)


def test_grid_nodes_and_exponents():
    grid = make_grid(3, 10.0, 100)

    assert len(grid) == 101
    assert grid.r[0] == 0.0
    assert grid.r[-1] == 10.0
    assert grid.h == pytest.approx(0.1)
    assert grid.weights[0] == 0.0
    assert grid.l2_critical == pytest.approx(10 / 3)
    assert grid.sobolev_critical == 6.0


def test_grid_validation():
    with pytest.raises(ValueError):
        make_grid(2, 10.0, 100)
    with pytest.raises(ValueError):
        make_grid(3, 0.0, 100)
    with pytest.raises(ValueError):
        make_grid(3, 10.0, 8)


def test_ball_volume():
    grid = make_grid(3, 1.0, 1000)
    volume = grid.integrate(np.ones(len(grid)))
    assert volume == pytest.approx(4 * math.pi / 3, rel=1e-5)


def test_gaussian_integrals():
    grid = make_grid(3, 10.0, 2000)
    u = _gaussian(grid)

    assert nls_ground.mass(u) == pytest.approx(math.pi**1.5, rel=1e-6)
    assert nls_ground.grad_norm_sq(u) == pytest.approx(
        1.5 * math.pi**1.5, rel=1e-4
    )
    assert nls_ground.lp_norm(u, 2) ** 2 == pytest.approx(nls_ground.mass(u))

    with pytest.raises(ValueError):
        nls_ground.lp_norm(u, 0.5)


def test_gaussian_integrals_in_four_dimensions():
    grid = make_grid(4, 10.0, 2000)
    u = _gaussian(grid)
    assert nls_ground.mass(u) == pytest.approx(math.pi**2, rel=1e-6)


def test_stiffness_is_the_dirichlet_form():
    grid = make_grid(3, 8.0, 400)
    rng = np.random.default_rng(1)
    values = rng.normal(size=(2, len(grid)))
    values[:, -1] = 0.0

    quadratic = np.sum(values * grid.stiffness(values), axis=1)
    np.testing.assert_allclose(
        quadratic, grid.gradient_energy(values), rtol=1e-12
    )


def test_solve_h1_inverts_the_shifted_form():
    grid = make_grid(3, 8.0, 400)
    rng = np.random.default_rng(2)
    rhs = rng.normal(size=(2, len(grid)))
    shift = 3.5

    x = grid.solve_h1(rhs, shift)
    applied = grid.stiffness(x) + shift * grid.weights * x

    assert np.all(x[:, -1] == 0.0)
    np.testing.assert_allclose(applied[:, :-1], rhs[:, :-1], atol=1e-6)



def test_field_must_vanish_at_the_edge():
    grid = make_grid(3, 5.0, 100)
    with pytest.raises(ValueError):
        RadialField(grid, np.ones(len(grid)))
    with pytest.raises(GridMismatch):
        RadialField(grid, np.zeros(10))


def test_state_vector():
    grid = make_grid(3, 10.0, 500)
    u = _gaussian(grid)
    state = StateVector.from_fields([u, -u])

    assert state.n_components == 2
    np.testing.assert_allclose(state.masses(), nls_ground.mass(u))
    assert nls_ground.mass(state) == pytest.approx(2 * nls_ground.mass(u))
    assert not state.is_zero()
    assert state.with_values(np.zeros_like(state.values)).is_zero()

    other = make_grid(3, 10.0, 400)
    with pytest.raises(GridMismatch):
        StateVector.from_fields([u, _gaussian(other)])
    with pytest.raises(ValueError):
        StateVector.from_fields([])


def test_same_grid():
    a = make_grid(3, 10.0, 500)
    b = make_grid(3, 10.0, 500)
    assert a.same_as(b)
    assert not a.same_as(make_grid(4, 10.0, 500))


def test_integrate_needs_matching_samples():
    grid = make_grid(3, 10.0, 500)
    with pytest.raises(GridMismatch):
        nls_ground.integrate(np.ones(10), grid)
    with pytest.raises(TypeError):
        nls_ground.mass(np.ones(501))
