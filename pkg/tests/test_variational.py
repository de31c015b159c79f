import csv

import numpy as np
import pytest

from nls_ground.nonlinearity import (
    CouplingProduct,
    NonlinearitySpec,
    SeparablePower,
    SobolevCritical,
)
from nls_ground.radial import StateVector, make_grid
from nls_ground.variational import (
    Fiber,
    FiberError,
    constraint_gradient,
    constraint_M,
    dilate,
    energy_gradient,
    energy_J,
    fiber_maximizer,
    fiber_scan,
    manifold_energy,
    manifold_radius,
    project_to_M,
    radius_residual,
    residuals,
)

QUARTIC = NonlinearitySpec(3, 1, (SeparablePower(0, 1.0, 4.0),))

COUPLED = NonlinearitySpec(
    3,
    2,
    (
        SeparablePower(0, 1.0, 4.0),
        SeparablePower(1, 1.0, 4.0),
        CouplingProduct(1.0, (2.0, 2.0)),
        SobolevCritical((1.0, 1.0)),
    ),
)


def _state(n_components=1, widths=(1.5, 2.0), r_max=20.0, n=2000):
    grid = make_grid(3, r_max, n)
    values = [
        grid.sample(lambda r, w=w: np.exp(-0.5 * (r / w) ** 2))
        for w in widths[:n_components]
    ]
    return StateVector(grid, np.array(values))


def _random_state(rng, n_components, grid):
    values = np.zeros((n_components, len(grid)))
    for i in range(n_components):
        for _ in range(3):
            center = rng.uniform(0.0, 4.0)
            width = rng.uniform(0.5, 2.0)
            height = rng.uniform(0.2, 1.0)
            values[i] += height * np.exp(-(((grid.r - center) / width) ** 2))
    values[:, -1] = 0.0
    return StateVector(grid, values)


def test_energy_and_constraint_of_a_gaussian():
    u = _state()
    gradient = float(np.sum(u.gradient_energies()))
    quartic = float(u.grid.integrate(u.values[0] ** 4))

    assert energy_J(u, QUARTIC) == pytest.approx(0.5 * gradient - quartic / 4)
    assert constraint_M(u, QUARTIC) == pytest.approx(
        gradient - 0.75 * quartic
    )


def test_constraint_needs_a_nonzero_state():
    u = _state()
    with pytest.raises(ValueError):
        constraint_M(u.with_values(np.zeros_like(u.values)), QUARTIC)
    with pytest.raises(FiberError):
        Fiber(u.with_values(np.zeros_like(u.values)), QUARTIC)


def test_scaling_law_matches_resampled_dilation():
    u = _state(r_max=30.0, n=6000)
    fiber = Fiber(u, QUARTIC)
    for s in (0.8, 1.3, 2.0):
        dilated = dilate(u, s)
        assert fiber.energy(s) == pytest.approx(
            energy_J(dilated, QUARTIC), rel=1e-4
        )
        resampled = dilate(u, s, preserve_mass=False)
        assert resampled.masses()[0] == pytest.approx(u.masses()[0], rel=1e-5)
        assert fiber.energy(s) == pytest.approx(
            energy_J(resampled, QUARTIC), rel=1e-4
        )
        factor = dilated.values[0, 0] / resampled.values[0, 0]
        assert factor == pytest.approx(1.0, abs=1e-5)


def test_dilate_rejects_nonpositive_factors():
    u = _state()
    assert dilate(u, 1.0) is u
    with pytest.raises(ValueError):
        dilate(u, 0.0)


def test_fiber_maximizer_zeroes_the_constraint():
    for spec, u in ((QUARTIC, _state()), (COUPLED, _state(2))):
        root = fiber_maximizer(u, spec)
        fiber = Fiber(u, spec)

        assert not root.plateau
        assert abs(fiber.constraint(root.a)) < 1e-9 * root.a**2 * fiber.gradient
        assert fiber.energy(root.a) > fiber.energy(0.9 * root.a)
        assert fiber.energy(root.a) > fiber.energy(1.1 * root.a)


def test_fiber_without_nonlinearity_has_no_root():
    spec = NonlinearitySpec(3, 1, ())
    with pytest.raises(FiberError):
        fiber_maximizer(_state(), spec)


def test_project_to_manifold():
    u = _state(2)
    projected, scale = project_to_M(u, COUPLED)
    gradient = float(np.sum(projected.gradient_energies()))

    assert scale > 0
    assert abs(constraint_M(projected, COUPLED)) < 1e-8 * gradient
    assert manifold_energy(projected, COUPLED) == pytest.approx(
        energy_J(projected, COUPLED), rel=1e-7
    )
    assert energy_J(projected, COUPLED) > 0


def test_manifold_radius():
    u = _state()
    radius = manifold_radius(u, QUARTIC)
    assert radius_residual(u, QUARTIC, radius) == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(ValueError):
        manifold_radius(u, NonlinearitySpec(3, 1, ()))


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    grid = make_grid(3, 10.0, 500)
    step = 1e-6
    for _ in range(10):
        u = _random_state(rng, 2, grid)
        v = _random_state(rng, 2, grid)
        plus = u.with_values(u.values + step * v.values)
        minus = u.with_values(u.values - step * v.values)

        dJ = (energy_J(plus, COUPLED) - energy_J(minus, COUPLED)) / (2 * step)
        analytic = float(np.sum(energy_gradient(u, COUPLED) * v.values))
        assert analytic == pytest.approx(dJ, rel=1e-6)

        dM = (constraint_M(plus, COUPLED) - constraint_M(minus, COUPLED)) / (
            2 * step
        )
        analytic = float(np.sum(constraint_gradient(u, COUPLED) * v.values))
        assert analytic == pytest.approx(dM, rel=1e-6)


def test_fiber_scan_has_one_sign_change(tmp_path):
    rng = np.random.default_rng(3)
    grid = make_grid(3, 20.0, 1000)
    for _ in range(100):
        u = _random_state(rng, 2, grid)
        scan = fiber_scan(u, COUPLED, s_range=(1e-3, 1e3), n_points=301)

        assert scan.sign_changes() == 1
        best = int(np.argmax(scan.phi))
        assert scan.s[best - 1] <= scan.a <= scan.s[best + 1]

    path = tmp_path / "fiber.csv"
    scan.to_csv(path)
    with path.open(newline="") as infile:
        rows = list(csv.reader(infile))
    assert rows[0] == ["s", "phi", "M"]
    assert len(rows) == 302


def test_identity_combination_is_free_of_multipliers():
    u = _state(2)
    for lam in ([0.0, 0.0], [1.0, 2.5], [np.nan, 3.0]):
        result = residuals(u, lam, COUPLED)
        assert result.combination == pytest.approx(
            result.m_value, rel=1e-10, abs=1e-10
        )
    assert result.m_value == pytest.approx(constraint_M(u, COUPLED))
