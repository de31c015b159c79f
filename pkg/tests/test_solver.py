import dataclasses

import numpy as np
import pytest

from nls_ground.nonlinearity import (
    CouplingProduct,
    LogPower,
    NonlinearitySpec,
    PiecewisePower,
    SeparablePower,
    SobolevCritical,
)
from nls_ground.solver import (
    SolutionReport,
    SolveConfig,
    beta_sweep,
    coupling_exponent,
    extract_multipliers,
    find_saturating_beta,
    minimize,
    pohozaev_multiplier,
    saturation_flags,
)
from nls_ground.soliton import ground_state

QUARTIC = NonlinearitySpec(3, 1, (SeparablePower(0, 1.0, 4.0),))

COUPLED = NonlinearitySpec(
    3,
    2,
    (
        SeparablePower(0, 1.0, 4.0),
        SeparablePower(1, 1.0, 4.0),
        CouplingProduct(1.0, (2.0, 2.0)),
    ),
)


@pytest.fixture(scope="module")
def scalar_report():
    config = SolveConfig(rho=(1.0,), r_max=1.2, n_intervals=4000, n_starts=1)
    return minimize(QUARTIC, config)


def test_scalar_minimizer_matches_the_shooting_profile(scalar_report):
    B = ground_state(3, 4.0).mass

    assert scalar_report.converged
    assert scalar_report.accepted
    assert scalar_report.energy == pytest.approx(0.5 * B**2, rel=1e-4)
    assert scalar_report.lam[0] == pytest.approx(B**2, rel=1e-4)
    assert abs(scalar_report.residuals.nehari_res) < 1e-5
    assert abs(scalar_report.residuals.pohozaev_res) < 1e-5
    assert scalar_report.saturation == ("saturated",)
    assert scalar_report.checks["audit"] == "pass"


def test_energy_never_increases(scalar_report):
    energies = [record.energy for record in scalar_report.history]
    assert len(energies) > 1
    assert np.all(np.diff(energies) <= 1e-12 * abs(energies[0]))


def test_report_rows_and_summary(scalar_report, tmp_path):
    row = scalar_report.row()
    assert len(row) == len(SolutionReport.header(1))
    assert row[0] == 1.0
    assert row[-1] is True
    assert "energy c" in scalar_report.summary()

    path = scalar_report.history_to_csv(tmp_path / "history.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,energy,gradient_norm,step"
    assert len(lines) == len(scalar_report.history) + 1


def test_multipliers_of_the_minimizer(scalar_report):
    multipliers = extract_multipliers(
        scalar_report.state, QUARTIC, scalar_report.rho
    )
    assert multipliers.kkt.nonnegative
    assert multipliers.kkt.slackness < 1e-6
    assert abs(multipliers.sigma) < 1e-4
    assert multipliers.kkt.passed


def test_minimize_is_deterministic():
    config = SolveConfig(rho=(1.0,), r_max=2.0, n_intervals=600, n_starts=3)
    first = minimize(QUARTIC, config, check=False)
    again = minimize(QUARTIC, config, check=False)
    threaded = minimize(QUARTIC, dataclasses.replace(config, threads=3))

    assert first.energy == again.energy
    np.testing.assert_array_equal(first.state.values, again.state.values)
    assert threaded.energy == first.energy


def test_two_component_minimizer():
    config = SolveConfig(
        rho=(1.0, 0.8), r_max=1.5, n_intervals=1500, n_starts=4, seed=3
    )
    report = minimize(COUPLED, config)
    bounds = np.asarray(config.rho) ** 2
    scale = float(np.sum(report.state.gradient_energies()))

    assert report.energy > 0
    assert abs(report.residuals.m_value) < 1e-8 * scale
    assert np.all(report.masses <= bounds + 1e-10)
    assert len(report.saturation) == 2

    single = minimize(
        COUPLED.restricted(0),
        SolveConfig(rho=(1.0,), r_max=1.5, n_intervals=1500, n_starts=1),
        check=False,
    )
    assert report.energy <= single.energy * (1.0 + 1e-5)


def _scalar(dimension, term):
    return NonlinearitySpec(dimension, 1, (term,)), (1.0,)


BATTERY = {
    "power4-3d": _scalar(3, SeparablePower(0, 1.0, 4.0)),
    "power5-3d": _scalar(3, SeparablePower(0, 1.0, 5.0)),
    "log-3d": _scalar(3, LogPower(0, 1.0, 4.0)),
    "piecewise-3d": _scalar(3, PiecewisePower(0, 1.0, 4.0, 5.0)),
    "power-4d": _scalar(4, SeparablePower(0, 1.0, 3.5)),
    "log-4d": _scalar(4, LogPower(0, 1.0, 3.0)),
    "power-5d": _scalar(5, SeparablePower(0, 1.0, 3.2)),
    "critical-3d": (
        NonlinearitySpec(
            3,
            2,
            (
                SeparablePower(0, 0.01, 10.0 / 3.0),
                SeparablePower(1, 0.01, 10.0 / 3.0),
                SeparablePower(0, 1.0, 4.0),
                SeparablePower(1, 1.0, 4.0),
                SobolevCritical((1.0, 1.0)),
            ),
        ),
        (10.0, 10.0),
    ),
    "coupled-3d": (COUPLED, (1.0, 0.8)),
    "coupled-4d": (
        NonlinearitySpec(
            4,
            2,
            (
                SeparablePower(0, 1.0, 3.5),
                SeparablePower(1, 1.0, 3.5),
                CouplingProduct(1.0, (2.0, 1.5)),
            ),
        ),
        (1.0, 1.0),
    ),
    "coupled-5d": (
        NonlinearitySpec(
            5,
            2,
            (
                SeparablePower(0, 1.0, 3.2),
                SeparablePower(1, 1.0, 3.2),
                CouplingProduct(0.5, (1.5, 1.5)),
            ),
        ),
        (1.0, 1.0),
    ),
}


@pytest.fixture(scope="module")
def battery_reports():
    reports = {}
    for name, (spec, rho) in BATTERY.items():
        config = SolveConfig(
            rho=rho,
            r_max=10.0,
            n_intervals=1500,
            n_starts=3,
            max_iters=1500,
            autoscale=True,
        )
        reports[name] = minimize(spec, config)
    return reports


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_identities_hold_at_every_minimizer(battery_reports, name):
    rho = BATTERY[name][1]
    report = battery_reports[name]
    bounds = np.asarray(rho) ** 2

    assert abs(report.m_relative) < 1e-8
    assert report.energy > 0
    assert np.all(report.masses <= bounds * (1.0 + 1e-10))
    if report.converged:
        assert report.kkt.nonnegative
        assert report.kkt.slackness < 1e-6
        assert np.all(report.lam[~np.isnan(report.lam)] >= -1e-6)


def test_battery_spans_dimensions_and_converges(battery_reports):
    dimensions = {spec.dimension for spec, _ in BATTERY.values()}
    assert dimensions == {3, 4, 5}
    converged = [r for r in battery_reports.values() if r.converged]
    assert len(converged) >= len(BATTERY) - 2


def test_saturation_flags(scalar_report):
    state = scalar_report.state
    assert saturation_flags(state, (1.0,)) == ("saturated",)
    assert saturation_flags(state, (2.0,)) == ("interior",)
    zero = state.with_values(np.zeros_like(state.values))
    assert saturation_flags(zero, (1.0,)) == ("zero",)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"rho": (0.0,)},
        {"rho": ()},
        {"rho": (1.0,), "backtrack": 1.0},
        {"rho": (1.0,), "tolerance": 0.0},
        {"rho": (1.0,), "n_starts": 0},
        {"rho": (1.0,), "rearrangement_every": -1},
        {"rho": (1.0,), "widths": (1.0, 2.0)},
        {"rho": (1.0,), "amplitudes": (-1.0,)},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolveConfig(**kwargs)


def test_rho_must_match_the_components():
    with pytest.raises(ValueError):
        minimize(COUPLED, SolveConfig(rho=(1.0,)))


def test_coupling_exponent():
    assert coupling_exponent(COUPLED) == 1.0


def test_beta_sweep_validation():
    config = SolveConfig(rho=(1.0, 1.0), r_max=1.5, n_intervals=300)
    with pytest.raises(ValueError):
        beta_sweep(QUARTIC, [1.0], config)
    low = NonlinearitySpec(
        3,
        2,
        (
            SeparablePower(0, 1.0, 4.0),
            SeparablePower(1, 1.0, 4.0),
            CouplingProduct(1.0, (2.0, 4.0 / 3.0)),
        ),
    )
    with pytest.raises(ValueError):
        beta_sweep(low, [1.0], config)
    with pytest.raises(ValueError):
        beta_sweep(COUPLED, [], config)


def test_pohozaev_multiplier_agrees_with_nehari(scalar_report):
    estimate = pohozaev_multiplier(scalar_report.state, QUARTIC)
    assert estimate == pytest.approx(scalar_report.lam[0], rel=1e-4)
    assert "lambda_pohozaev" in scalar_report.checks

    two = COUPLED.restricted(0)
    with pytest.raises(ValueError):
        pohozaev_multiplier(
            scalar_report.state.with_values(
                np.vstack([scalar_report.state.values] * 2)
            ),
            two,
        )


SWEEP_CONFIG = SolveConfig(
    rho=(1.0, 1.0), r_max=0.8, n_intervals=2000, n_starts=3, max_iters=800
)


@pytest.fixture(scope="module")
def coupling_sweep():
    return beta_sweep(COUPLED, [0.0, 0.1, 0.5, 1.0, 2.0], SWEEP_CONFIG)


def test_beta_sweep_locates_the_saturating_coupling(coupling_sweep):
    rows = coupling_sweep.rows
    assert [row.beta for row in rows] == [0.0, 0.1, 0.5, 1.0, 2.0]
    assert all(row.error is None for row in rows)

    located = coupling_sweep.threshold()
    assert located == 0.5
    for row in rows:
        if row.beta < located:
            assert not all(row.saturated)
            assert "zero" in row.report.saturation
        else:
            assert all(row.saturated)
            np.testing.assert_allclose(
                np.sqrt(row.report.masses), SWEEP_CONFIG.rho, rtol=1e-3
            )


def test_beta_sweep_diagnostic_stays_bounded(coupling_sweep, tmp_path):
    rows = coupling_sweep.rows
    assert rows[0].diagnostic == 0.0
    a_beta = [row.a_beta for row in rows]
    assert all(a > 0 for a in a_beta)
    assert all(b <= a for a, b in zip(a_beta, a_beta[1:]))
    for row in rows[1:]:
        assert row.diagnostic == pytest.approx(row.beta * row.a_beta)
    assert coupling_sweep.diagnostic_spread() < 10.0

    lines = coupling_sweep.to_csv(tmp_path / "beta.csv").read_text()
    lines = lines.splitlines()
    assert lines[0] == (
        "beta,c,lambda_1,lambda_2,sat_1,sat_2,a_beta,diagnostic,status"
    )
    assert len(lines) == 6


def test_beta_sweep_keeps_going_past_a_failed_fiber(monkeypatch):
    from nls_ground import solver

    fiber_maximizer = solver.fiber_maximizer

    def fragile(u, spec, *args, **kwargs):
        if spec.couplings and spec.couplings[0].beta == 2.0:
            msg = "M(s*u) keeps one sign"
            raise solver.FiberError(msg)
        return fiber_maximizer(u, spec, *args, **kwargs)

    monkeypatch.setattr(solver, "fiber_maximizer", fragile)
    sweep = beta_sweep(COUPLED, [1.0, 2.0], SWEEP_CONFIG)

    good, failed = sweep.rows
    assert good.error is None
    assert good.report is not None
    assert failed.report is None
    assert failed.error.startswith("FiberError")
    assert np.isnan(failed.diagnostic)
    assert sweep.diagnostic_spread() == 1.0


def test_find_saturating_beta():
    beta, report = find_saturating_beta(
        COUPLED, SWEEP_CONFIG, beta=0.125, max_doublings=3
    )
    assert beta in (0.25, 0.5)
    assert report.saturation == ("saturated", "saturated")


def test_find_saturating_beta_gives_up():
    config = dataclasses.replace(SWEEP_CONFIG, n_starts=3, max_iters=200)
    assert find_saturating_beta(
        COUPLED, config, beta=0.0, max_doublings=2
    ) == (None, None)
