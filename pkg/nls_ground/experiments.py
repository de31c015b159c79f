"""Experiment runners behind the command line.

Every scenario writes its tables, a plain-text summary and (when
matplotlib is installed) SVG figures into one output directory, and
returns a ScenarioResult whose status the CLI maps to an exit code.

"""

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from . import analysis, plot
from .config import config_to_dict
from .decorators import isolated, reported
from .energymap import EnergyRow, GroundEnergyMap
from .nonlinearity import audit_assumptions, check_eta2, eta2_radius
from .radial import make_grid
from .solver import (
    beta_sweep,
    find_saturating_beta,
    gaussian_state,
    minimize,
)
from .utils import (
    convergence_order,
    loglog_fit,
    parallel_map,
    spawn_seeds,
    write_csv,
)
from .variational import Fiber, fiber_maximizer, fiber_scan

logger = logging.getLogger(__name__)

SOBOLEV_RADII = (5.0, 10.0, 20.0, 40.0)
DOUBLINGS = 3


@dataclass(frozen=True)
class ScenarioResult:
    """``status`` is "ok", "audit" or "nonconvergence"."""

    status: str
    files: Tuple[Path, ...]
    summary: str


@reported
def sweep_rho(spec, rho_values, config):
    """Solve at every rho; repeated rho vectors are solved once.

    Rows run concurrently on ``config.threads`` workers, each with its
    own seed spawned from ``config.seed``. A failing row is recorded in
    the map instead of aborting the sweep.

    """
    keys = list(dict.fromkeys(tuple(float(x) for x in rho) for rho in rho_values))
    if not keys:
        msg = "need at least one rho vector"
        raise ValueError(msg)
    for rho in keys:
        if len(rho) != spec.n_components:
            msg = f"rho {rho!r} needs {spec.n_components} entries"
            raise ValueError(msg)
    seeds = spawn_seeds(config.seed, len(keys))

    @isolated
    def solve(rho, seed):
        row_config = dataclasses.replace(config, rho=rho, seed=seed, threads=1)
        return minimize(spec, row_config, check=False)

    def row(item):
        rho, seed = item
        outcome = solve(rho, seed)
        if not outcome.ok:
            return EnergyRow.failed(rho, outcome.error)
        report = outcome.value
        logger.info(
            "rho %s: c = %.10g (%s)", rho, report.energy, report.status
        )
        return EnergyRow.from_report(rho, report)

    rows = parallel_map(row, list(zip(keys, seeds)), config.threads)
    return GroundEnergyMap(spec.n_components, rows)


@dataclass(frozen=True)
class RefinementStudy:
    """Manifold energy of one smooth state under grid doubling.

    ``energies[k]`` is J at the fiber maximizer of the base Gaussian on
    ``n_intervals[k]`` cells; ``sobolev[k]`` is the instanton quotient
    cut at ``radii[k]``.

    """

    n_intervals: Tuple[int, ...]
    energies: Tuple[float, ...]
    orders: Tuple[float, ...]
    radii: Tuple[float, ...]
    sobolev: Tuple[float, ...]
    tail_order: float

    def to_csv(self, path):
        rows = [
            ("energy", m, value)
            for m, value in zip(self.n_intervals, self.energies)
        ]
        rows += [
            ("sobolev", r, value) for r, value in zip(self.radii, self.sobolev)
        ]
        return write_csv(path, ["study", "parameter", "value"], rows)

    def summary(self):
        lines = [
            f"M = {m}: J = {value:.14g}"
            for m, value in zip(self.n_intervals, self.energies)
        ]
        lines.append(
            "observed order: " + ", ".join(f"{q:.3f}" for q in self.orders)
        )
        lines.append(f"Sobolev tail order in R: {self.tail_order:.3f}")
        return "\n".join(lines)


def refinement_study(spec, config, levels=3, radii=SOBOLEV_RADII):
    """J of a smooth state on M, 2M, 4M, ... cells and its observed order."""
    if levels < 3:
        msg = f"need at least three levels, got {levels!r}"
        raise ValueError(msg)
    n_intervals, energies = [], []
    for level in range(levels):
        cells = config.n_intervals * 2**level
        grid = make_grid(spec.dimension, config.r_max, cells)
        state = gaussian_state(grid, config, spec.n_components)
        root = fiber_maximizer(state, spec)
        energy = Fiber(state, spec).energy(root.a)
        logger.debug("refinement M=%d: J=%.15g", cells, energy)
        n_intervals.append(cells)
        energies.append(energy)

    exact = analysis.sobolev_S(spec.dimension)
    sobolev = [analysis.sobolev_S_truncated(spec.dimension, r) for r in radii]
    errors = np.abs(np.array(sobolev) - exact)
    slope, _, _ = loglog_fit(radii, np.maximum(errors, 1e-300))
    return RefinementStudy(
        tuple(n_intervals),
        tuple(energies),
        tuple(convergence_order(energies)),
        tuple(radii),
        tuple(sobolev),
        -slope,
    )


def _write_text(path, text):
    path.write_text(text + "\n", encoding="utf-8")
    return path


def _write_plot(make, path):
    """Save one figure; without matplotlib the figure is skipped."""
    try:
        figure, _ = make()
    except ImportError as error:
        logger.warning("skipping %s: %s", path.name, error)
        return None
    return plot.save_svg(figure, path)


def _state_csv(report, path):
    grid = report.state.grid
    header = ["r"] + [f"u_{i + 1}" for i in range(report.state.n_components)]
    rows = zip(grid.r, *report.state.values)
    return write_csv(path, header, rows)


def _audit_gate(spec, force):
    audit = audit_assumptions(spec)
    if audit.passed:
        return None
    if force:
        logger.warning("audit failed (%s); continuing", audit.failures())
        return None
    return ScenarioResult("audit", (), audit.summary())


def _solve(experiment, out):
    report = minimize(experiment.spec, experiment.solver)
    scan = fiber_scan(report.state, experiment.spec)
    files = [
        _write_text(out / "summary.txt", report.summary()),
        _state_csv(report, out / "solution.csv"),
        report.history_to_csv(out / "history.csv"),
        scan.to_csv(out / "fiber.csv"),
        _write_plot(lambda: plot.plot_state(report.state), out / "solution.svg"),
        _write_plot(lambda: plot.plot_fiber_scan(scan), out / "fiber.svg"),
    ]
    status = "ok" if report.converged else "nonconvergence"
    return status, files, report.summary()


def _sweep_rho(experiment, out):
    spec = experiment.spec
    energy_map = sweep_rho(spec, experiment.rho_values, experiment.solver)
    threshold = None
    if spec.has_critical_part:
        threshold = analysis.threshold_value(spec.dimension, spec.theta)
    summary = energy_map.summary(threshold)
    files = [
        energy_map.to_csv(out / "energy_map.csv"),
        _write_text(out / "summary.txt", summary),
        _write_plot(
            lambda: plot.plot_energy_map(energy_map, threshold),
            out / "energy_map.svg",
        ),
    ]
    converged = all(row.ok and row.status == "converged" for row in energy_map)
    return ("ok" if converged else "nonconvergence"), files, summary


def _sweep_beta(experiment, out):
    sweep = beta_sweep(experiment.spec, experiment.betas, experiment.solver)
    threshold = sweep.threshold()
    lines = [
        "saturating beta: "
        + ("none in range" if threshold is None else f"{threshold:.6g}"),
        f"diagnostic spread: {sweep.diagnostic_spread():.4g}",
    ]
    if threshold is None:
        start = 2.0 * max(max(experiment.betas), 0.0625)
        located, _ = find_saturating_beta(
            experiment.spec,
            experiment.solver,
            beta=start,
            max_doublings=DOUBLINGS,
        )
        lines.append(
            f"doubling from {start:.6g}: "
            + ("no saturation" if located is None else f"{located:.6g}")
        )
    for row in sweep.rows:
        if row.report is None:
            lines.append(f"beta {row.beta:.6g}: failed ({row.error})")
        else:
            lines.append(
                f"beta {row.beta:.6g}: c = {row.report.energy:.10g}, "
                f"saturation {', '.join(row.report.saturation)}"
            )
    summary = "\n".join(lines)
    files = [
        sweep.to_csv(out / "beta_sweep.csv"),
        _write_text(out / "summary.txt", summary),
        _write_plot(lambda: plot.plot_beta_sweep(sweep), out / "beta_sweep.svg"),
    ]
    converged = all(r.report is not None and r.report.converged for r in sweep.rows)
    return ("ok" if converged else "nonconvergence"), files, summary


def _audit(experiment, out):
    spec = experiment.spec
    audit = audit_assumptions(spec)
    lines = [audit.summary()]
    if audit.eta > 0:
        constant = analysis.gn_constant(spec.dimension, spec.l2_critical)
        eta2 = check_eta2(spec, experiment.solver.rho, constant, audit=audit)
        radius = eta2_radius(spec, constant, audit=audit)
        lines.append(
            f"eta mass bound: {'holds' if eta2.holds else 'violated'} "
            f"(lhs {eta2.lhs:.6g}, |rho| below {radius:.6g})"
        )
    summary = "\n".join(lines)
    files = [_write_text(out / "audit.txt", summary)]
    return ("ok" if audit.passed else "audit"), files, summary


def _gn(experiment, out):
    dimension = experiment.spec.dimension
    rows, lines = [], []
    for p in experiment.exponents:
        constant = analysis.gn_constant(dimension, p)
        delta = analysis.delta_p(dimension, p)
        rows.append((p, delta, constant))
        lines.append(f"p = {p:g}: delta = {delta:.6g}, C = {constant:.12g}")
    summary = "\n".join(lines)
    files = [
        write_csv(out / "gn.csv", ["p", "delta", "C"], rows),
        _write_text(out / "summary.txt", summary),
    ]
    return "ok", files, summary


def _threshold(experiment, out):
    spec = experiment.spec
    report = minimize(spec, experiment.solver)
    check = analysis.threshold_check(
        spec, experiment.solver.rho, report.energy, experiment.eps_values
    )
    summary = report.summary() + "\n" + check.summary()
    files = [_write_text(out / "summary.txt", summary)]
    if check.bubbles is not None:
        files.append(check.bubbles.to_csv(out / "bubbles.csv"))
    status = "ok" if report.converged else "nonconvergence"
    return status, files, summary


def _bubbles(experiment, out):
    spec = experiment.spec
    dimension = spec.dimension
    diagnostics = analysis.bubble_diagnostics(
        dimension,
        experiment.eps_values,
        spec.theta,
        experiment.solver.rho,
        spec,
    )
    bar = analysis.bar_S_check(dimension, spec.theta, seed=experiment.solver.seed)
    limit = analysis.sobolev_S(dimension) ** (0.5 * dimension)
    lines = [
        f"mass exponent {diagnostics.mass_exponent:.4f} "
        f"(R^2 {diagnostics.mass_r_squared:.5f})",
        f"gradient excess exponent {diagnostics.gradient_exponent:.4f} "
        f"(R^2 {diagnostics.gradient_r_squared:.5f})",
        f"bar S closed form {bar.closed_form:.10g}, "
        f"minimax {bar.minimax:.10g}, infimum {bar.infimum:.10g}",
        "threshold "
        f"{analysis.threshold_value(dimension, spec.theta):.10g}",
    ]
    for row in diagnostics.rows:
        lines.append(f"eps {row.eps:.4g}: J = {row.energy:.10g}")
    summary = "\n".join(lines)
    files = [
        diagnostics.to_csv(out / "bubbles.csv"),
        _write_text(out / "summary.txt", summary),
        _write_plot(
            lambda: plot.plot_bubbles(diagnostics, limit), out / "bubbles.svg"
        ),
    ]
    return "ok", files, summary


def _refine(experiment, out):
    study = refinement_study(
        experiment.spec, experiment.solver, experiment.refine_levels
    )
    summary = study.summary()
    files = [
        study.to_csv(out / "refinement.csv"),
        _write_text(out / "summary.txt", summary),
    ]
    return "ok", files, summary


RUNNERS = {
    "solve": _solve,
    "sweep-rho": _sweep_rho,
    "sweep-beta": _sweep_beta,
    "audit": _audit,
    "gn": _gn,
    "threshold": _threshold,
    "bubbles": _bubbles,
    "refine": _refine,
}

GATED = {"solve", "sweep-rho", "sweep-beta", "threshold", "refine"}


def run_scenario(experiment, out_dir, force=False):
    """Run ``experiment`` and write its artifacts under ``out_dir``.

    A spec failing the assumption audit stops gated scenarios before
    anything is written, unless ``force``.

    """
    if experiment.scenario in GATED:
        blocked = _audit_gate(experiment.spec, force)
        if blocked is not None:
            return blocked
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo = json.dumps(config_to_dict(experiment), indent=2, sort_keys=True)
    config_file = _write_text(out / "config.json", echo)
    status, files, summary = RUNNERS[experiment.scenario](experiment, out)
    files = (config_file,) + tuple(f for f in files if f is not None)
    logger.info("%s: %s, %d files", experiment.scenario, status, len(files))
    return ScenarioResult(status, files, summary)
