"""Minimization of J over the manifold M intersected with the mass balls.

Each iteration takes a preconditioned gradient step, rescales components
that left their ball, and dilates the result back onto M. The step is
accepted only if J decreased enough at the projected state, so J never
increases along a run. A minimizing run is repeated from several initial
states and the lowest energy wins.

"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .analysis import gn_constant, threshold_check
from .decorators import isolated
from .nonlinearity import audit_assumptions, check_eta2
from .radial import StateVector, make_grid
from .rearrange import rearrangement_descent
from .utils import geometric_range, parallel_map, spawn_seeds, write_csv
from .variational import (
    FiberError,
    constraint_gradient,
    energy_gradient,
    energy_J,
    fiber_maximizer,
    project_to_M,
    residuals,
)

logger = logging.getLogger(__name__)

ZERO_MASS = 1e-12
SATURATION_TOLERANCE = 1e-8
MULTIPLIER_TOLERANCE = 1e-6
SIGMA_TOLERANCE = 1e-4
TIE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class SolveConfig:
    """Parameters of one minimization.

    Attributes:
        rho: mass bounds; component i is constrained to |u_i|_2 <= rho_i.
        max_iters: iteration cap per start.
        initial_step: first trial step of the line search.
        backtrack: step reduction factor of the line search.
        armijo: sufficient-decrease constant.
        tolerance: bound on the relative projected-gradient norm.
        rearrangement_every: rearrange every this many iterations; 0 is off.
        n_starts: number of initial states.
        widths: Gaussian widths of the initial states, default r_max / 10.
        amplitudes: peak values of the initial states, default: full mass.
        seed: master seed of the random initial states.
        r_max, n_intervals: the radial grid.
        autoscale: shrink r_max to the length scale of the projected
            initial state.
        threads: workers for the multi-start.

    """

    rho: Tuple[float, ...]
    max_iters: int = 2000
    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    tolerance: float = 1e-7
    rearrangement_every: int = 0
    n_starts: int = 8
    widths: Optional[Tuple[float, ...]] = None
    amplitudes: Optional[Tuple[float, ...]] = None
    seed: int = 0
    r_max: float = 20.0
    n_intervals: int = 4000
    autoscale: bool = False
    threads: int = 1

    def __post_init__(self):
        rho = tuple(float(value) for value in np.atleast_1d(self.rho))
        object.__setattr__(self, "rho", rho)
        if not rho or any(not value > 0 for value in rho):
            msg = f"every rho_i must be positive, got {self.rho!r}"
            raise ValueError(msg)
        for name in ("initial_step", "armijo", "tolerance", "r_max"):
            if not getattr(self, name) > 0:
                msg = f"{name} must be positive, got {getattr(self, name)!r}"
                raise ValueError(msg)
        if not 0 < self.backtrack < 1:
            msg = f"backtrack must lie in (0, 1), got {self.backtrack!r}"
            raise ValueError(msg)
        if self.max_iters < 1 or self.n_starts < 1 or self.threads < 1:
            msg = "max_iters, n_starts and threads must be positive"
            raise ValueError(msg)
        if self.rearrangement_every < 0:
            msg = "rearrangement_every must be nonnegative"
            raise ValueError(msg)
        for name in ("widths", "amplitudes"):
            values = getattr(self, name)
            if values is None:
                continue
            values = tuple(float(v) for v in values)
            if len(values) != len(rho) or any(not v > 0 for v in values):
                msg = f"{name} needs {len(rho)} positive entries, got {values!r}"
                raise ValueError(msg)
            object.__setattr__(self, name, values)

    @property
    def mass_bounds(self):
        return np.asarray(self.rho) ** 2


class IterationRecord(NamedTuple):
    iteration: int
    energy: float
    gradient_norm: float
    step: float


class KKTVerdict(NamedTuple):
    nonnegative: bool
    slackness: float
    sigma: float
    ill_conditioned: bool

    @property
    def passed(self):
        return (
            self.nonnegative
            and self.slackness < MULTIPLIER_TOLERANCE
            and abs(self.sigma) < SIGMA_TOLERANCE
            and not self.ill_conditioned
        )


class Multipliers(NamedTuple):
    lam: np.ndarray
    sigma: float
    kkt: KKTVerdict


def _nehari_multipliers(u, spec):
    """lam_i |u_i|^2 = int d_iG(u) u_i - |grad u_i|^2; NaN on zero components."""
    grid = u.grid
    masses = u.masses()
    forcing = grid.integrate(spec.g(u.values) * u.values)
    lam = np.full(u.n_components, np.nan)
    alive = masses >= ZERO_MASS
    lam[alive] = (forcing[alive] - u.gradient_energies()[alive]) / masses[alive]
    return lam


def _fit_sigma(u, lam, spec):
    """Least-squares sigma for the residual of the sigma-family equation.

    Residuals are measured in the dual norm of (A + W), so the fit is a
    scalar quadratic with a closed-form minimizer.

    """
    grid = u.grid
    values = u.values
    weights = grid.weights
    alive = ~np.isnan(lam)
    stiff = grid.stiffness(values)
    base = stiff + np.nan_to_num(lam)[:, None] * weights * values
    base -= spec.g(values) * weights
    slope = -2.0 * stiff + 0.5 * spec.dimension * spec.h(values) * weights
    base[~alive] = 0.0
    slope[~alive] = 0.0
    base[:, -1] = 0.0
    slope[:, -1] = 0.0

    slope_primal = grid.solve_h1(slope)
    curvature = float(np.sum(slope * slope_primal))
    scale = float(np.sum(stiff * values)) + float(np.sum(u.masses()))
    if curvature <= 1e-14 * max(scale, 1.0):
        return 0.0, True
    return -float(np.sum(base * slope_primal)) / curvature, False


def extract_multipliers(u, spec, rho=None):
    """Multipliers lam, the manifold multiplier sigma and the KKT verdict.

    Complementary slackness is only judged when the bounds ``rho`` are
    given.

    """
    lam = _nehari_multipliers(u, spec)
    sigma, ill_conditioned = _fit_sigma(u, lam, spec)
    if ill_conditioned:
        logger.warning("sigma fit is ill-conditioned")

    alive = ~np.isnan(lam)
    nonnegative = bool(np.all(lam[alive] >= -MULTIPLIER_TOLERANCE))
    slackness = 0.0
    if rho is not None:
        bounds = np.asarray(rho, dtype=float) ** 2
        gaps = np.abs(lam[alive] * (bounds[alive] - u.masses()[alive]))
        scale = np.maximum(1.0, np.abs(lam[alive]) * bounds[alive])
        slackness = float(np.max(gaps / scale, initial=0.0))
    verdict = KKTVerdict(nonnegative, slackness, sigma, ill_conditioned)
    return Multipliers(lam, sigma, verdict)


def pohozaev_multiplier(u, spec):
    """lam of a one-component state from (2/(N-2)) lam |u|^2 = int 2* G - g u.

    The gradient term cancels between the Nehari and Pohozaev identities,
    so this is an independent estimate of the Nehari multiplier.

    """
    if u.n_components != 1:
        msg = f"needs a one-component state, got {u.n_components}"
        raise ValueError(msg)
    mass = float(u.masses()[0])
    if mass < ZERO_MASS:
        return math.nan
    values = u.values
    forcing = u.grid.integrate(
        spec.sobolev_critical * spec.G(values)
        - np.sum(spec.g(values) * values, axis=0)
    )
    return 0.5 * (spec.dimension - 2) * float(forcing) / mass


def saturation_flags(u, rho):
    """'saturated', 'interior' or 'zero' for each component."""
    bounds = np.asarray(rho, dtype=float) ** 2
    flags = []
    for mass, bound in zip(u.masses(), bounds):
        if mass < ZERO_MASS:
            flags.append("zero")
        elif mass >= bound * (1.0 - SATURATION_TOLERANCE):
            flags.append("saturated")
        else:
            flags.append("interior")
    return tuple(flags)


@dataclass(frozen=True)
class SolutionReport:
    """Outcome of a minimization: the state, its energy and certificates."""

    state: StateVector
    energy: float
    masses: np.ndarray
    rho: Tuple[float, ...]
    lam: np.ndarray
    sigma: float
    residuals: object
    saturation: Tuple[str, ...]
    kkt: KKTVerdict
    status: str
    iterations: int
    history: Tuple[IterationRecord, ...] = field(repr=False)
    start: str = ""
    ties: Tuple[str, ...] = ()
    checks: dict = field(default_factory=dict)
    threshold: Optional[object] = None

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def m_relative(self):
        return self.residuals.m_relative

    @property
    def accepted(self):
        """Converged, on M, inside the balls, with positive energy."""
        bounds = np.asarray(self.rho) ** 2
        return (
            self.converged
            and abs(self.m_relative) < 1e-8
            and bool(np.all(self.masses <= bounds + 1e-10))
            and self.energy > 0
        )

    def row(self):
        """rho_1..K, c, lambda_1..K, sat_1..K."""
        return (
            list(self.rho)
            + [self.energy]
            + [None if np.isnan(x) else float(x) for x in self.lam]
            + [flag == "saturated" for flag in self.saturation]
        )

    @staticmethod
    def header(n_components):
        return (
            [f"rho_{i + 1}" for i in range(n_components)]
            + ["c"]
            + [f"lambda_{i + 1}" for i in range(n_components)]
            + [f"sat_{i + 1}" for i in range(n_components)]
        )

    def history_to_csv(self, path):
        return write_csv(
            path, ["iteration", "energy", "gradient_norm", "step"], self.history
        )

    def summary(self):
        lines = [
            f"status: {self.status} after {self.iterations} iterations "
            f"(start {self.start})",
            f"energy c = {self.energy:.12g}",
            "masses: " + ", ".join(f"{m:.10g}" for m in self.masses),
            "lambda: " + ", ".join(f"{x:.10g}" for x in self.lam),
            f"sigma: {self.sigma:.3g}",
            "saturation: " + ", ".join(self.saturation),
            f"|M|/|grad u|^2: {self.m_relative:.3g}",
            f"nehari residual: {self.residuals.nehari_res:.3g}",
            f"pohozaev residual: {self.residuals.pohozaev_res:.3g}",
            f"KKT: {'pass' if self.kkt.passed else 'FAIL'} "
            f"(slackness {self.kkt.slackness:.3g})",
        ]
        for name, value in sorted(self.checks.items()):
            lines.append(f"check {name}: {value}")
        if self.ties:
            lines.append("equal-energy starts: " + ", ".join(self.ties))
        if self.threshold is not None:
            lines.append(self.threshold.summary())
        return "\n".join(lines)


def _gaussian(grid, width):
    return np.exp(-0.5 * (grid.r / width) ** 2)


def _initial_states(grid, config, n_components):
    """(label, values) pairs: a base Gaussian, semitrivial starts, random ones."""
    widths = config.widths or (grid.r_max / 10.0,) * n_components
    bounds = config.mass_bounds

    def build(width_factors, mass_fractions, support):
        values = np.zeros((n_components, len(grid)))
        for i in support:
            profile = _gaussian(grid, widths[i] * width_factors[i])
            if config.amplitudes is not None:
                profile *= config.amplitudes[i]
            else:
                norm = grid.integrate(profile**2)
                profile *= math.sqrt(mass_fractions[i] * bounds[i] / norm)
            values[i] = profile
        values[:, -1] = 0.0
        return values

    ones = np.ones(n_components)
    everything = range(n_components)
    starts = [("gaussian", build(ones, ones, everything))]
    if n_components > 1:
        for i in everything:
            starts.append((f"semitrivial-{i + 1}", build(ones, ones, [i])))
    seeds = spawn_seeds(config.seed, max(config.n_starts - len(starts), 0))
    for j, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        factors = np.exp(rng.uniform(-0.7, 0.7, n_components))
        fractions = rng.uniform(0.3, 1.0, n_components)
        starts.append((f"random-{j + 1}", build(factors, fractions, everything)))
    return starts[: config.n_starts]


def gaussian_state(grid, config, n_components):
    """The first start of every run: Gaussians holding the full masses."""
    _, values = _initial_states(grid, config, n_components)[0]
    return StateVector(grid, values)


def _ball(values, grid, bounds, frozen):
    values = np.array(values)
    masses = grid.integrate(values**2)
    over = masses > bounds
    values[over] *= np.sqrt(bounds[over] / masses[over])[:, None]
    values[frozen] = 0.0
    values[:, -1] = 0.0
    return values


def _tangent_direction(u, spec, bounds, frozen, shift):
    """Preconditioned gradient projected onto the active constraints.

    Returns the direction d, the slope <grad, d> and the mass multipliers
    of the active set.

    """
    grid = u.grid
    gradient = energy_gradient(u, spec)
    gradient[frozen] = 0.0
    manifold = constraint_gradient(u, spec)
    manifold[frozen] = 0.0

    masses = u.masses()
    candidates = [
        i
        for i in range(u.n_components)
        if not frozen[i] and masses[i] >= bounds[i] * (1.0 - 1e-10)
    ]

    def precondition(dual):
        return grid.solve_h1(dual, shift=shift)

    primal_gradient = precondition(gradient)
    primal_manifold = precondition(manifold)
    while True:
        normals = [manifold]
        primals = [primal_manifold]
        for i in candidates:
            normal = np.zeros_like(gradient)
            normal[i] = u.values[i] * grid.weights
            normal[i, -1] = 0.0
            normals.append(normal)
            primals.append(precondition(normal))
        gram = np.array(
            [[np.sum(a * pb) for pb in primals] for a in normals]
        )
        rhs = -np.array([np.sum(a * primal_gradient) for a in normals])
        coefficients = np.linalg.lstsq(gram, rhs, rcond=1e-13)[0]
        negative = [
            i for i, c in zip(candidates, coefficients[1:]) if c < 0
        ]
        if not negative:
            break
        candidates = [i for i in candidates if i not in negative]

    dual = gradient.copy()
    direction = primal_gradient.copy()
    for c, normal, primal in zip(coefficients, normals, primals):
        dual += c * normal
        direction += c * primal
    slope = float(np.sum(dual * direction))
    mass_multipliers = dict(zip(candidates, coefficients[1:]))
    return direction, max(slope, 0.0), mass_multipliers


class _Run(NamedTuple):
    label: str
    state: StateVector
    energy: float
    status: str
    iterations: int
    history: Tuple[IterationRecord, ...]


def _descend(spec, grid, label, values, config):
    bounds = config.mass_bounds
    masses = grid.integrate(values**2)
    frozen = masses < ZERO_MASS
    values = _ball(values, grid, bounds, frozen)
    state, _ = project_to_M(StateVector(grid, values), spec)
    energy = energy_J(state, spec)
    history = []
    status = "max_iters"
    rearrange = config.rearrangement_every > 0 and spec.is_gsp_form
    if config.rearrangement_every > 0 and not spec.is_gsp_form:
        logger.info("rearrangement skipped: nonlinearity is not separable")

    iteration = 0
    for iteration in range(1, config.max_iters + 1):
        lam = _nehari_multipliers(state, spec)
        alive = ~np.isnan(lam)
        shift = max(1.0, float(np.max(lam[alive], initial=1.0)))
        direction, slope, _ = _tangent_direction(
            state, spec, bounds, frozen, shift
        )
        scale = float(
            np.sum(state.gradient_energies()) + shift * np.sum(state.masses())
        )
        gradient_norm = math.sqrt(slope / scale)
        if gradient_norm < config.tolerance:
            history.append(IterationRecord(iteration, energy, gradient_norm, 0.0))
            status = "converged"
            break

        step = config.initial_step
        accepted = None
        while step > 1e-14:
            trial = _ball(state.values - step * direction, grid, bounds, frozen)
            try:
                candidate, _ = project_to_M(StateVector(grid, trial), spec)
            except (FiberError, ValueError):
                candidate = None
            if candidate is not None:
                candidate_energy = energy_J(candidate, spec)
                if candidate_energy <= energy - config.armijo * step * slope:
                    accepted = candidate
                    break
            step *= config.backtrack
        history.append(IterationRecord(iteration, energy, gradient_norm, step))
        if accepted is None:
            status = "stalled"
            logger.warning(
                "start %s stalled at iteration %d (gradient %.3g)",
                label,
                iteration,
                gradient_norm,
            )
            break
        state, energy = accepted, candidate_energy
        frozen |= state.masses() < ZERO_MASS

        if rearrange and iteration % config.rearrangement_every == 0:
            rearranged, certificate = rearrangement_descent(state, spec)
            rearranged_energy = energy_J(rearranged, spec)
            if rearranged_energy <= energy:
                state, energy = rearranged, rearranged_energy
            logger.debug(
                "rearrangement at %d: J %.10g (certificate %s)",
                iteration,
                energy,
                "valid" if certificate.valid else "violated",
            )
        logger.debug(
            "%s it %d: J=%.12g |g|=%.3g step=%.3g",
            label,
            iteration,
            energy,
            gradient_norm,
            step,
        )
    logger.info(
        "start %s: %s after %d iterations, J=%.12g",
        label,
        status,
        iteration,
        energy,
    )
    return _Run(label, state, energy, status, iteration, tuple(history))


def _grid_for(spec, config):
    grid = make_grid(spec.dimension, config.r_max, config.n_intervals)
    if not config.autoscale:
        return grid
    start = gaussian_state(grid, config, spec.n_components)
    root = fiber_maximizer(start, spec)
    r_max = config.r_max / root.a
    logger.info("autoscale: r_max %.6g -> %.6g", config.r_max, r_max)
    return make_grid(spec.dimension, r_max, config.n_intervals)


def _preconditions(spec, rho):
    checks = {}
    audit = audit_assumptions(spec)
    checks["audit"] = "pass" if audit.passed else "fail " + ",".join(
        audit.failures()
    )
    if audit.eta > 0:
        constant = gn_constant(spec.dimension, spec.l2_critical)
        eta2 = check_eta2(spec, rho, constant, audit=audit)
        checks["eta2"] = f"{'pass' if eta2.holds else 'fail'} ({eta2.lhs:.4g} < 1)"
    else:
        checks["eta2"] = "pass (eta = 0)"
    if not audit.passed:
        logger.warning("assumption audit failed: %s", audit.failures())
    return checks


def _report(spec, config, run, ties, checks):
    multipliers = extract_multipliers(run.state, spec, config.rho)
    lam = multipliers.lam[0]
    if spec.n_components == 1 and not np.isnan(lam):
        estimate = pohozaev_multiplier(run.state, spec)
        gap = abs(estimate - lam) / max(abs(lam), 1.0)
        checks = {**checks, "lambda_pohozaev": f"{estimate:.10g} (gap {gap:.3g})"}
    report = SolutionReport(
        state=run.state,
        energy=run.energy,
        masses=run.state.masses(),
        rho=config.rho,
        lam=multipliers.lam,
        sigma=multipliers.sigma,
        residuals=residuals(run.state, multipliers.lam, spec),
        saturation=saturation_flags(run.state, config.rho),
        kkt=multipliers.kkt,
        status=run.status,
        iterations=run.iterations,
        history=run.history,
        start=run.label,
        ties=ties,
        checks=checks,
    )
    if spec.has_critical_part:
        report = dataclasses.replace(
            report, threshold=threshold_check(spec, config.rho, run.energy)
        )
    return report


def minimize(spec, config, check=True):
    """Minimize J over M intersected with the balls |u_i|_2 <= rho_i.

    Every start runs to convergence (or its iteration cap); the lowest
    energy wins, ties broken by the masses in lexicographic order. With
    ``check``, the assumption audit and the mass condition are evaluated
    and recorded in ``report.checks``.

    """
    if len(config.rho) != spec.n_components:
        msg = (
            f"rho has {len(config.rho)} entries for "
            f"{spec.n_components} components"
        )
        raise ValueError(msg)
    checks = _preconditions(spec, config.rho) if check else {}
    grid = _grid_for(spec, config)
    starts = _initial_states(grid, config, spec.n_components)

    def run(start):
        label, values = start
        return _descend(spec, grid, label, values, config)

    runs = parallel_map(run, starts, config.threads)
    runs.sort(key=lambda r: (r.energy, tuple(r.state.masses())))
    best = runs[0]
    scale = max(abs(best.energy), 1.0)
    ties = tuple(
        r.label
        for r in runs[1:]
        if abs(r.energy - best.energy) <= TIE_TOLERANCE * scale
    )
    report = _report(spec, config, best, ties, checks)
    if not report.converged:
        logger.warning("best start %s did not converge", best.label)
    return report


def coupling_exponent(spec):
    """N (r_1 + r_2 - 2)/2 - 2 for the single coupling term."""
    (term,) = spec.couplings
    return 0.5 * spec.dimension * (term.degree - 2.0) - 2.0


def coupling_test_state(spec, config):
    """w = (rho_1 v / rho_2, v) with v the minimizer for component 2 alone."""
    rho_1, rho_2 = config.rho
    single = dataclasses.replace(
        config, rho=(rho_2,), n_starts=1, widths=None, amplitudes=None
    )
    report = minimize(spec.restricted(1), single, check=False)
    v = report.state.values[0]
    return StateVector(report.state.grid, np.vstack([rho_1 / rho_2 * v, v]))


@dataclass(frozen=True)
class BetaRow:
    beta: float
    report: Optional[SolutionReport]
    a_beta: float
    diagnostic: float
    error: Optional[str] = None

    @property
    def saturated(self):
        if self.report is None:
            return ()
        return tuple(flag == "saturated" for flag in self.report.saturation)


@dataclass(frozen=True)
class BetaSweep:
    rows: Tuple[BetaRow, ...]

    def threshold(self):
        """Smallest swept beta at which both masses saturate."""
        for row in self.rows:
            if row.saturated and all(row.saturated):
                return row.beta
        return None

    def diagnostic_spread(self):
        values = [
            r.diagnostic
            for r in self.rows
            if r.beta > 0 and math.isfinite(r.diagnostic)
        ]
        if not values:
            return math.nan
        return max(values) / min(values)

    def to_csv(self, path):
        header = [
            "beta",
            "c",
            "lambda_1",
            "lambda_2",
            "sat_1",
            "sat_2",
            "a_beta",
            "diagnostic",
            "status",
        ]
        rows = []
        for row in self.rows:
            if row.report is None:
                blank = [None] * 5
                rows.append(
                    [row.beta, *blank, row.a_beta, row.diagnostic, row.error]
                )
                continue
            report = row.report
            lam = [None if np.isnan(x) else float(x) for x in report.lam]
            rows.append(
                [
                    row.beta,
                    report.energy,
                    *lam,
                    *row.saturated,
                    row.a_beta,
                    row.diagnostic,
                    report.status,
                ]
            )
        return write_csv(path, header, rows)


def beta_sweep(spec_template, betas, config):
    """Solve for every coupling strength in ``betas``.

    Each row also records a_beta, the fiber maximizer of the coupling
    test state, and beta * a_beta^(N (r_1 + r_2 - 2)/2 - 2), which stays
    bounded as beta grows.

    """
    if spec_template.n_components != 2 or len(spec_template.couplings) != 1:
        msg = "beta sweeps need two components and one coupling term"
        raise ValueError(msg)
    (term,) = spec_template.couplings
    if not term.degree > spec_template.l2_critical:
        msg = "beta sweeps need r_1 + r_2 > 2 + 4/N"
        raise ValueError(msg)
    betas = [float(b) for b in betas]
    if not betas:
        msg = "need at least one coupling strength"
        raise ValueError(msg)

    test_state = coupling_test_state(spec_template, config)
    exponent = coupling_exponent(spec_template)
    seeds = spawn_seeds(config.seed, len(betas))

    @isolated
    def fiber_row(beta):
        spec = spec_template.with_coupling(beta)
        return fiber_maximizer(test_state, spec).a

    @isolated
    def solve_row(beta, seed):
        spec = spec_template.with_coupling(beta)
        row_config = dataclasses.replace(config, seed=seed, threads=1)
        return minimize(spec, row_config, check=False)

    def row(item):
        beta, seed = item
        fiber = fiber_row(beta)
        if not fiber.ok:
            return BetaRow(beta, None, math.nan, math.nan, fiber.error)
        a_beta = fiber.value
        outcome = solve_row(beta, seed)
        logger.info("beta %.6g: a_beta %.6g", beta, a_beta)
        return BetaRow(
            beta,
            outcome.value,
            a_beta,
            beta * a_beta**exponent,
            outcome.error,
        )

    rows = parallel_map(row, list(zip(betas, seeds)), config.threads)
    return BetaSweep(tuple(rows))


def find_saturating_beta(spec_template, config, beta=0.125, max_doublings=8):
    """Double beta until both masses saturate; None when they never do."""
    if not beta > 0:
        return None, None
    for candidate in geometric_range(beta, beta * 2.0**max_doublings):
        report = minimize(
            spec_template.with_coupling(candidate), config, check=False
        )
        if all(flag == "saturated" for flag in report.saturation):
            return candidate, report
    return None, None

