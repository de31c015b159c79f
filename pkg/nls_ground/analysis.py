"""Sharp constants and the Sobolev-critical energy threshold.

The Aubin-Talenti instanton

    u0(x) = (sqrt(N (N-2)) / (1 + |x|^2))^((N-2)/2)

solves -Delta u0 = u0^(2*-1), so |grad u0|^2 = |u0|_{2*}^{2*} = S^(N/2)
where S is the best Sobolev constant. Truncated and rescaled copies of it
("bubbles") are the test states showing that the ground energy sits
below (1/N) S^(N/2) sum_j theta_j^(1 - N/2).

"""

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from .nonlinearity import audit_assumptions, check_eta2
from .radial import StateVector, make_grid, sphere_area
from .soliton import ground_state
from .utils import loglog_fit, write_csv
from .variational import Fiber, fiber_maximizer

logger = logging.getLogger(__name__)

CUTOFF_RADII = (1.0, 2.0)
MIN_R_SQUARED = 0.99


def _critical(dimension):
    return 2.0 * dimension / (dimension - 2)


def delta_p(dimension, p):
    """delta_p = N (1/2 - 1/p), the gradient weight in Gagliardo-Nirenberg."""
    return dimension * (0.5 - 1.0 / p)


def instanton(dimension, r, eps=1.0):
    """u0^eps(r) = (eps sqrt(N (N-2)) / (eps^2 + r^2))^((N-2)/2)."""
    r = np.asarray(r, dtype=float)
    base = eps * math.sqrt(dimension * (dimension - 2)) / (eps**2 + r**2)
    return base ** (0.5 * (dimension - 2))


def instanton_slope(dimension, r, eps=1.0):
    r = np.asarray(r, dtype=float)
    return -(dimension - 2) * r / (eps**2 + r**2) * instanton(dimension, r, eps)


def _radial_quad(function, upper=np.inf, points=None):
    """int over the ball of radius ``upper`` of a radial function."""
    area = sphere_area(function.dimension)

    def integrand(r):
        return function(r) * r ** (function.dimension - 1)

    if points and math.isfinite(upper):
        value, _ = integrate.quad(integrand, 0.0, upper, points=points, limit=400)
    else:
        value, _ = integrate.quad(integrand, 0.0, upper, limit=400)
    return area * value


def _radial(dimension):
    def wrap(function):
        function.dimension = dimension
        return function

    return wrap


def _instanton_energies(dimension, upper=np.inf):
    q = _critical(dimension)

    @_radial(dimension)
    def gradient(r):
        return instanton_slope(dimension, r) ** 2

    @_radial(dimension)
    def critical(r):
        return instanton(dimension, r) ** q

    return _radial_quad(gradient, upper), _radial_quad(critical, upper)


@functools.lru_cache(maxsize=16)
def sobolev_S(dimension):
    """Best Sobolev constant |grad u0|^2 / |u0|_{2*}^2 by quadrature."""
    if dimension < 3:
        msg = f"dimension must be at least 3, got {dimension!r}"
        raise ValueError(msg)
    gradient, critical = _instanton_energies(dimension)
    return gradient / critical ** (2.0 / _critical(dimension))


def sobolev_S_exact(dimension):
    """N (N-2)/4 |S^N|^(2/N), with |S^N| the area of the unit N-sphere."""
    return (
        0.25 * dimension * (dimension - 2) * sphere_area(dimension + 1) ** (2.0 / dimension)
    )


def sobolev_S_truncated(dimension, r_max):
    """The instanton quotient with both integrals cut at ``r_max``."""
    gradient, critical = _instanton_energies(dimension, r_max)
    return gradient / critical ** (2.0 / _critical(dimension))


@functools.lru_cache(maxsize=64)
def gn_constant(dimension, p):
    """Optimal C in |u|_p <= C |grad u|_2^delta |u|_2^(1-delta).

    The Weinstein quotient is maximized by the ground state w of
    -Delta w + w = w^(p-1), so C = P^(1/p) / (A^(delta/2) B^((1-delta)/2))
    with A, B, P its gradient, mass and L^p integrals. At p = 2* the
    constant is S^(-1/2).

    """
    critical = _critical(dimension)
    if not 2.0 < p <= critical:
        msg = f"need 2 < p <= {critical:g}, got {p!r}"
        raise ValueError(msg)
    if math.isclose(p, critical):
        return sobolev_S(dimension) ** -0.5
    profile = ground_state(dimension, p)
    delta = delta_p(dimension, p)
    return profile.potential ** (1.0 / p) / (
        profile.gradient ** (0.5 * delta)
        * profile.mass ** (0.5 * (1.0 - delta))
    )


def weinstein_quotient(u, p):
    """|u|_p / (|grad u|_2^delta |u|_2^(1-delta)) of a one-component state."""
    grid = u.grid
    values = np.atleast_2d(u.values)[0]
    delta = delta_p(grid.dimension, p)
    lp = grid.integrate(np.abs(values) ** p) ** (1.0 / p)
    gradient = float(grid.gradient_energy(values))
    mass = float(grid.integrate(values**2))
    return lp / (gradient ** (0.5 * delta) * mass ** (0.5 * (1.0 - delta)))


def _check_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size == 0 or np.any(~(theta > 0)):
        msg = f"theta must be a nonempty vector of positive weights, got {theta!r}"
        raise ValueError(msg)
    return theta


def bar_S(dimension, theta):
    """(sum_j theta_j^(-(N-2)/2))^(2/N) S."""
    theta = _check_theta(theta)
    total = np.sum(theta ** (-0.5 * (dimension - 2)))
    return total ** (2.0 / dimension) * sobolev_S(dimension)


def _amplitude_quotient(c, theta, dimension):
    q = _critical(dimension)
    c = np.abs(c)
    return np.sum(c**2) / np.sum(theta * c**q) ** (2.0 / q)


@dataclass(frozen=True)
class BarSCheck:
    """The closed form beside two optimizations of the vector quotient.

    With every component an instanton multiple c_j u0, the quotient is
    S sum c_j^2 / (sum theta_j c_j^2*)^(2/2*). Its maximum over c is the
    closed form (attained at c_j = theta_j^(-(N-2)/4)); its minimum, the
    true infimum over vector states, puts all weight on the component
    with the largest theta.

    """

    closed_form: float
    minimax: float
    infimum: float
    maximizer: np.ndarray = field(repr=False)

    @property
    def relative_error(self):
        return abs(self.minimax - self.closed_form) / self.closed_form


def bar_S_check(dimension, theta, n_starts=8, seed=0):
    theta = _check_theta(theta)
    S = sobolev_S(dimension)
    rng = np.random.default_rng(seed)

    def objective(c):
        return -_amplitude_quotient(c, theta, dimension)

    best = None
    for _ in range(n_starts):
        start = rng.uniform(0.2, 2.0, theta.size)
        result = optimize.minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000},
        )
        if best is None or result.fun < best.fun:
            best = result
    maximizer = np.abs(best.x) / np.linalg.norm(best.x)
    infimum = S * float(np.min(theta ** (-(dimension - 2.0) / dimension)))
    return BarSCheck(bar_S(dimension, theta), -best.fun * S, infimum, maximizer)


def cutoff(r):
    """1 on [0, 1], 0 beyond 2, and a C^2 quintic step in between."""
    r = np.asarray(r, dtype=float)
    x = np.clip(r - CUTOFF_RADII[0], 0.0, 1.0)
    return 1.0 - x**3 * (10.0 - 15.0 * x + 6.0 * x**2)


def cutoff_slope(r):
    r = np.asarray(r, dtype=float)
    x = np.clip(r - CUTOFF_RADII[0], 0.0, 1.0)
    return -30.0 * x**2 * (1.0 - x) ** 2


def bubble(dimension, r, eps):
    """phi(r) u0^eps(r)."""
    return cutoff(r) * instanton(dimension, r, eps)


def bubble_slope(dimension, r, eps):
    return cutoff_slope(r) * instanton(dimension, r, eps) + cutoff(
        r
    ) * instanton_slope(dimension, r, eps)


@dataclass(frozen=True)
class BubbleState:
    """The projected test state v^eps = rho_bar u^eps / |u^eps|_2."""

    eps: float
    dimension: int
    theta: Tuple[float, ...]
    rho: Tuple[float, ...]
    state: StateVector = field(repr=False)
    cutoff_radii: Tuple[float, float] = CUTOFF_RADII

    @classmethod
    def build(cls, dimension, eps, theta, rho, grid=None):
        if not eps > 0:
            msg = f"eps must be positive, got {eps!r}"
            raise ValueError(msg)
        theta = _check_theta(theta)
        rho = np.asarray(rho, dtype=float)
        if grid is None:
            grid = make_grid(dimension, CUTOFF_RADII[1], 20000)
        profile = grid.sample(lambda r: bubble(dimension, r, eps))
        values = theta[:, None] ** ((2.0 - dimension) / 4.0) * profile
        norm = math.sqrt(float(np.sum(grid.integrate(values**2))))
        values *= float(np.min(rho)) / norm
        values[:, -1] = 0.0
        return cls(
            eps, dimension, tuple(theta), tuple(rho), StateVector(grid, values)
        )


@dataclass(frozen=True)
class BubbleRow:
    eps: float
    gradient: float
    mass: float
    critical_norm: float
    p_integral: float
    q_integral: float
    scale: float
    energy: float


@dataclass(frozen=True)
class BubbleDiagnostics:
    dimension: int
    p: float
    q: float
    rows: Tuple[BubbleRow, ...]
    mass_exponent: float
    mass_r_squared: float
    gradient_exponent: float
    gradient_r_squared: float

    @property
    def reliable(self):
        """False when either fit is too poor for the asymptotic regime."""
        return (
            self.mass_r_squared >= MIN_R_SQUARED
            and self.gradient_r_squared >= MIN_R_SQUARED
        )

    def to_csv(self, path):
        header = [
            "eps",
            "gradient",
            "mass",
            "critical_norm",
            "p_integral",
            "q_integral",
            "scale",
            "energy",
        ]
        return write_csv(
            path,
            header,
            [
                (
                    row.eps,
                    row.gradient,
                    row.mass,
                    row.critical_norm,
                    row.p_integral,
                    row.q_integral,
                    row.scale,
                    row.energy,
                )
                for row in self.rows
            ],
        )


def bubble_integrals(dimension, eps, exponents=()):
    """Quadratures of phi u0^eps: gradient, mass, |.|_{2*}^2 and the
    integrals of |.|^r over the set where phi u0^eps >= 1."""
    q = _critical(dimension)
    points = [min(eps, 0.5), 1.0]

    @_radial(dimension)
    def gradient(r):
        return bubble_slope(dimension, r, eps) ** 2

    @_radial(dimension)
    def mass(r):
        return bubble(dimension, r, eps) ** 2

    @_radial(dimension)
    def critical(r):
        return bubble(dimension, r, eps) ** q

    upper = CUTOFF_RADII[1]
    results = [
        _radial_quad(gradient, upper, points),
        _radial_quad(mass, upper, points),
        _radial_quad(critical, upper, points) ** (2.0 / q),
    ]

    peak = bubble(dimension, 0.0, eps)
    if peak > 1.0:
        level = optimize.brentq(
            lambda r: bubble(dimension, r, eps) - 1.0, 0.0, upper
        )
    else:
        level = 0.0
    for exponent in exponents:
        if level == 0.0:
            results.append(0.0)
            continue

        @_radial(dimension)
        def power(r, exponent=exponent):
            return bubble(dimension, r, eps) ** exponent

        results.append(_radial_quad(power, level, [min(eps, 0.5 * level)]))
    return results


def _window_exponents(spec):
    """(p, q) for the liminf conditions of G-tilde at 0 and at infinity."""
    sub = spec.subcritical()
    zero, infinity = [], []
    for component in range(spec.n_components):
        growths = [
            t.growth(component)
            for t in sub.terms
            if t.growth(component) is not None
        ]
        if not growths:
            return None, None
        zero.append(min(g[0] for g in growths))
        infinity.append(max(g[1] for g in growths))
    return max(max(zero), spec.l2_critical), min(infinity)


def bubble_diagnostics(dimension, eps_values, theta, rho, spec, grid=None):
    """Bubble integrals, their eps-exponents, and J along the projection.

    For N = 3 the mass of phi u0^eps grows like eps and the gradient
    excess |grad(phi u0^eps)|^2 - S^(3/2) like eps; for N = 4 they go
    like eps^2 |ln eps| and eps^2.

    """
    if dimension not in (3, 4):
        msg = f"bubble asymptotics are for N in (3, 4), got {dimension!r}"
        raise ValueError(msg)
    eps_values = sorted(float(e) for e in eps_values)
    if len(eps_values) < 2 or eps_values[0] <= 0 or eps_values[-1] > 0.25:
        msg = "need at least two eps values in (0, 1/4]"
        raise ValueError(msg)
    p, q = _window_exponents(spec)
    p = spec.l2_critical if p is None else p
    q = spec.l2_critical if q is None else q
    S = sobolev_S(dimension)
    rows = []
    for eps in eps_values:
        gradient, mass, critical, p_integral, q_integral = bubble_integrals(
            dimension, eps, (p, q)
        )
        state = BubbleState.build(dimension, eps, theta, rho, grid).state
        root = fiber_maximizer(state, spec)
        energy = Fiber(state, spec).energy(root.a)
        rows.append(
            BubbleRow(
                eps,
                gradient,
                mass,
                critical,
                p_integral,
                q_integral,
                root.a,
                energy,
            )
        )
        logger.debug("bubble eps=%.4g: J=%.10g at s=%.6g", eps, energy, root.a)

    eps_array = np.array(eps_values)
    masses = np.array([row.mass for row in rows])
    excess = np.abs(
        np.array([row.gradient for row in rows]) - S ** (0.5 * dimension)
    )
    mass_exponent, _, mass_r2 = loglog_fit(eps_array, masses)
    gradient_exponent, _, gradient_r2 = loglog_fit(eps_array, excess)
    diagnostics = BubbleDiagnostics(
        dimension,
        p,
        q,
        tuple(rows),
        mass_exponent,
        mass_r2,
        gradient_exponent,
        gradient_r2,
    )
    if not diagnostics.reliable:
        logger.warning(
            "bubble fits outside the asymptotic regime (R^2 %.4f, %.4f)",
            mass_r2,
            gradient_r2,
        )
    return diagnostics


@dataclass(frozen=True)
class InstantonRayCheck:
    maximum: float
    threshold: float
    mass: float

    @property
    def relative_error(self):
        return abs(self.maximum - self.threshold) / self.threshold


def instanton_ray_check(dimension, theta):
    """Maximum over s of the critical energy along s * (theta^((2-N)/4) u0).

    The untruncated instanton has finite mass from N = 5 on; the maximum
    equals the threshold (1/N) S^(N/2) sum theta^(1-N/2).

    """
    if dimension < 5:
        msg = f"the instanton has infinite mass for N < 5, got {dimension!r}"
        raise ValueError(msg)
    theta = _check_theta(theta)
    q = _critical(dimension)
    weights = theta ** ((2.0 - dimension) / 4.0)
    gradient, critical = _instanton_energies(dimension)
    A = np.sum(weights**2) * gradient
    B = np.sum(theta * weights**q) * critical

    @_radial(dimension)
    def mass_density(r):
        return instanton(dimension, r) ** 2

    mass = float(np.sum(weights**2)) * _radial_quad(mass_density)

    def negative_energy(log_s):
        s = math.exp(log_s)
        # |grad(s*u)|^2 = s^2 A and int |s*u|^2* = s^(N(2*-2)/2) B = s^2* B
        return -(0.5 * s**2 * A - s**q / q * B)

    result = optimize.minimize_scalar(
        negative_energy, bounds=(-10.0, 10.0), method="bounded",
        options={"xatol": 1e-12},
    )
    return InstantonRayCheck(-result.fun, threshold_value(dimension, theta), mass)


def threshold_value(dimension, theta):
    """(1/N) S^(N/2) sum_j theta_j^(1 - N/2)."""
    theta = _check_theta(theta)
    total = float(np.sum(theta ** (1.0 - 0.5 * dimension)))
    return sobolev_S(dimension) ** (0.5 * dimension) * total / dimension


def semitrivial_threshold(dimension, theta):
    """(1/N) S^(N/2) min_j theta_j^(1 - N/2), the single-bubble level."""
    theta = _check_theta(theta)
    smallest = float(np.min(theta ** (1.0 - 0.5 * dimension)))
    return sobolev_S(dimension) ** (0.5 * dimension) * smallest / dimension


@dataclass(frozen=True)
class Route:
    name: str
    holds: bool
    detail: str


def threshold_routes(spec, rho, audit=None):
    """Which sufficient conditions for the strict threshold apply."""
    dimension = spec.dimension
    critical = spec.sobolev_critical
    l2 = spec.l2_critical
    audit = audit or audit_assumptions(spec)
    routes = [Route("dimension", dimension >= 5, f"N = {dimension}")]

    p, q_max = _window_exponents(spec)
    if p is None or p > critical or q_max < l2:
        routes.append(Route("window", False, "no admissible (p, q)"))
    else:
        if p <= q_max and p < critical:
            q = p
        else:
            q = q_max
        holds = True
        if dimension == 3:
            holds = max(p, q) / 2.0 - min(p, q) < -1.0
        routes.append(Route("window", holds, f"p = {p:g}, q = {q:g}"))

    zero = p if p is not None else math.inf
    large_rho = (
        spec.n_components == 1 and audit.eta <= 1e-12 and zero < critical
    )
    routes.append(
        Route("large_rho", large_rho, "for rho beyond some rho_0")
    )

    eta2 = check_eta2(spec, rho, gn_constant(dimension, l2), audit=audit)
    grows = q_max is not None and q_max > l2
    routes.append(
        Route(
            "small_theta",
            eta2.holds and grows,
            "for some theta_i below some theta_0",
        )
    )
    return tuple(routes)


@dataclass(frozen=True)
class ThresholdReport:
    """Computed ground energy against the Sobolev-critical level."""

    applicable: bool
    c: float
    threshold: float = math.nan
    semitrivial: float = math.nan
    routes: Tuple[Route, ...] = ()
    bubbles: Optional[BubbleDiagnostics] = None

    @property
    def margin(self):
        return self.threshold - self.c

    @property
    def below(self):
        return self.applicable and self.margin > 0

    def summary(self):
        if not self.applicable:
            return "threshold: not applicable (theta = 0)"
        lines = [
            f"threshold: {self.threshold:.10g} (margin {self.margin:.6g})",
            f"semitrivial threshold: {self.semitrivial:.10g}",
        ]
        for route in self.routes:
            verdict = "holds" if route.holds else "does not hold"
            lines.append(f"route {route.name}: {verdict} ({route.detail})")
        return "\n".join(lines)


def threshold_check(spec, rho, c_computed, eps_values=None):
    """Compare ``c_computed`` with (1/N) S^(N/2) sum theta^(1-N/2)."""
    if not spec.has_critical_part:
        return ThresholdReport(False, c_computed)
    theta = spec.theta
    bubbles = None
    if eps_values:
        bubbles = bubble_diagnostics(
            spec.dimension, eps_values, theta, rho, spec
        )
    report = ThresholdReport(
        True,
        c_computed,
        threshold_value(spec.dimension, theta),
        semitrivial_threshold(spec.dimension, theta),
        threshold_routes(spec, rho),
        bubbles,
    )
    if report.margin <= 0:
        logger.warning(
            "energy %.8g is not below the threshold %.8g",
            c_computed,
            report.threshold,
        )
    return report
