"""Nonlinearities G: R^K -> R built from a closed set of terms.

Every term carries closed-form expressions for G, its gradient g, the
auxiliary function H(u) = <g(u), u> - 2G(u) and its gradient h. States
are passed as arrays whose first axis runs over the K components, so the
same code evaluates a single point, a grid of samples, or a batch of
audit shells.

"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_BOX = (1e-6, 1e6)
MARGIN_TOLERANCE = 1e-10
SLOPE_TOLERANCE = 1e-6


class NonGspError(ValueError):
    pass


def _abs_power(t, p):
    return np.abs(t) ** p


def _signed_power(t, q):
    """|t|^(q-2) t, written so that t = 0 never meets a negative power."""
    return np.sign(t) * np.abs(t) ** (q - 1.0)


def _check_finite(name, *values):
    for value in values:
        if not np.all(np.isfinite(value)):
            msg = f"{name} must be finite, got {value!r}"
            raise ValueError(msg)


@dataclass(frozen=True)
class SeparablePower:
    """(mu/p) |u_i|^p acting on one component."""

    component: int
    mu: float
    p: float

    gsp = True

    def scaled(self, alpha):
        return dataclasses.replace(self, mu=alpha * self.mu)

    def growth(self, component):
        if component == self.component:
            return (self.p, self.p)
        return None

    def G(self, u):
        return self.mu / self.p * _abs_power(u[self.component], self.p)

    def H(self, u):
        t = u[self.component]
        return self.mu * (1.0 - 2.0 / self.p) * _abs_power(t, self.p)

    def g(self, u):
        out = np.zeros_like(u)
        out[self.component] = self.mu * _signed_power(u[self.component], self.p)
        return out

    def h(self, u):
        out = np.zeros_like(u)
        t = u[self.component]
        out[self.component] = self.mu * (self.p - 2.0) * _signed_power(t, self.p)
        return out


@dataclass(frozen=True)
class LogPower:
    """(mu/p) |u_i|^p ln(1 + |u_i|)."""

    component: int
    mu: float
    p: float

    gsp = True

    def scaled(self, alpha):
        return dataclasses.replace(self, mu=alpha * self.mu)

    def growth(self, component):
        if component == self.component:
            return (self.p + 1.0, self.p)
        return None

    def G(self, u):
        a = np.abs(u[self.component])
        return self.mu / self.p * a**self.p * np.log1p(a)

    def H(self, u):
        a = np.abs(u[self.component])
        log_term = (1.0 - 2.0 / self.p) * a**self.p * np.log1p(a)
        rational = a ** (self.p + 1.0) / (self.p * (1.0 + a))
        return self.mu * (log_term + rational)

    def g(self, u):
        t = u[self.component]
        a = np.abs(t)
        out = np.zeros_like(u)
        out[self.component] = self.mu * (
            _signed_power(t, self.p) * np.log1p(a)
            + np.sign(t) * a**self.p / (self.p * (1.0 + a))
        )
        return out

    def h(self, u):
        t = u[self.component]
        a = np.abs(t)
        p = self.p
        log_part = (1.0 - 2.0 / p) * (
            p * _signed_power(t, p) * np.log1p(a)
            + np.sign(t) * a**p / (1.0 + a)
        )
        rational_part = (
            np.sign(t) * a**p * (p + 1.0 + p * a) / (p * (1.0 + a) ** 2)
        )
        out = np.zeros_like(u)
        out[self.component] = self.mu * (log_part + rational_part)
        return out


@dataclass(frozen=True)
class PiecewisePower:
    """g(t) = mu |t|^(q-2) t with q = p_small for |t| <= 1, else p_large.

    This realizes nonlinearities such as min{|t|^4, |t|^(4/3 + e)} t,
    which behave like one power near zero and another at infinity.

    """

    component: int
    mu: float
    p_small: float
    p_large: float

    gsp = True

    def scaled(self, alpha):
        return dataclasses.replace(self, mu=alpha * self.mu)

    def growth(self, component):
        if component == self.component:
            return (self.p_small, self.p_large)
        return None

    def _exponent(self, t):
        return np.where(np.abs(t) <= 1.0, self.p_small, self.p_large)

    def G(self, u):
        a = np.abs(u[self.component])
        inner = a**self.p_small / self.p_small
        outer = 1.0 / self.p_small + (a**self.p_large - 1.0) / self.p_large
        return self.mu * np.where(a <= 1.0, inner, outer)

    def g(self, u):
        t = u[self.component]
        out = np.zeros_like(u)
        out[self.component] = self.mu * _signed_power(t, self._exponent(t))
        return out

    def H(self, u):
        t = u[self.component]
        return t * self.g(u)[self.component] - 2.0 * self.G(u)

    def h(self, u):
        t = u[self.component]
        q = self._exponent(t)
        out = np.zeros_like(u)
        out[self.component] = self.mu * (q - 2.0) * _signed_power(t, q)
        return out


@dataclass(frozen=True)
class NormPower:
    """(mu/p) |u|^p with the Euclidean norm of the whole K-vector."""

    mu: float
    p: float

    gsp = False

    def scaled(self, alpha):
        return dataclasses.replace(self, mu=alpha * self.mu)

    def growth(self, component):
        return (self.p, self.p)

    @staticmethod
    def _norm(u):
        return np.sqrt(np.sum(u * u, axis=0))

    def G(self, u):
        return self.mu / self.p * self._norm(u) ** self.p

    def H(self, u):
        return self.mu * (1.0 - 2.0 / self.p) * self._norm(u) ** self.p

    def g(self, u):
        return self.mu * self._norm(u) ** (self.p - 2.0) * u

    def h(self, u):
        return (self.p - 2.0) * self.g(u)


@dataclass(frozen=True)
class CouplingProduct:
    """beta prod_i |u_i|^(r_i)."""

    beta: float
    exponents: Tuple[float, ...]

    gsp = True

    def scaled(self, alpha):
        return dataclasses.replace(self, beta=alpha * self.beta)

    def growth(self, component):
        return None

    @property
    def degree(self):
        return float(sum(self.exponents))

    def G(self, u):
        product = np.ones_like(u[0])
        for t, r in zip(u, self.exponents):
            if r:
                product = product * _abs_power(t, r)
        return self.beta * product

    def g(self, u):
        out = np.zeros_like(u)
        for i, r_i in enumerate(self.exponents):
            if not r_i:
                continue
            partial = r_i * _signed_power(u[i], r_i)
            for j, r_j in enumerate(self.exponents):
                if j != i and r_j:
                    partial = partial * _abs_power(u[j], r_j)
            out[i] = self.beta * partial
        return out

    def H(self, u):
        return (self.degree - 2.0) * self.G(u)

    def h(self, u):
        return (self.degree - 2.0) * self.g(u)


@dataclass(frozen=True)
class SobolevCritical:
    """(1/2*) sum_j theta_j |u_j|^(2*); the exponent is set to 2* by NonlinearitySpec."""

    theta: Tuple[float, ...]
    exponent: Optional[float] = None

    gsp = True

    def scaled(self, alpha):
        theta = tuple(alpha * value for value in self.theta)
        return dataclasses.replace(self, theta=theta)

    def growth(self, component):
        return None

    def _weights(self, u):
        shape = (len(self.theta),) + (1,) * (np.ndim(u) - 1)
        return np.reshape(np.asarray(self.theta, dtype=float), shape)

    def G(self, u):
        q = self.exponent
        return np.sum(self._weights(u) * _abs_power(u, q), axis=0) / q

    def H(self, u):
        q = self.exponent
        return (1.0 - 2.0 / q) * q * self.G(u)

    def g(self, u):
        return self._weights(u) * _signed_power(u, self.exponent)

    def h(self, u):
        return (self.exponent - 2.0) * self.g(u)


TERM_TYPES = (
    SeparablePower,
    LogPower,
    PiecewisePower,
    NormPower,
    CouplingProduct,
    SobolevCritical,
)


@dataclass(frozen=True)
class NonlinearitySpec:
    """An ordered list of terms for a K-component system in R^N."""

    dimension: int
    n_components: int
    terms: Tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.dimension < 3:
            msg = f"dimension must be at least 3, got {self.dimension!r}"
            raise ValueError(msg)
        if self.n_components < 1:
            msg = f"need at least one component, got {self.n_components!r}"
            raise ValueError(msg)
        bound = []
        for term in self.terms:
            if not isinstance(term, TERM_TYPES):
                msg = f"unsupported nonlinearity term {term!r}"
                raise TypeError(msg)
            if isinstance(term, SobolevCritical):
                term = dataclasses.replace(term, exponent=self.sobolev_critical)
            self._validate(term)
            bound.append(term)
        if sum(isinstance(t, SobolevCritical) for t in bound) > 1:
            msg = "at most one SobolevCritical term is allowed"
            raise ValueError(msg)
        object.__setattr__(self, "terms", tuple(bound))

    @property
    def l2_critical(self):
        return 2.0 + 4.0 / self.dimension

    @property
    def sobolev_critical(self):
        return 2.0 * self.dimension / (self.dimension - 2)

    def _check_component(self, index):
        if not 0 <= index < self.n_components:
            msg = (
                f"component index {index!r} out of range for "
                f"{self.n_components} components"
            )
            raise ValueError(msg)

    def _validate(self, term):
        critical = self.sobolev_critical
        l2 = self.l2_critical
        if isinstance(term, SeparablePower):
            self._check_component(term.component)
            _check_finite("mu", term.mu)
            if term.mu < 0 or not 2.0 < term.p < critical:
                msg = (
                    f"SeparablePower needs mu >= 0 and 2 < p < {critical:g}, "
                    f"got mu={term.mu!r}, p={term.p!r}"
                )
                raise ValueError(msg)
        elif isinstance(term, LogPower):
            self._check_component(term.component)
            _check_finite("mu", term.mu)
            if term.mu <= 0 or not l2 <= term.p <= critical - 1.0:
                msg = (
                    f"LogPower needs mu > 0 and {l2:g} <= p <= "
                    f"{critical - 1.0:g}, got mu={term.mu!r}, p={term.p!r}"
                )
                raise ValueError(msg)
        elif isinstance(term, PiecewisePower):
            self._check_component(term.component)
            _check_finite("mu", term.mu)
            if (
                term.mu < 0
                or not 2.0 < term.p_small <= critical
                or not 2.0 < term.p_large < critical
            ):
                msg = (
                    "PiecewisePower needs mu >= 0, 2 < p_small <= 2* and "
                    f"2 < p_large < 2*, got {term!r}"
                )
                raise ValueError(msg)
        elif isinstance(term, NormPower):
            _check_finite("mu", term.mu)
            if term.mu < 0 or not 2.0 < term.p < critical:
                msg = f"NormPower needs mu >= 0 and 2 < p < 2*, got {term!r}"
                raise ValueError(msg)
        elif isinstance(term, CouplingProduct):
            _check_finite("beta", term.beta)
            r = term.exponents
            if len(r) != self.n_components:
                msg = (
                    f"coupling needs {self.n_components} exponents, "
                    f"got {len(r)}"
                )
                raise ValueError(msg)
            if term.beta < 0:
                msg = f"coupling strength must be nonnegative, got {term.beta!r}"
                raise ValueError(msg)
            if any(not (value > 1.0 or value == 0.0) for value in r):
                msg = f"coupling exponents must be > 1 or exactly 0, got {r!r}"
                raise ValueError(msg)
            if sum(value > 1.0 for value in r) < 2:
                msg = f"coupling needs at least two active exponents, got {r!r}"
                raise ValueError(msg)
            if not l2 <= term.degree < critical:
                msg = (
                    f"coupling degree must lie in [{l2:g}, {critical:g}), "
                    f"got {term.degree:g}"
                )
                raise ValueError(msg)
        elif isinstance(term, SobolevCritical):
            theta = np.asarray(term.theta, dtype=float)
            _check_finite("theta", theta)
            if len(theta) != self.n_components:
                msg = (
                    f"theta needs {self.n_components} entries, "
                    f"got {len(theta)}"
                )
                raise ValueError(msg)
            if not (np.all(theta > 0) or np.all(theta == 0)):
                msg = f"theta must be all positive or all zero, got {term.theta!r}"
                raise ValueError(msg)

    @property
    def theta(self):
        for term in self.terms:
            if isinstance(term, SobolevCritical):
                return np.asarray(term.theta, dtype=float)
        return np.zeros(self.n_components)

    @property
    def has_critical_part(self):
        return bool(np.any(self.theta > 0))

    @property
    def is_gsp_form(self):
        """Separable even terms plus coupling products only."""
        if self.n_components == 1:
            return True
        return all(term.gsp for term in self.terms)

    @property
    def couplings(self):
        return [t for t in self.terms if isinstance(t, CouplingProduct)]

    def subcritical(self):
        """G-tilde: every term except the Sobolev-critical term."""
        terms = tuple(t for t in self.terms if not isinstance(t, SobolevCritical))
        return dataclasses.replace(self, terms=terms)

    def restricted(self, component):
        """Scalar spec of the separable terms acting on ``component`` alone."""
        self._check_component(component)
        terms = []
        for term in self.terms:
            if isinstance(term, (SeparablePower, LogPower, PiecewisePower)):
                if term.component == component:
                    terms.append(dataclasses.replace(term, component=0))
            elif isinstance(term, NormPower):
                terms.append(term)
            elif isinstance(term, SobolevCritical) and term.theta[component]:
                terms.append(SobolevCritical((term.theta[component],)))
        return NonlinearitySpec(self.dimension, 1, tuple(terms))

    def with_coupling(self, beta):
        """Copy with every coupling strength replaced by ``beta``."""
        terms = tuple(
            dataclasses.replace(t, beta=beta)
            if isinstance(t, CouplingProduct)
            else t
            for t in self.terms
        )
        return dataclasses.replace(self, terms=terms)

    def combine(self, other, alpha=1.0, alpha_prime=1.0):
        """The nonlinearity alpha G + alpha' G'."""
        if (self.dimension, self.n_components) != (
            other.dimension,
            other.n_components,
        ):
            msg = "can only combine specs with equal dimension and size"
            raise ValueError(msg)
        theta = alpha * self.theta + alpha_prime * other.theta
        terms = [
            t.scaled(alpha)
            for t in self.terms
            if not isinstance(t, SobolevCritical)
        ]
        terms += [
            t.scaled(alpha_prime)
            for t in other.terms
            if not isinstance(t, SobolevCritical)
        ]
        if np.any(theta > 0):
            terms.append(SobolevCritical(tuple(theta)))
        return dataclasses.replace(self, terms=tuple(terms))

    def _zeros(self, u):
        return np.zeros(np.shape(u)[1:])

    def G(self, u):
        total = self._zeros(u)
        for term in self.terms:
            total = total + term.G(u)
        return total

    def H(self, u):
        total = self._zeros(u)
        for term in self.terms:
            total = total + term.H(u)
        return total

    def g(self, u):
        total = np.zeros(np.shape(u))
        for term in self.terms:
            total = total + term.g(u)
        return total

    def h(self, u):
        total = np.zeros(np.shape(u))
        for term in self.terms:
            total = total + term.h(u)
        return total


def _as_points(spec, u):
    u = np.asarray(u, dtype=float)
    if u.shape[:1] != (spec.n_components,):
        msg = (
            f"expected {spec.n_components} components on the first axis, "
            f"got shape {u.shape}"
        )
        raise ValueError(msg)
    _check_finite("u", u)
    return u


def eval_G(spec, u):
    return spec.G(_as_points(spec, u))


def eval_g(spec, u):
    return spec.g(_as_points(spec, u))


def eval_H(spec, u):
    return spec.H(_as_points(spec, u))


def eval_h(spec, u):
    return spec.h(_as_points(spec, u))


@dataclass(frozen=True)
class AssumptionVerdict:
    """Outcome of one sampled assumption; a positive margin is satisfied."""

    name: str
    status: str
    margin: float
    detail: str = ""

    @property
    def passed(self):
        return self.status == "pass"


def _classify(margin, tolerance=MARGIN_TOLERANCE):
    if margin > tolerance:
        return "pass"
    if margin < -tolerance:
        return "fail"
    return "inconclusive"


@dataclass(frozen=True)
class AuditReport:
    """Sampled verdicts on (A0)-(A5) and (A4, strict)."""

    verdicts: Tuple[AssumptionVerdict, ...]
    eta: float
    growth_constant: float
    sample_box: Tuple[float, float]

    def __getitem__(self, name):
        for verdict in self.verdicts:
            if verdict.name == name:
                return verdict
        raise KeyError(name)

    @property
    def passed(self):
        """True when none of (A0)-(A5) failed."""
        return all(
            v.status != "fail" for v in self.verdicts if v.name != "A4strict"
        )

    def failures(self):
        return [v.name for v in self.verdicts if v.status == "fail"]

    def summary(self):
        lines = [f"eta estimate: {self.eta:.6g}"]
        lines.append(f"growth constant (A0): {self.growth_constant:.6g}")
        for v in self.verdicts:
            lines.append(f"{v.name}: {v.status} (margin {v.margin:.3g}) {v.detail}")
        return "\n".join(lines)


def _directions(n_components, n_random, seed):
    rng = np.random.default_rng(seed)
    identity = np.eye(n_components)
    rows = [identity, -identity]
    diagonal = np.ones(n_components) / math.sqrt(n_components)
    rows.append(diagonal[None, :])
    if n_components > 1 and n_random:
        random = rng.normal(size=(n_random, n_components))
        random /= np.linalg.norm(random, axis=1, keepdims=True)
        rows.append(random)
    return np.vstack(rows)


def _loglog_slope(amplitudes, ratios):
    positive = ratios > 0
    if positive.sum() < 2:
        return 0.0
    x = np.log(amplitudes[positive])
    y = np.log(ratios[positive])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def audit_assumptions(
    spec, sample_box=DEFAULT_SAMPLE_BOX, n_samples=121, n_directions=64, seed=0
):
    """Sample G-tilde on log-spaced shells and grade each assumption.

    The limits in (A1)-(A3) are judged by the log-log slope of the
    relevant ratio over the two outermost decades on each side, and the
    inequalities (A4), (A5) by their worst normalized slack.

    """
    low, high = sample_box
    if not 0 < low < high:
        msg = f"sample box must satisfy 0 < low < high, got {sample_box!r}"
        raise ValueError(msg)
    sub = spec.subcritical()
    l2 = spec.l2_critical
    critical = spec.sobolev_critical
    theta_zero = not spec.has_critical_part

    amplitudes = np.logspace(math.log10(low), math.log10(high), n_samples)
    directions = _directions(spec.n_components, n_directions, seed)
    points = amplitudes[None, :, None] * directions.T[:, None, :]

    G = sub.G(points)
    H = sub.H(points)
    g = sub.g(points)
    h = sub.h(points)
    norm = amplitudes[:, None]
    tiny = np.finfo(float).tiny

    # (A0)
    h_norm = np.sqrt(np.sum(h * h, axis=0))
    growth = h_norm / (norm + norm ** (critical - 1.0))
    growth_constant = float(np.max(growth))
    verdicts = [
        AssumptionVerdict(
            "A0",
            "pass" if np.isfinite(growth_constant) else "fail",
            1.0 if np.isfinite(growth_constant) else -1.0,
            f"c~ = {growth_constant:.6g} (sampled, not certified)",
        )
    ]

    decades = 2.0
    small = amplitudes <= low * 10**decades
    large = amplitudes >= high / 10**decades

    # (A1)
    ratio_l2 = G / norm**l2
    eta_profile = ratio_l2.max(axis=1)
    eta = float(eta_profile[small].max())
    slope = _loglog_slope(amplitudes[small], eta_profile[small])
    status = "fail" if slope < -SLOPE_TOLERANCE else "pass"
    verdicts.append(
        AssumptionVerdict("A1", status, slope, f"eta ~ {eta:.6g}")
    )

    # (A2)
    liminf_profile = ratio_l2.min(axis=1)
    slope = _loglog_slope(amplitudes[large], liminf_profile[large])
    if theta_zero:
        status = "pass" if slope > SLOPE_TOLERANCE else "fail"
        margin = slope
        detail = "G~/|u|^2_N must diverge"
    else:
        margin = float(liminf_profile[large].min())
        status = _classify(margin)
        if status == "pass" and slope < -SLOPE_TOLERANCE:
            status = "inconclusive"
        detail = "G~/|u|^2_N must stay positive"
    verdicts.append(AssumptionVerdict("A2", status, margin, detail))

    # (A3)
    ratio_critical = (G / norm**critical).max(axis=1)
    top = float(ratio_critical[large][-1])
    slope = _loglog_slope(amplitudes[large], ratio_critical[large])
    vanishes = top <= MARGIN_TOLERANCE or slope < -SLOPE_TOLERANCE
    verdicts.append(
        AssumptionVerdict(
            "A3", "pass" if vanishes else "fail", -slope, "G~/|u|^2* -> 0"
        )
    )

    # (A4) and its strict variant
    hu = np.sum(h * points, axis=0)
    slack = (hu - l2 * H) / (np.abs(hu) + l2 * np.abs(H) + tiny)
    margin = float(slack.min())
    verdicts.append(
        AssumptionVerdict(
            "A4",
            "fail" if margin < -MARGIN_TOLERANCE else "pass",
            margin,
            "2_N H~ <= <h~, u>",
        )
    )
    if theta_zero:
        near_zero = amplitudes <= low * 10**3
        strict = float(slack[near_zero].max(axis=1).min())
        status = "pass" if strict > MARGIN_TOLERANCE else "fail"
        if verdicts[-1].status == "fail":
            status = "fail"
        verdicts.append(
            AssumptionVerdict(
                "A4strict", status, strict, "strict somewhere near 0"
            )
        )
    else:
        verdicts.append(
            AssumptionVerdict("A4strict", "pass", 1.0, "not required, theta > 0")
        )

    # (A5)
    scale = np.abs(G) + np.abs(H) + tiny
    lower = float(((H - 4.0 / spec.dimension * G) / scale).min())
    upper = float((((critical - 2.0) * G - H) / scale).min())
    margin = min(lower, upper)
    positive = bool(np.all(G > 0) and np.all(H > 0))
    status = "fail" if margin < -MARGIN_TOLERANCE else "pass"
    detail = f"lower {lower:.3g}, upper {upper:.3g}"
    if not positive:
        detail += ", G~ or H~ vanishes at a sample"
    verdicts.append(AssumptionVerdict("A5", status, margin, detail))

    gu = np.sum(g * points, axis=0)
    identity_error = float(
        np.max(np.abs(gu - 2.0 * G - H) / (np.abs(gu) + tiny))
    )
    if identity_error > 1e-10:
        logger.warning("H = <g,u> - 2G violated by %.3g", identity_error)

    report = AuditReport(tuple(verdicts), eta, growth_constant, (low, high))
    logger.debug("audit finished: %s", report.failures() or "all passed")
    return report


@dataclass(frozen=True)
class EtaCheck:
    holds: bool
    margin: float
    lhs: float


def _eta(spec, audit):
    if audit is None:
        audit = audit_assumptions(spec)
    return audit.eta


def check_eta2(spec, rho, gn_l2_constant, audit=None):
    """Evaluate 2* C^(2_N) eta |rho|^(4/N) < 1.

    eta comes from ``audit`` when given, else from a fresh audit of
    ``spec``.
    """
    eta = _eta(spec, audit)
    dimension = spec.dimension
    critical = 2.0 * dimension / (dimension - 2)
    l2 = 2.0 + 4.0 / dimension
    radius = float(np.linalg.norm(np.asarray(rho, dtype=float)))
    lhs = critical * gn_l2_constant**l2 * eta * radius ** (4.0 / dimension)
    return EtaCheck(lhs < 1.0, 1.0 - lhs, lhs)


def eta2_radius(spec, gn_l2_constant, audit=None):
    """Largest |rho| allowed by the eta mass bound; infinite when eta = 0."""
    eta = _eta(spec, audit)
    if eta <= 0:
        return math.inf
    dimension = spec.dimension
    critical = 2.0 * dimension / (dimension - 2)
    l2 = 2.0 + 4.0 / dimension
    return (1.0 / (critical * gn_l2_constant**l2 * eta)) ** (dimension / 4.0)
