"""Energy, Pohozaev-Nehari constraint, dilations and the fiber map.

For a state u and s > 0 the mass-preserving dilation is
``(s * u)(x) = s^(N/2) u(s x)``. Its energy and constraint follow a
scaling law that needs no resampling:

    |grad(s * u)|^2 = s^2 |grad u|^2
    int F(s * u) dx  = s^(-N) int F(s^(N/2) u) dx

so the fiber map s -> J(s * u) and its derivative are evaluated exactly on
the grid. Resampling (monotone cubic interpolation) is only needed to
materialize the projected state.

"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import interpolate, optimize

from .radial import StateVector
from .utils import write_csv

logger = logging.getLogger(__name__)

SCALE_RANGE = (1e-6, 1e6)
MANIFOLD_TOLERANCE = 1e-10
PLATEAU_TOLERANCE = 1e-9


class FiberError(RuntimeError):
    pass


def _moments(u, spec):
    values = u.values
    gradient = float(np.sum(u.gradient_energies()))
    G = float(u.grid.integrate(spec.G(values)))
    H = float(u.grid.integrate(spec.H(values)))
    return gradient, G, H


def energy_J(u, spec):
    """J(u) = (1/2) |grad u|^2 - int G(u)."""
    gradient, G, _ = _moments(u, spec)
    return 0.5 * gradient - G


def constraint_M(u, spec):
    """M(u) = |grad u|^2 - (N/2) int H(u); u must be nonzero."""
    if u.is_zero():
        msg = "M is only defined on nonzero states"
        raise ValueError(msg)
    gradient, _, H = _moments(u, spec)
    return gradient - 0.5 * spec.dimension * H


def manifold_energy(u, spec):
    """int (N/4) H(u) - G(u), which equals J(u) on the manifold."""
    _, G, H = _moments(u, spec)
    return 0.25 * spec.dimension * H - G


def energy_gradient(u, spec):
    """Gradient of the discrete J as a dual vector, one row per component.

    The row for component i is ``A u_i - W g_i(u)`` so that
    ``J(u + t v) = J(u) + t sum(gradient * v) + O(t^2)``.

    """
    gradient = u.grid.stiffness(u.values) - spec.g(u.values) * u.grid.weights
    gradient[:, -1] = 0.0
    return gradient


def constraint_gradient(u, spec):
    """Gradient of the discrete M as a dual vector."""
    weights = u.grid.weights
    gradient = 2.0 * u.grid.stiffness(u.values) - (
        0.5 * spec.dimension * spec.h(u.values) * weights
    )
    gradient[:, -1] = 0.0
    return gradient


def manifold_radius(u, spec):
    """R_u = sqrt(N int H(u) / (2 |grad u|^2)); u(R_u .) lies on M."""
    gradient, _, H = _moments(u, spec)
    if H <= 0 or gradient <= 0:
        msg = "the manifold radius needs int H(u) > 0 and a nonconstant state"
        raise ValueError(msg)
    return math.sqrt(spec.dimension * H / (2.0 * gradient))


def radius_residual(u, spec, radius):
    """M(u(R .)) relative to its gradient term, by the scaling law."""
    gradient, _, H = _moments(u, spec)
    n = spec.dimension
    leading = radius ** (2 - n) * gradient
    return (leading - radius ** (-n) * 0.5 * n * H) / leading


def dilate(u, s, preserve_mass=True):
    """Resample ``s^(N/2) u(s r)`` on the grid of ``u``.

    Values that fall beyond r_max are zero. With ``preserve_mass`` each
    component is rescaled to its original mass, the identity the
    continuum dilation satisfies exactly.

    """
    if not s > 0:
        msg = f"dilation factor must be positive, got {s!r}"
        raise ValueError(msg)
    if s == 1.0:
        return u
    grid = u.grid
    spline = interpolate.PchipInterpolator(
        grid.r, u.values, axis=1, extrapolate=False
    )
    values = np.nan_to_num(spline(s * grid.r), nan=0.0)
    values *= s ** (0.5 * grid.dimension)
    values[:, -1] = 0.0

    if preserve_mass:
        before = u.masses()
        after = grid.integrate(values**2)
        lost = (before > 0) & (after < before * (1.0 - 1e-6))
        if s < 1.0 and np.any(lost):
            logger.warning(
                "dilation by %.4g pushes mass past r_max (kept %.6f)",
                s,
                float(np.min(after[lost] / before[lost])),
            )
        scale = np.ones_like(before)
        nonzero = after > 0
        scale[nonzero] = np.sqrt(before[nonzero] / after[nonzero])
        values *= scale[:, None]
    return StateVector(grid, values)


class Fiber:
    """The maps s -> J(s * u) and s -> M(s * u) for one state."""

    def __init__(self, u, spec):
        if u.is_zero():
            msg = "the fiber of the zero state is degenerate"
            raise FiberError(msg)
        self.u = u
        self.spec = spec
        self.gradient = float(np.sum(u.gradient_energies()))
        if not self.gradient > 0:
            msg = "the fiber needs a state with positive gradient energy"
            raise FiberError(msg)

    def _integral(self, function, s):
        n = self.spec.dimension
        amplitude = s ** (0.5 * n)
        return s ** (-n) * float(
            self.u.grid.integrate(function(amplitude * self.u.values))
        )

    def energy(self, s):
        return 0.5 * s**2 * self.gradient - self._integral(self.spec.G, s)

    def constraint(self, s):
        n = self.spec.dimension
        return s**2 * self.gradient - 0.5 * n * self._integral(self.spec.H, s)

    def normalized(self, log_s):
        """M(s * u) / (s^2 |grad u|^2) as a function of ln s; nonincreasing."""
        s = math.exp(log_s)
        return self.constraint(s) / (s**2 * self.gradient)


class FiberRoot(NamedTuple):
    a: float
    b: float

    @property
    def plateau(self):
        return self.b > self.a * (1.0 + 1e-9)


def _bracket(function, start, direction, limit, want_positive):
    """Walk geometrically from ``start`` until ``function`` has the wanted sign."""
    step = 0.05
    t = start
    previous = start
    while True:
        value = function(t)
        if (value > 0) == want_positive and value != 0:
            return t, previous
        previous = t
        t += direction * step
        step *= 2.0
        if (direction > 0 and t > limit) or (direction < 0 and t < limit):
            value = function(limit)
            if (value > 0) == want_positive and value != 0:
                return limit, previous
            return None, previous


def _edge(function, start, direction, limit, level):
    """Locate where ``function`` leaves the band |f| <= level."""
    step = 1e-3
    t = start
    while True:
        nxt = t + direction * step
        if (direction > 0 and nxt > limit) or (direction < 0 and nxt < limit):
            return limit
        value = function(nxt)
        if abs(value) > level:
            target = level if value > 0 else -level
            return optimize.brentq(
                lambda x: function(x) - target, min(t, nxt), max(t, nxt)
            )
        t = nxt
        step *= 2.0


def fiber_maximizer(u, spec, scale_range=SCALE_RANGE):
    """The maximizer interval [a, b] of s -> J(s * u), by the scaling law.

    Raises FiberError when M(s * u) has no sign change in ``scale_range``,
    which means the eta condition or (A2) is violated for this state.

    """
    fiber = Fiber(u, spec)
    f = fiber.normalized
    low, high = (math.log(x) for x in scale_range)

    value = f(0.0)
    if value == 0.0:
        root = 0.0
    else:
        if value > 0:
            hit, previous = _bracket(f, 0.0, +1, high, want_positive=False)
            bracket = (previous, hit)
        else:
            hit, previous = _bracket(f, 0.0, -1, low, want_positive=True)
            bracket = (hit, previous)
        if hit is None:
            msg = (
                "M(s*u) keeps one sign on "
                f"[{scale_range[0]:g}, {scale_range[1]:g}]; the state "
                "violates the eta condition or the nonlinearity violates (A2)"
            )
            raise FiberError(msg)
        root = optimize.brentq(f, bracket[0], bracket[1], xtol=1e-14)

    a = b = root
    offset = 1e-3
    if abs(f(root - offset)) <= PLATEAU_TOLERANCE and abs(
        f(root + offset)
    ) <= PLATEAU_TOLERANCE:
        a = _edge(f, root, -1, low, PLATEAU_TOLERANCE)
        b = _edge(f, root, +1, high, PLATEAU_TOLERANCE)
        logger.warning(
            "fiber plateau: every s in [%.6g, %.6g] maximizes",
            math.exp(a),
            math.exp(b),
        )
    return FiberRoot(math.exp(a), math.exp(b))


def eta_condition(u, eta, dimension):
    """Small-eta condition: eta < |grad u|^2 / (2 |u|_{2_N}^{2_N})."""
    l2 = 2.0 + 4.0 / dimension
    norm = float(np.sum(u.grid.integrate(np.abs(u.values) ** l2)))
    gradient = float(np.sum(u.gradient_energies()))
    return eta < gradient / (2.0 * norm)


class Projection(NamedTuple):
    state: StateVector
    scale: float


def project_to_M(
    u, spec, tolerance=MANIFOLD_TOLERANCE, max_polish=8, eta=None
):
    """Dilate ``u`` onto the manifold M(u) = 0.

    The scale comes from the exact scaling law; the resampled state is
    then polished by further dilations, each close to 1, until
    |M| < tolerance |grad u|^2. On a plateau the smallest maximizer is
    used.

    """
    if eta is not None and not eta_condition(u, eta, spec.dimension):
        logger.warning("state violates the eta condition for eta = %.6g", eta)
    total = 1.0
    state = u
    for _ in range(max_polish + 1):
        root = fiber_maximizer(state, spec)
        state = dilate(state, root.a)
        total *= root.a
        gradient = float(np.sum(state.gradient_energies()))
        relative = constraint_M(state, spec) / gradient
        if abs(relative) < tolerance:
            break
    else:
        logger.warning(
            "manifold projection stopped at |M|/|grad u|^2 = %.3g", relative
        )
    return Projection(state, total)


@dataclass(frozen=True)
class FiberScan:
    """A log-spaced sweep of the fiber map with its maximizer interval."""

    s: np.ndarray
    phi: np.ndarray
    M: np.ndarray
    a: float
    b: float
    eta: float
    eta_condition: bool
    gradient: float

    @property
    def plateau(self):
        return self.b > self.a * (1.0 + 1e-9)

    def sign_changes(self, tolerance=1e-9):
        """Sign changes of M(s * u) / (s^2 |grad u|^2), ignoring values
        within ``tolerance`` of zero."""
        normalized = self.M / (self.s**2 * self.gradient)
        signs = np.sign(normalized)
        signs[np.abs(normalized) <= tolerance] = 0
        signs = signs[signs != 0]
        return int(np.count_nonzero(np.diff(signs)))

    def to_csv(self, path):
        return write_csv(path, ["s", "phi", "M"], zip(self.s, self.phi, self.M))


def fiber_scan(u, spec, s_range=(1e-2, 1e2), n_points=201, eta=0.0):
    """Sample phi(s) = J(s * u) and M(s * u) on log-spaced s."""
    low, high = s_range
    if not 0 < low < high:
        msg = f"s_range must satisfy 0 < low < high, got {s_range!r}"
        raise ValueError(msg)
    fiber = Fiber(u, spec)
    s = np.logspace(math.log10(low), math.log10(high), n_points)
    phi = np.array([fiber.energy(x) for x in s])
    M = np.array([fiber.constraint(x) for x in s])
    root = fiber_maximizer(u, spec)
    return FiberScan(
        s,
        phi,
        M,
        root.a,
        root.b,
        eta,
        eta_condition(u, eta, spec.dimension),
        fiber.gradient,
    )


@dataclass(frozen=True)
class IdentityResiduals:
    """Nehari and Pohozaev residuals of the sigma-family, raw and relative.

    With sigma = 0, ``combination`` reproduces ``m_value`` for every
    multiplier vector: M = (N/2) nehari - ((N-2)/2) pohozaev.

    """

    nehari: float
    pohozaev: float
    m_value: float
    gradient: float
    dimension: int
    sigma: float = 0.0

    def _relative(self, value):
        return value / self.gradient if self.gradient else 0.0

    @property
    def nehari_res(self):
        return self._relative(self.nehari)

    @property
    def pohozaev_res(self):
        return self._relative(self.pohozaev)

    @property
    def m_relative(self):
        return self._relative(self.m_value)

    @property
    def combination(self):
        n = self.dimension
        return 0.5 * n * self.nehari - 0.5 * (n - 2) * self.pohozaev


def residuals(u, lam, spec, sigma=0.0):
    """Nehari and Pohozaev identities for multipliers ``lam``.

    Components whose multiplier is NaN (frozen zero components) do not
    contribute.

    """
    n = spec.dimension
    if u.is_zero():
        return IdentityResiduals(0.0, 0.0, 0.0, 0.0, n, sigma)
    lam = np.nan_to_num(np.asarray(lam, dtype=float), nan=0.0)
    grid = u.grid
    values = u.values
    gradient = float(np.sum(u.gradient_energies()))
    masses = u.masses()
    G = float(grid.integrate(spec.G(values)))
    H = float(grid.integrate(spec.H(values)))
    gu = float(grid.integrate(np.sum(spec.g(values) * values, axis=0)))
    hu = float(grid.integrate(np.sum(spec.h(values) * values, axis=0)))
    weighted_mass = float(lam @ masses)
    critical = spec.sobolev_critical

    stiff = (1.0 - 2.0 * sigma) * gradient
    nehari = stiff + weighted_mass + sigma * 0.5 * n * hu - gu
    pohozaev = (
        stiff
        + 0.5 * critical * weighted_mass
        - critical * (G - sigma * 0.5 * n * H)
    )
    m_value = gradient - 0.5 * n * H
    return IdentityResiduals(nehari, pohozaev, m_value, gradient, n, sigma)
