"""Scalar ground states by shooting.

The positive radial solution of ``-w'' - (N-1)/r w' + w = |w|^(p-2) w``
that decays at infinity is found by bisection on the amplitude w(0):
too large an amplitude makes w cross zero, too small a one makes w turn
back up. The integrals

    A = int |grad w|^2,   B = int w^2,   P = int |w|^p

are accumulated along the trajectory. They give the optimal
Gagliardo-Nirenberg constant and, after rescaling, the ground state of
J(u) = |grad u|^2/2 - (mu/p) int |u|^p at any prescribed mass.

"""

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .radial import RadialField, sphere_area

logger = logging.getLogger(__name__)

START_RADIUS = 1e-6
CUTOFF_LEVEL = 1e-6


def _rhs(dimension, p):
    area = sphere_area(dimension)

    def rhs(r, y):
        w, slope = y[0], y[1]
        nonlinear = np.sign(w) * abs(w) ** (p - 1.0)
        shell = area * r ** (dimension - 1)
        return [
            slope,
            -(dimension - 1) / r * slope + w - nonlinear,
            shell * slope * slope,
            shell * w * w,
            shell * abs(w) ** p,
        ]

    return rhs


def _crossing(r, y):
    return y[0]


_crossing.terminal = True
_crossing.direction = -1


def _turning(r, y):
    return y[1]


_turning.terminal = True
_turning.direction = 1


def _shoot(dimension, p, amplitude, r_end):
    curvature = (amplitude - amplitude ** (p - 1.0)) / dimension
    r0 = START_RADIUS
    start = [
        amplitude + 0.5 * curvature * r0 * r0,
        curvature * r0,
        0.0,
        0.0,
        0.0,
    ]
    return integrate.solve_ivp(
        _rhs(dimension, p),
        (r0, r_end),
        start,
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        events=(_crossing, _turning),
        dense_output=True,
    )


def _outcome(solution):
    if solution.t_events[0].size:
        return "overshoot"
    if solution.t_events[1].size:
        return "undershoot"
    return "decayed"


@dataclass(frozen=True)
class GroundStateProfile:
    """The positive decaying solution for one (N, p)."""

    dimension: int
    p: float
    amplitude: float
    cutoff: float
    gradient: float
    mass: float
    potential: float
    solution: object

    def __call__(self, r):
        """w(r); beyond the cutoff the linear decay e^-r / r^((N-1)/2)."""
        r = np.asarray(r, dtype=float)
        inside = np.clip(r, START_RADIUS, self.cutoff)
        values = self.solution.sol(inside)[0]
        values = np.where(r < START_RADIUS, self.amplitude, values)
        edge = float(self.solution.sol(self.cutoff)[0])
        outside = r > self.cutoff
        safe = np.where(outside, r, self.cutoff)
        tail = (
            edge
            * (self.cutoff / safe) ** (0.5 * (self.dimension - 1))
            * np.exp(-(safe - self.cutoff))
        )
        return np.clip(np.where(outside, tail, values), 0.0, None)


@functools.lru_cache(maxsize=32)
def ground_state(dimension, p, r_end=60.0, tolerance=1e-14):
    """Shoot for the ground state of ``-Delta w + w = |w|^(p-2) w``."""
    critical = 2.0 * dimension / (dimension - 2) if dimension > 2 else math.inf
    if not 2.0 < p < critical:
        msg = f"need 2 < p < {critical:g} for a decaying solution, got {p!r}"
        raise ValueError(msg)

    low = 1.0
    high = 2.0
    while _outcome(_shoot(dimension, p, high, r_end)) != "overshoot":
        low = high
        high *= 2.0
        if high > 1e8:
            msg = f"no overshooting amplitude found for N={dimension}, p={p}"
            raise RuntimeError(msg)

    best = None
    for _ in range(200):
        if high - low <= tolerance * high:
            break
        middle = 0.5 * (low + high)
        solution = _shoot(dimension, p, middle, r_end)
        outcome = _outcome(solution)
        if outcome == "overshoot":
            high = middle
        elif outcome == "undershoot":
            low = middle
            best = solution
        else:
            low = high = middle
            best = solution
    amplitude = 0.5 * (low + high)
    if best is None:
        best = _shoot(dimension, p, low, r_end)

    radii = best.t
    below = np.nonzero(best.y[0] < CUTOFF_LEVEL * amplitude)[0]
    cutoff = float(radii[below[0]]) if below.size else float(radii[-1])
    gradient, mass, potential = (float(x) for x in best.sol(cutoff)[2:5])
    logger.debug(
        "ground state N=%d p=%g: w(0)=%.15g, cutoff %.3g, B=%.12g",
        dimension,
        p,
        amplitude,
        cutoff,
        mass,
    )
    return GroundStateProfile(
        dimension, p, amplitude, cutoff, gradient, mass, potential, best
    )


@dataclass(frozen=True)
class ScaledSoliton:
    """Minimizer of |grad u|^2/2 - (mu/p) int |u|^p at mass rho^2.

    ``u(x) = (lam/mu)^(1/(p-2)) w(sqrt(lam) x)``, which solves
    ``-Delta u + lam u = mu |u|^(p-2) u``.

    """

    profile: GroundStateProfile
    mu: float
    rho: float
    lam: float
    energy: float
    gradient: float

    @property
    def amplitude(self):
        return (self.lam / self.mu) ** (1.0 / (self.profile.p - 2.0))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.amplitude * self.profile(math.sqrt(self.lam) * r)

    def on_grid(self, grid):
        return RadialField.from_function(grid, self)


def scaled_soliton(dimension, p, mu=1.0, rho=1.0):
    """The scalar ground state with mass ``rho**2`` and its multiplier."""
    if not mu > 0 or not rho > 0:
        msg = f"need mu > 0 and rho > 0, got mu={mu!r}, rho={rho!r}"
        raise ValueError(msg)
    l2 = 2.0 + 4.0 / dimension
    if math.isclose(p, l2):
        msg = "the mass does not fix the scale when p = 2 + 4/N"
        raise ValueError(msg)
    profile = ground_state(dimension, p)
    a = 2.0 / (p - 2.0)
    exponent = a - 0.5 * dimension
    lam = (rho**2 * mu**a / profile.mass) ** (1.0 / exponent)
    gradient = (lam / mu) ** a * lam ** (1.0 - 0.5 * dimension) * profile.gradient
    potential = (
        (lam / mu) ** (p / (p - 2.0))
        * lam ** (-0.5 * dimension)
        * profile.potential
    )
    energy = 0.5 * gradient - mu / p * potential
    return ScaledSoliton(profile, mu, rho, lam, energy, gradient)
