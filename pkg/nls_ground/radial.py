"""Radial discretization of functions on R^N.

A radial function is sampled on a uniform grid ``0 = r_0 < ... < r_M =
R_max`` and integrated against the measure ``w_{N-1} r^{N-1} dr`` with
composite trapezoid weights. Derivatives are difference quotients
centered at the cell midpoints, so the discrete Dirichlet form

    sum_k w_{N-1} r_{k+1/2}^{N-1} h ((u_{k+1} - u_k) / h)^2

is a positive quadratic form whose matrix is tridiagonal. That matrix is
what the H^1 preconditioner of the solver inverts.

"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

MIN_NODES = 16


class GridMismatch(ValueError):
    pass


def sphere_area(dimension):
    """Surface area of the unit sphere in R^dimension."""
    return 2.0 * math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform radial grid with ``n_intervals + 1`` nodes on [0, r_max].

    Attributes:
        dimension: ambient dimension N.
        r_max: truncation radius; every field vanishes there.
        n_intervals: number of cells M, so nodes are r_0, ..., r_M.

    """

    dimension: int
    r_max: float
    n_intervals: int
    r: np.ndarray = field(init=False, repr=False)
    h: float = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    cell_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dimension < 3:
            msg = f"dimension must be at least 3, got {self.dimension!r}"
            raise ValueError(msg)
        if not self.r_max > 0:
            msg = f"r_max must be positive, got {self.r_max!r}"
            raise ValueError(msg)
        if self.n_intervals < MIN_NODES:
            msg = (
                f"need at least {MIN_NODES} intervals, "
                f"got {self.n_intervals!r}"
            )
            raise ValueError(msg)

        area = sphere_area(self.dimension)
        r = np.linspace(0.0, self.r_max, self.n_intervals + 1)
        h = self.r_max / self.n_intervals
        weights = area * h * r ** (self.dimension - 1)
        weights[-1] *= 0.5
        midpoints = 0.5 * (r[1:] + r[:-1])
        cell_weights = area * h * midpoints ** (self.dimension - 1)

        for array in (r, weights, cell_weights):
            array.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "cell_weights", cell_weights)

    def __len__(self):
        return self.n_intervals + 1

    def same_as(self, other):
        return self is other or (
            self.dimension == other.dimension
            and self.r_max == other.r_max
            and self.n_intervals == other.n_intervals
        )

    @property
    def l2_critical(self):
        """The mass-critical exponent 2_N = 2 + 4/N."""
        return 2.0 + 4.0 / self.dimension

    @property
    def sobolev_critical(self):
        """The Sobolev exponent 2* = 2N/(N - 2)."""
        return 2.0 * self.dimension / (self.dimension - 2)

    def integrate(self, values):
        """Quadrature of ``values`` along the last axis."""
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != len(self):
            msg = (
                f"expected {len(self)} samples along the last axis, "
                f"got {values.shape[-1]}"
            )
            raise GridMismatch(msg)
        return values @ self.weights

    def gradient_energy(self, values):
        """Discrete Dirichlet energy of each row of ``values``."""
        slopes = np.diff(values, axis=-1) / self.h
        return (slopes * slopes) @ self.cell_weights

    def stiffness(self, values):
        """Apply the Dirichlet-form matrix A, so ``u @ A u`` is the energy."""
        flux = np.diff(values, axis=-1) * (self.cell_weights / self.h**2)
        result = np.zeros_like(values, dtype=float)
        result[..., :-1] -= flux
        result[..., 1:] += flux
        return result

    def solve_h1(self, rhs, shift=1.0):
        """Solve ``(A + shift W) x = rhs`` with x = 0 at r_max.

        ``rhs`` holds one right-hand side per row. The system is
        tridiagonal and solved in banded form.

        """
        rhs = np.atleast_2d(np.asarray(rhs, dtype=float))
        coupling = self.cell_weights / self.h**2
        diagonal = np.zeros(len(self))
        diagonal[:-1] += coupling
        diagonal[1:] += coupling
        diagonal += shift * self.weights

        inner = len(self) - 1
        banded = np.zeros((3, inner))
        banded[0, 1:] = -coupling[: inner - 1]
        banded[1, :] = diagonal[:inner]
        banded[2, :-1] = -coupling[: inner - 1]

        solution = np.zeros_like(rhs)
        solution[:, :-1] = linalg.solve_banded(
            (1, 1), banded, rhs[:, :-1].T
        ).T
        return solution

    def sample(self, function):
        """Sample ``function(r)`` on the nodes with the boundary value 0."""
        values = np.array(function(self.r), dtype=float)
        values = np.broadcast_to(values, (len(self),)).copy()
        values[-1] = 0.0
        return values


@dataclass(frozen=True, eq=False)
class RadialField:
    """One radial component sampled on a grid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.grid),):
            msg = (
                f"expected {len(self.grid)} values, got shape {values.shape}"
            )
            raise GridMismatch(msg)
        if values[-1] != 0.0:
            msg = f"field must vanish at r_max, got {values[-1]!r}"
            raise ValueError(msg)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid, function):
        return cls(grid, grid.sample(function))

    def __neg__(self):
        return RadialField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class StateVector:
    """K radial components on one shared grid, stored as a (K, M+1) array."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, ndmin=2)
        if values.ndim != 2 or values.shape[0] < 1:
            msg = f"need a (K, nodes) array, got shape {values.shape}"
            raise ValueError(msg)
        if values.shape[1] != len(self.grid):
            msg = (
                f"expected {len(self.grid)} nodes per component, "
                f"got {values.shape[1]}"
            )
            raise GridMismatch(msg)
        if np.any(values[:, -1] != 0.0):
            msg = "every component must vanish at r_max"
            raise ValueError(msg)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_fields(cls, fields):
        fields = list(fields)
        if not fields:
            msg = "a state needs at least one component"
            raise ValueError(msg)
        grid = fields[0].grid
        for other in fields[1:]:
            if not grid.same_as(other.grid):
                msg = "all components must share one grid"
                raise GridMismatch(msg)
        return cls(grid, np.vstack([f.values for f in fields]))

    @property
    def n_components(self):
        return self.values.shape[0]

    @property
    def components(self):
        return [RadialField(self.grid, row) for row in self.values]

    def masses(self):
        """Squared L^2 norm of every component."""
        return self.grid.integrate(self.values**2)

    def gradient_energies(self):
        return self.grid.gradient_energy(self.values)

    def with_values(self, values):
        return StateVector(self.grid, values)

    def is_zero(self):
        return not np.any(self.values)


def make_grid(dimension, r_max=20.0, n_intervals=4000):
    """Uniform grid with trapezoid weights; ``w_0 = 0`` since ``r_0 = 0``."""
    return RadialGrid(int(dimension), float(r_max), int(n_intervals))


def _values_and_grid(u):
    if isinstance(u, (RadialField, StateVector)):
        return u.values, u.grid
    msg = f"expected a RadialField or StateVector, got {type(u).__name__}"
    raise TypeError(msg)


def integrate(f, grid=None):
    """Integral over R^N of a field, or of raw samples on ``grid``."""
    if grid is None:
        values, grid = _values_and_grid(f)
    else:
        values = f
    return grid.integrate(values)


def mass(u):
    """Squared L^2 norm (summed over components for a state)."""
    values, grid = _values_and_grid(u)
    return float(np.sum(grid.integrate(values**2)))


def lp_norm(u, p):
    if p < 1:
        msg = f"p must be at least 1, got {p!r}"
        raise ValueError(msg)
    values, grid = _values_and_grid(u)
    return float(np.sum(grid.integrate(np.abs(values) ** p))) ** (1.0 / p)


def grad_norm_sq(u):
    """Sum over components of the integral of (du/dr)^2."""
    values, grid = _values_and_grid(u)
    return float(np.sum(grid.gradient_energy(values)))
