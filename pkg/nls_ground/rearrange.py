"""Schwarz rearrangement of radial samples.

A grid field is read as a step function: node k carries the value v_k on
a shell of measure w_k. Sorting those (|v_k|, w_k) pairs by value gives
the decreasing rearrangement as a function of accumulated measure; it is
laid back onto the grid by giving node k the mean square of that function
over the k-th slot of grid measure. The mass is therefore preserved
exactly; other L^p norms agree to second order in the grid spacing.

"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .nonlinearity import NonGspError
from .radial import RadialField, StateVector
from .utils import write_csv
from .variational import constraint_M, energy_J, project_to_M

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-10
GRADIENT_SLACK = 1e-3


def _rearranged_values(values, weights):
    magnitude = np.abs(values)
    order = np.argsort(-magnitude, kind="stable")
    sorted_weights = weights[order]
    if np.array_equal(sorted_weights, weights):
        # slots coincide with the sorted shells
        result = magnitude[order]
        result[-1] = 0.0
        return result

    sorted_values = magnitude[order]
    source = np.concatenate(([0.0], np.cumsum(sorted_weights)))
    cumulative = np.concatenate(
        ([0.0], np.cumsum(sorted_values**2 * sorted_weights))
    )
    target = np.concatenate(([0.0], np.cumsum(weights)))
    slot_mass = np.diff(np.interp(target, source, cumulative))

    result = np.zeros_like(magnitude)
    positive = weights > 0
    result[positive] = np.sqrt(
        np.clip(slot_mass[positive], 0.0, None) / weights[positive]
    )
    result[~positive] = magnitude.max()
    result = np.minimum.accumulate(result)
    result[-1] = 0.0
    return result


def schwarz(u):
    """Decreasing rearrangement of |u| on the same grid.

    Output is nonnegative, nonincreasing in r, and has the mass of ``u``.

    """
    if not isinstance(u, RadialField):
        msg = f"expected a RadialField, got {type(u).__name__}"
        raise TypeError(msg)
    return RadialField(u.grid, _rearranged_values(u.values, u.grid.weights))


def schwarz_state(u):
    """Componentwise rearrangement of a state."""
    return StateVector.from_fields(schwarz(field) for field in u.components)


def coupling_integrals(u, spec):
    """int prod_i |u_i|^(r_i) for each coupling term, without the strength."""
    integrals = []
    for term in spec.couplings:
        product = np.ones(len(u.grid))
        for row, r in zip(u.values, term.exponents):
            if r:
                product = product * np.abs(row) ** r
        integrals.append(float(u.grid.integrate(product)))
    return tuple(integrals)


def coupling_constant(spec):
    """d = (N/2) max_j (sum_i r_ij - 2); None without coupling terms."""
    degrees = [term.degree for term in spec.couplings]
    if not degrees:
        return None
    return 0.5 * spec.dimension * (max(degrees) - 2.0)


def _norms(u, exponents):
    table = []
    for p in exponents:
        table.append(u.grid.integrate(np.abs(u.values) ** p) ** (1.0 / p))
    return np.array(table)


@dataclass(frozen=True)
class RearrangementCertificate:
    """Before and after values of one rearrangement step.

    Arrays indexed by component have length K; ``norms_*`` has one row per
    exponent in ``exponents``.

    """

    exponents: Tuple[float, ...]
    mass_before: np.ndarray
    mass_after: np.ndarray
    norms_before: np.ndarray
    norms_after: np.ndarray
    gradient_before: np.ndarray
    gradient_after: np.ndarray
    coupling_before: Tuple[float, ...]
    coupling_after: Tuple[float, ...]
    m_before: float
    m_after: float
    energy_before: float
    energy_after: float
    scale: float
    d: Optional[float]

    @property
    def masses_preserved(self):
        scale = np.maximum(self.mass_before, 1.0)
        error = np.abs(self.mass_after - self.mass_before)
        return bool(np.all(error <= MASS_TOLERANCE * scale))

    @property
    def gradient_decreased(self):
        return bool(
            np.all(
                self.gradient_after
                <= self.gradient_before * (1.0 + GRADIENT_SLACK)
            )
        )

    @property
    def couplings_increased(self):
        return all(
            after >= before - 1e-8 * max(1.0, abs(before))
            for before, after in zip(self.coupling_before, self.coupling_after)
        )

    @property
    def constraint_decreased(self):
        scale = max(1.0, float(np.sum(self.gradient_before)))
        return self.m_after <= self.m_before + 1e-8 * scale

    @property
    def contracted(self):
        """The dilation back onto M does not expand: scale <= 1."""
        return self.scale <= 1.0 + 1e-10

    @property
    def energy_decreased(self):
        return self.energy_after <= self.energy_before + 1e-6 * abs(
            self.energy_before
        )

    @property
    def valid(self):
        return (
            self.masses_preserved
            and self.gradient_decreased
            and self.couplings_increased
            and self.constraint_decreased
            and self.contracted
            and self.energy_decreased
        )

    def rows(self):
        """(quantity, component, before, after) rows; component -1 is global."""
        rows = []
        for i in range(len(self.mass_before)):
            rows.append(("mass", i, self.mass_before[i], self.mass_after[i]))
            for p, before, after in zip(
                self.exponents, self.norms_before[:, i], self.norms_after[:, i]
            ):
                rows.append((f"lp_{p:g}", i, before, after))
            rows.append(
                ("grad", i, self.gradient_before[i], self.gradient_after[i])
            )
        for j, (before, after) in enumerate(
            zip(self.coupling_before, self.coupling_after)
        ):
            rows.append((f"coupling_{j}", -1, before, after))
        rows.append(("M", -1, self.m_before, self.m_after))
        rows.append(("J", -1, self.energy_before, self.energy_after))
        rows.append(("scale", -1, 1.0, self.scale))
        return rows

    def to_csv(self, path):
        return write_csv(
            path, ["quantity", "component", "before", "after"], self.rows()
        )


def rearrangement_descent(u, spec):
    """Rearrange every component, then dilate back onto the manifold.

    Only for nonlinearities made of even separable terms and coupling
    products, for which rearranging cannot lower int G.

    Returns the projected state and its certificate.

    """
    if not spec.is_gsp_form:
        msg = (
            "rearrangement needs separable even terms plus coupling "
            "products; this nonlinearity couples components otherwise"
        )
        raise NonGspError(msg)

    exponents = (2.0, spec.l2_critical, spec.sobolev_critical)
    rearranged = schwarz_state(u)
    projected, scale = project_to_M(rearranged, spec)

    certificate = RearrangementCertificate(
        exponents=exponents,
        mass_before=u.masses(),
        mass_after=rearranged.masses(),
        norms_before=_norms(u, exponents),
        norms_after=_norms(rearranged, exponents),
        gradient_before=u.gradient_energies(),
        gradient_after=rearranged.gradient_energies(),
        coupling_before=coupling_integrals(u, spec),
        coupling_after=coupling_integrals(rearranged, spec),
        m_before=constraint_M(u, spec),
        m_after=constraint_M(rearranged, spec),
        energy_before=energy_J(u, spec),
        energy_after=energy_J(projected, spec),
        scale=scale,
        d=coupling_constant(spec),
    )
    if not certificate.valid:
        logger.warning("rearrangement certificate has violations")
    logger.debug(
        "rearranged: scale %.8g, J %.10g -> %.10g",
        scale,
        certificate.energy_before,
        certificate.energy_after,
    )
    return projected, certificate
