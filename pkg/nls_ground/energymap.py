"""The ground-energy map rho -> c(rho) as a sorted table of solver runs."""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from sortedcontainers import SortedDict

from .utils import write_csv

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-6


def _key(rho):
    return tuple(float(x) for x in np.atleast_1d(rho))


@dataclass(frozen=True)
class EnergyRow:
    """One point of the map; ``energy`` is NaN when the run failed."""

    rho: Tuple[float, ...]
    energy: float
    lam: Tuple[float, ...]
    saturation: Tuple[str, ...]
    status: str
    error: Optional[str] = None

    @classmethod
    def from_report(cls, rho, report):
        return cls(
            _key(rho),
            float(report.energy),
            tuple(float(x) for x in report.lam),
            tuple(report.saturation),
            report.status,
        )

    @classmethod
    def failed(cls, rho, error):
        n = len(rho)
        return cls(
            _key(rho), math.nan, (math.nan,) * n, ("",) * n, "failed", error
        )

    @property
    def ok(self):
        return self.error is None and math.isfinite(self.energy)

    @property
    def fully_saturated(self):
        return self.ok and all(flag == "saturated" for flag in self.saturation)

    def cells(self):
        """rho_1..K, c, lambda_1..K, sat_1..K; failed values are blank."""
        energy = self.energy if self.ok else None
        lam = [None if math.isnan(x) else x for x in self.lam]
        if self.ok:
            sat = [flag == "saturated" for flag in self.saturation]
        else:
            sat = [None] * len(self.rho)
        return [*self.rho, energy, *lam, *sat]


def dominates(a, b):
    """True when rho ``a`` is componentwise at most ``b`` and differs."""
    return a != b and all(x <= y for x, y in zip(a, b))


class GroundEnergyMap:
    """Rows of (rho, c, lambda, saturation) keyed uniquely by rho.

    Keys are rho tuples, so iteration runs in lexicographic order, which
    for a one-component map is increasing rho.

    """

    def __init__(self, n_components, rows=None):
        self.n_components = n_components
        self._d = SortedDict()
        for row in rows or ():
            self.add(row)

    def __iter__(self):
        return iter(self._d.values())

    def __len__(self):
        return len(self._d)

    def __contains__(self, rho):
        return _key(rho) in self._d

    def __getitem__(self, rho):
        return self._d[_key(rho)]

    def __repr__(self):
        return f"GroundEnergyMap({self.n_components}, {len(self)} rows)"

    def add(self, row):
        if len(row.rho) != self.n_components:
            msg = (
                f"row has {len(row.rho)} masses for a "
                f"{self.n_components}-component map"
            )
            raise ValueError(msg)
        if row.rho in self._d:
            msg = f"duplicate row for rho={row.rho!r}"
            raise KeyError(msg)
        self._d[row.rho] = row

    def rows(self):
        return list(self._d.values())

    def failures(self):
        return [row for row in self if not row.ok]

    def violations(self, slack=MONOTONE_SLACK):
        """Pairs (a, b), a dominated by b, with c(b) > c(a) + slack."""
        rows = [row for row in self if row.ok]
        found = []
        for a, b in itertools.permutations(rows, 2):
            if dominates(a.rho, b.rho) and b.energy > a.energy + slack:
                found.append((a.rho, b.rho))
        return found

    def strict_decrease(self):
        """Strict decrease along dominated pairs of fully saturated rows.

        Returns None when no such pair exists.
        """
        rows = [row for row in self if row.fully_saturated]
        pairs = [
            (a, b)
            for a, b in itertools.permutations(rows, 2)
            if dominates(a.rho, b.rho)
        ]
        if not pairs:
            return None
        return all(b.energy < a.energy for a, b in pairs)

    def small_rho_ratio(self):
        """c at the smallest |rho| over c at the largest."""
        rows = [row for row in self if row.ok]
        if len(rows) < 2:
            return math.nan
        rows.sort(key=lambda row: np.linalg.norm(row.rho))
        return rows[0].energy / rows[-1].energy

    def smallest_row(self):
        rows = [row for row in self if row.ok]
        if not rows:
            return None
        return min(rows, key=lambda row: np.linalg.norm(row.rho))

    def header(self):
        k = range(1, self.n_components + 1)
        return (
            [f"rho_{i}" for i in k]
            + ["c"]
            + [f"lambda_{i}" for i in k]
            + [f"sat_{i}" for i in k]
        )

    def to_csv(self, path):
        return write_csv(path, self.header(), [row.cells() for row in self])

    def summary(self, threshold=None):
        lines = [f"rows: {len(self)} ({len(self.failures())} failed)"]
        for row in self.failures():
            lines.append(f"failed rho={row.rho}: {row.error}")
        violations = self.violations()
        lines.append(
            "monotone under rho-dominance: "
            + ("yes" if not violations else f"no, {len(violations)} pairs")
        )
        strict = self.strict_decrease()
        if strict is not None:
            lines.append(f"strict decrease on saturated rows: {strict}")
        ratio = self.small_rho_ratio()
        if math.isfinite(ratio):
            lines.append(f"c(smallest rho) / c(largest rho): {ratio:.6g}")
        smallest = self.smallest_row()
        if threshold is not None and smallest is not None:
            gap = abs(smallest.energy - threshold) / threshold
            lines.append(
                f"threshold {threshold:.10g}, relative gap at the smallest "
                f"rho: {gap:.4g}"
            )
        return "\n".join(lines)
