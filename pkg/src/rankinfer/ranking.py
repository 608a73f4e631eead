"""Integer and fractional ranks with configurable tie handling.

A rank interpolates between "1 + number of strict predecessors" (omega=0,
the smallest rank shared by a tie group) and "number of weak predecessors"
(omega=1, the largest). Direction selects whether larger or smaller values
get better (smaller) ranks. Ranking one vector against a separate
reference vector is supported for prediction-style use.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Literal, Sequence

import numpy as np

from .errors import NonFinite
from .numerics import FloatArray

Direction = Literal["increasing", "decreasing"]


@dataclass(frozen=True)
class TieRule:
    """Tie handling (omega in [0, 1]) plus comparison direction.

    omega=0 gives every member of a tie group the smallest rank, omega=1
    the largest, omega=0.5 the mid-rank. "increasing" means larger values
    get larger ranks; "decreasing" means the largest value is ranked 1.
    """

    omega: float
    direction: Direction

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError("omega must lie in [0, 1]")
        if self.direction not in ("increasing", "decreasing"):
            raise ValueError("direction must be 'increasing' or 'decreasing'")


@dataclass(frozen=True, eq=False)
class RankVector:
    """Ranks for a vector of values.

    kind "integer" means ranks on the 1..p scale (half-integers appear
    for omega=0.5 ties); "fractional" means the integer ranks divided by
    the reference length, lying in (0, 1] for in-support queries.
    """

    values: FloatArray
    kind: Literal["integer", "fractional"]

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self) -> Iterator[float]:
        return iter(self.values.tolist())


def _as_finite_vector(x: Sequence[float] | np.ndarray, what: str) -> FloatArray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be 1-D")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{what} contains NaN or infinite values")
    return arr


def _counts_against(x: FloatArray, reference: FloatArray, rule: TieRule) -> FloatArray:
    """omega-blend of weak/strict predecessor counts of x within reference."""
    ordered = np.sort(reference)
    left = np.searchsorted(ordered, x, side="left")
    right = np.searchsorted(ordered, x, side="right")
    n = reference.size
    w = rule.omega
    if rule.direction == "increasing":
        weak, strict = right, left
    else:
        weak, strict = n - left, n - right
    return w * weak + (1.0 - w) * strict + (1.0 - w)


def irank_against(x, reference, rule: TieRule) -> RankVector:
    """Integer-scale ranks of x computed against a reference vector."""
    xv = _as_finite_vector(x, "values")
    ref = _as_finite_vector(reference, "reference")
    if ref.size == 0:
        raise ValueError("reference must be nonempty")
    return RankVector(values=_counts_against(xv, ref, rule), kind="integer")


def irank(theta, rule: TieRule) -> RankVector:
    """Integer-scale ranks of theta within itself."""
    tv = _as_finite_vector(theta, "values")
    if tv.size == 0:
        raise ValueError("values must be nonempty")
    return RankVector(values=_counts_against(tv, tv, rule), kind="integer")


def frank(theta, rule: TieRule) -> RankVector:
    """Fractional ranks: irank divided by the vector length, exactly."""
    integer = irank(theta, rule)
    return RankVector(values=integer.values / integer.values.size, kind="fractional")


def frank_against(x, reference, rule: TieRule) -> RankVector:
    """Fractional ranks of x against a reference vector.

    Out-of-support queries return the formula value verbatim: above the
    reference support the result exceeds 1, below it the result can
    reach 0 (omega=1) or (1-omega)/n.
    """
    integer = irank_against(x, reference, rule)
    n = np.asarray(reference).size
    return RankVector(values=integer.values / n, kind="fractional")
