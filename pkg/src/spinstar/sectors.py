"""Collective angular-momentum sectors of an unpolarised spin-1/2 bath.

Angular momenta are stored doubled (``two_j = 2j``, ``two_m = 2m``) so that
half-integer values of odd baths stay exact integers. All eigenvalue helpers
work on plain ints as well as on integer numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np
from scipy.stats import binom

from .errors import ConfigError, DegenerateInput

#: Largest bath for which degeneracies go through exact integer arithmetic.
EXACT_WEIGHT_LIMIT = 60

Direction = Literal["raise", "lower"]


@dataclass(frozen=True, order=True)
class SectorLabel:
    """Simultaneous eigenspace ``|j, m>`` of the bath ``J^2`` and ``J_z``."""

    two_j: int
    two_m: int

    def __post_init__(self):
        if self.two_j < 0:
            raise ConfigError(f"two_j must be non-negative, got {self.two_j}")
        if abs(self.two_m) > self.two_j:
            raise ConfigError(f"|two_m| > two_j in sector ({self.two_j}, {self.two_m})")
        if (self.two_j - self.two_m) % 2:
            raise ConfigError(f"two_j and two_m differ in parity: ({self.two_j}, {self.two_m})")

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def m(self) -> float:
        return self.two_m / 2

    def shifted(self, delta_two_m: int) -> "SectorLabel":
        return SectorLabel(self.two_j, self.two_m + delta_two_m)


@dataclass(frozen=True)
class SpectralValues:
    jz: float
    jsq: float
    jpjm: float
    jmjp: float
    jsym: float


@dataclass(frozen=True)
class DegeneracyTable:
    """Normalised multiplet weights ``nu(N, j) / 2^N`` keyed by ``two_j``."""

    bath_size: int
    weights: dict[int, float]

    def total(self) -> float:
        """Completeness sum, equal to one up to rounding."""
        return math.fsum(w * (two_j + 1) for two_j, w in self.weights.items())


def _check_bath(N: int) -> None:
    if int(N) != N:
        raise ConfigError(f"bath size must be an integer, got {N!r}")
    if N < 1:
        raise DegenerateInput(f"bath size must be at least 1, got {N}")


def _check_two_j(N: int, two_j: int) -> None:
    _check_bath(N)
    if not 0 <= two_j <= N or (N - two_j) % 2:
        raise ConfigError(f"two_j={two_j} is not a multiplet of a {N}-spin bath")


def allowed_two_j(N: int) -> list[int]:
    """Doubled total spins present in an ``N``-spin bath, largest first."""
    _check_bath(N)
    return list(range(N, -1, -2))


def enumerate_sectors(N: int) -> list[SectorLabel]:
    """All ``(j, m)`` sectors, descending ``two_j`` then ascending ``two_m``."""
    return [
        SectorLabel(two_j, two_m)
        for two_j in allowed_two_j(N)
        for two_m in range(-two_j, two_j + 1, 2)
    ]


def degeneracy_count(N: int, two_j: int) -> int:
    """Number of distinct multiplets with total spin ``j``, as an exact integer."""
    _check_two_j(N, two_j)
    k = (N + two_j) // 2
    return math.comb(N, k) - math.comb(N, k + 1)


def degeneracy_weight(N: int, two_j: int) -> float:
    """Multiplicity of spin ``j`` divided by ``2^N``.

    The binomial difference is rewritten as
    ``C(N, k) (2j + 1) / (k + 1)`` with ``k = N/2 + j``, which removes the
    subtraction entirely. Small baths use exact rationals; larger ones the
    binomial probability ``C(N, k) / 2^N`` from :data:`scipy.stats.binom`,
    which neither overflows nor flushes to zero early and, unlike a plain
    log-gamma difference, keeps full relative precision for large ``N``.
    """
    _check_two_j(N, two_j)
    if N <= EXACT_WEIGHT_LIMIT:
        return float(Fraction(degeneracy_count(N, two_j), 2**N))
    k = (N + two_j) // 2
    return float(binom.pmf(k, N, 0.5)) * (two_j + 1) / (k + 1)


def degeneracy_table(N: int) -> DegeneracyTable:
    two_js = allowed_two_j(N)
    if N <= EXACT_WEIGHT_LIMIT:
        return DegeneracyTable(N, {two_j: degeneracy_weight(N, two_j) for two_j in two_js})
    tj = np.array(two_js)
    k = (N + tj) // 2
    w = binom.pmf(k, N, 0.5) * (tj + 1) / (k + 1)
    return DegeneracyTable(N, {int(a): float(b) for a, b in zip(tj, w)})


# Eigenvalue helpers. Both numerators below are multiples of 4 whenever
# two_j and two_m share parity, so integer division is exact.

def jpjm_value(two_j, two_m):
    """Eigenvalue of ``J+ J-`` on ``|j, m>``: ``j(j+1) - m(m-1)``."""
    return (two_j * (two_j + 2) - two_m * (two_m - 2)) // 4


def jmjp_value(two_j, two_m):
    """Eigenvalue of ``J- J+`` on ``|j, m>``: ``j(j+1) - m(m+1)``."""
    return (two_j * (two_j + 2) - two_m * (two_m + 2)) // 4


def ladder_coefficient(sector: SectorLabel, direction: Direction) -> float:
    """Matrix element of ``J+`` or ``J-`` leaving ``sector``; zero off the ladder."""
    if direction == "raise":
        if sector.two_m + 2 > sector.two_j:
            return 0.0
        return math.sqrt(jmjp_value(sector.two_j, sector.two_m))
    if direction == "lower":
        if sector.two_m - 2 < -sector.two_j:
            return 0.0
        return math.sqrt(jpjm_value(sector.two_j, sector.two_m))
    raise ConfigError(f"unknown ladder direction {direction!r}")


def ladder_array(two_j: np.ndarray, two_m: np.ndarray, direction: Direction) -> np.ndarray:
    """Vectorised :func:`ladder_coefficient`; entries off the ladder are exactly 0."""
    two_j = np.asarray(two_j)
    two_m = np.asarray(two_m)
    if direction == "raise":
        vals = jmjp_value(two_j, two_m)
        inside = two_m + 2 <= two_j
    elif direction == "lower":
        vals = jpjm_value(two_j, two_m)
        inside = two_m - 2 >= -two_j
    else:
        raise ConfigError(f"unknown ladder direction {direction!r}")
    inside &= np.abs(two_m) <= two_j
    return np.where(inside, np.sqrt(np.maximum(vals, 0)), 0.0)


def spectral_values(sector: SectorLabel) -> SpectralValues:
    two_j, two_m = sector.two_j, sector.two_m
    jpjm = jpjm_value(two_j, two_m)
    jmjp = jmjp_value(two_j, two_m)
    return SpectralValues(
        jz=two_m / 2,
        jsq=two_j * (two_j + 2) / 4,
        jpjm=float(jpjm),
        jmjp=float(jmjp),
        jsym=float(jpjm + jmjp),
    )


def sector_arrays(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flat ``(two_j, two_m, weight)`` arrays in :func:`enumerate_sectors` order."""
    table = degeneracy_table(N)
    two_j = []
    two_m = []
    for tj in allowed_two_j(N):
        two_j.extend([tj] * (tj + 1))
        two_m.extend(range(-tj, tj + 1, 2))
    two_j = np.array(two_j, dtype=np.int64)
    weights = np.array([table.weights[tj] for tj in two_j], dtype=float)
    return two_j, np.array(two_m, dtype=np.int64), weights
