"""Closed-form high-rate golden quantizer and its analytic rate/distortion.

The radius law comes from equating the integral of the asymptotically
optimal point density ``lambda(x, y) = N/(2 pi s2) exp(-(x^2+y^2)/(2 s2))``
over the disc of radius ``r_n`` to the centroid count ``n``, giving
``N (1 - exp(-r_n^2 / (2 s2))) = n``. At ``n = N`` that radius diverges,
hence the two finite conventions below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .codebook import Codebook, Scheme, spiral_centroids
from .errors import DomainError, IndexOutOfRange

#: log2(2*pi/3): gap between the fixed-rate high-rate curve and the RD bound.
RATE_GAP_HR_RD = math.log2(2.0 * math.pi / 3.0)
#: log2(2/sqrt(e)): gap between the fixed-rate and entropy-coded high-rate curves.
RATE_GAP_HR_ECHR = math.log2(2.0 / math.sqrt(math.e))


class RadiusConvention(str, Enum):
    MIDPOINT = "Midpoint"
    RAW_CLAMP_LAST = "RawClampLast"


def _count_arg(N: int, n, convention: RadiusConvention):
    """Centroid count plugged into the mass-balance equation for index n."""
    convention = RadiusConvention(convention)
    n = np.asarray(n, dtype=float)
    if convention is RadiusConvention.MIDPOINT:
        return n - 0.5
    return np.where(n >= N, N - 0.5, n)


def highrate_radius(N: int, n: int, sigma2: float = 1.0,
                    convention: RadiusConvention = RadiusConvention.MIDPOINT) -> float:
    """Radius of centroid ``n`` (1-based) of the high-rate design.

    Midpoint evaluates ``sigma*sqrt(2 ln(N/(N - n + 1/2)))``; RawClampLast
    uses ``n`` itself for ``n < N`` and ``N - 1/2`` for the last centroid.
    """
    if N < 1:
        raise IndexOutOfRange(f"N must be >= 1, got {N}")
    if not 1 <= n <= N:
        raise IndexOutOfRange(f"n must lie in 1..{N}, got {n}")
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be > 0, got {sigma2}")
    m = float(_count_arg(N, n, convention))
    return math.sqrt(sigma2) * math.sqrt(-2.0 * math.log1p(-m / N))


def highrate_radii(N: int, sigma2: float = 1.0,
                   convention: RadiusConvention = RadiusConvention.MIDPOINT) -> np.ndarray:
    if N < 1:
        raise IndexOutOfRange(f"N must be >= 1, got {N}")
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be > 0, got {sigma2}")
    m = _count_arg(N, np.arange(1, N + 1), convention)
    return math.sqrt(sigma2) * np.sqrt(-2.0 * np.log1p(-m / N))


@dataclass(frozen=True)
class HighRateDesign:
    N: int
    sigma2: float = 1.0
    radius_convention: RadiusConvention = RadiusConvention.MIDPOINT

    def radii(self) -> np.ndarray:
        return highrate_radii(self.N, self.sigma2, self.radius_convention)

    def codebook(self) -> Codebook:
        return build_highrate(self.N, self.sigma2, self.radius_convention)


def build_highrate(N: int, sigma2: float = 1.0,
                   convention: RadiusConvention = RadiusConvention.MIDPOINT) -> Codebook:
    convention = RadiusConvention(convention)
    r = highrate_radii(N, sigma2, convention)
    return spiral_centroids(r, Scheme.HIGHRATE, sigma2, {"radius_convention": convention.value})


def analytic_distortion_hr(N: int, sigma2: float = 1.0) -> float:
    """High-rate MSE ``2 pi sigma2 / (3N)`` (square-cell moment of inertia 1/12)."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    return 2.0 * math.pi * sigma2 / (3.0 * N)


def _check_d(D: float, sigma2: float) -> None:
    if not D > 0:
        raise DomainError(f"distortion must be > 0, got {D}")
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be > 0, got {sigma2}")


def analytic_rate_hr(D: float, sigma2: float = 1.0) -> float:
    _check_d(D, sigma2)
    return math.log2(2.0 * math.pi * sigma2 / (3.0 * D))


def rd_rate(D: float, sigma2: float = 1.0) -> float:
    """Shannon rate ``log2(sigma2 / D)`` in bits per complex sample."""
    _check_d(D, sigma2)
    return math.log2(sigma2 / D)


def analytic_rate_echr(D: float, sigma2: float = 1.0) -> float:
    _check_d(D, sigma2)
    return math.log2(math.pi * math.sqrt(math.e) * sigma2 / (3.0 * D))


def analytic_entropy_echr(N: int) -> float:
    """Large-N index entropy ``log2 N - 1 + log2 sqrt(e)`` of the high-rate design."""
    if N < 2:
        raise DomainError(f"the asymptotic entropy needs N >= 2, got {N}")
    return math.log2(N) - 1.0 + 0.5 * math.log2(math.e)


@dataclass(frozen=True)
class EntropyModel:
    N: int
    probabilities: np.ndarray

    def entropy(self) -> float:
        """Exact finite-sum entropy in bits."""
        p = self.probabilities[self.probabilities > 0]
        return float(-np.sum(p * np.log2(p)))


def entropy_model(N: int) -> EntropyModel:
    """Approximate centroid probabilities ``2(N - m)/(N(N + 1))``.

    ``m = 0..N-1`` counts outward from the innermost centroid, so the
    probability of centroid ``n`` (1-based) is stored at ``n - 1``.
    """
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    m = np.arange(N, dtype=float)
    p = 2.0 * (N - m) / (N * (N + 1.0))
    p.setflags(write=False)
    return EntropyModel(N, p)
