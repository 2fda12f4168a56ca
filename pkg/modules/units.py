"""
Shared math primitives and shot-noise unit conventions.

All key-rate formulas work in shot-noise units (SNU), where the vacuum
variance of one quadrature is 1.
"""
import math
from dataclasses import dataclass, field

from .constants import EPS_CLAMP, N0
from .errors import DomainError


@dataclass(frozen=True)
class ShotNoiseConvention:
    """Raw modulation units <-> SNU conversion with n0 = 1/4."""
    n0: float = N0

    def __post_init__(self):
        if self.n0 != N0:
            raise DomainError(f"n0 is fixed at {N0}, got {self.n0}")

    def to_snu(self, raw_variance: float) -> float:
        return raw_variance / self.n0

    def to_raw(self, snu_variance: float) -> float:
        return snu_variance * self.n0


SNU = ShotNoiseConvention()


def snu_from_trace(raw_variance: float, shot_noise_variance: float) -> float:
    """
    Express a raw detector variance in SNU given a measured shot-noise variance
    (e.g. sigma_Q^2 of a vacuum trace at the same LO power).
    """
    if not shot_noise_variance > 0:
        raise DomainError(f"shot-noise variance must be > 0, got {shot_noise_variance}")
    return raw_variance / shot_noise_variance


def transmittance(length_km: float, attenuation_db_per_km: float) -> float:
    """Fiber transmittance 10^(-alpha * L / 10)."""
    if length_km < 0:
        raise DomainError(f"fiber length must be >= 0 km, got {length_km}")
    if attenuation_db_per_km < 0:
        raise DomainError(f"attenuation must be >= 0 dB/km, got {attenuation_db_per_km}")
    return 10.0 ** (-attenuation_db_per_km * length_km / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    """Fiber channel; transmittance is derived from length and attenuation."""
    length_km: float
    attenuation_db_per_km: float
    transmittance: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'transmittance',
                           transmittance(self.length_km, self.attenuation_db_per_km))


def g_entropy(x: float, context: str = "G argument") -> float:
    """
    G(x) = (x+1) log2(x+1) - x log2(x), with G(0) = 0.

    Arguments in [-EPS_CLAMP, 0) are clamped to 0; anything below that
    raises DomainError mentioning ``context``.
    """
    if x < -EPS_CLAMP or math.isnan(x):
        raise DomainError(f"{context}: G undefined for x = {x!r}")
    if x <= 0.0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)
