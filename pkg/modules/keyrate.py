"""
Asymptotic secret key rate for GMCS CV-QKD with reverse reconciliation and
heterodyne detection.

    R = f * I_AB - chi_BE

I_AB is always computed from the physical total noise; chi_BE from the
Eve-referred budget fields.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Tuple

from .constants import (
    DEFAULT_ATTENUATION_DB_PER_KM, DEFAULT_ETA_B, DEFAULT_F_REC, DEFAULT_NU_B,
    DEFAULT_XI_CONST, DEFAULT_XI_SLOPE, EPS_CLAMP,
)
from .errors import DomainError, UnphysicalCovarianceError
from .noise import AlicePrepNoise, DetectorParams, NoiseBudget, NoiseModelKind, budget
from .units import ChannelParams, g_entropy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProtocolParams:
    """Modulation variance V_A (SNU) and reconciliation efficiency f."""
    v_a: float
    f_rec: float
    v: float = field(init=False)

    def __post_init__(self):
        if not self.v_a >= 0.0 or math.isinf(self.v_a):
            raise DomainError(f"modulation variance V_A must be finite and >= 0, got {self.v_a}")
        if not 0.0 < self.f_rec <= 1.0:
            raise DomainError(f"reconciliation efficiency f must be in (0, 1], got {self.f_rec}")
        object.__setattr__(self, 'v', self.v_a + 1.0)


@dataclass(frozen=True)
class SystemParams:
    """Every physical and protocol scalar of one operating point."""
    v_a: float
    length_km: float
    f_rec: float = DEFAULT_F_REC
    eta_b: float = DEFAULT_ETA_B
    nu_b: float = DEFAULT_NU_B
    attenuation_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM
    xi_const: float = DEFAULT_XI_CONST
    xi_slope: float = DEFAULT_XI_SLOPE

    def __post_init__(self):
        # Construct the parts once so invalid values fail here
        _ = (self.protocol, self.detector, self.alice_noise, self.channel)

    @property
    def protocol(self) -> ProtocolParams:
        return ProtocolParams(self.v_a, self.f_rec)

    @property
    def detector(self) -> DetectorParams:
        return DetectorParams(self.eta_b, self.nu_b)

    @property
    def alice_noise(self) -> AlicePrepNoise:
        return AlicePrepNoise(self.xi_const, self.xi_slope)

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(self.length_km, self.attenuation_db_per_km)

    @property
    def transmittance(self) -> float:
        return self.channel.transmittance

    @property
    def xi_a(self) -> float:
        return self.alice_noise.at(self.v_a)

    def with_va(self, v_a: float) -> 'SystemParams':
        return replace(self, v_a=v_a)

    def with_length(self, length_km: float) -> 'SystemParams':
        return replace(self, length_km=length_km)


@dataclass(frozen=True)
class HolevoIntermediates:
    a_val: float
    b_val: float
    c_val: float
    d_val: float
    lambdas: Tuple[float, float, float, float, float]
    clamped: bool = False

    def as_dict(self) -> Dict[str, float]:
        out = {'A': self.a_val, 'B': self.b_val, 'C': self.c_val, 'D': self.d_val}
        for i, lam in enumerate(self.lambdas, 1):
            out[f'lambda{i}'] = lam
        return out


@dataclass(frozen=True)
class KeyRateResult:
    i_ab: float
    chi_be: float
    rate_raw: float
    rate: float
    intermediates: HolevoIntermediates
    budget: NoiseBudget
    v_a: float

    def as_dict(self) -> dict:
        """Flat JSON-ready view including every Holevo intermediate."""
        out = {
            'model': str(self.budget.kind),
            'v_a': self.v_a,
            'transmittance': self.budget.transmittance,
            'i_ab': self.i_ab,
            'chi_be': self.chi_be,
            'rate_raw': self.rate_raw,
            'rate': self.rate,
            'clamped': self.intermediates.clamped,
        }
        out.update(self.budget.as_dict())
        out.update(self.intermediates.as_dict())
        return out


def mutual_information(v: float, xi_tot: float) -> float:
    """I_AB = log2((V + Xi_tot) / (1 + Xi_tot)), both quadratures."""
    if v < 1.0:
        raise DomainError(f"V = V_A + 1 must be >= 1, got {v}")
    if xi_tot < 0.0:
        raise DomainError(f"total noise must be >= 0, got {xi_tot}")
    return math.log2((v + xi_tot) / (1.0 + xi_tot))


def _symplectic_pair(s: float, p: float, gap: float, names: Tuple[str, str],
                     context: Dict[str, float]) -> Tuple[float, float, bool]:
    """
    Roots of lambda^4 - s lambda^2 + p = 0, "+" root first.

    ``gap`` is s - 2 sqrt(p) computed without cancellation; the discriminant
    is taken as gap * (s + 2 sqrt(p)) and the "-" root from the product p.
    Returns (lambda_plus, lambda_minus, clamped).
    """
    printed_disc = s * s - 4.0 * p
    if printed_disc < -EPS_CLAMP * max(1.0, s * s) or p < 0.0 or s < 0.0:
        raise UnphysicalCovarianceError(
            f"negative discriminant for {names[0]}/{names[1]}", context)

    disc = max(gap, 0.0) * (s + 2.0 * math.sqrt(p))
    plus_sq = 0.5 * (s + math.sqrt(disc))
    if plus_sq <= 0.0:
        raise UnphysicalCovarianceError(f"{names[0]}^2 <= 0", context)
    minus_sq = p / plus_sq

    clamped = False
    lambdas = []
    for name, sq in zip(names, (plus_sq, minus_sq)):
        lam = math.sqrt(sq)
        if lam < 1.0 - EPS_CLAMP:
            raise UnphysicalCovarianceError(f"{name} = {lam!r} below 1", context)
        if lam < 1.0:
            clamped = True
        lambdas.append(lam)
    return lambdas[0], lambdas[1], clamped


def holevo_bound(v: float, t: float, noise: NoiseBudget) -> Tuple[float, HolevoIntermediates]:
    """
    Holevo bound chi_BE from the symplectic eigenvalues of the Alice-Bob state.

    Uses xi_ch and the Eve-referred detection and total noise.
    """
    if not 0.0 < t <= 1.0:
        raise DomainError(f"transmittance must be in (0, 1], got {t}")
    if v < 1.0:
        raise DomainError(f"V = V_A + 1 must be >= 1, got {v}")

    xi_ch = noise.xi_ch
    xi_det = noise.xi_det_eve
    xi_tot = noise.xi_tot_eve

    a = v ** 2 * (1.0 - 2.0 * t) + 2.0 * t + t ** 2 * (v + xi_ch) ** 2
    b = t ** 2 * (v * xi_ch + 1.0) ** 2
    sqrt_b = math.sqrt(b)
    scale = 1.0 / (t * (v + xi_tot))
    c = scale ** 2 * (a * xi_det ** 2 + b + 1.0
                      + 2.0 * xi_det * (v * sqrt_b + t * (v + xi_ch))
                      + 2.0 * t * (v ** 2 - 1.0))
    d = ((v + sqrt_b * xi_det) * scale) ** 2

    # A - 2 sqrt(B) and C - 2 sqrt(D) as exact squares
    u = v * (1.0 - t) - t * xi_ch
    gap_ab = u * u
    gap_cd = ((xi_det * u + (sqrt_b - 1.0)) * scale) ** 2

    context = {'V': v, 'T': t, 'xi_ch': xi_ch, 'xi_det': xi_det, 'xi_tot': xi_tot,
               'A': a, 'B': b, 'C': c, 'D': d}
    lam1, lam2, clamp_ab = _symplectic_pair(a, b, gap_ab, ('lambda1', 'lambda2'), context)
    lam3, lam4, clamp_cd = _symplectic_pair(c, d, gap_cd, ('lambda3', 'lambda4'), context)
    lambdas = (lam1, lam2, lam3, lam4, 1.0)

    chi = (g_entropy((lam1 - 1.0) / 2.0, 'lambda1')
           + g_entropy((lam2 - 1.0) / 2.0, 'lambda2')
           - g_entropy((lam3 - 1.0) / 2.0, 'lambda3')
           - g_entropy((lam4 - 1.0) / 2.0, 'lambda4'))
    clamped = clamp_ab or clamp_cd
    if clamped:
        logger.warning("clamped symplectic eigenvalues at V=%r T=%r: %r", v, t, lambdas)
    return chi, HolevoIntermediates(a, b, c, d, lambdas, clamped)


def key_rate(params: SystemParams, kind: NoiseModelKind) -> KeyRateResult:
    """Secret key rate for one fully specified parameter point."""
    t = params.transmittance
    noise = budget(kind, t, params.xi_a, params.detector)
    v = params.protocol.v
    i_ab = mutual_information(v, noise.xi_tot)
    chi_be, intermediates = holevo_bound(v, t, noise)
    rate_raw = params.f_rec * i_ab - chi_be
    return KeyRateResult(
        i_ab=i_ab,
        chi_be=chi_be,
        rate_raw=rate_raw,
        rate=max(0.0, rate_raw),
        intermediates=intermediates,
        budget=noise,
        v_a=params.v_a,
    )
