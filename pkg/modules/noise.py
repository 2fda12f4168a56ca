"""
Detector noise models: trusted, untrusted and calibrated.

Each model turns (T, xi_A, detector) into a NoiseBudget. Channel noise is
referred to the channel input, detection noise to Bob's input, all in SNU.
"""
from dataclasses import dataclass
from enum import Enum

from .constants import MODEL_NAMES
from .errors import ConfigError, DomainError
from .parsers import unknown_choice_message


class NoiseModelKind(Enum):
    TRUSTED = 'trusted'
    UNTRUSTED = 'untrusted'
    CALIBRATED = 'calibrated'

    @classmethod
    def parse(cls, text: str) -> 'NoiseModelKind':
        """Case-insensitive lookup by name."""
        key = text.strip().lower()
        for kind in cls:
            if kind.value == key:
                return kind
        raise ConfigError(unknown_choice_message('noise model', text, MODEL_NAMES))

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DetectorParams:
    """Bob's detector: efficiency eta_b in (0, 1], electronic noise nu_b >= 0 (SNU)."""
    eta_b: float
    nu_b: float

    def __post_init__(self):
        if not 0.0 < self.eta_b <= 1.0:
            raise DomainError(f"detector efficiency eta_b must be in (0, 1], got {self.eta_b}")
        if not self.nu_b >= 0.0:
            raise DomainError(f"electronic noise nu_b must be >= 0, got {self.nu_b}")


@dataclass(frozen=True)
class AlicePrepNoise:
    """Preparation excess noise xi_A = xi_const + xi_slope * V_A."""
    xi_const: float = 0.0
    xi_slope: float = 0.0

    def __post_init__(self):
        if not self.xi_const >= 0.0 or not self.xi_slope >= 0.0:
            raise DomainError(
                f"excess noise coefficients must be >= 0, got "
                f"xi_const={self.xi_const}, xi_slope={self.xi_slope}")

    def at(self, v_a: float) -> float:
        return self.xi_const + self.xi_slope * v_a


@dataclass(frozen=True)
class NoiseBudget:
    """
    Noise variances for one parameter point.

    xi_det_eve and xi_tot_eve are what enters the Holevo computation; they
    differ from xi_det and xi_tot only under the calibrated model.
    """
    kind: NoiseModelKind
    transmittance: float
    xi_ch: float
    xi_det: float
    xi_tot: float
    xi_det_eve: float
    xi_tot_eve: float

    def as_dict(self) -> dict:
        return {
            'xi_ch': self.xi_ch,
            'xi_det': self.xi_det,
            'xi_tot': self.xi_tot,
            'xi_det_eve': self.xi_det_eve,
            'xi_tot_eve': self.xi_tot_eve,
        }


def _check_transmittance(t: float) -> None:
    if not 0.0 < t <= 1.0:
        raise DomainError(f"transmittance must be in (0, 1], got {t}")


def channel_noise_trusted(t: float, xi_a: float) -> float:
    """(1 - T) / T + xi_A."""
    _check_transmittance(t)
    if xi_a < 0:
        raise DomainError(f"excess noise xi_A must be >= 0, got {xi_a}")
    return (1.0 - t) / t + xi_a


def detection_noise_trusted(det: DetectorParams) -> float:
    """Heterodyne detection noise (1 + (1 - eta) + 2 nu) / eta."""
    return (1.0 + (1.0 - det.eta_b) + 2.0 * det.nu_b) / det.eta_b


def detection_noise_noiseless(det: DetectorParams) -> float:
    """Detection noise of a lossy but noiseless detector, (1 + (1 - eta)) / eta."""
    return (1.0 + (1.0 - det.eta_b)) / det.eta_b


def budget(kind: NoiseModelKind, t: float, xi_a: float, det: DetectorParams) -> NoiseBudget:
    """Noise budget for ``kind`` at transmittance ``t`` and excess noise ``xi_a``."""
    xi_ch = channel_noise_trusted(t, xi_a)

    if kind is NoiseModelKind.TRUSTED:
        xi_det = detection_noise_trusted(det)
        xi_tot = xi_ch + xi_det / t
        return NoiseBudget(kind, t, xi_ch, xi_det, xi_tot, xi_det, xi_tot)

    if kind is NoiseModelKind.UNTRUSTED:
        # Electronic noise is credited to Eve through the channel term
        xi_ch += 2.0 * det.nu_b / (t * det.eta_b)
        xi_det = detection_noise_noiseless(det)
        xi_tot = xi_ch + xi_det / t
        return NoiseBudget(kind, t, xi_ch, xi_det, xi_tot, xi_det, xi_tot)

    if kind is NoiseModelKind.CALIBRATED:
        xi_det = detection_noise_trusted(det)
        xi_tot = xi_ch + xi_det / t
        xi_det_eve = detection_noise_noiseless(det)
        xi_tot_eve = xi_ch + xi_det_eve / t
        return NoiseBudget(kind, t, xi_ch, xi_det, xi_tot, xi_det_eve, xi_tot_eve)

    raise ConfigError(f"unsupported noise model {kind!r}")
