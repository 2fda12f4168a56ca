"""
Detector characterization on homodyne traces: variance decomposition,
QCNR, autocorrelation, histograms and LO-power linearity.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from .constants import STATS_CHUNK_SIZE
from .errors import ConfigError, DomainError
from .traces import SampleTrace

logger = logging.getLogger(__name__)


class RunningMoments:
    """Single-pass mean and variance over chunks (Chan et al. pairwise merge)."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, chunk: np.ndarray) -> 'RunningMoments':
        n_b = int(chunk.size)
        if n_b == 0:
            return self
        mean_b = float(chunk.mean())
        m2_b = float(np.dot(chunk - mean_b, chunk - mean_b))
        n_a = self.count
        total = n_a + n_b
        delta = mean_b - self.mean
        self.mean += delta * n_b / total
        self.m2 += m2_b + delta * delta * n_a * n_b / total
        self.count = total
        return self

    def variance(self, ddof: int = 1) -> float:
        if self.count <= ddof:
            raise DomainError(f"variance needs more than {ddof} samples, got {self.count}")
        return self.m2 / (self.count - ddof)

    @classmethod
    def of(cls, samples: np.ndarray, chunk_size: int = STATS_CHUNK_SIZE) -> 'RunningMoments':
        moments = cls()
        for start in range(0, samples.size, chunk_size):
            moments.update(samples[start:start + chunk_size])
        return moments


@dataclass(frozen=True)
class TraceStats:
    sigma_t2: float
    sigma_e2: float
    sigma_q2: float
    qcnr_db: float
    mean: float
    calibration_drift: bool = False


def qcnr_db(sigma_q2: float, sigma_e2: float) -> float:
    """10 log10(sigma_Q^2 / sigma_E^2); -inf when sigma_Q^2 <= 0."""
    if not sigma_e2 > 0:
        raise DomainError(f"QCNR undefined: electrical variance is {sigma_e2!r}")
    if sigma_q2 <= 0:
        return -math.inf
    return 10.0 * math.log10(sigma_q2 / sigma_e2)


def variance_decompose(signal_trace: SampleTrace, dark_trace: SampleTrace) -> TraceStats:
    """
    sigma_T^2 from the signal trace, sigma_E^2 from the LO-off trace,
    sigma_Q^2 = sigma_T^2 - sigma_E^2. Unbiased estimators, mean removed.
    """
    signal = RunningMoments.of(signal_trace.samples)
    dark = RunningMoments.of(dark_trace.samples)
    sigma_t2 = signal.variance()
    sigma_e2 = dark.variance()
    sigma_q2 = sigma_t2 - sigma_e2
    value = qcnr_db(sigma_q2, sigma_e2)
    drift = sigma_q2 < 0
    if drift:
        logger.warning(
            "signal variance %r is below dark variance %r: calibration drift? QCNR set to -inf",
            sigma_t2, sigma_e2)
    return TraceStats(sigma_t2=sigma_t2, sigma_e2=sigma_e2, sigma_q2=sigma_q2,
                      qcnr_db=value, mean=signal.mean, calibration_drift=drift)


@dataclass(frozen=True)
class AutocorrResult:
    lags: np.ndarray
    r: np.ndarray
    n: int
    white_noise_band: float


def autocorrelation(trace: SampleTrace, k_max: int, max_workers: int = 1) -> AutocorrResult:
    """
    Biased normalized autocorrelation
    r(k) = sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2 for k = 0..k_max.
    Lags may be split across ``max_workers`` threads; the result does not
    depend on the split.
    """
    n = trace.n
    if k_max < 0:
        raise DomainError(f"k_max must be >= 0, got {k_max}")
    if not k_max < n / 10:
        raise DomainError(f"k_max must be < n/10 = {n / 10:g}, got {k_max}")
    x = trace.samples - trace.samples.mean()
    c0 = float(np.dot(x, x))
    if c0 == 0.0:
        raise DomainError("zero-variance trace: autocorrelation undefined")

    def lag(k: int) -> float:
        return float(np.dot(x[:n - k], x[k:])) / c0

    lags = range(k_max + 1)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            r = list(executor.map(lag, lags))
    else:
        r = [lag(k) for k in lags]
    r[0] = 1.0
    return AutocorrResult(lags=np.arange(k_max + 1), r=np.asarray(r), n=n,
                          white_noise_band=n ** -0.5)


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    bin_centers: np.ndarray
    probability: np.ndarray
    fit_mean: float
    fit_variance: float


def histogram(trace: SampleTrace, bins: int) -> Histogram:
    """Normalized bin frequencies plus the maximum-likelihood Gaussian fit."""
    if bins < 2:
        raise DomainError(f"histogram needs >= 2 bins, got {bins}")
    counts, edges = np.histogram(trace.samples, bins=bins)
    probability = counts / counts.sum()
    moments = RunningMoments.of(trace.samples)
    return Histogram(
        bin_edges=edges,
        bin_centers=0.5 * (edges[:-1] + edges[1:]),
        probability=probability,
        fit_mean=moments.mean,
        fit_variance=moments.variance(ddof=0),
    )


@dataclass(frozen=True)
class PowerPoint:
    power_mw: float
    stats: TraceStats


@dataclass(frozen=True)
class LinearityResult:
    points: List[PowerPoint]
    slope: float
    intercept: float
    r_squared: float
    residuals: np.ndarray


def variance_vs_power(pairs: Sequence[Tuple[float, SampleTrace]],
                      dark: SampleTrace) -> LinearityResult:
    """
    sigma_T^2 at each LO power and the least-squares line
    sigma_T^2(P) = slope * P + intercept. The dark trace enters at its own
    ``lo_power_mw`` (normally 0).
    """
    entries = [(float(power), trace) for power, trace in pairs]
    entries.append((float(dark.meta.lo_power_mw), dark))
    distinct = {power for power, _ in entries}
    if len(distinct) < 3:
        raise ConfigError(
            f"linearity fit needs >= 3 distinct LO powers (dark included), got {len(distinct)}")

    points = [PowerPoint(power, variance_decompose(trace, dark)) for power, trace in entries]
    points.sort(key=lambda p: p.power_mw)
    powers = np.array([p.power_mw for p in points])
    sigma_t2 = np.array([p.stats.sigma_t2 for p in points])
    fit = linregress(powers, sigma_t2)
    residuals = sigma_t2 - (fit.slope * powers + fit.intercept)
    return LinearityResult(
        points=points,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue) ** 2,
        residuals=residuals,
    )
