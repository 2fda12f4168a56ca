"""
Monte Carlo check of the Alice-Bob mutual information.

Bob's values are modelled input-referred: y = x + n with Var(n) = 1 + Xi_tot
on each quadrature, which reproduces I_AB = log2((V + Xi_tot) / (1 + Xi_tot))
exactly. Random numbers come from numpy's PCG64 generator; each chunk of
samples is drawn from its own stream keyed by (seed, chunk index).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .constants import MC_CHUNK_SIZE, MC_ESTIMATOR, MC_MIN_SAMPLES, MC_RHO2_CAP
from .errors import DomainError
from .keyrate import SystemParams
from .noise import NoiseModelKind, budget

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureSampleBatch:
    n: int
    alice_x: np.ndarray
    alice_p: np.ndarray
    bob_x: np.ndarray
    bob_p: np.ndarray
    seed: int
    v_a: float
    xi_tot: float


@dataclass(frozen=True)
class MIEstimate:
    bits: float
    rho_x: float
    rho_p: float
    saturated: bool
    estimator: str = MC_ESTIMATOR

    def __float__(self) -> float:
        return self.bits


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng([seed, chunk])


def simulate_channel(v_a: float, xi_tot: float, n: int, seed: int) -> QuadratureSampleBatch:
    """Draw ``n`` symbol pairs through the input-referred Gaussian channel."""
    if n < 1:
        raise DomainError(f"sample count must be >= 1, got {n}")
    if not v_a >= 0:
        raise DomainError(f"modulation variance V_A must be >= 0, got {v_a}")
    if not xi_tot >= 0:
        raise DomainError(f"total noise must be >= 0, got {xi_tot}")

    sigma_a = math.sqrt(v_a)
    sigma_n = math.sqrt(1.0 + xi_tot)
    alice_x = np.empty(n)
    alice_p = np.empty(n)
    noise_x = np.empty(n)
    noise_p = np.empty(n)
    for chunk, start in enumerate(range(0, n, MC_CHUNK_SIZE)):
        stop = min(start + MC_CHUNK_SIZE, n)
        draws = _chunk_rng(seed, chunk).standard_normal((4, stop - start))
        alice_x[start:stop] = sigma_a * draws[0]
        alice_p[start:stop] = sigma_a * draws[1]
        noise_x[start:stop] = sigma_n * draws[2]
        noise_p[start:stop] = sigma_n * draws[3]

    return QuadratureSampleBatch(
        n=n,
        alice_x=alice_x,
        alice_p=alice_p,
        bob_x=alice_x + noise_x,
        bob_p=alice_p + noise_p,
        seed=seed,
        v_a=v_a,
        xi_tot=xi_tot,
    )


def simulate_batch(params: SystemParams, kind: NoiseModelKind, n: int,
                   seed: int) -> QuadratureSampleBatch:
    """Simulate with the physical total noise of ``kind`` at ``params``."""
    noise = budget(kind, params.transmittance, params.xi_a, params.detector)
    return simulate_channel(params.v_a, noise.xi_tot, n, seed)


def _correlation(a: np.ndarray, b: np.ndarray, label: str) -> float:
    a = a - a.mean()
    b = b - b.mean()
    saa = float(np.dot(a, a))
    sbb = float(np.dot(b, b))
    if saa == 0.0 or sbb == 0.0:
        raise DomainError(f"{label}: zero-variance stream, correlation undefined")
    return float(np.dot(a, b)) / math.sqrt(saa * sbb)


def estimate_mi(batch: QuadratureSampleBatch) -> MIEstimate:
    """
    Gaussian MI from per-quadrature sample correlations:
    -1/2 log2(1 - rho_x^2) - 1/2 log2(1 - rho_p^2).
    """
    if batch.n < MC_MIN_SAMPLES:
        raise DomainError(f"need at least {MC_MIN_SAMPLES} samples, got {batch.n}")
    rho_x = _correlation(batch.alice_x, batch.bob_x, 'x quadrature')
    rho_p = _correlation(batch.alice_p, batch.bob_p, 'p quadrature')

    saturated = False
    bits = 0.0
    for rho in (rho_x, rho_p):
        rho2 = rho * rho
        if rho2 > MC_RHO2_CAP:
            rho2 = MC_RHO2_CAP
            saturated = True
        bits -= 0.5 * math.log2(1.0 - rho2)
    if saturated:
        logger.warning("correlation saturated at rho^2 = %r; MI estimate is capped", MC_RHO2_CAP)
    return MIEstimate(bits=bits, rho_x=rho_x, rho_p=rho_p, saturated=saturated)
