"""
Sweep engine for cvqkd.
Optimizes the key rate over V_A for every (distance, model) pair, in
parallel, and returns rows in a deterministic order.
"""
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from modules.constants import DEFAULT_WORKERS, VERSION
from modules.errors import ConfigError, CvqkdError, DomainError
from modules.keyrate import SystemParams
from modules.noise import NoiseModelKind
from modules.optimizer import VaBracket, optimize_va

logger = logging.getLogger(__name__)

# Type for progress callbacks: (current, total, label) -> None
ProgressCallback = Callable[[int, int, str], None]


@dataclass(frozen=True)
class SweepSpec:
    """Everything needed to reproduce one key-rate-vs-distance figure."""
    distances_km: Tuple[float, ...]
    kinds: Tuple[NoiseModelKind, ...]
    bracket: VaBracket
    f_rec: float
    eta_b: float
    nu_b: float
    attenuation_db_per_km: float
    xi_const: float
    xi_slope: float

    def __post_init__(self):
        if not self.distances_km:
            raise ConfigError("distance list is empty")
        if any(b <= a for a, b in zip(self.distances_km, self.distances_km[1:])):
            raise ConfigError("distances must be strictly increasing")
        if not self.kinds:
            raise ConfigError("no noise model selected")
        # Fail early on physics parameters
        self.params_at(self.distances_km[0])

    def params_at(self, length_km: float) -> SystemParams:
        """System parameters at ``length_km``; V_A is a placeholder set by the optimizer."""
        return SystemParams(
            v_a=self.bracket.v_min,
            length_km=length_km,
            f_rec=self.f_rec,
            eta_b=self.eta_b,
            nu_b=self.nu_b,
            attenuation_db_per_km=self.attenuation_db_per_km,
            xi_const=self.xi_const,
            xi_slope=self.xi_slope,
        )

    def metadata(self) -> Dict[str, str]:
        """Values reported in output preambles."""
        return {
            'version': VERSION,
            'optimizer': self.bracket.describe(),
            'bracket': f"[{self.bracket.v_min!r}, {self.bracket.v_max!r}]",
            'grid': str(self.bracket.grid_size),
            'f': repr(self.f_rec),
            'eta': repr(self.eta_b),
            'nu': repr(self.nu_b),
            'alpha_db_per_km': repr(self.attenuation_db_per_km),
            'xi_a': f"{self.xi_const!r} + {self.xi_slope!r} * V_A",
            'units': 'bits per channel use',
        }


@dataclass(frozen=True)
class SweepRow:
    distance_km: float
    model: NoiseModelKind
    optimal_v_a: float
    xi_a_at_opt: float
    i_ab: float
    chi_be: float
    rate_raw: float
    rate: float

    def as_dict(self) -> dict:
        return {
            'distance_km': self.distance_km,
            'model': str(self.model),
            'optimal_va': self.optimal_v_a,
            'xi_a_at_opt': self.xi_a_at_opt,
            'i_ab': self.i_ab,
            'chi_be': self.chi_be,
            'rate_raw': self.rate_raw,
            'rate': self.rate,
        }


class SweepError(DomainError):
    """A sweep point failed; names the offending (distance, model)."""

    def __init__(self, distance_km: float, model: NoiseModelKind, cause: Exception):
        self.distance_km = distance_km
        self.model = model
        self.cause = cause
        super().__init__(f"sweep point L={distance_km!r} km, model={model}: {cause}")


def evaluate_point(spec: SweepSpec, distance_km: float, kind: NoiseModelKind) -> SweepRow:
    """Optimize one (distance, model) point."""
    params = spec.params_at(distance_km)
    best = optimize_va(params, kind, spec.bracket)
    result = best.result
    return SweepRow(
        distance_km=distance_km,
        model=kind,
        optimal_v_a=best.v_a,
        xi_a_at_opt=params.alice_noise.at(best.v_a),
        i_ab=result.i_ab,
        chi_be=result.chi_be,
        rate_raw=result.rate_raw,
        rate=result.rate,
    )


class SweepEngine:
    """Parallel sweep runner with progress reporting and cancellation."""

    def __init__(self, max_workers: int = DEFAULT_WORKERS):
        """
        Initialize sweep engine.

        Args:
            max_workers: Maximum number of parallel workers (1 runs inline)
        """
        if max_workers < 1:
            raise ConfigError(f"workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers
        self._cancelled = False

    def cancel(self):
        """Cancel an ongoing sweep."""
        self._cancelled = True

    def run(self, spec: SweepSpec,
            progress_callback: Optional[ProgressCallback] = None) -> List[SweepRow]:
        """
        Evaluate every (distance, model) pair.

        Args:
            spec: Sweep specification
            progress_callback: Optional callback for progress updates

        Returns:
            Rows ordered by distance, then by model order in the spec
        """
        self._cancelled = False
        jobs = [(d, kind) for d in spec.distances_km for kind in spec.kinds]
        total = len(jobs)
        rows: List[Optional[SweepRow]] = [None] * total
        logger.info("sweeping %d points with %d workers", total, self.max_workers)

        def worker(index: int) -> SweepRow:
            distance, kind = jobs[index]
            try:
                return evaluate_point(spec, distance, kind)
            except CvqkdError as e:
                raise SweepError(distance, kind, e) from e

        if self.max_workers == 1:
            for index in range(total):
                if self._cancelled:
                    break
                rows[index] = worker(index)
                if progress_callback:
                    progress_callback(index + 1, total, self._label(jobs[index]))
        else:
            done = 0
            with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                future_to_index = {executor.submit(worker, i): i for i in range(total)}
                for future in as_completed(future_to_index):
                    if self._cancelled:
                        for f in future_to_index:
                            f.cancel()
                        break
                    index = future_to_index[future]
                    try:
                        rows[index] = future.result()
                    except SweepError:
                        for f in future_to_index:
                            f.cancel()
                        raise
                    done += 1
                    if progress_callback:
                        progress_callback(done, total, self._label(jobs[index]))

        if self._cancelled:
            logger.warning("sweep cancelled")
            return [row for row in rows if row is not None]
        return rows

    @staticmethod
    def _label(job: Tuple[float, NoiseModelKind]) -> str:
        return f"L={job[0]:g} km {job[1]}"


def run_sweep(spec: SweepSpec, max_workers: int = DEFAULT_WORKERS) -> List[SweepRow]:
    """One row per (distance, model), ordered by distance then model."""
    return SweepEngine(max_workers=max_workers).run(spec)


def cutoff_distance(rows: Sequence[SweepRow], model: NoiseModelKind) -> Optional[float]:
    """Largest listed distance with a positive rate for ``model``, or None."""
    positive = [row.distance_km for row in rows if row.model is model and row.rate > 0]
    return max(positive) if positive else None
