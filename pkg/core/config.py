"""
Configuration management for cvqkd.
Handles the flat ``key = value`` recipe files and CLI overrides.
"""
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from modules.constants import (
    CONFIG_LINE_RE, DEFAULT_ATTENUATION_DB_PER_KM, DEFAULT_ETA_B, DEFAULT_F_REC,
    DEFAULT_GRID_SIZE, DEFAULT_NU_B, DEFAULT_REFINE_ITERATIONS, DEFAULT_REFINE_TOL,
    DEFAULT_V_MAX, DEFAULT_V_MIN, DEFAULT_WORKERS, DEFAULT_XI_CONST, DEFAULT_XI_SLOPE,
    MODEL_NAMES, OUTPUT_FORMATS,
)
from modules.errors import ConfigError
from modules.noise import NoiseModelKind
from modules.optimizer import VaBracket
from modules.parsers import (
    format_float, parse_distances, parse_float, parse_int, parse_list, unknown_choice_message,
)
from core.engine import SweepSpec

logger = logging.getLogger(__name__)

VERBS = ['point', 'sweep', 'mc-validate', 'analyze', 'synth']


def _default_distances() -> List[float]:
    return [float(d) for d in range(1, 151)]


@dataclass
class SweepConfig:
    """Sweep recipe; defaults give the nu_b = 0.01 curve set over 1..150 km."""

    # Distances and models
    distances: List[float] = field(default_factory=_default_distances)
    models: List[str] = field(default_factory=lambda: list(MODEL_NAMES))

    # Protocol and detector
    f: float = DEFAULT_F_REC
    eta: float = DEFAULT_ETA_B
    nu: float = DEFAULT_NU_B
    alpha: float = DEFAULT_ATTENUATION_DB_PER_KM
    xi_const: float = DEFAULT_XI_CONST
    xi_slope: float = DEFAULT_XI_SLOPE

    # Optimizer
    v_min: float = DEFAULT_V_MIN
    v_max: float = DEFAULT_V_MAX
    grid_size: int = DEFAULT_GRID_SIZE
    refine_iterations: int = DEFAULT_REFINE_ITERATIONS
    refine_tol: float = DEFAULT_REFINE_TOL

    # Execution
    workers: int = DEFAULT_WORKERS

    @classmethod
    def keys(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def save(self, path: Path) -> None:
        """Save as a key = value file, one key per line in field order."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as fh:
            for key in self.keys():
                fh.write(f"{key} = {self._format_value(getattr(self, key))}\n")

    @staticmethod
    def _format_value(value: Any) -> str:
        if isinstance(value, list):
            return ', '.join(format_float(v) if isinstance(v, float) else str(v) for v in value)
        if isinstance(value, float):
            return format_float(value)
        return str(value)

    @classmethod
    def load(cls, path: Path) -> 'SweepConfig':
        """Load a key = value file. Unknown or repeated keys are errors."""
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        config = cls()
        seen: Dict[str, int] = {}
        with open(path, 'r', encoding='utf-8') as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split('#', 1)[0]
                if not line.strip():
                    continue
                m = CONFIG_LINE_RE.match(line)
                if not m:
                    raise ConfigError(f"expected 'key = value', got '{raw.strip()}'",
                                      line=lineno, source=str(path))
                key = m.group('key').replace('-', '_')
                if key in seen:
                    raise ConfigError(f"duplicate key '{key}' (first set on line {seen[key]})",
                                      line=lineno, source=str(path))
                seen[key] = lineno
                try:
                    config.set_text(key, m.group('value'))
                except ConfigError as e:
                    raise ConfigError(str(e), line=lineno, source=str(path)) from None
        logger.debug("loaded %d keys from %s", len(seen), path)
        return config

    def set_text(self, key: str, text: str) -> None:
        """Set one field from its textual value."""
        if key not in self.keys():
            raise ConfigError(unknown_choice_message('config key', key, self.keys()))
        if key == 'distances':
            value: Any = parse_distances(text)
        elif key == 'models':
            value = parse_list(text)
        elif key in ('grid_size', 'refine_iterations', 'workers'):
            value = parse_int(text, key)
        else:
            value = parse_float(text, key)
        setattr(self, key, value)

    def update(self, **kwargs) -> None:
        """Apply overrides; None values are ignored so unset flags keep file values."""
        for key, value in kwargs.items():
            if value is None:
                continue
            if key not in self.keys():
                raise ConfigError(unknown_choice_message('config key', key, self.keys()))
            setattr(self, key, value)

    def to_spec(self) -> SweepSpec:
        """Validate and freeze into a SweepSpec."""
        if not self.distances:
            raise ConfigError("distance list is empty")
        if not self.models:
            raise ConfigError("model list is empty")
        kinds = []
        for name in self.models:
            kind = NoiseModelKind.parse(name)
            if kind in kinds:
                raise ConfigError(f"model '{name}' listed twice")
            kinds.append(kind)
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        bracket = VaBracket(
            v_min=self.v_min,
            v_max=self.v_max,
            grid_size=self.grid_size,
            refine_iterations=self.refine_iterations,
            refine_tol=self.refine_tol,
        )
        return SweepSpec(
            distances_km=tuple(float(d) for d in self.distances),
            kinds=tuple(kinds),
            bracket=bracket,
            f_rec=self.f,
            eta_b=self.eta,
            nu_b=self.nu,
            attenuation_db_per_km=self.alpha,
            xi_const=self.xi_const,
            xi_slope=self.xi_slope,
        )


@dataclass
class RunConfig:
    """One CLI invocation: a verb, its parameters and where results go."""
    verb: str
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: Optional[Path] = None
    fmt: str = 'csv'

    def __post_init__(self):
        if self.verb not in VERBS:
            raise ConfigError(unknown_choice_message('verb', self.verb, VERBS))
        if self.fmt not in OUTPUT_FORMATS:
            raise ConfigError(unknown_choice_message('output format', self.fmt, OUTPUT_FORMATS))
