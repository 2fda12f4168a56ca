"""
Text parsing helpers: config values, distance lists, signed infinities and
"did you mean" suggestions.
"""
import math
import re
from typing import Iterable, List, Optional

from thefuzz import fuzz, process

from .constants import RANGE_RE
from .errors import ConfigError


def _normalize(text: str) -> str:
    return re.sub(r'[^a-z0-9]', '', text.lower())


def suggest(word: str, choices: Iterable[str], threshold: int = 60) -> Optional[str]:
    """Return the closest choice to ``word`` or None if nothing is similar enough."""
    choices = list(choices)
    if not choices or not _normalize(word):
        return None
    best = process.extractOne(word, choices, processor=_normalize,
                              scorer=fuzz.token_sort_ratio)
    if best is None or best[1] < threshold:
        return None
    return best[0]


def unknown_choice_message(kind: str, word: str, choices: Iterable[str]) -> str:
    choices = list(choices)
    message = f"unknown {kind} '{word}'"
    hint = suggest(word, choices)
    if hint is not None:
        message += f" (did you mean '{hint}'?)"
    return message + f"; expected one of: {', '.join(choices)}"


def parse_float(text: str, name: str = 'value', line: Optional[int] = None) -> float:
    """
    Parse a float, accepting 'inf', '-inf' and '+inf' (case-insensitive).
    NaN is rejected.
    """
    cleaned = text.strip().lower()
    try:
        value = float(cleaned)
    except ValueError:
        raise ConfigError(f"{name}: '{text}' is not a number", line=line) from None
    if math.isnan(value):
        raise ConfigError(f"{name}: NaN is not allowed", line=line)
    return value


def parse_int(text: str, name: str = 'value', line: Optional[int] = None) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"{name}: '{text}' is not an integer", line=line) from None


def parse_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(',') if item.strip()]


def parse_distances(text: str, line: Optional[int] = None) -> List[float]:
    """
    Parse a distance list in km.

    Accepts comma-separated values and inclusive ``start:stop[:step]`` ranges,
    e.g. ``0, 5, 10:150:10``.
    """
    distances: List[float] = []
    for item in parse_list(text):
        m = RANGE_RE.match(item)
        if not m:
            distances.append(parse_float(item, 'distances', line))
            continue
        start = parse_float(m.group('start'), 'distances', line)
        stop = parse_float(m.group('stop'), 'distances', line)
        step = parse_float(m.group('step'), 'distances', line) if m.group('step') else 1.0
        if step <= 0 or stop < start:
            raise ConfigError(f"distances: bad range '{item}'", line=line)
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        distances.extend(start + i * step for i in range(count))
    return distances


def format_float(value: float) -> str:
    """Shortest round-trip text for a float; infinities as 'inf' / '-inf'."""
    return repr(float(value))


def preprocess_negative_infinity(argv: List[str]) -> List[str]:
    """
    Join ``--flag -inf`` into ``--flag=-inf`` so argparse does not read
    '-inf' as an option.
    """
    out: List[str] = []
    for arg in argv:
        if out and out[-1].startswith('--') and '=' not in out[-1] \
                and arg.lower() in ('-inf', '-infinity'):
            out[-1] = f"{out[-1]}={arg}"
        else:
            out.append(arg)
    return out
