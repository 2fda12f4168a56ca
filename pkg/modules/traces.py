"""
Homodyne sample traces: container, ``#cvqkd-trace v1`` file format and a
synthetic generator standing in for the oscilloscope.

File layout::

    #cvqkd-trace v1
    key=value            (metadata, one per line)
    ...
                         (blank line)
    <body>

The body is either one decimal sample per line (``format=text``, default)
or raw little-endian float64 values (``format=f64le``).
"""
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from scipy.signal import lfilter

from .constants import (
    DEFAULT_BANDWIDTH_HZ, DEFAULT_FULL_SCALE_SIGMAS, DEFAULT_GAIN_V_PER_A,
    DEFAULT_SAMPLING_RATE_HZ, SAMPLE_BYTES, SAMPLE_RE, SYNTHETIC_SOURCE, TRACE_FORMATS,
    TRACE_MAGIC, TRACE_META_RE,
)
from .errors import DomainError, TraceFormatError
from .parsers import format_float, unknown_choice_message

logger = logging.getLogger(__name__)

_NUMERIC_META = ('sampling_rate_hz', 'lo_power_mw', 'gain_v_per_a', 'bandwidth_hz')
_RESERVED_META = ('format', 'n') + _NUMERIC_META + ('label',)
_SAMPLE_BYTE_OK = np.zeros(256, dtype=bool)
_SAMPLE_BYTE_OK[np.frombuffer(SAMPLE_BYTES, dtype=np.uint8)] = True


@dataclass(frozen=True)
class TraceMeta:
    """Acquisition metadata. ``extra`` carries free-form keys such as generator settings."""
    sampling_rate_hz: float = DEFAULT_SAMPLING_RATE_HZ
    lo_power_mw: float = 0.0
    gain_v_per_a: float = DEFAULT_GAIN_V_PER_A
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ
    label: str = ''
    extra: Dict[str, str] = field(default_factory=dict)

    def items(self):
        yield 'sampling_rate_hz', format_float(self.sampling_rate_hz)
        yield 'lo_power_mw', format_float(self.lo_power_mw)
        yield 'gain_v_per_a', format_float(self.gain_v_per_a)
        yield 'bandwidth_hz', format_float(self.bandwidth_hz)
        yield 'label', self.label
        for key in sorted(self.extra):
            yield key, self.extra[key]


@dataclass(frozen=True)
class SampleTrace:
    samples: np.ndarray
    meta: TraceMeta = field(default_factory=TraceMeta)

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DomainError(f"trace must be one-dimensional, got shape {samples.shape}")
        if samples.size < 2:
            raise DomainError(f"trace needs at least 2 samples, got {samples.size}")
        if not np.all(np.isfinite(samples)):
            bad = int(np.argmin(np.isfinite(samples)))
            raise DomainError(f"trace sample {bad} is not finite: {samples[bad]!r}")
        object.__setattr__(self, 'samples', samples)

    @property
    def n(self) -> int:
        return int(self.samples.size)

    def with_meta(self, **changes) -> 'SampleTrace':
        return replace(self, meta=replace(self.meta, **changes))


def _check_meta(meta: TraceMeta) -> None:
    """Every header entry must survive a write/read cycle as one key=value line."""
    for key in meta.extra:
        if key in _RESERVED_META or not TRACE_META_RE.match(f"{key}="):
            raise DomainError(f"invalid trace metadata key {key!r}")
    for key, value in meta.items():
        if '\n' in value or '\r' in value:
            raise DomainError(f"trace metadata {key} must not contain line breaks")


def write_trace(trace: SampleTrace, path: Path, fmt: str = 'text') -> None:
    """Write ``trace`` to ``path`` in the text or f64le body format."""
    if fmt not in TRACE_FORMATS:
        raise DomainError(unknown_choice_message('trace format', fmt, TRACE_FORMATS))
    _check_meta(trace.meta)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = [TRACE_MAGIC, f"format={fmt}", f"n={trace.n}"]
    header += [f"{key}={value}" for key, value in trace.meta.items()]
    with open(path, 'wb') as fh:
        fh.write(('\n'.join(header) + '\n\n').encode('utf-8'))
        if fmt == 'f64le':
            fh.write(trace.samples.astype('<f8').tobytes())
        else:
            fh.write(('\n'.join(format_float(x) for x in trace.samples.tolist()) + '\n')
                     .encode('ascii'))
    logger.debug("wrote %d samples to %s (%s)", trace.n, path, fmt)


def _locate_bad_sample(body: bytes, body_offset: int, source: str) -> None:
    offset = body_offset
    for line in body.splitlines(keepends=True):
        text = line.strip().decode('latin-1')
        if text:
            try:
                value = float(text)
            except ValueError:
                value = 0.0
            if not math.isfinite(value):
                raise TraceFormatError(f"non-finite sample {text!r}", offset, source)
            if not SAMPLE_RE.match(text):
                raise TraceFormatError(f"not a number: {text[:40]!r}", offset, source)
        offset += len(line)
    raise TraceFormatError("malformed text body", body_offset, source)


def read_trace(path: Path) -> SampleTrace:
    """Read a ``#cvqkd-trace v1`` file."""
    path = Path(path)
    source = str(path)
    data = path.read_bytes()

    offset = 0
    meta: Dict[str, str] = {}
    first = True
    while True:
        end = data.find(b'\n', offset)
        if end < 0:
            raise TraceFormatError("header not terminated by a blank line", offset, source)
        line = data[offset:end].rstrip(b'\r')
        try:
            text = line.decode('utf-8')
        except UnicodeDecodeError:
            raise TraceFormatError("header is not valid UTF-8", offset, source) from None
        if first:
            if text != TRACE_MAGIC:
                raise TraceFormatError(f"expected '{TRACE_MAGIC}'", offset, source)
            first = False
        elif not text:
            offset = end + 1
            break
        else:
            m = TRACE_META_RE.match(text)
            if not m:
                raise TraceFormatError(f"expected key=value, got {text[:40]!r}", offset, source)
            meta[m.group('key')] = m.group('value')
        offset = end + 1

    fmt = meta.pop('format', 'text')
    if fmt not in TRACE_FORMATS:
        raise TraceFormatError(unknown_choice_message('trace format', fmt, TRACE_FORMATS),
                               0, source)
    declared = meta.pop('n', None)
    body = data[offset:]

    if fmt == 'f64le':
        if len(body) % 8:
            raise TraceFormatError(
                f"f64le body length {len(body)} is not a multiple of 8",
                offset + len(body) - len(body) % 8, source)
        samples = np.frombuffer(body, dtype='<f8').astype(np.float64)
        if not np.all(np.isfinite(samples)):
            bad = int(np.argmin(np.isfinite(samples)))
            raise TraceFormatError(f"non-finite sample {samples[bad]!r}", offset + 8 * bad, source)
    else:
        # Plain decimals only; numpy alone would also take "inf", "nan" and "1_0"
        if not _SAMPLE_BYTE_OK[np.frombuffer(body, dtype=np.uint8)].all():
            _locate_bad_sample(body, offset, source)
        try:
            samples = np.array(body.decode('ascii').split(), dtype=np.float64)
        except ValueError:
            _locate_bad_sample(body, offset, source)
        if not np.all(np.isfinite(samples)):
            _locate_bad_sample(body, offset, source)

    if declared is not None and declared.strip() != str(samples.size):
        raise TraceFormatError(
            f"header declares n={declared} but body holds {samples.size} samples",
            offset, source)
    if samples.size < 2:
        raise TraceFormatError(f"trace needs at least 2 samples, got {samples.size}",
                               offset, source)

    kwargs = {}
    for key in _NUMERIC_META:
        if key in meta:
            try:
                kwargs[key] = float(meta.pop(key))
            except ValueError:
                raise TraceFormatError(f"metadata {key} is not a number", 0, source) from None
    kwargs['label'] = meta.pop('label', '')
    return SampleTrace(samples, TraceMeta(extra=meta, **kwargs))


def quantize(samples: np.ndarray, bits: int, full_scale: float) -> np.ndarray:
    """Uniform mid-rise quantizer with 2**bits levels over [-full_scale, full_scale]."""
    if bits < 1:
        raise DomainError(f"quantizer needs >= 1 bit, got {bits}")
    if not full_scale > 0:
        raise DomainError(f"full scale must be > 0, got {full_scale}")
    levels = 2 ** bits
    step = 2.0 * full_scale / levels
    index = np.clip(np.floor((samples + full_scale) / step), 0, levels - 1)
    return -full_scale + (index + 0.5) * step


def synthesize_trace(n: int, sigma_e2: float, phi: float, qcnr_db: float,
                     quantize_bits: Optional[int] = None, full_scale: Optional[float] = None,
                     seed: int = 0, lo_power_mw: float = 0.0, label: str = '') -> SampleTrace:
    """
    Synthetic homodyne output: AR(1) electrical noise plus white vacuum noise.

    e_t = phi * e_{t-1} + w_t with Var(e) = sigma_e2, started in its stationary
    distribution; q_t white with Var(q) = sigma_e2 * 10**(qcnr_db / 10), omitted
    when qcnr_db is -inf. Optional quantization defaults to +/-5 sigma_T.
    """
    if n < 2:
        raise DomainError(f"trace needs at least 2 samples, got {n}")
    if not sigma_e2 > 0:
        raise DomainError(f"sigma_e2 must be > 0, got {sigma_e2}")
    if not 0.0 <= phi < 1.0:
        raise DomainError(f"AR(1) coefficient phi must be in [0, 1), got {phi}")
    if math.isnan(qcnr_db) or qcnr_db == math.inf:
        raise DomainError(f"QCNR must be finite or -inf, got {qcnr_db}")

    e_rng, q_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    sigma_e = math.sqrt(sigma_e2)
    w = e_rng.standard_normal(n) * sigma_e * math.sqrt(1.0 - phi * phi)
    e_prev = e_rng.standard_normal() * sigma_e
    samples, _ = lfilter([1.0], [1.0, -phi], w, zi=[phi * e_prev])

    sigma_q2 = 0.0
    if qcnr_db != -math.inf:
        sigma_q2 = sigma_e2 * 10.0 ** (qcnr_db / 10.0)
        samples = samples + q_rng.standard_normal(n) * math.sqrt(sigma_q2)

    extra = {
        'source': SYNTHETIC_SOURCE,
        'noise_model': 'AR(1) electrical noise (stand-in)',
        'phi': format_float(phi),
        'qcnr_db': format_float(qcnr_db),
        'sigma_e2': format_float(sigma_e2),
        'seed': str(seed),
    }
    if quantize_bits is not None:
        if full_scale is None:
            full_scale = DEFAULT_FULL_SCALE_SIGMAS * math.sqrt(sigma_e2 + sigma_q2)
        samples = quantize(samples, quantize_bits, full_scale)
        extra['quantize_bits'] = str(quantize_bits)
        extra['full_scale'] = format_float(full_scale)

    meta = TraceMeta(lo_power_mw=lo_power_mw, label=label, extra=extra)
    return SampleTrace(np.asarray(samples, dtype=np.float64), meta)
