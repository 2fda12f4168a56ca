import math

import numpy as np
import pytest

from modules.errors import DomainError, TraceFormatError
from modules.traces import SampleTrace, TraceMeta, quantize, read_trace, synthesize_trace, \
    write_trace


class TestSampleTrace:
    def test_rejects_short_or_non_finite(self):
        with pytest.raises(DomainError):
            SampleTrace(np.array([1.0]))
        with pytest.raises(DomainError, match='sample 2'):
            SampleTrace(np.array([1.0, 2.0, np.inf]))
        with pytest.raises(DomainError):
            SampleTrace(np.zeros((3, 3)))

    def test_with_meta(self):
        trace = SampleTrace([0.0, 1.0]).with_meta(lo_power_mw=4.2, label='lo')
        assert trace.meta.lo_power_mw == 4.2
        assert trace.n == 2


class TestTraceFiles:
    @pytest.mark.parametrize('fmt', ['text', 'f64le'])
    def test_write_then_read(self, tmp_path, fmt):
        trace = synthesize_trace(n=2000, sigma_e2=2.0, phi=0.4, qcnr_db=3.0, seed=5,
                                 lo_power_mw=1.5, label='run 7')
        path = tmp_path / f'trace.{fmt}'
        write_trace(trace, path, fmt=fmt)
        back = read_trace(path)
        np.testing.assert_array_equal(back.samples, trace.samples)
        assert back.meta.lo_power_mw == 1.5
        assert back.meta.label == 'run 7'
        assert back.meta.sampling_rate_hz == 125e6
        assert back.meta.extra['source'] == 'synthetic-ar1'
        assert back.meta.extra['phi'] == '0.4'

    def test_file_layout(self, tmp_path):
        path = tmp_path / 'small.trace'
        write_trace(SampleTrace([0.5, -0.25], TraceMeta(label='x')), path)
        lines = path.read_text().splitlines()
        assert lines[0] == '#cvqkd-trace v1'
        assert 'format=text' in lines and 'n=2' in lines
        assert lines[-3:] == ['', '0.5', '-0.25']

    def test_bad_magic(self, tmp_path):
        path = tmp_path / 'bad.trace'
        path.write_bytes(b'#other v1\n\n1\n2\n')
        with pytest.raises(TraceFormatError) as info:
            read_trace(path)
        assert info.value.offset == 0

    def test_bad_sample_reports_byte_offset(self, tmp_path):
        path = tmp_path / 'bad.trace'
        header = b'#cvqkd-trace v1\nformat=text\n\n'
        path.write_bytes(header + b'1.0\n2.0\nabc\n')
        with pytest.raises(TraceFormatError) as info:
            read_trace(path)
        assert info.value.offset == len(header) + 8

    def test_non_finite_text_sample(self, tmp_path):
        path = tmp_path / 'inf.trace'
        header = b'#cvqkd-trace v1\n\n'
        path.write_bytes(header + b'1.0\ninf\n')
        with pytest.raises(TraceFormatError) as info:
            read_trace(path)
        assert info.value.offset == len(header) + 4

    @pytest.mark.parametrize('sample', [b'1_0', b'nan', b'0x1p3', b'1e'])
    def test_only_plain_decimals_are_samples(self, tmp_path, sample):
        path = tmp_path / 'loose.trace'
        header = b'#cvqkd-trace v1\n\n'
        path.write_bytes(header + b'1.0\n' + sample + b'\n2.0\n')
        with pytest.raises(TraceFormatError) as info:
            read_trace(path)
        assert info.value.offset == len(header) + 4

    def test_overflowing_sample_is_non_finite(self, tmp_path):
        path = tmp_path / 'big.trace'
        header = b'#cvqkd-trace v1\n\n'
        path.write_bytes(header + b'1.0\n-2.5\n1e400\n')
        with pytest.raises(TraceFormatError, match='non-finite') as info:
            read_trace(path)
        assert info.value.offset == len(header) + 9

    @pytest.mark.parametrize('meta', [
        TraceMeta(label='two\nlines'),
        TraceMeta(label='cr\r'),
        TraceMeta(extra={'note': 'a\nb'}),
        TraceMeta(extra={'n': '3'}),
        TraceMeta(extra={'bad key': 'x'}),
    ])
    def test_header_must_stay_one_line_per_key(self, tmp_path, meta):
        path = tmp_path / 'meta.trace'
        with pytest.raises(DomainError):
            write_trace(SampleTrace([0.5, -0.25], meta), path)
        assert not path.exists()

    def test_extra_metadata_is_read_back(self, tmp_path):
        path = tmp_path / 'extra.trace'
        meta = TraceMeta(label='bench 2', extra={'operator': 'a=b'})
        write_trace(SampleTrace([0.5, -0.25], meta), path)
        back = read_trace(path).meta
        assert back.label == 'bench 2'
        assert back.extra == {'operator': 'a=b'}

    def test_truncated_binary_body(self, tmp_path):
        path = tmp_path / 'cut.trace'
        header = b'#cvqkd-trace v1\nformat=f64le\n\n'
        path.write_bytes(header + np.arange(3, dtype='<f8').tobytes()[:-3])
        with pytest.raises(TraceFormatError) as info:
            read_trace(path)
        assert info.value.offset == len(header) + 16

    def test_declared_length_mismatch(self, tmp_path):
        path = tmp_path / 'n.trace'
        path.write_bytes(b'#cvqkd-trace v1\nn=5\n\n1\n2\n3\n')
        with pytest.raises(TraceFormatError, match='n=5'):
            read_trace(path)

    def test_unterminated_header(self, tmp_path):
        path = tmp_path / 'open.trace'
        path.write_bytes(b'#cvqkd-trace v1\nlabel=x')
        with pytest.raises(TraceFormatError):
            read_trace(path)

    def test_unknown_format_suggests(self, tmp_path):
        path = tmp_path / 'fmt.trace'
        path.write_bytes(b'#cvqkd-trace v1\nformat=f64be\n\n')
        with pytest.raises(TraceFormatError, match="did you mean 'f64le'"):
            read_trace(path)


class TestQuantize:
    def test_levels_and_clipping(self):
        out = quantize(np.array([-10.0, -1.0, 0.0, 0.999, 10.0]), bits=2, full_scale=2.0)
        np.testing.assert_allclose(out, [-1.5, -0.5, 0.5, 0.5, 1.5])

    def test_domain(self):
        with pytest.raises(DomainError):
            quantize(np.zeros(3), bits=0, full_scale=1.0)
        with pytest.raises(DomainError):
            quantize(np.zeros(3), bits=8, full_scale=0.0)


class TestSynthesize:
    def test_deterministic_per_seed(self):
        a = synthesize_trace(n=1000, sigma_e2=1.0, phi=0.5, qcnr_db=2.0, seed=9)
        b = synthesize_trace(n=1000, sigma_e2=1.0, phi=0.5, qcnr_db=2.0, seed=9)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_stationary_variance(self):
        trace = synthesize_trace(n=1_000_000, sigma_e2=2.5, phi=0.8, qcnr_db=-math.inf, seed=1)
        # Var of the sample variance: 2 sigma^4 (1 + phi^2) / ((1 - phi^2) n)
        spread = 2.5 * math.sqrt(2.0 * 1.64 / 0.36 / trace.n)
        assert trace.samples.var() == pytest.approx(2.5, abs=5 * spread)

    def test_twelve_bit_quantization_is_negligible(self):
        raw = synthesize_trace(n=1_000_000, sigma_e2=1.0, phi=0.3, qcnr_db=5.5, seed=2)
        digitized = synthesize_trace(n=1_000_000, sigma_e2=1.0, phi=0.3, qcnr_db=5.5, seed=2,
                                     quantize_bits=12)
        assert digitized.samples.var() == pytest.approx(raw.samples.var(), rel=1e-3)
        assert digitized.meta.extra['quantize_bits'] == '12'
        assert len(np.unique(digitized.samples)) <= 4096

    @pytest.mark.parametrize('kwargs', [dict(phi=1.0), dict(phi=-0.1), dict(sigma_e2=0.0),
                                        dict(n=1), dict(qcnr_db=math.nan)])
    def test_domain(self, kwargs):
        args = {**dict(n=100, sigma_e2=1.0, phi=0.3, qcnr_db=0.0), **kwargs}
        with pytest.raises(DomainError):
            synthesize_trace(**args)
