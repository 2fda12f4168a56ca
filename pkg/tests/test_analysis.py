import math

import numpy as np
import pytest

from modules.analysis import RunningMoments, autocorrelation, histogram, qcnr_db, \
    variance_decompose, variance_vs_power
from modules.errors import ConfigError, DomainError
from modules.traces import SampleTrace, synthesize_trace

QCNR_5_5 = 10 ** 0.55


def _exact_variance(samples, target):
    centered = samples - samples.mean()
    return centered * math.sqrt(target / centered.var(ddof=1))


class TestRunningMoments:
    def test_chunked_matches_numpy(self, rng):
        x = rng.normal(3.0, 2.0, 12_345)
        moments = RunningMoments.of(x, chunk_size=1000)
        assert moments.count == x.size
        assert moments.mean == pytest.approx(x.mean(), rel=1e-12)
        assert moments.variance() == pytest.approx(x.var(ddof=1), rel=1e-12)
        assert moments.variance(ddof=0) == pytest.approx(x.var(), rel=1e-12)

    def test_large_offset_is_stable(self, rng):
        x = 1e9 + rng.standard_normal(100_000)
        assert RunningMoments.of(x, chunk_size=4096).variance() == pytest.approx(
            x.var(ddof=1), rel=1e-6)

    def test_needs_samples(self):
        with pytest.raises(DomainError):
            RunningMoments().update(np.array([1.0])).variance()


class TestVarianceDecompose:
    def test_qcnr_formula(self):
        assert qcnr_db(4.0, 1.0) == pytest.approx(6.0206, abs=1e-4)
        assert qcnr_db(0.0, 1.0) == -math.inf
        with pytest.raises(DomainError):
            qcnr_db(1.0, 0.0)

    def test_substitution_example(self):
        signal = SampleTrace(np.array([-1.0, 1.0]) * math.sqrt(2.5))
        dark = SampleTrace(np.array([-1.0, 1.0]) * math.sqrt(0.5))
        stats = variance_decompose(signal, dark)
        assert stats.sigma_t2 == pytest.approx(5.0)
        assert stats.sigma_q2 == pytest.approx(4.0)
        assert stats.qcnr_db == pytest.approx(10 * math.log10(4.0))

    def test_lo_off_gives_minus_infinity(self, electrical_trace):
        stats = variance_decompose(electrical_trace, electrical_trace)
        assert stats.sigma_q2 == 0.0
        assert stats.qcnr_db == -math.inf
        assert not stats.calibration_drift

    def test_drift_is_flagged(self, caplog):
        signal = SampleTrace(np.array([-1.0, 1.0, -1.0, 1.0]))
        dark = SampleTrace(np.array([-2.0, 2.0, -2.0, 2.0]))
        stats = variance_decompose(signal, dark)
        assert stats.calibration_drift
        assert stats.qcnr_db == -math.inf
        assert 'calibration drift' in caplog.text

    def test_silent_dark_trace(self):
        with pytest.raises(DomainError):
            variance_decompose(SampleTrace([0.0, 1.0]), SampleTrace([2.0, 2.0]))

    def test_recovers_synthesized_qcnr(self, mixed_trace, electrical_trace):
        stats = variance_decompose(mixed_trace, electrical_trace)
        assert stats.qcnr_db == pytest.approx(5.5, abs=0.1)
        assert stats.sigma_e2 + stats.sigma_q2 == pytest.approx(stats.sigma_t2, rel=1e-12)
        sigma_t2 = 1.0 + QCNR_5_5
        assert abs(stats.sigma_t2 - sigma_t2) < 5 * 1.1 * math.sqrt(2 / mixed_trace.n) * sigma_t2


class TestAutocorrelation:
    def test_mixed_trace_lag_one(self, mixed_trace):
        acf = autocorrelation(mixed_trace, 100)
        assert acf.r[0] == 1.0
        assert acf.r[1] == pytest.approx(0.3 / (1 + QCNR_5_5), abs=0.005)
        assert acf.white_noise_band == pytest.approx(1 / math.sqrt(5_000_000))
        assert np.all(np.abs(acf.r) <= 1.0)

    def test_electrical_noise_is_more_correlated(self, mixed_trace, electrical_trace):
        r_mixed = autocorrelation(mixed_trace, 1).r[1]
        r_dark = autocorrelation(electrical_trace, 1).r[1]
        assert r_dark == pytest.approx(0.3, abs=0.005)
        assert r_dark >= 3 * r_mixed

    def test_lag_one_falls_with_qcnr(self):
        values = [autocorrelation(synthesize_trace(n=200_000, sigma_e2=1.0, phi=0.5,
                                                   qcnr_db=q, seed=4), 1).r[1]
                  for q in (-math.inf, 0.0, 5.5, 10.0)]
        assert values == sorted(values, reverse=True)
        assert len(set(values)) == len(values)

    def test_white_trace_stays_in_band(self, white_trace):
        acf = autocorrelation(white_trace, 100)
        assert np.max(np.abs(acf.r[1:])) < 0.0022

    def test_alternating_sequence(self):
        trace = SampleTrace(np.tile([1.0, -1.0], 500))
        acf = autocorrelation(trace, 2)
        assert acf.r[1] == pytest.approx(-1.0, abs=2 / trace.n)
        assert acf.r[2] == pytest.approx(1.0, abs=2 / trace.n)

    def test_threads_do_not_change_result(self):
        trace = synthesize_trace(n=50_000, sigma_e2=1.0, phi=0.6, qcnr_db=1.0, seed=8)
        np.testing.assert_array_equal(autocorrelation(trace, 40).r,
                                      autocorrelation(trace, 40, max_workers=4).r)

    def test_domain(self):
        trace = SampleTrace(np.arange(100.0))
        with pytest.raises(DomainError):
            autocorrelation(trace, 10)
        with pytest.raises(DomainError):
            autocorrelation(trace, -1)
        with pytest.raises(DomainError):
            autocorrelation(SampleTrace(np.ones(100)), 2)


class TestHistogram:
    def test_standard_normal_fit(self, white_trace):
        hist = histogram(white_trace, 200)
        assert hist.probability.sum() == pytest.approx(1.0, abs=1e-12)
        assert len(hist.bin_centers) == 200
        assert abs(hist.fit_mean) < 0.002
        assert hist.fit_variance == pytest.approx(1.0, rel=0.005)

    def test_mostly_constant_trace_has_one_dominant_bin(self, rng):
        x = np.full(10_000, 5.0)
        x[:10] += 1e-6 * rng.standard_normal(10)
        hist = histogram(SampleTrace(x), 50)
        assert hist.probability.max() >= 0.99
        assert hist.fit_variance == pytest.approx(x.var(), rel=1e-9)

    def test_higher_qcnr_is_wider(self, mixed_trace, electrical_trace):
        assert histogram(mixed_trace, 200).fit_variance \
            > histogram(electrical_trace, 200).fit_variance

    def test_needs_two_bins(self):
        with pytest.raises(DomainError):
            histogram(SampleTrace([0.0, 1.0]), 1)


class TestLinearity:
    @staticmethod
    def _family(rng, powers, sigma_e2=0.8, per_mw=1.7, n=20_000):
        """Traces whose sample sigma_Q^2 is exactly per_mw * P."""
        dark = _exact_variance(rng.standard_normal(n), sigma_e2)
        pairs = []
        for power in powers:
            q = rng.standard_normal(n)
            q -= q.mean()
            q -= dark * (np.dot(q, dark) / np.dot(dark, dark))
            q = _exact_variance(q, per_mw * power)
            pairs.append((power, SampleTrace(dark + q).with_meta(lo_power_mw=power)))
        return pairs, SampleTrace(dark)

    def test_exactly_linear_family(self, rng):
        pairs, dark = self._family(rng, [1.0, 2.0, 4.2, 6.0])
        fit = variance_vs_power(pairs, dark)
        assert fit.r_squared > 0.9999
        assert fit.slope == pytest.approx(1.7, rel=1e-6)
        assert fit.intercept == pytest.approx(0.8, rel=0.01)
        assert [p.power_mw for p in fit.points] == [0.0, 1.0, 2.0, 4.2, 6.0]
        assert np.max(np.abs(fit.residuals)) < 1e-9

    def test_zero_power_entry_is_the_dark_trace(self, rng):
        pairs, dark = self._family(rng, [1.0, 3.0])
        zero = variance_vs_power(pairs, dark).points[0]
        assert zero.power_mw == 0.0
        assert zero.stats.sigma_t2 == zero.stats.sigma_e2
        assert zero.stats.qcnr_db == -math.inf

    def test_needs_three_distinct_powers(self, rng):
        pairs, dark = self._family(rng, [2.0, 2.0, 2.0])
        with pytest.raises(ConfigError, match='3 distinct'):
            variance_vs_power(pairs, dark)
