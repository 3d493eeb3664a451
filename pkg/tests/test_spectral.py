import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbfsurrogate.spectral import (
    BinGrid,
    FrequencyRange,
    bin_power,
    detrend_demean,
    periodogram,
    select_bins,
    spectral_features,
)
from oracles import detrend_normal_equations


def unit_cosine(n=500, tr=0.72, k=18):
    t = np.arange(n)
    return np.cos(2 * math.pi * k * t / n)


class TestBinGrid:
    def test_edges(self):
        grid = BinGrid()
        assert grid.edges[0] == pytest.approx(0.01)
        assert grid.edges[8] == pytest.approx(0.2244)
        assert np.allclose(np.diff(grid.edges), 0.0268)

    def test_centers(self):
        centers = BinGrid().centers()
        assert centers[0] == pytest.approx(0.0234)
        assert centers[-1] == pytest.approx(0.2110)


class TestDetrend:
    def test_constant(self):
        assert detrend_demean([5.0, 5.0, 5.0, 5.0]) == pytest.approx(np.zeros(4), abs=1e-12)

    def test_ramp(self):
        assert detrend_demean([1.0, 2.0, 3.0, 4.0]) == pytest.approx(np.zeros(4), abs=1e-12)

    def test_ramp_plus_cosine_matches_oracle(self):
        t = np.arange(128)
        series = 0.3 * t + 2.0 + np.cos(2 * math.pi * 10 * t / 128)
        ours = detrend_demean(series)
        assert ours == pytest.approx(detrend_normal_equations(series), abs=1e-9)
        # residual linear trend of the output is negligible
        refit = np.polyfit(t, ours, 1)
        assert abs(refit[0]) < 1e-10
        assert abs(refit[1]) < 1e-10

    def test_too_short(self):
        with pytest.raises(ValueError):
            detrend_demean([1.0, 2.0])


class TestPeriodogram:
    def test_zero_signal(self):
        freqs, power = periodogram(np.zeros(128), 0.72)
        assert np.all(power == 0)
        assert freqs[0] == pytest.approx(1 / (128 * 0.72))

    def test_unit_cosine_power(self):
        freqs, power = periodogram(unit_cosine(), 0.72)
        k = 17  # freqs[0] is k=1
        assert freqs[k] == pytest.approx(0.05)
        assert power[k] == pytest.approx(0.5, abs=1e-12)
        rest = np.delete(power, k)
        assert np.all(rest < 1e-20)

    def test_parseval_even_and_odd(self):
        rng = np.random.default_rng(3)
        for n in (128, 129, 250, 251):
            x = detrend_demean(rng.normal(size=n))
            _, power = periodogram(x, 0.72)
            assert power.sum() == pytest.approx(x.var(), rel=1e-9)

    def test_nyquist_guard(self):
        with pytest.raises(ValueError, match="tr too long"):
            periodogram(np.zeros(128), 3.0)

    def test_min_length(self):
        with pytest.raises(ValueError):
            periodogram(np.zeros(32), 0.72)


class TestBinPower:
    def test_cosine_lands_in_bin1(self):
        freqs, power = periodogram(unit_cosine(), 0.72)
        feats = bin_power(freqs, power)
        assert feats.n_freqs_per_bin[1] == 9  # k = 14..22 at df = 1/360 Hz
        assert feats.bin_power[1] == pytest.approx(0.5 / 9, abs=1e-10)
        for k in (0, 2, 3, 4, 5, 6, 7):
            assert feats.bin_power[k] < 1e-12

    def test_zero_signal(self):
        freqs, power = periodogram(np.zeros(128), 0.72)
        feats = bin_power(freqs, power)
        assert all(v == 0 for v in feats.bin_power)

    def test_n64_all_bins_occupied(self):
        freqs, power = periodogram(np.zeros(64), 0.72)
        feats = bin_power(freqs, power)
        assert all(c >= 1 for c in feats.n_freqs_per_bin)

    def test_empty_bin_error_names_bin(self):
        freqs = np.array([0.02, 0.05, 0.20])  # nothing in bin 2
        with pytest.raises(ValueError, match="bin 2"):
            bin_power(freqs, np.ones(3))


class TestSelectBins:
    def test_standard_ranges(self):
        assert select_bins(FrequencyRange(0.20)) == (0, 1, 2, 3, 4, 5, 6, 7)
        assert select_bins(FrequencyRange(0.10)) == (0, 1, 2, 3)
        assert select_bins(FrequencyRange(0.15)) == (0, 1, 2, 3, 4, 5)

    def test_nonstandard_warns(self):
        with pytest.warns(UserWarning, match="non-standard"):
            FrequencyRange(0.12)

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            FrequencyRange(0.3)
        with pytest.raises(ValueError):
            FrequencyRange(0.005)

    @given(st.floats(0.02, 0.2244), st.floats(0.02, 0.2244))
    @settings(max_examples=60, deadline=None)
    def test_monotone(self, fa, fb):
        import warnings

        lo, hi = sorted((fa, fb))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            small = set(select_bins(FrequencyRange(lo)))
            large = set(select_bins(FrequencyRange(hi)))
        assert small <= large


class TestFeatureChainInvariants:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_trend_invariance(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=100)
        base = spectral_features(x, 0.72)
        trended = spectral_features(x + 3.5 + 0.2 * np.arange(100), 0.72)
        for a, b in zip(base.bin_power, trended.bin_power):
            assert abs(a - b) < 1e-9

    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 20))
    @settings(max_examples=25, deadline=None)
    def test_quadratic_scaling(self, seed, lam):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=90)
        base = spectral_features(x, 0.72)
        scaled = spectral_features(lam * x, 0.72)
        for a, b in zip(base.bin_power, scaled.bin_power):
            if a > 0:
                assert b / a == pytest.approx(lam * lam, rel=1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_bin_powers_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        feats = spectral_features(rng.normal(size=80), 0.72)
        assert all(v >= 0 for v in feats.bin_power)
