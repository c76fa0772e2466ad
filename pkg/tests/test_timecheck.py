"""Timing side-channel model and flagging rule."""

import math

import numpy as np
import pytest

from cct.errors import DegenerateVariance, EmptyBucket
from cct.timecheck import (LeakModel, TimingSample, device_corr, flag_device,
                           mean_time_by_bitlen, short_nonce_prob_curve,
                           simulate_leak_corr)


class TestLeakModel:
    def test_analytic_corr_value(self):
        model = LeakModel(87.0, 10.0)
        # point-biserial: delta*sqrt(pq) / sqrt(sigma^2 + pq*delta^2)
        p = 1 / 256
        delta = 87.0 / 32
        expected = delta * math.sqrt(p * (1 - p)) / math.sqrt(
            10.0 ** 2 + p * (1 - p) * delta ** 2)
        assert abs(model.analytic_corr() - expected) < 1e-12

    def test_no_speedup_no_corr(self):
        model = LeakModel(87.0, 10.0, speedup=0.0)
        assert abs(simulate_leak_corr(model, 200_000, seed=1)) < 0.01

    def test_simulation_tracks_analytic(self):
        model = LeakModel(50.0, 5.0)
        sim = simulate_leak_corr(model, 500_000, seed=2)
        assert abs(sim - model.analytic_corr()) < 0.1 * model.analytic_corr()


class TestSampleStats:
    def test_from_nonce_byte_length(self):
        assert TimingSample.from_nonce(1 << 200, 5.0).nonce_byte_length == 26
        assert TimingSample.from_nonce(255, 5.0).nonce_byte_length == 1

    def test_device_corr_sign(self):
        samples = [TimingSample(31, 10.0)] * 50 + [TimingSample(32, 20.0)] * 50
        assert device_corr(samples) > 0.99

    def test_degenerate_variance(self):
        with pytest.raises(DegenerateVariance):
            device_corr([TimingSample(32, 10.0)] * 10)

    def test_mean_time_by_bitlen(self):
        stats = mean_time_by_bitlen([(256, 10.0), (256, 14.0), (255, 9.0)])
        mean, stderr = stats[256]
        assert mean == 12.0 and stderr == pytest.approx(2.0)
        assert stats[255] == (9.0, 0.0)

    def test_short_nonce_prob_curve(self):
        samples = [TimingSample(31, 5.0)] * 2 + [TimingSample(32, 10.0)] * 6
        curve = short_nonce_prob_curve(samples, thresholds_ms=[7.0, 11.0])
        assert curve == {7.0: 1.0, 11.0: 0.25}

    def test_short_nonce_prob_curve_empty_bucket(self):
        with pytest.raises(EmptyBucket):
            short_nonce_prob_curve([TimingSample(32, 10.0)] * 10,
                                   thresholds_ms=[1.0])


class TestFlagRule:
    # tabulated (observed, simulated, n) -> verdict cases for the
    # two-stage threshold rule
    CASES = [
        (0.02, 0.016, 100_000, True),    # clear leak
        (0.004, 0.016, 100_000, False),  # below the absolute floor
        (0.0055, 0.016, 100_000, False),  # above floor, far below simulated
        (0.02, 0.016, 9_999, False),     # too few samples
        (0.0155, 0.016, 100_000, True),  # within margin of simulated
    ]

    @pytest.mark.parametrize("observed,simulated,n,want", CASES)
    def test_tabulated(self, observed, simulated, n, want):
        assert flag_device(observed, simulated, n) is want

    def test_margin_boundary(self):
        assert flag_device(0.0151, 0.016, 100_000) is True
        assert flag_device(0.0149, 0.016, 100_000) is False
