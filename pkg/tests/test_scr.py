import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialogue_scr import (
    GainSignal,
    ProbabilitySignal,
    SampleBuffer,
    ScrParams,
    apply_reassignment,
    compute_gain,
    gain_direct,
    gain_oracle,
    gain_probability,
    gain_smoothed_vad,
    gain_threshold,
    remix,
    rescale_probability,
)
from dialogue_scr.activity import binarize_below, rms_envelope, threshold_for
from dialogue_scr.scr import METHODS

from conftest import FS, activity, mono, reference_smoother


def prob(values, rate=FS):
    return ProbabilitySignal(np.asarray(values, dtype=float), rate)


class TestHardGates:
    def test_direct_example(self):
        assert list(gain_direct(activity([1, 1, 0, 0])).values) == [0, 0, 1, 1]

    @pytest.mark.parametrize("fn", [gain_direct, gain_oracle])
    def test_constant_and_alternating(self, fn):
        assert np.all(fn(activity(np.ones(10))).values == 0)
        assert np.all(fn(activity(np.zeros(10))).values == 1)
        v = np.tile([0.0, 1.0], 8)
        np.testing.assert_array_equal(fn(activity(v)).values, 1 - v)

    @pytest.mark.parametrize("fn", [gain_direct, gain_oracle])
    def test_complement(self, fn, rng):
        v = (rng.random(100) < 0.5).astype(float)
        np.testing.assert_array_equal(fn(activity(1 - v)).values, 1 - fn(activity(v)).values)


class TestSmoothedVad:
    def test_constants(self, params):
        assert np.all(gain_smoothed_vad(activity(np.ones(4800)), params).values == 0)
        np.testing.assert_allclose(gain_smoothed_vad(activity(np.zeros(4800)), params).values, 1,
                                   atol=1e-9)

    def test_isolated_dropout_is_gated(self, params):
        v = np.ones(48000)
        v[24000] = 0
        r_s = gain_smoothed_vad(activity(v), params).values
        peak = max(reference_smoother(1 - v, params.c_f))
        assert 0 < peak < 1e-3 < params.t_r
        assert np.all(r_s == 0)


class TestRescale:
    @pytest.mark.parametrize("p,expected", [(0.3, 0.0), (0.7, 2.0), (0.5, 1.0),
                                            (0.1, 0.0), (0.95, 2.0), (0.0, 0.0), (1.0, 2.0)])
    def test_values(self, params, p, expected):
        assert rescale_probability(prob([p], 1), params).values[0] == pytest.approx(expected, abs=1e-15)

    def test_degenerate_span(self):
        p = ScrParams()
        object.__setattr__(p, "p_in_max", p.p_in_min)
        with pytest.raises(ValueError):
            rescale_probability(prob([0.5], 1), p)


class TestEnvelopeMethods:
    def test_silent_dialogue_fully_reassigned(self, params):
        d = mono(np.zeros(FS))
        np.testing.assert_allclose(gain_probability(d, prob(np.full(FS, 0.9)), params).values, 1,
                                   atol=1e-9)
        np.testing.assert_allclose(gain_threshold(d, params).values, 1, atol=1e-9)

    def test_low_probability_reassigns_everything(self, params, rng):
        d = mono(0.3 * rng.standard_normal(FS))
        r_s = gain_probability(d, prob(np.full(FS, 0.2)), params).values
        np.testing.assert_allclose(r_s, 1, atol=1e-9)

    def test_loud_confident_dialogue_kept(self, params, rng):
        n = 10 * FS
        d = mono(0.3 * rng.standard_normal(n))
        p = prob(np.full(n, 0.8))
        z = 2.0 * d.samples[0]
        env = rms_envelope(mono(z), params.w_len)
        assert env.values.min() > threshold_for(env, params.t_rel, params.t_abs_z)
        assert np.all(gain_probability(d, p, params).values == 0)

    def test_constant_tone_kept_by_threshold(self, params):
        t = np.arange(2 * FS) / FS
        d = mono(np.sin(2 * np.pi * 440 * t))
        assert np.all(gain_threshold(d, params).values == 0)

    def test_silence_then_speech(self, params, rng):
        n = 60 * FS
        x = np.zeros(n)
        x[30 * FS:] = 0.1 * rng.standard_normal(30 * FS)
        r_s = gain_threshold(mono(x), params).values
        assert np.all(r_s[:28 * FS] > 0.99)
        assert np.all(r_s[31 * FS:] == 0)
        assert np.all(np.diff(r_s[28 * FS:31 * FS]) <= 1e-12)

    def test_length_mismatch(self, params):
        with pytest.raises(ValueError):
            gain_probability(mono(np.zeros(10)), prob(np.zeros(9)), params)

    def test_gate_switch(self, params, rng):
        x = np.zeros(5 * FS)
        x[2 * FS:3 * FS] = 0.2 * rng.standard_normal(FS)
        p = prob(np.full(5 * FS, 0.9))
        gated = gain_probability(mono(x), p, params).values
        ungated = gain_probability(mono(x), p, params, gate=False).values
        assert np.all(gated[gated > 0] >= params.t_r)
        assert np.any((ungated > 0) & (ungated < params.t_r))

    def test_monotone_above_clip(self, params, rng):
        """Raising p where it already saturates changes nothing."""
        n = 4 * FS
        d = mono(0.05 * rng.standard_normal(n) * (np.arange(n) > FS))
        p = rng.uniform(0, 1, n)
        p2 = np.where(p >= params.p_in_max, np.minimum(1.0, p + 0.2), p)
        a = gain_probability(d, prob(p), params).values
        b = gain_probability(d, prob(p2), params).values
        np.testing.assert_array_equal(a, b)

    def test_monotone_uniform_raise(self, params, rng):
        """Lifting p from below the clip range to above it can only switch r from 1 to 0."""
        n = 4 * FS
        d = mono(0.05 * rng.standard_normal(n) * (np.arange(n) > 2 * FS))

        def decision(pv):
            z = rescale_probability(prob(pv), params).values * d.samples[0]
            env = rms_envelope(mono(z), params.w_len)
            return binarize_below(env, threshold_for(env, params.t_rel, params.t_abs_z)).values

        low = decision(np.full(n, 0.1))
        high = decision(np.full(n, 0.9))
        assert np.all(high <= low)
        assert np.any(high < low)


class TestApply:
    def test_identity(self, rng):
        d = SampleBuffer(rng.standard_normal((2, 100)), FS)
        b = SampleBuffer(rng.standard_normal((2, 100)), FS)
        d_r, b_r = apply_reassignment(d, b, GainSignal(np.zeros(100), FS))
        np.testing.assert_array_equal(d_r.samples, d.samples)
        np.testing.assert_array_equal(b_r.samples, b.samples)

    def test_full(self, rng):
        d = mono(rng.standard_normal(100))
        b = mono(rng.standard_normal(100))
        d_r, b_r = apply_reassignment(d, b, GainSignal(np.ones(100), FS))
        assert np.all(d_r.samples == 0)
        np.testing.assert_array_equal(b_r.samples, d.samples + b.samples)

    def test_half(self):
        d_r, b_r = apply_reassignment(mono([0.4]), mono([0.1]), GainSignal([0.5], FS))
        assert d_r.samples[0, 0] == pytest.approx(0.2)
        assert b_r.samples[0, 0] == pytest.approx(0.3)

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            apply_reassignment(mono(np.zeros(4)), mono(np.zeros(5)), GainSignal(np.zeros(4), FS))
        with pytest.raises(ValueError):
            apply_reassignment(mono(np.zeros(4)), mono(np.zeros(4)), GainSignal(np.zeros(3), FS))
        with pytest.raises(ValueError):
            apply_reassignment(mono(np.zeros(2)), mono(np.zeros(2)), GainSignal([0, 1.5], FS))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(METHODS)), st.integers(1, 2))
    def test_conservation_and_range(self, seed, method, channels):
        rng = np.random.default_rng(seed)
        fs, n = 8000, 8000
        d = SampleBuffer(0.3 * rng.standard_normal((channels, n)) * (rng.random(n) < 0.6), fs)
        b = SampleBuffer(0.3 * rng.standard_normal((channels, n)), fs)
        p = ProbabilitySignal(rng.random(n), fs)
        v = activity((rng.random(n) < 0.5).astype(float), fs)
        r_s = compute_gain(method, ScrParams(), d_hat=d, p=p, v_oracle=v)
        assert np.all((r_s.values >= 0) & (r_s.values <= 1))
        d_r, b_r = apply_reassignment(d, b, r_s)
        err = np.max(np.abs(d_r.samples + b_r.samples - d.samples - b.samples))
        assert err <= 1e-6


class TestRemix:
    def test_unity(self, rng):
        d, b = mono(rng.standard_normal(50)), mono(rng.standard_normal(50))
        np.testing.assert_array_equal(remix(d, b, 0).samples, d.samples + b.samples)

    def test_mute(self, rng):
        d, b = mono(rng.standard_normal(50)), mono(rng.standard_normal(50))
        np.testing.assert_array_equal(remix(d, b, -np.inf).samples, d.samples)

    def test_minus_six(self):
        y = remix(mono([0.0]), mono([1.0]), -6.0)
        assert y.samples[0, 0] == pytest.approx(10 ** (-6 / 20))
        assert y.samples[0, 0] == pytest.approx(0.501187, abs=1e-6)

    def test_shape(self):
        with pytest.raises(ValueError):
            remix(mono([0.0]), mono([0.0, 1.0]), 0)


def test_compute_gain_errors(params):
    with pytest.raises(ValueError):
        compute_gain("x", params)
    with pytest.raises(ValueError):
        compute_gain("oracle", params)
    with pytest.raises(ValueError):
        compute_gain("p", params, d_hat=mono(np.zeros(4)))
    with pytest.raises(ValueError):
        compute_gain("d", params)
