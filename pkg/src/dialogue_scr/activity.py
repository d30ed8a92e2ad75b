"""Envelope following, thresholding and gain smoothing primitives."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from scipy.signal import lfilter

from .signal import BinaryActivity, Envelope, GainSignal, SampleBuffer, sealed


def db_to_amp(db: float) -> float:
    return 10.0 ** (db / 20.0)


@dataclass(frozen=True)
class ScrParams:
    """Tuning constants for reassignment and activity detection.

    Window lengths are in milliseconds, ``t_rel`` in dB relative to the
    envelope mean and the ``t_abs_*`` floors in dBFS.
    """

    p_in_min: float = 0.3
    p_in_max: float = 0.7
    p_out_min: float = 0.0
    p_out_max: float = 2.0
    w_len: float = 600.0
    t_rel: float = -20.0
    t_abs_z: float = -45.0
    t_abs_v: float = -40.0
    c_f: float = 6.9e-5
    w_fill: float = 500.0
    t_r: float = 0.2

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value}")
        checks = [
            ("p_in_max", self.p_in_min < self.p_in_max, "p_in_min must be < p_in_max"),
            ("p_out_max", self.p_out_min < self.p_out_max, "p_out_min must be < p_out_max"),
            ("w_len", self.w_len > 0, "w_len must be > 0"),
            ("w_fill", self.w_fill >= 0, "w_fill must be >= 0"),
            ("c_f", 0 < self.c_f < 1, "c_f must lie in (0, 1)"),
            ("t_r", 0 <= self.t_r <= 1, "t_r must lie in [0, 1]"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ValueError(f"{key}: {msg}")


def _window_samples(ms: float, rate: float) -> int:
    return max(1, int(round(ms * rate / 1000.0)))


def rms_envelope(s: SampleBuffer, w_len: float) -> Envelope:
    """Sliding RMS over a centred window of ``w_len`` ms.

    Near the edges the window is truncated and the mean is taken over the
    samples actually covered, so the output has the input's length.
    """
    if s.channels != 1:
        raise ValueError("rms_envelope expects a mono buffer")
    if s.n_samples == 0:
        raise ValueError("cannot take the envelope of an empty signal")
    if not w_len > 0:
        raise ValueError("w_len must be positive")
    x = s.samples[0]
    n = x.shape[0]
    w = _window_samples(w_len, s.sample_rate)
    csum = np.cumsum(x * x)
    # window for sample i spans [i - half, i - half + w), clipped to [0, n);
    # padding the running sum with its edge values turns both ends into slices
    half = w // 2
    padded = np.concatenate((np.zeros(half + 1), csum, np.full(w - half, csum[-1])))
    power = padded[w:w + n] - padded[:n]
    # full windows hold w samples; only the truncated ends need their own count
    count = np.full(n, float(w))
    for idx in (np.arange(min(half, n)), np.arange(max(n - (w - half), 0), n)):
        count[idx] = np.minimum(idx + (w - half), n) - np.maximum(idx - half, 0)
    power /= count
    # cumsum differences can dip a few ulps below zero
    np.maximum(power, 0.0, out=power)
    return Envelope(sealed(np.sqrt(power, out=power)))


def threshold_for(env: Envelope, t_rel: float, t_abs: float) -> float:
    """Larger of the mean-relative and the absolute floor, as amplitudes."""
    return max(db_to_amp(t_rel) * env.mean, db_to_amp(t_abs))


def binarize_below(env: Envelope, threshold: float, rate: float = 1.0) -> GainSignal:
    """1 where the envelope is strictly below ``threshold``, else 0."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    return GainSignal(sealed((env.values < threshold).astype(np.float64)), rate)


def _runs(mask: np.ndarray):
    """Start and stop indices of each run of True in ``mask``."""
    edges = np.diff(np.concatenate(([0], mask.view(np.int8), [0])))
    return np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)


def fill_gaps(act: BinaryActivity, w_fill: float) -> BinaryActivity:
    """Close inactive gaps of at most ``w_fill`` ms between two active runs.

    Leading and trailing inactive stretches are left alone.
    """
    if w_fill < 0:
        raise ValueError("w_fill must be non-negative")
    active = act.as_bool()
    out = active.copy()
    starts, stops = _runs(~active)
    limit = w_fill * act.rate / 1000.0
    for a, b in zip(starts, stops):
        if a == 0 or b == active.shape[0]:
            continue
        if b - a <= limit:
            out[a:b] = True
    return BinaryActivity(sealed(out.astype(np.float64)), act.rate)


def _one_pole(x: np.ndarray, c_f: float) -> np.ndarray:
    # y[n] = (1 - c_f) y[n-1] + c_f x[n], state primed so y[0] == x[0]
    a = 1.0 - c_f
    y, _ = lfilter([c_f], [1.0, -a], x, zi=[a * x[0]])
    return y


def smooth_zero_phase(r: GainSignal, c_f: float) -> GainSignal:
    """Zero-phase one-pole smoothing of a gain track.

    The one-pole lowpass ``y[n] = (1 - c_f) y[n-1] + c_f x[n]`` is run
    forward then backward, and also backward then forward; the two results
    are averaged. With finite signals and edge-primed state the two orders
    differ near the ends, and only their average commutes exactly with time
    reversal. Output is clamped to [0, 1].
    """
    if not 0 < c_f < 1:
        raise ValueError("c_f must lie in (0, 1)")
    x = r.values
    if x.shape[0] == 0:
        return r
    fwd_bwd = _one_pole(_one_pole(x, c_f)[::-1], c_f)[::-1]
    bwd_fwd = _one_pole(_one_pole(x[::-1], c_f)[::-1], c_f)
    y = 0.5 * (fwd_bwd + bwd_fwd)
    return GainSignal(sealed(np.clip(y, 0.0, 1.0)), r.rate)


def gate_small(r_s: GainSignal, t_r: float) -> GainSignal:
    """Zero every gain strictly below ``t_r``."""
    if not 0 <= t_r <= 1:
        raise ValueError("t_r must lie in [0, 1]")
    return GainSignal(sealed(np.where(r_s.values < t_r, 0.0, r_s.values)), r_s.rate)
