"""Reassignment gains for each post-processing method, and their application.

Every method produces a broadband gain ``r_s`` in [0, 1], one value per
sample. The gain moves ``r_s * d_hat`` from the dialogue estimate into the
background estimate, so the sum of the two estimates never changes.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .activity import (
    ScrParams,
    binarize_below,
    db_to_amp,
    gate_small,
    rms_envelope,
    smooth_zero_phase,
    threshold_for,
)
from .signal import (
    BinaryActivity,
    GainSignal,
    ProbabilitySignal,
    SampleBuffer,
    downmix_mono,
    sealed,
)
from .vad import binarize_probability

# CLI short name -> report row name
METHODS = {
    "threshold": "DS+threshold",
    "d": "DS+VAD-d",
    "v": "DS+VAD-v",
    "p": "DS+VAD-p",
    "oracle": "DS+oracleVAD",
}


def _complement(v: BinaryActivity) -> GainSignal:
    return GainSignal(sealed(1.0 - v.values), v.rate)


def gain_direct(v: BinaryActivity) -> GainSignal:
    """Hard gate: reassign wherever the VAD reports no dialogue."""
    return _complement(v)


def gain_oracle(v: BinaryActivity) -> GainSignal:
    """Same hard gate as :func:`gain_direct`, fed with the reference VAD."""
    return _complement(v)


def smooth_and_gate(r: GainSignal, params: ScrParams, gate: bool = True) -> GainSignal:
    r_s = smooth_zero_phase(r, params.c_f)
    return gate_small(r_s, params.t_r) if gate else r_s


def gain_smoothed_vad(v: BinaryActivity, params: ScrParams) -> GainSignal:
    return smooth_and_gate(_complement(v), params)


def rescale_probability(p: ProbabilitySignal, params: ScrParams) -> GainSignal:
    """Clip ``p`` to ``[p_in_min, p_in_max]`` and map that range linearly onto
    ``[p_out_min, p_out_max]``."""
    lo, hi = params.p_in_min, params.p_in_max
    if hi == lo:
        raise ValueError("p_in_max must differ from p_in_min")
    # slope from the decimal parameter values, so 0.3..0.7 -> 0..2 has slope
    # exactly 5 instead of 2 / (0.7 - 0.3) rounded twice
    dec = [Fraction(repr(v)) for v in (lo, hi, params.p_out_min, params.p_out_max)]
    slope = float((dec[3] - dec[2]) / (dec[1] - dec[0]))
    x = p.values
    out = params.p_out_min + (np.clip(x, lo, hi) - lo) * slope
    out = np.where(x <= lo, params.p_out_min, np.where(x >= hi, params.p_out_max, out))
    return GainSignal(sealed(out), p.rate)


def _gain_from_control(z: np.ndarray, rate: float, params: ScrParams,
                       gate: bool) -> GainSignal:
    env = rms_envelope(SampleBuffer(z, rate), params.w_len)
    t_z = threshold_for(env, params.t_rel, params.t_abs_z)
    r = binarize_below(env, t_z, rate)
    return smooth_and_gate(r, params, gate)


def gain_probability(d_hat: SampleBuffer, p: ProbabilitySignal, params: ScrParams,
                     gate: bool = True) -> GainSignal:
    """Gain from the envelope of the probability-weighted dialogue estimate.

    ``p`` must already be at the audio sample rate and length (see
    :func:`dialogue_scr.signal.resample_probability`). ``gate`` switches the
    small-gain gate after smoothing.
    """
    if len(p) != d_hat.n_samples:
        raise ValueError(f"probability length {len(p)} != dialogue length {d_hat.n_samples}")
    weight = rescale_probability(p, params).values
    z = weight * downmix_mono(d_hat).samples[0]
    return _gain_from_control(z, d_hat.sample_rate, params, gate)


def gain_threshold(d_hat: SampleBuffer, params: ScrParams, gate: bool = True) -> GainSignal:
    """Like :func:`gain_probability` but the control signal is ``d_hat`` alone."""
    z = downmix_mono(d_hat).samples[0]
    return _gain_from_control(z, d_hat.sample_rate, params, gate)


def apply_reassignment(d_hat: SampleBuffer, b_hat: SampleBuffer,
                       r_s: GainSignal) -> tuple[SampleBuffer, SampleBuffer]:
    """Move ``r_s * d_hat`` from the dialogue estimate to the background.

    The same gain is applied to every channel.
    """
    if not d_hat.same_shape(b_hat):
        raise ValueError("dialogue and background estimates differ in shape or rate")
    if len(r_s) != d_hat.n_samples:
        raise ValueError(f"gain length {len(r_s)} != signal length {d_hat.n_samples}")
    r_s.require_unit("reassignment gain")
    moved = r_s.values * d_hat.samples
    d_r = (1.0 - r_s.values) * d_hat.samples
    b_r = moved + b_hat.samples
    return d_hat.replace(sealed(d_r)), b_hat.replace(sealed(b_r))


def remix(d: SampleBuffer, b: SampleBuffer, gain_db: float) -> SampleBuffer:
    """``d + g * b`` with a constant background gain ``g`` given in dB.

    ``gain_db = -inf`` mutes the background.
    """
    if not d.same_shape(b):
        raise ValueError("dialogue and background differ in shape or rate")
    if gain_db == 0:
        return d.replace(d.samples + b.samples)
    g = 0.0 if gain_db == -np.inf else db_to_amp(gain_db)
    return d.replace(d.samples + g * b.samples)


def compute_gain(method: str, params: ScrParams, *, d_hat: SampleBuffer | None = None,
                 p: ProbabilitySignal | None = None, v_hat: BinaryActivity | None = None,
                 v_oracle: BinaryActivity | None = None, vad_threshold: float = 0.5,
                 gate_p: bool = True) -> GainSignal:
    """Dispatch on a method short name (``threshold``, ``d``, ``v``, ``p``, ``oracle``).

    ``p`` is expected at the audio sample rate. For ``d`` and ``v`` a binary
    VAD is taken from ``v_hat`` or, failing that, derived from ``p``.
    ``gate_p`` toggles the small-gain gate for the envelope-based methods.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    if method in ("d", "v") and v_hat is None:
        if p is None:
            raise ValueError(f"method {method!r} needs a VAD track")
        v_hat = binarize_probability(p, vad_threshold)
    if method == "d":
        return gain_direct(v_hat)
    if method == "v":
        return gain_smoothed_vad(v_hat, params)
    if method == "oracle":
        if v_oracle is None:
            raise ValueError("method 'oracle' needs the reference VAD")
        return gain_oracle(v_oracle)
    if d_hat is None:
        raise ValueError(f"method {method!r} needs the dialogue estimate")
    if method == "threshold":
        return gain_threshold(d_hat, params, gate=gate_p)
    if p is None:
        raise ValueError("method 'p' needs a probability track")
    return gain_probability(d_hat, p, params, gate=gate_p)
