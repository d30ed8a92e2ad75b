"""Voice activity tracks: thresholded probabilities, envelope-based VADs and
a deterministic energy detector used in place of a trained network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .activity import ScrParams, fill_gaps, rms_envelope, threshold_for
from .signal import BinaryActivity, ProbabilitySignal, SampleBuffer, downmix_mono, sealed


def binarize_probability(p: ProbabilitySignal, thr: float = 0.5) -> BinaryActivity:
    # >= so that p == thr counts as dialogue
    return BinaryActivity(sealed((p.values >= thr).astype(np.float64)), p.rate)


def envelope_vad(s: SampleBuffer, params: ScrParams) -> BinaryActivity:
    """Active where the RMS envelope reaches ``T_v``, then gap-filled.

    ``T_v`` is the larger of ``t_rel`` below the envelope mean and the
    ``t_abs_v`` floor. Activation uses ``>=``, the complement of the strict
    test that triggers reassignment.
    """
    env = rms_envelope(downmix_mono(s), params.w_len)
    t_v = threshold_for(env, params.t_rel, params.t_abs_v)
    act = BinaryActivity(sealed((env.values >= t_v).astype(np.float64)), s.sample_rate)
    return fill_gaps(act, params.w_fill)


def oracle_vad(d: SampleBuffer, params: ScrParams) -> BinaryActivity:
    """Reference activity from the clean dialogue signal."""
    return envelope_vad(d, params)


def refined_vad(d_r: SampleBuffer, params: ScrParams) -> BinaryActivity:
    """Activity re-derived from the dialogue estimate after reassignment."""
    return envelope_vad(d_r, params)


@dataclass(frozen=True)
class EnergyVadConfig:
    """Settings for :func:`energy_vad`.

    Levels are dBFS of the attack/release-smoothed frame RMS; ``slope`` is the
    logistic steepness per dB around ``center_db``.
    """

    attack_ms: float = 10.0
    release_ms: float = 200.0
    frame_ms: float = 10.0
    center_db: float = -35.0
    slope: float = 0.3

    def __post_init__(self):
        if self.attack_ms <= 0 or self.release_ms <= 0 or self.frame_ms <= 0:
            raise ValueError("energy VAD times must be positive")
        if self.slope <= 0:
            raise ValueError("energy VAD slope must be positive")


def energy_vad(x: SampleBuffer, attack_release: tuple[float, float] | None = None,
               config: EnergyVadConfig | None = None) -> ProbabilitySignal:
    """Frame-rate speech probability from signal energy alone.

    Frame RMS is followed with separate attack and release time constants,
    converted to dBFS and squashed through a logistic. Silence maps to exactly
    0. The result is at ``1000 / frame_ms`` values per second.
    """
    cfg = config or EnergyVadConfig()
    if attack_release is not None:
        cfg = EnergyVadConfig(attack_release[0], attack_release[1], cfg.frame_ms,
                              cfg.center_db, cfg.slope)
    mono = downmix_mono(x).samples[0]
    hop = max(1, int(round(cfg.frame_ms * x.sample_rate / 1000.0)))
    n_frames = max(1, -(-mono.shape[0] // hop))
    padded = np.zeros(n_frames * hop)
    padded[:mono.shape[0]] = mono
    frame_rms = np.sqrt(np.mean(padded.reshape(n_frames, hop) ** 2, axis=1))

    a_att = np.exp(-cfg.frame_ms / cfg.attack_ms)
    a_rel = np.exp(-cfg.frame_ms / cfg.release_ms)
    env = np.empty(n_frames)
    level = frame_rms[0]
    for i, value in enumerate(frame_rms):
        a = a_att if value > level else a_rel
        level = a * level + (1.0 - a) * value
        env[i] = level

    with np.errstate(divide="ignore"):
        level_db = 20.0 * np.log10(env)
    p = expit(cfg.slope * (level_db - cfg.center_db))
    return ProbabilitySignal(p, x.sample_rate / hop)
