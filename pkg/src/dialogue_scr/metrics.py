"""Objective scores: SI-SDR, frame-level VAD accuracy, loudness matching."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signal import BinaryActivity, SampleBuffer

# Anything at or above this is treated as a perfect estimate.
SI_SDR_CAP_DB = 300.0

LOUDNESS_MODES = ("rms", "gated")


def _mono_vector(x) -> np.ndarray:
    if isinstance(x, SampleBuffer):
        if x.channels != 1:
            raise ValueError("SI-SDR expects mono signals")
        return x.samples[0]
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("SI-SDR expects 1-D signals")
    return arr


def si_sdr(est, ref) -> float:
    """Scale-invariant SDR in dB.

    The reference is scaled to its least-squares fit onto the estimate,
    ``s_t = (<est, ref> / ||ref||^2) ref``, and the score is the energy ratio
    of ``s_t`` to the residual ``est - s_t``.

    Returns ``math.inf`` when the residual vanishes or the score reaches
    ``SI_SDR_CAP_DB``, and ``-math.inf`` when the estimate has no component
    along the reference.
    """
    e = _mono_vector(est)
    r = _mono_vector(ref)
    if e.shape != r.shape:
        raise ValueError(f"length mismatch: {e.shape[0]} vs {r.shape[0]}")
    ref_energy = float(np.dot(r, r))
    if ref_energy == 0.0:
        raise ValueError("reference signal is all zeros")
    alpha = float(np.dot(e, r)) / ref_energy
    target = alpha * r
    resid = e - target
    target_energy = float(np.dot(target, target))
    resid_energy = float(np.dot(resid, resid))
    if target_energy == 0.0:
        return -math.inf
    if resid_energy <= target_energy * 10.0 ** (-SI_SDR_CAP_DB / 10.0):
        return math.inf
    return 10.0 * math.log10(target_energy / resid_energy)


@dataclass(frozen=True)
class VadAccuracyReport:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def n_frames(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy_percent(self) -> float:
        return 100.0 * (self.tp + self.tn) / self.n_frames if self.n_frames else math.nan

    def as_dict(self) -> dict:
        return dict(tp=self.tp, tn=self.tn, fp=self.fp, fn=self.fn,
                    n_frames=self.n_frames, accuracy_percent=self.accuracy_percent)


def frame_activity(act: BinaryActivity, frame_ms: float) -> np.ndarray:
    """Majority vote per frame; a frame is active when more than half its
    samples are 1. A trailing partial frame votes over the samples it has."""
    hop = max(1, int(round(frame_ms * act.rate / 1000.0)))
    n = len(act)
    n_frames = -(-n // hop)
    starts = np.arange(n_frames) * hop
    ones = np.add.reduceat(act.values, starts) if n else np.zeros(0)
    counts = np.minimum(starts + hop, n) - starts
    return ones * 2 > counts


def vad_accuracy(est: BinaryActivity, ref: BinaryActivity,
                 frame_ms: float = 10.0) -> VadAccuracyReport:
    """Frame-level confusion counts of ``est`` against ``ref``."""
    if abs(est.duration - ref.duration) * 1000.0 >= frame_ms:
        raise ValueError(f"duration mismatch: {est.duration:.4f} s vs {ref.duration:.4f} s")
    fe = frame_activity(est, frame_ms)
    fr = frame_activity(ref, frame_ms)
    n = min(fe.shape[0], fr.shape[0])
    if n == 0:
        raise ValueError("no frames to compare")
    fe, fr = fe[:n], fr[:n]
    return VadAccuracyReport(
        tp=int(np.sum(fe & fr)),
        tn=int(np.sum(~fe & ~fr)),
        fp=int(np.sum(fe & ~fr)),
        fn=int(np.sum(~fe & fr)),
    )


def loudness_power(buf: SampleBuffer, mode: str = "rms", block_ms: float = 400.0,
                   rel_gate_db: float = -10.0, abs_gate_db: float = -70.0) -> float:
    """Mean-square level used for loudness matching.

    ``rms`` is the plain mean square over all samples and channels. ``gated``
    mimics integrated-loudness gating without K-weighting: channel powers are
    summed over 400 ms blocks at 75 % overlap, blocks below ``abs_gate_db``
    are dropped, then blocks more than ``rel_gate_db`` under the mean of the
    survivors are dropped too.
    """
    x = buf.samples
    if mode == "rms":
        return float(np.mean(x * x))
    if mode != "gated":
        raise ValueError(f"unknown loudness mode {mode!r}; use one of {LOUDNESS_MODES}")
    size = max(1, int(round(block_ms * buf.sample_rate / 1000.0)))
    hop = max(1, size // 4)
    power = np.concatenate(([0.0], np.cumsum(np.sum(x * x, axis=0))))
    if buf.n_samples <= size:
        blocks = np.array([power[-1] / max(buf.n_samples, 1)])
    else:
        starts = np.arange(0, buf.n_samples - size + 1, hop)
        blocks = (power[starts + size] - power[starts]) / size
    blocks = blocks[blocks > 10.0 ** (abs_gate_db / 10.0)]
    if blocks.size == 0:
        return 0.0
    rel = blocks.mean() * 10.0 ** (rel_gate_db / 10.0)
    kept = blocks[blocks > rel]
    return float(kept.mean()) if kept.size else float(blocks.mean())


def loudness_normalize(y: SampleBuffer, ref: SampleBuffer, mode: str = "rms") -> SampleBuffer:
    """Scale ``y`` by one scalar so its loudness matches ``ref``."""
    p_ref = loudness_power(ref, mode)
    p_y = loudness_power(y, mode)
    if p_ref == 0.0:
        raise ValueError("reference has no energy")
    if p_y == 0.0:
        raise ValueError("signal to normalise has no energy")
    return y.replace(y.samples * math.sqrt(p_ref / p_y))
