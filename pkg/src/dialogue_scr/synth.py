"""Seeded synthetic test items in the style of the MIX and MUSFX scenarios.

Dialogue is amplitude-modulated band-limited noise plus a harmonic voiced
part, arranged into utterances with pauses and exact digital silence in
between. Background is a chord sequence, decaying noise transients and a
low ambience bed. Separation and VAD outputs are simulated: the dialogue
estimate leaks selected stretches of background, and the probability track
is either derived from the reference activity (with controllable errors) or
from :func:`dialogue_scr.vad.energy_vad` run on the mixture.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import butter, sosfilt

from .activity import ScrParams
from .metrics import frame_activity
from .signal import ProbabilitySignal, SampleBuffer
from .vad import EnergyVadConfig, energy_vad, oracle_vad

MODES = ("MIX", "MUSFX")
VAD_SOURCES = ("oracle", "energy")
MIX_SNRS_DB = (-5.0, 0.0, 5.0, 10.0, 15.0)


@dataclass(frozen=True)
class ScenarioSpec:
    """Recipe for one synthetic item.

    ``snr_db`` may be a single value, a sequence (the item uses
    ``snr_db[seed % len]``) or None to keep the generator's natural balance.
    It is ignored in MUSFX mode. ``vad_error_rate`` is the fraction of VAD
    frames whose decision is flipped in the ``oracle`` stand-in.
    """

    mode: str = "MIX"
    snr_db: float | Sequence[float] | None = None
    leak_gain: float = 0.1
    duration_s: float = 10.0
    seed: int = 0
    sample_rate: int = 48000
    channels: int = 1
    vad_source: str = "oracle"
    vad_error_rate: float = 0.0
    vad_rate: float = 100.0
    p_low: float = 0.1
    p_high: float = 0.9
    energy_vad: EnergyVadConfig = field(default_factory=EnergyVadConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        if self.leak_gain < 0:
            raise ValueError("leak_gain must be non-negative")
        if self.vad_source not in VAD_SOURCES:
            raise ValueError(f"vad_source must be one of {VAD_SOURCES}")
        if not 0 <= self.vad_error_rate <= 1:
            raise ValueError("vad_error_rate must lie in [0, 1]")
        if self.channels not in (1, 2):
            raise ValueError("channels must be 1 or 2")

    def item_snr(self) -> float | None:
        if self.mode == "MUSFX" or self.snr_db is None:
            return None
        if np.ndim(self.snr_db) == 0:
            return float(self.snr_db)
        levels = list(self.snr_db)
        return float(levels[self.seed % len(levels)])


@dataclass(frozen=True, eq=False)
class ScenarioItem:
    name: str
    mode: str
    x: SampleBuffer
    d: SampleBuffer
    b: SampleBuffer
    d_hat: SampleBuffer
    b_hat: SampleBuffer
    p_hat: ProbabilitySignal


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def mix_at_snr(d: SampleBuffer, musfx: SampleBuffer, snr_db: float) -> SampleBuffer:
    """``d`` plus ``musfx`` rescaled so that RMS(d) / RMS(musfx) hits ``snr_db``."""
    return d.replace(d.samples + scale_to_snr(d, musfx, snr_db).samples)


def scale_to_snr(d: SampleBuffer, musfx: SampleBuffer, snr_db: float) -> SampleBuffer:
    if not d.same_shape(musfx):
        raise ValueError("dialogue and background differ in shape or rate")
    rd, rb = _rms(d.samples), _rms(musfx.samples)
    if rd == 0.0 or rb == 0.0:
        raise ValueError("cannot set an SNR with a silent signal")
    gain = rd / (rb * 10.0 ** (snr_db / 20.0))
    return musfx.replace(musfx.samples * gain)


def _fade(n: int, ramp: int) -> np.ndarray:
    w = np.ones(n)
    ramp = min(ramp, n // 2)
    if ramp > 0:
        r = 0.5 - 0.5 * np.cos(np.pi * (np.arange(ramp) + 0.5) / ramp)
        w[:ramp] = r
        w[n - ramp:] = r[::-1]
    return w


def _utterance(rng: np.random.Generator, n: int, fs: float) -> np.ndarray:
    t = np.arange(n) / fs
    sos = butter(4, [200.0, min(4000.0, 0.45 * fs)], btype="bandpass", fs=fs, output="sos")
    noise = sosfilt(sos, rng.standard_normal(n))
    noise /= _rms(noise) + 1e-12

    f0 = rng.uniform(100.0, 220.0) * (1.0 + 0.1 * np.sin(2 * np.pi * rng.uniform(0.2, 0.8) * t))
    phase = 2 * np.pi * np.cumsum(f0) / fs
    n_harm = int(min(20, 3500.0 // f0.max()))
    # sin(k*phase) by the Chebyshev recursion, one trig pair per utterance
    two_cos = 2.0 * np.cos(phase)
    prev, cur = np.zeros(n), np.sin(phase)
    voiced = cur.copy()
    for k in range(2, n_harm + 1):
        prev, cur = cur, two_cos * cur - prev
        voiced += cur / k
    voiced /= _rms(voiced) + 1e-12

    syl_rate = rng.uniform(3.0, 6.0)
    syl = 0.25 + 0.75 * (0.5 - 0.5 * np.cos(2 * np.pi * syl_rate * t + rng.uniform(0, 2 * np.pi)))
    sig = (0.6 * voiced + 0.4 * noise) * syl

    if n > fs and rng.random() < 0.5:
        # short intra-utterance pause
        gap = int(rng.uniform(0.1, 0.3) * fs)
        at = int(rng.uniform(0.3, 0.7) * (n - gap))
        sig[at:at + gap] *= 1.0 - _fade(gap, int(0.01 * fs))

    sig *= _fade(n, int(0.02 * fs))
    level = 10.0 ** (rng.uniform(-24.0, -18.0) / 20.0)
    return sig * level / (_rms(sig) + 1e-12)


def synth_dialogue(rng: np.random.Generator, n: int, fs: float) -> np.ndarray:
    """Utterances of 1-4 s separated by 0.5-3 s of exact silence.

    The leading pause is capped at a quarter of the item so that even short
    items contain speech.
    """
    out = np.zeros(n)
    pos = int(min(rng.uniform(0.5, 3.0), 0.25 * n / fs) * fs)
    while pos < n:
        length = min(int(rng.uniform(1.0, 4.0) * fs), n - pos)
        if length < int(0.3 * fs):
            break
        out[pos:pos + length] = _utterance(rng, length, fs)
        pos += length + int(rng.uniform(0.5, 3.0) * fs)
    return out


def synth_musfx(rng: np.random.Generator, n: int, fs: float) -> np.ndarray:
    """Chords, percussive noise hits and a low ambience bed, RMS ~ -26 dBFS."""
    t = np.arange(n) / fs
    music = np.zeros(n)
    scale = 220.0 * 2.0 ** (np.array([0, 2, 3, 5, 7, 8, 10, 12, 14, 15]) / 12.0)
    pos = 0
    while pos < n:
        length = min(int(rng.uniform(1.5, 4.0) * fs), n - pos)
        seg_t = t[pos:pos + length]
        chord = np.zeros(length)
        for f in rng.choice(scale, size=3, replace=False):
            theta = 2 * np.pi * f * seg_t + rng.uniform(0, 2 * np.pi)
            s, c = np.sin(theta), np.cos(theta)
            # fundamental plus 2nd and 3rd harmonics via multiple-angle identities
            chord += s * (1.0 + 0.8 * c + 0.2 * (3.0 - 4.0 * s * s))
        music[pos:pos + length] = chord * _fade(length, int(0.05 * fs))
        pos += length
    music /= _rms(music) + 1e-12

    fx = np.zeros(n)
    n_hits = rng.poisson(0.5 * n / fs)
    hp = butter(2, 1000.0, btype="highpass", fs=fs, output="sos")
    for _ in range(n_hits):
        at = int(rng.integers(0, n))
        length = min(int(rng.uniform(0.1, 0.6) * fs), n - at)
        if length <= 1:
            continue
        decay = np.exp(-np.arange(length) / (rng.uniform(0.03, 0.2) * fs))
        burst = rng.standard_normal(length) * decay
        if rng.random() < 0.5:
            burst = sosfilt(hp, burst)
        fx[at:at + length] += burst * rng.uniform(0.5, 2.0)
    if fx.any():
        fx /= _rms(fx)

    lp = butter(1, 500.0, btype="lowpass", fs=fs, output="sos")
    amb = sosfilt(lp, rng.standard_normal(n))
    amb /= _rms(amb) + 1e-12

    b = 0.7 * music + 0.5 * fx + 0.2 * amb
    return b * 0.05 / (_rms(b) + 1e-12)


def leakage_mask(rng: np.random.Generator, n: int, fs: float,
                 coverage: float = 0.5) -> np.ndarray:
    """Smooth 0/1 mask over random 0.3-2 s stretches covering ~``coverage``."""
    mask = np.zeros(n)
    target = coverage * n
    covered = 0.0
    tries = 0
    while covered < target and tries < 10_000:
        tries += 1
        length = min(int(rng.uniform(0.3, 2.0) * fs), n)
        at = int(rng.integers(0, max(1, n - length + 1)))
        seg = mask[at:at + length]
        covered += float(np.sum(seg == 0))
        np.maximum(seg, _fade(length, int(0.01 * fs)), out=seg)
    return mask


def simulate_ds(d: SampleBuffer, b: SampleBuffer, leak_gain: float,
                rng: np.random.Generator) -> tuple[SampleBuffer, SampleBuffer]:
    """Stand-in separation output: stretches of ``b`` leak into the dialogue.

    ``d_hat = d + leak`` and ``b_hat = b - leak``; with ``leak_gain == 0`` the
    references are returned unchanged.
    """
    if leak_gain == 0:
        return d, b
    mask = leakage_mask(rng, b.n_samples, b.sample_rate)
    leak = leak_gain * mask * b.samples
    return d.replace(d.samples + leak), b.replace(b.samples - leak)


def standin_probability(d: SampleBuffer, params: ScrParams, rng: np.random.Generator,
                        rate: float = 100.0, error_rate: float = 0.0,
                        p_low: float = 0.1, p_high: float = 0.9) -> ProbabilitySignal:
    """Frame-rate probability built from the reference activity.

    Active frames get values near ``p_high``, inactive ones near ``p_low``
    (jitter +/-0.05). Then ``round(error_rate * n_frames)`` frames are flipped,
    in short runs of 3-15 frames, to mimic detector mistakes.
    """
    ref = oracle_vad(d, params)
    frame_ms = 1000.0 / rate
    active = frame_activity(ref, frame_ms)
    n = active.shape[0]
    flip = np.zeros(n, dtype=bool)
    n_err = int(round(error_rate * n))
    while flip.sum() < n_err:
        length = int(rng.integers(3, 16))
        at = int(rng.integers(0, n))
        room = n_err - int(flip.sum())
        seg = flip[at:at + length]
        free = np.flatnonzero(~seg)[:room]
        seg[free] = True
    decided = active ^ flip
    jitter = rng.uniform(-0.05, 0.05, size=n)
    p = np.where(decided, p_high, p_low) + jitter
    return ProbabilitySignal(np.clip(p, 0.0, 1.0), ref.rate / max(1, int(round(ref.rate / rate))))


def gen_scenario(spec: ScenarioSpec, params: ScrParams | None = None,
                 name: str | None = None) -> ScenarioItem:
    """Build one deterministic item from ``spec``."""
    params = params or ScrParams()
    fs = spec.sample_rate
    n = int(round(spec.duration_s * fs))
    rng = np.random.default_rng(spec.seed)
    rng_d, rng_b, rng_leak, rng_vad = rng.spawn(4)

    musfx = synth_musfx(rng_b, n, fs)
    if spec.mode == "MUSFX":
        dialogue = np.zeros(n)
    else:
        dialogue = synth_dialogue(rng_d, n, fs)
    reps = (spec.channels, 1)
    d = SampleBuffer(np.tile(dialogue, reps), fs)
    b = SampleBuffer(np.tile(musfx, reps), fs)
    snr = spec.item_snr()
    if snr is not None and dialogue.any():
        b = scale_to_snr(d, b, snr)
    d_hat, b_hat = simulate_ds(d, b, spec.leak_gain, rng_leak)
    # the mixture is what the separator split, so d_hat + b_hat == x holds
    # bit-exactly; it differs from d + b only by rounding when leak_gain > 0
    x = d_hat.replace(d_hat.samples + b_hat.samples)
    if spec.vad_source == "energy":
        p_hat = energy_vad(x, config=spec.energy_vad)
    else:
        p_hat = standin_probability(d, params, rng_vad, spec.vad_rate, spec.vad_error_rate,
                                    spec.p_low, spec.p_high)
    return ScenarioItem(name or f"{spec.mode.lower()}_{spec.seed:04d}", spec.mode,
                        x, d, b, d_hat, b_hat, p_hat)
