"""Sample-domain containers shared by the whole package.

All audio is held channel-first as float64 with full scale at +/-1.0, so any
dBFS figure refers to an amplitude of 1.0. Containers are frozen and their
arrays are marked read-only; every operation returns a new object.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


def sealed(arr: np.ndarray) -> np.ndarray:
    """Mark a freshly computed float64 array read-only so containers adopt it
    without copying. Only for arrays nobody else holds."""
    arr.setflags(write=False)
    return arr


def _frozen(values, ndim: int) -> np.ndarray:
    if isinstance(values, np.ndarray) and values.dtype == np.float64 and not values.flags.writeable:
        # already immutable, sharing it is safe
        arr = values
    else:
        arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampleBuffer:
    """Multichannel PCM audio, shape ``(channels, n_samples)``."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        arr = _frozen(arr, 2)
        if arr.shape[0] < 1:
            raise ValueError("a buffer needs at least one channel")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("buffer contains NaN or Inf")
        object.__setattr__(self, "samples", arr)

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def replace(self, samples) -> SampleBuffer:
        return SampleBuffer(samples, self.sample_rate)

    def trimmed(self, n: int) -> SampleBuffer:
        return SampleBuffer(self.samples[:, :n], self.sample_rate)

    def same_shape(self, other: SampleBuffer) -> bool:
        return (self.samples.shape == other.samples.shape
                and self.sample_rate == other.sample_rate)


@dataclass(frozen=True, eq=False)
class _Track:
    values: np.ndarray
    rate: float

    def __post_init__(self):
        arr = _frozen(self.values, 1)
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("track contains NaN or Inf")
        object.__setattr__(self, "values", arr)
        self._validate()

    def _validate(self):
        pass

    def __len__(self):
        return self.values.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.rate

    def trimmed(self, n: int):
        return type(self)(self.values[:n], self.rate)


class ProbabilitySignal(_Track):
    """Dialogue presence probability, one value per frame or per sample."""

    def _validate(self):
        if np.any((self.values < 0.0) | (self.values > 1.0)):
            bad = int(np.flatnonzero((self.values < 0.0) | (self.values > 1.0))[0])
            raise ValueError(f"probability out of [0, 1] at index {bad}: {self.values[bad]}")


class BinaryActivity(_Track):
    """Binary detection track with values in {0, 1}."""

    def _validate(self):
        if np.any((self.values != 0.0) & (self.values != 1.0)):
            bad = int(np.flatnonzero((self.values != 0.0) & (self.values != 1.0))[0])
            raise ValueError(f"activity value must be 0 or 1, index {bad} is {self.values[bad]}")

    def as_bool(self) -> np.ndarray:
        return self.values.astype(bool)


class GainSignal(_Track):
    """Per-sample gain track.

    Reassignment gains live in [0, 1]; remix or rescaled-probability tracks
    may exceed 1, so the range is only checked by :meth:`require_unit`.
    """

    def require_unit(self, name: str = "gain"):
        if np.any((self.values < 0.0) | (self.values > 1.0)):
            raise ValueError(f"{name} must lie in [0, 1]")
        return self


@dataclass(frozen=True, eq=False)
class Envelope:
    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values, 1)
        if np.any(arr < 0.0):
            raise ValueError("envelope values must be non-negative")
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.shape[0]

    @property
    def mean(self) -> float:
        return float(self.values.mean()) if len(self) else 0.0


def downmix_mono(buf: SampleBuffer) -> SampleBuffer:
    """Average all channels; a mono buffer is returned as-is."""
    if buf.channels == 1:
        return buf
    return buf.replace(buf.samples.mean(axis=0, keepdims=True))


def resample_probability(p: ProbabilitySignal, target_rate: float,
                         target_len: int) -> ProbabilitySignal:
    """Linearly interpolate a probability track onto a new time grid.

    Each value is anchored at the centre of its frame, ``(i + 0.5) / rate``,
    on both the source and the target grid, so resampling to the same rate is
    the identity. Points before the first or after the last frame centre hold
    the edge value.
    """
    if len(p) == 0:
        raise ValueError("cannot resample an empty probability track")
    if not target_rate > 0 or target_len <= 0:
        raise ValueError("target_rate and target_len must be positive")
    src_t = (np.arange(len(p)) + 0.5) / p.rate
    dst_t = (np.arange(target_len) + 0.5) / target_rate
    out = np.interp(dst_t, src_t, p.values)
    return ProbabilitySignal(np.clip(out, 0.0, 1.0), target_rate)


def common_length(*lengths: int, what: str = "inputs") -> int:
    """Shortest of several lengths, warning when they disagree."""
    n = min(lengths)
    if any(m != n for m in lengths):
        log.warning("length mismatch between %s %s; trimming to %d", what, list(lengths), n)
    return n
