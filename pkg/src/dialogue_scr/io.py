"""WAV and CSV track I/O."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np
import soundfile as sf

from .signal import BinaryActivity, ProbabilitySignal, SampleBuffer


class InputFormatError(ValueError):
    """An input file could not be read as the expected format."""


# soundfile subtype names for the supported encodings
SUBTYPES = {"float": "FLOAT", "pcm16": "PCM_16", "pcm24": "PCM_24"}
_READABLE = {"FLOAT", "PCM_16", "PCM_24"}


def read_audio(path) -> SampleBuffer:
    """Read a 1- or 2-channel WAV (PCM16, PCM24 or float32) at full scale 1.0."""
    path = Path(path)
    try:
        info = sf.info(str(path))
    except (RuntimeError, sf.LibsndfileError) as exc:
        raise InputFormatError(f"{path}: not a readable audio file ({exc})") from exc
    if info.format != "WAV":
        raise InputFormatError(f"{path}: expected a RIFF/WAVE file, got {info.format}")
    if info.subtype not in _READABLE:
        raise InputFormatError(f"{path}: unsupported WAV encoding {info.subtype}; "
                               "use PCM_16, PCM_24 or FLOAT")
    if info.channels not in (1, 2):
        raise InputFormatError(f"{path}: {info.channels} channels, only mono/stereo supported")
    data, rate = sf.read(str(path), dtype="float64", always_2d=True)
    try:
        return SampleBuffer(data.T, rate)
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from exc


def write_audio(path, buf: SampleBuffer, encoding: str = "float") -> None:
    if encoding not in SUBTYPES:
        raise ValueError(f"encoding must be one of {sorted(SUBTYPES)}")
    data = buf.samples.T
    if encoding == "float":
        data = data.astype(np.float32)
    sf.write(str(path), data, int(buf.sample_rate), subtype=SUBTYPES[encoding], format="WAV")


def check_same_rate(buffers: dict[str, SampleBuffer]) -> float:
    """Sample rate shared by all ``buffers``; raises when they disagree."""
    rates = {name: b.sample_rate for name, b in buffers.items()}
    if len(set(rates.values())) > 1:
        listing = ", ".join(f"{k}={v:g} Hz" for k, v in rates.items())
        raise InputFormatError(f"sample rates differ across inputs ({listing}); "
                               "resample them before processing")
    return next(iter(rates.values()))


def read_track_csv(path, kind: str = "probability"):
    """Read a ``time_s,value`` track.

    ``kind`` is ``"probability"`` or ``"binary"``. The rate is inferred from
    the (uniform) row spacing; a single row is taken as 100 values/s.
    """
    if kind not in ("probability", "binary"):
        raise ValueError("kind must be 'probability' or 'binary'")
    path = Path(path)
    times, values = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["time_s", "value"]:
            raise InputFormatError(f"{path}: header must be 'time_s,value'")
        for row_no, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise InputFormatError(f"{path}: row {row_no}: expected 2 columns")
            try:
                t, v = float(row[0]), float(row[1])
            except ValueError as exc:
                raise InputFormatError(f"{path}: row {row_no}: {exc}") from exc
            if times and not t > times[-1]:
                raise InputFormatError(f"{path}: row {row_no}: time_s not increasing")
            if not math.isfinite(v):
                raise InputFormatError(f"{path}: row {row_no}: non-finite value")
            if kind == "probability" and not 0.0 <= v <= 1.0:
                raise InputFormatError(f"{path}: row {row_no}: probability {v} outside [0, 1]")
            if kind == "binary" and v not in (0.0, 1.0):
                raise InputFormatError(f"{path}: row {row_no}: activity {v} is not 0 or 1")
            times.append(t)
            values.append(v)
    if not values:
        raise InputFormatError(f"{path}: no data rows")
    if len(times) == 1:
        rate = 100.0
    else:
        steps = np.diff(times)
        step = (times[-1] - times[0]) / (len(times) - 1)
        bad = np.flatnonzero(np.abs(steps - step) > 1e-6 * step + 1e-9)
        if bad.size:
            raise InputFormatError(f"{path}: row {int(bad[0]) + 3}: non-uniform time spacing")
        rate = 1.0 / step
        if abs(rate - round(rate)) < 1e-6 * rate:
            rate = float(round(rate))
    cls = ProbabilitySignal if kind == "probability" else BinaryActivity
    return cls(np.array(values), rate)


def write_track_csv(path, track) -> None:
    """Write ``time_s,value`` rows; values keep 9 significant digits."""
    with Path(path).open("w", newline="") as fh:
        fh.write("time_s,value\n")
        for i, v in enumerate(track.values):
            fh.write(f"{i / track.rate!r},{v:.9g}\n")
