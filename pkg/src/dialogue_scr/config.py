"""Run configuration: flat ``key = value`` files with documented defaults.

Recognised keys (anything else is rejected)::

    p_in_min = 0.3          # probability clip range
    p_in_max = 0.7
    p_out_min = 0           # rescaled probability range
    p_out_max = 2
    w_len = 600             # envelope window, ms
    t_rel = -20             # dB under the envelope mean
    t_abs_z = -45           # dBFS floor for the control-signal envelope
    t_abs_v = -40           # dBFS floor for oracle/refined VAD envelopes
    c_f = 6.9e-5            # smoother coefficient
    w_fill = 500            # longest gap closed in VAD tracks, ms
    t_r = 0.2               # smoothed gains below this are zeroed

    method = p              # threshold | d | v | p | oracle
    vad_threshold = 0.5     # probability -> binary VAD, active on >=
    gate_p = true           # apply the t_r gate to threshold/p methods
    loudness_mode = rms     # rms | gated
    frame_ms = 10           # VAD accuracy frame
    energy_attack_ms = 10
    energy_release_ms = 200
    energy_frame_ms = 10
    energy_center_db = -35
    energy_slope = 0.3

Comments start with ``#`` or ``;``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .activity import ScrParams
from .metrics import LOUDNESS_MODES
from .scr import METHODS
from .vad import EnergyVadConfig


class ConfigError(ValueError):
    pass


_ENERGY_KEYS = {
    "energy_attack_ms": "attack_ms",
    "energy_release_ms": "release_ms",
    "energy_frame_ms": "frame_ms",
    "energy_center_db": "center_db",
    "energy_slope": "slope",
}


@dataclass(frozen=True)
class Config:
    params: ScrParams = field(default_factory=ScrParams)
    method: str = "p"
    vad_threshold: float = 0.5
    gate_p: bool = True
    loudness_mode: str = "rms"
    frame_ms: float = 10.0
    energy_vad: EnergyVadConfig = field(default_factory=EnergyVadConfig)


def _read_pairs(path: Path) -> dict[str, str]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string("[config]\n" + path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: malformed config: {exc}") from exc
    return dict(parser["config"])


def _as_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def load_config(path=None) -> Config:
    """Parse a config file; missing file or keys fall back to defaults."""
    if path is None:
        return Config()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    pairs = _read_pairs(path)

    param_names = {f.name for f in fields(ScrParams)}
    param_kw, energy_kw, top = {}, {}, {}
    for key, raw in pairs.items():
        if key in param_names:
            param_kw[key] = _as_float(key, raw)
        elif key in _ENERGY_KEYS:
            energy_kw[_ENERGY_KEYS[key]] = _as_float(key, raw)
        elif key in ("vad_threshold", "frame_ms"):
            top[key] = _as_float(key, raw)
        elif key == "gate_p":
            lowered = raw.strip().lower()
            if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ConfigError(f"gate_p: expected true/false, got {raw!r}")
            top[key] = configparser.ConfigParser.BOOLEAN_STATES[lowered]
        elif key == "method":
            if raw not in METHODS:
                raise ConfigError(f"method: {raw!r} is not one of {sorted(METHODS)}")
            top[key] = raw
        elif key == "loudness_mode":
            if raw not in LOUDNESS_MODES:
                raise ConfigError(f"loudness_mode: {raw!r} is not one of {LOUDNESS_MODES}")
            top[key] = raw
        else:
            raise ConfigError(f"{key}: unknown config key")

    try:
        params = ScrParams(**param_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        energy = EnergyVadConfig(**energy_kw)
    except ValueError as exc:
        raise ConfigError(f"energy_*: {exc}") from None
    if not 0.0 <= top.get("vad_threshold", 0.5) <= 1.0:
        raise ConfigError("vad_threshold: must lie in [0, 1]")
    if top.get("frame_ms", 10.0) <= 0:
        raise ConfigError("frame_ms: must be positive")
    return Config(params=params, energy_vad=energy, **top)


def load_params(path=None) -> ScrParams:
    """Reassignment parameters from ``path``, defaulting every missing key."""
    return load_config(path).params
