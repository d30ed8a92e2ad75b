"""Batch evaluation of all post-processing methods over a set of items.

Each item is scored once per method. In MIX mode the dialogue output is
compared with the reference dialogue; in MUSFX mode the background output is
compared with the reference music+effects. Outputs are loudness-matched to
their reference before scoring. VAD accuracy compares the refined VAD (or,
for the ``VAD`` row, the thresholded probability) with the oracle VAD.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import Config
from .io import InputFormatError, check_same_rate, read_audio, read_track_csv
from .metrics import loudness_normalize, si_sdr, vad_accuracy
from .scr import METHODS, apply_reassignment, compute_gain
from .signal import SampleBuffer, common_length, downmix_mono, resample_probability
from .synth import ScenarioItem, ScenarioSpec, gen_scenario, simulate_ds, standin_probability
from .vad import binarize_probability, energy_vad, oracle_vad, refined_vad

log = logging.getLogger(__name__)

ROW_ORDER = ("Input", "DS", "VAD", "DS+threshold", "DS+VAD-d", "DS+VAD-v", "DS+VAD-p",
             "DS+oracleVAD")
ALL_METHODS = tuple(METHODS)
CONSERVATION_TOL = 1e-6

# per-item directory layout
ITEM_FILES = {
    "x": "mixture.wav",
    "d": "dialogue.wav",
    "b": "background.wav",
    "d_hat": "dialogue_est.wav",
    "b_hat": "background_est.wav",
    "p_hat": "vad_prob.csv",
}


class ConservationError(RuntimeError):
    """Reassigned outputs no longer sum to the separated inputs."""


@dataclass
class EvalRow:
    method: str
    si_sdr_db: float | None = None
    vad_accuracy_percent: float | None = None
    twof: float | None = None
    pesq: float | None = None
    n_items: int = 0


@dataclass
class BatchResult:
    rows: list[EvalRow]
    per_item: list[dict]

    def row(self, method: str) -> EvalRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def item_scores(self, method: str, key: str = "si_sdr_db") -> list[float]:
        return [rec[key] for rec in self.per_item if rec["method"] == method]


def _score(est: SampleBuffer, ref: SampleBuffer, loudness_mode: str) -> float:
    est_m, ref_m = downmix_mono(est), downmix_mono(ref)
    if not np.any(est_m.samples):
        return -math.inf
    return si_sdr(loudness_normalize(est_m, ref_m, loudness_mode), ref_m)


def check_conservation(d_hat, b_hat, d_r, b_r, tol: float = CONSERVATION_TOL) -> float:
    err = float(np.max(np.abs((d_r.samples + b_r.samples) - (d_hat.samples + b_hat.samples))))
    if err > tol:
        raise ConservationError(f"d_R + b_R deviates from d_hat + b_hat by {err:.3g}")
    return err


def evaluate_item(item: ScenarioItem, methods: Sequence[str], config: Config) -> list[dict]:
    """Per-method scores for one item, as a list of flat records."""
    params = config.params
    mode = item.mode
    n = common_length(item.x.n_samples, item.d.n_samples, item.b.n_samples,
                      item.d_hat.n_samples, item.b_hat.n_samples, what=f"{item.name} signals")
    x, d, b = item.x.trimmed(n), item.d.trimmed(n), item.b.trimmed(n)
    d_hat, b_hat = item.d_hat.trimmed(n), item.b_hat.trimmed(n)
    fs = d_hat.sample_rate
    p = resample_probability(item.p_hat, fs, n)

    v_ref = oracle_vad(d, params)
    ref = d if mode == "MIX" else b
    records = []

    def add(method, sdr=None, acc=None):
        records.append(dict(item=item.name, method=method, si_sdr_db=sdr,
                            vad_accuracy_percent=acc))

    add("Input", _score(x, ref, config.loudness_mode))
    add("DS", _score(d_hat if mode == "MIX" else b_hat, ref, config.loudness_mode))
    v_hat = binarize_probability(p, config.vad_threshold)
    add("VAD", acc=vad_accuracy(v_hat, v_ref, config.frame_ms).accuracy_percent)

    for m in methods:
        r_s = compute_gain(m, params, d_hat=d_hat, p=p, v_hat=v_hat, v_oracle=v_ref,
                           gate_p=config.gate_p)
        d_r, b_r = apply_reassignment(d_hat, b_hat, r_s)
        check_conservation(d_hat, b_hat, d_r, b_r)
        out = d_r if mode == "MIX" else b_r
        acc = vad_accuracy(refined_vad(d_r, params), v_ref, config.frame_ms).accuracy_percent
        add(METHODS[m], _score(out, ref, config.loudness_mode), acc)
    return records


def _mean(values: list[float]) -> float | None:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    if any(math.isinf(v) for v in vals):
        # inf - inf would give nan; keep the sentinel semantics instead
        return math.inf if all(v > 0 for v in vals if math.isinf(v)) else -math.inf
    return float(np.mean(vals))


def aggregate(per_item: list[dict]) -> list[EvalRow]:
    rows = []
    for method in ROW_ORDER:
        recs = [r for r in per_item if r["method"] == method]
        if not recs:
            continue
        rows.append(EvalRow(
            method=method,
            si_sdr_db=_mean([r["si_sdr_db"] for r in recs]),
            vad_accuracy_percent=_mean([r["vad_accuracy_percent"] for r in recs]),
            n_items=len(recs),
        ))
    return rows


def _eval_job(args):
    item, methods, config = args
    if isinstance(item, ScenarioSpec):
        item = gen_scenario(item, config.params)
    return evaluate_item(item, methods, config)


def run_batch(items: Iterable[ScenarioItem | ScenarioSpec], methods: Sequence[str] = ALL_METHODS,
              config: Config | None = None, jobs: int = 1) -> BatchResult:
    """Score every item with every method and average per method.

    ``items`` may mix loaded items and :class:`ScenarioSpec` recipes; recipes
    are generated lazily (inside the worker when ``jobs > 1``). Results do not
    depend on ``jobs``.
    """
    config = config or Config()
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    work = [(it, tuple(methods), config) for it in items]
    if not work:
        raise ValueError("no items to evaluate")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_eval_job, work))
    else:
        results = [_eval_job(w) for w in work]
    per_item = [rec for recs in results for rec in recs]
    return BatchResult(aggregate(per_item), per_item)


def load_item_dir(path, mode: str, config: Config | None = None, leak_gain: float | None = None,
                  vad_standin: str | None = None, seed: int = 0) -> ScenarioItem:
    """Load one item directory laid out as in ``ITEM_FILES``.

    Missing separation outputs are simulated when ``leak_gain`` is given;
    a missing probability track is replaced when ``vad_standin`` is
    ``"energy"`` or ``"oracle"``. Otherwise a missing file raises
    :class:`FileNotFoundError`.
    """
    config = config or Config()
    path = Path(path)
    found = {k: path / f for k, f in ITEM_FILES.items() if (path / f).exists()}
    audio = {k: read_audio(found[k]) for k in ("x", "d", "b", "d_hat", "b_hat") if k in found}
    if "b" not in audio:
        raise FileNotFoundError(f"{path}: missing {ITEM_FILES['b']}")
    if "d" not in audio:
        if mode == "MIX":
            raise FileNotFoundError(f"{path}: missing {ITEM_FILES['d']}")
        audio["d"] = audio["b"].replace(np.zeros_like(audio["b"].samples))
    check_same_rate(audio)
    if "x" not in audio:
        audio["x"] = audio["d"].replace(audio["d"].samples + audio["b"].samples)

    rng = np.random.default_rng(seed)
    if "d_hat" not in audio or "b_hat" not in audio:
        if leak_gain is None:
            raise FileNotFoundError(f"{path}: missing separation outputs and no stand-in requested")
        audio["d_hat"], audio["b_hat"] = simulate_ds(audio["d"], audio["b"], leak_gain, rng)
        audio["x"] = audio["d_hat"].replace(audio["d_hat"].samples + audio["b_hat"].samples)

    if "p_hat" in found:
        p_hat = read_track_csv(found["p_hat"], "probability")
    elif vad_standin == "energy":
        p_hat = energy_vad(audio["x"], config=config.energy_vad)
    elif vad_standin == "oracle":
        p_hat = standin_probability(audio["d"], config.params, rng)
    else:
        raise FileNotFoundError(f"{path}: missing {ITEM_FILES['p_hat']} and no stand-in requested")
    return ScenarioItem(path.name, mode, audio["x"], audio["d"], audio["b"],
                        audio["d_hat"], audio["b_hat"], p_hat)


def load_items(root, mode: str, config: Config | None = None, seed: int = 0,
               **kwargs) -> list[ScenarioItem]:
    """Every loadable item directory under ``root``, sorted by name.

    Stand-ins for item ``i`` (in sorted order) are drawn with ``seed + i``.
    Directories that cannot be loaded are skipped with a logged reason.
    """
    items = []
    for i, sub in enumerate(sorted(p for p in Path(root).iterdir() if p.is_dir())):
        try:
            items.append(load_item_dir(sub, mode, config, seed=seed + i, **kwargs))
        except (FileNotFoundError, InputFormatError) as exc:
            log.warning("skipping item %s: %s", sub.name, exc)
    if not items:
        raise ValueError(f"no usable items under {root}")
    return items


def format_value(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if math.isinf(value):
        return "+Inf" if value > 0 else "-Inf"
    return f"{value:.3f}"


REPORT_COLUMNS = ("method", "si_sdr_db", "vad_accuracy_percent", "2f", "pesq", "n_items")


def _cells(row: EvalRow) -> list[str]:
    return [row.method, format_value(row.si_sdr_db), format_value(row.vad_accuracy_percent),
            format_value(row.twof), format_value(row.pesq), str(row.n_items)]


def report_csv(rows: Sequence[EvalRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow(_cells(row))
    return buf.getvalue()


def report_table(rows: Sequence[EvalRow]) -> str:
    """Fixed-width text table; empty metric cells print as ``--``."""
    header = ["method", "SI-SDR (dB)", "VAD acc. (%)", "2f", "PESQ", "items"]
    body = [[c if c else "--" for c in _cells(r)] for r in rows]
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = []
    for r in [header] + body:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells))
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def merge_external(rows: Sequence[EvalRow], path) -> list[EvalRow]:
    """Fill the 2f/PESQ columns from a CSV with columns ``method,2f,pesq``."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "method" not in reader.fieldnames:
            raise InputFormatError(f"{path}: needs a 'method' column")
        ext = {r["method"]: r for r in reader}
    out = []
    for row in rows:
        e = ext.get(row.method, {})
        twof = float(e["2f"]) if e.get("2f") else row.twof
        pesq = float(e["pesq"]) if e.get("pesq") else row.pesq
        out.append(EvalRow(row.method, row.si_sdr_db, row.vad_accuracy_percent, twof, pesq,
                           row.n_items))
    return out
