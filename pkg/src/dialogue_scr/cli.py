"""Command-line entry point: ``dialogue-scr <command> ...``.

Exit codes: 0 success, 2 usage or config error, 3 unreadable or inconsistent
input, 4 processing invariant violated.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .evaluation import (
    ALL_METHODS,
    ITEM_FILES,
    ConservationError,
    check_conservation,
    format_value,
    load_items,
    merge_external,
    report_csv,
    report_table,
    run_batch,
)
from .io import (
    InputFormatError,
    check_same_rate,
    read_audio,
    read_track_csv,
    write_audio,
    write_track_csv,
)
from .metrics import frame_activity, loudness_normalize, si_sdr, vad_accuracy
from .scr import METHODS, apply_reassignment, compute_gain, remix
from .signal import BinaryActivity, common_length, downmix_mono, resample_probability
from .synth import MIX_SNRS_DB, ScenarioSpec, gen_scenario
from .vad import energy_vad, oracle_vad, refined_vad

log = logging.getLogger("dialogue_scr")

DEFAULT_SEED = 1234
EXIT_USAGE, EXIT_INPUT, EXIT_INVARIANT = 2, 3, 4


def to_rate(act: BinaryActivity, rate: float) -> BinaryActivity:
    """Majority-vote a sample-rate activity track down to ``rate``."""
    hop = max(1, int(round(act.rate / rate)))
    frames = frame_activity(act, 1000.0 * hop / act.rate)
    return BinaryActivity(frames.astype(np.float64), act.rate / hop)


def _float_or_inf(text: str) -> float:
    if text.strip().lower() in ("-inf", "mute"):
        return -math.inf
    return float(text)


def cmd_process(args, cfg) -> int:
    d_hat = read_audio(args.dialogue_est)
    b_hat = read_audio(args.background_est)
    inputs = {"dialogue_est": d_hat, "background_est": b_hat}
    oracle_d = None
    if args.oracle_dialogue:
        oracle_d = read_audio(args.oracle_dialogue)
        inputs["oracle_dialogue"] = oracle_d
    fs = check_same_rate(inputs)
    if d_hat.channels != b_hat.channels:
        raise InputFormatError("dialogue and background estimates differ in channel count")
    lengths = [b.n_samples for b in inputs.values()]
    n = common_length(*lengths, what="input signals")
    d_hat, b_hat = d_hat.trimmed(n), b_hat.trimmed(n)

    method = args.method or cfg.method
    p = v_hat = v_oracle = None
    if args.vad_prob:
        p = resample_probability(read_track_csv(args.vad_prob, "probability"), fs, n)
    if args.vad_bin:
        raw = read_track_csv(args.vad_bin, "binary")
        held = resample_probability(raw, fs, n)
        v_hat = BinaryActivity((held.values >= 0.5).astype(np.float64), fs)
    if oracle_d is not None:
        v_oracle = oracle_vad(oracle_d.trimmed(n), cfg.params)

    try:
        r_s = compute_gain(method, cfg.params, d_hat=d_hat, p=p, v_hat=v_hat,
                           v_oracle=v_oracle, vad_threshold=cfg.vad_threshold,
                           gate_p=cfg.gate_p)
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    d_r, b_r = apply_reassignment(d_hat, b_hat, r_s)
    check_conservation(d_hat, b_hat, d_r, b_r)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_audio(out / "dialogue_reassigned.wav", d_r, args.encoding)
    write_audio(out / "background_reassigned.wav", b_r, args.encoding)
    write_track_csv(out / "refined_vad.csv", to_rate(refined_vad(d_r, cfg.params), args.vad_rate))
    if args.write_gain:
        write_track_csv(out / "gain.csv", r_s)
    log.info("method %s: reassigned %.1f%% of samples", METHODS[method],
             100.0 * float(np.mean(r_s.values > 0)))
    return 0


def cmd_remix(args, cfg) -> int:
    d = read_audio(args.dialogue)
    b = read_audio(args.background)
    check_same_rate({"dialogue": d, "background": b})
    n = common_length(d.n_samples, b.n_samples, what="remix inputs")
    y = remix(d.trimmed(n), b.trimmed(n), args.gain_db)
    if args.match_loudness:
        ref = read_audio(args.match_loudness)
        y = loudness_normalize(y, ref, cfg.loudness_mode)
    write_audio(args.out, y, args.encoding)
    return 0


def cmd_oracle_vad(args, cfg) -> int:
    d = read_audio(args.dialogue)
    write_track_csv(args.out, to_rate(oracle_vad(d, cfg.params), args.rate))
    return 0


def cmd_energy_vad(args, cfg) -> int:
    x = read_audio(args.input)
    ev = cfg.energy_vad
    ar = (args.attack_ms or ev.attack_ms, args.release_ms or ev.release_ms)
    write_track_csv(args.out, energy_vad(x, ar, ev))
    return 0


def cmd_evaluate(args, cfg) -> int:
    result = {}
    if args.estimate:
        est = downmix_mono(read_audio(args.estimate))
        ref = downmix_mono(read_audio(args.reference))
        check_same_rate({"estimate": est, "reference": ref})
        n = common_length(est.n_samples, ref.n_samples, what="estimate/reference")
        est, ref = est.trimmed(n), ref.trimmed(n)
        if np.any(est.samples):
            est = loudness_normalize(est, ref, cfg.loudness_mode)
        result["si_sdr_db"] = si_sdr(est, ref)
    if args.est_vad:
        a = read_track_csv(args.est_vad, "binary")
        b = read_track_csv(args.ref_vad, "binary")
        result["vad"] = vad_accuracy(a, b, cfg.frame_ms).as_dict()
    if not result:
        log.error("nothing to evaluate: give --estimate/--reference and/or --est-vad/--ref-vad")
        return EXIT_USAGE

    if args.format == "json":
        text = json.dumps(result, indent=2, allow_nan=True) + "\n"
    else:
        flat = {"si_sdr_db": result.get("si_sdr_db", "")}
        flat.update({f"vad_{k}": v for k, v in result.get("vad", {}).items()})
        text = ",".join(flat) + "\n" + ",".join(str(v) for v in flat.values()) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _spec_from_args(args, cfg, seed: int) -> ScenarioSpec:
    return ScenarioSpec(
        mode=args.mode,
        snr_db=args.snr_db if args.snr_db else None,
        leak_gain=args.leak_gain,
        duration_s=args.duration,
        seed=seed,
        sample_rate=args.sample_rate,
        channels=args.channels,
        vad_source=args.vad_source,
        vad_error_rate=args.vad_error_rate,
        energy_vad=cfg.energy_vad,
    )


def cmd_synth(args, cfg) -> int:
    out = Path(args.out_dir)
    for i in range(args.count):
        spec = _spec_from_args(args, cfg, args.seed + i)
        item = gen_scenario(spec, cfg.params)
        item_dir = out / item.name
        item_dir.mkdir(parents=True, exist_ok=True)
        for key in ("x", "d", "b", "d_hat", "b_hat"):
            write_audio(item_dir / ITEM_FILES[key], getattr(item, key), "float")
        write_track_csv(item_dir / ITEM_FILES["p_hat"], item.p_hat)
        log.info("wrote %s", item_dir)
    return 0


def cmd_batch(args, cfg) -> int:
    methods = args.methods or list(ALL_METHODS)
    if args.items:
        items = load_items(args.items, args.mode, cfg,
                           leak_gain=args.simulate_leak, vad_standin=args.vad_standin,
                           seed=args.seed)
    else:
        items = [_spec_from_args(args, cfg, args.seed + i) for i in range(args.count)]
    result = run_batch(items, methods, cfg, jobs=args.jobs)
    rows = result.rows
    if args.external:
        rows = merge_external(rows, args.external)
    text = report_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    if args.per_item:
        with Path(args.per_item).open("w") as fh:
            fh.write("item,method,si_sdr_db,vad_accuracy_percent\n")
            for rec in result.per_item:
                cells = [rec["item"], rec["method"],
                         format_value(rec["si_sdr_db"]), format_value(rec["vad_accuracy_percent"])]
                fh.write(",".join(cells) + "\n")
    sys.stdout.write(report_table(rows) if args.table or not args.out else "")
    return 0


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("MIX", "MUSFX"), default="MIX")
    p.add_argument("--snr-db", type=float, nargs="*", default=None,
                   help=f"one or more SNRs; items cycle through them (e.g. {MIX_SNRS_DB})")
    p.add_argument("--leak-gain", type=float, default=0.1)
    p.add_argument("--duration", type=float, default=10.0, help="seconds per item")
    p.add_argument("--sample-rate", type=int, default=48000)
    p.add_argument("--channels", type=int, choices=(1, 2), default=1)
    p.add_argument("--vad-source", choices=("oracle", "energy"), default="oracle")
    p.add_argument("--vad-error-rate", type=float, default=0.0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"base seed; item i uses seed + i (default {DEFAULT_SEED})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dialogue-scr", description=(
        "Reassign background leakage from a separated dialogue track using voice "
        "activity, and evaluate the result."))
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="reassign leakage for one item")
    p.add_argument("--dialogue-est", required=True)
    p.add_argument("--background-est", required=True)
    p.add_argument("--vad-prob", help="CSV probability track")
    p.add_argument("--vad-bin", help="CSV binary VAD track")
    p.add_argument("--oracle-dialogue", help="clean dialogue WAV for the oracle method")
    p.add_argument("--method", choices=sorted(METHODS))
    p.add_argument("--out-dir", required=True)
    p.add_argument("--encoding", choices=("float", "pcm16", "pcm24"), default="float")
    p.add_argument("--vad-rate", type=float, default=100.0, help="refined VAD CSV rate")
    p.add_argument("--write-gain", action="store_true", help="also write the per-sample gain")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("remix", help="dialogue + g * background")
    p.add_argument("--dialogue", required=True)
    p.add_argument("--background", required=True)
    p.add_argument("--gain-db", type=_float_or_inf, default=0.0,
                   help="background gain in dB; 'mute' (or --gain-db=-inf) drops it")
    p.add_argument("--match-loudness", help="scale the result to this file's loudness")
    p.add_argument("--out", required=True)
    p.add_argument("--encoding", choices=("float", "pcm16", "pcm24"), default="float")
    p.set_defaults(func=cmd_remix)

    p = sub.add_parser("oracle-vad", help="reference VAD from clean dialogue")
    p.add_argument("--dialogue", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rate", type=float, default=100.0)
    p.set_defaults(func=cmd_oracle_vad)

    p = sub.add_parser("energy-vad", help="energy-based speech probability")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--attack-ms", type=float)
    p.add_argument("--release-ms", type=float)
    p.set_defaults(func=cmd_energy_vad)

    p = sub.add_parser("evaluate", help="SI-SDR and/or VAD accuracy")
    p.add_argument("--estimate")
    p.add_argument("--reference")
    p.add_argument("--est-vad")
    p.add_argument("--ref-vad")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="write synthetic item directories")
    _add_scenario_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("batch", help="evaluate all methods over many items")
    _add_scenario_flags(p)
    p.add_argument("--items", help="directory of item folders (default: generate)")
    p.add_argument("--simulate-leak", type=float, default=None,
                   help="simulate separation outputs missing from --items with this leak gain")
    p.add_argument("--vad-standin", choices=("energy", "oracle"),
                   help="stand-in for a missing vad_prob.csv")
    p.add_argument("--methods", nargs="+", choices=ALL_METHODS)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="report CSV")
    p.add_argument("--per-item", help="per-item score CSV")
    p.add_argument("--external", help="CSV with method,2f,pesq columns to merge in")
    p.add_argument("--table", action="store_true", help="print the text table")
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in ("synth", "batch") and getattr(args, "count", 1) < 1:
        parser.error("--count must be at least 1")
    if args.command == "evaluate" and bool(args.estimate) != bool(args.reference):
        parser.error("--estimate and --reference go together")
    if args.command == "evaluate" and bool(args.est_vad) != bool(args.ref_vad):
        parser.error("--est-vad and --ref-vad go together")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        log.error("config: %s", exc)
        return EXIT_USAGE
    except (InputFormatError, FileNotFoundError) as exc:
        log.error("input: %s", exc)
        return EXIT_INPUT
    except ConservationError as exc:
        log.error("invariant: %s", exc)
        return EXIT_INVARIANT
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
