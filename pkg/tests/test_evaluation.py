import math

import numpy as np
import pytest

from dialogue_scr import SampleBuffer
from dialogue_scr.config import Config
from dialogue_scr.evaluation import (
    ALL_METHODS,
    ConservationError,
    EvalRow,
    ROW_ORDER,
    check_conservation,
    format_value,
    load_item_dir,
    load_items,
    merge_external,
    report_csv,
    report_table,
    run_batch,
)
from dialogue_scr.io import write_audio, write_track_csv
from dialogue_scr.synth import ScenarioSpec, gen_scenario

FS = 16000


def specs(mode="MIX", n=3, **kw):
    return [ScenarioSpec(mode=mode, duration_s=4, sample_rate=FS, seed=s, **kw) for s in range(n)]


def write_item(root, item, skip=()):
    files = {"x": "mixture.wav", "d": "dialogue.wav", "b": "background.wav",
             "d_hat": "dialogue_est.wav", "b_hat": "background_est.wav"}
    path = root / item.name
    path.mkdir(parents=True)
    for key, name in files.items():
        if key not in skip:
            write_audio(path / name, getattr(item, key))
    if "p_hat" not in skip:
        write_track_csv(path / "vad_prob.csv", item.p_hat)
    return path


class TestRunBatch:
    def test_rows_in_order(self):
        res = run_batch(specs(n=2))
        assert [r.method for r in res.rows] == list(ROW_ORDER)
        assert all(r.n_items == 2 for r in res.rows)
        assert res.row("VAD").si_sdr_db is None
        assert res.row("Input").vad_accuracy_percent is None

    def test_deterministic(self):
        a = report_csv(run_batch(specs()).rows)
        b = report_csv(run_batch(specs()).rows)
        assert a == b

    def test_jobs_do_not_change_results(self):
        a = report_csv(run_batch(specs(), jobs=1).rows)
        b = report_csv(run_batch(specs(), jobs=2).rows)
        assert a == b

    def test_no_leak_oracle_is_perfect(self):
        res = run_batch(specs(leak_gain=0.0, n=2), methods=["oracle"])
        assert res.row("DS+oracleVAD").si_sdr_db == math.inf
        assert res.row("DS+oracleVAD").vad_accuracy_percent == 100.0

    def test_musfx_scores_background(self):
        res = run_batch(specs("MUSFX", n=2, p_high=0.2), methods=["p"])
        assert res.row("DS+VAD-p").si_sdr_db == math.inf
        assert res.row("DS").si_sdr_db < 40

    def test_bad_method(self):
        with pytest.raises(ValueError):
            run_batch(specs(n=1), methods=["q"])

    def test_empty(self):
        with pytest.raises(ValueError):
            run_batch([])


def test_conservation_check(rng):
    a = SampleBuffer(rng.standard_normal(100), FS)
    b = SampleBuffer(rng.standard_normal(100), FS)
    assert check_conservation(a, b, b, a) <= 1e-15
    with pytest.raises(ConservationError):
        check_conservation(a, b, a, a)


class TestLoading:
    def test_roundtrip(self, tmp_path):
        item = gen_scenario(specs(n=1)[0])
        path = write_item(tmp_path, item)
        loaded = load_item_dir(path, "MIX")
        np.testing.assert_allclose(loaded.d_hat.samples, item.d_hat.samples, atol=1e-7)
        np.testing.assert_allclose(loaded.p_hat.values, item.p_hat.values, atol=1e-8)

    def test_missing_estimates_need_leak(self, tmp_path):
        item = gen_scenario(specs(n=1)[0])
        path = write_item(tmp_path, item, skip=("d_hat", "b_hat"))
        with pytest.raises(FileNotFoundError):
            load_item_dir(path, "MIX")
        loaded = load_item_dir(path, "MIX", leak_gain=0.1)
        assert loaded.d_hat.n_samples == item.d.n_samples

    def test_missing_probability_standins(self, tmp_path):
        item = gen_scenario(specs(n=1)[0])
        path = write_item(tmp_path, item, skip=("p_hat",))
        with pytest.raises(FileNotFoundError):
            load_item_dir(path, "MIX")
        assert load_item_dir(path, "MIX", vad_standin="energy").p_hat.rate == 100
        assert load_item_dir(path, "MIX", vad_standin="oracle").p_hat.rate == 100

    def test_musfx_without_dialogue(self, tmp_path):
        item = gen_scenario(specs("MUSFX", n=1)[0])
        path = write_item(tmp_path, item, skip=("d", "x"))
        loaded = load_item_dir(path, "MUSFX")
        assert not np.any(loaded.d.samples)

    def test_bad_items_skipped(self, tmp_path, caplog):
        for spec in specs(n=2):
            write_item(tmp_path, gen_scenario(spec))
        (tmp_path / "zz_broken").mkdir()
        (tmp_path / "zz_broken" / "background.wav").write_text("not audio")
        items = load_items(tmp_path, "MIX")
        assert [i.name for i in items] == ["mix_0000", "mix_0001"]
        assert "zz_broken" in caplog.text

    def test_mixed_rates_rejected(self, tmp_path):
        item = gen_scenario(specs(n=1)[0])
        path = write_item(tmp_path, item)
        write_audio(path / "dialogue.wav", SampleBuffer(item.d.samples, 8000))
        with pytest.raises(ValueError, match="sample rates"):
            load_item_dir(path, "MIX")


class TestReports:
    rows = [EvalRow("DS", 12.3456, None, n_items=2), EvalRow("DS+VAD-p", math.inf, 99.5, n_items=2)]

    def test_format(self):
        assert format_value(None) == ""
        assert format_value(math.inf) == "+Inf"
        assert format_value(-math.inf) == "-Inf"
        assert format_value(1.23456) == "1.235"

    def test_csv(self):
        text = report_csv(self.rows)
        assert text.splitlines() == ["method,si_sdr_db,vad_accuracy_percent,2f,pesq,n_items",
                                     "DS,12.346,,,,2", "DS+VAD-p,+Inf,99.500,,,2"]

    def test_table_has_placeholders(self):
        lines = report_table(self.rows).splitlines()
        assert lines[0].startswith("method")
        assert "--" in lines[2]
        assert "+Inf" in lines[3]

    def test_external_merge(self, tmp_path):
        ext = tmp_path / "ext.csv"
        ext.write_text("method,2f,pesq\nDS+VAD-p,41.2,3.1\nunused,1,1\n")
        merged = merge_external(self.rows, ext)
        assert merged[1].twof == 41.2 and merged[1].pesq == 3.1
        assert merged[0].twof is None

    def test_external_without_method_column(self, tmp_path):
        ext = tmp_path / "ext.csv"
        ext.write_text("name,2f\nDS,1\n")
        with pytest.raises(ValueError):
            merge_external(self.rows, ext)


def test_all_methods_exposed():
    assert set(ALL_METHODS) == {"threshold", "d", "v", "p", "oracle"}
