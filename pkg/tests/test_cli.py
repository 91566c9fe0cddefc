import csv
import json
from pathlib import Path

import pytest

from reducto.cli import main
from reducto.harness import load_suite


@pytest.fixture(scope="module")
def bundle_path(corpus_dir):
    return str(Path(corpus_dir) / "b04_rate_of")


def test_slice_writes_artifacts(bundle_path, tmp_path):
    out = tmp_path / "out"
    assert main(["slice", bundle_path, "--out", str(out)]) == 0
    slice_text = (out / "slice.sl").read_text()
    assert "fn rate_of(total, count)" in slice_text
    log = json.loads((out / "deletion_log.json").read_text())
    assert set(log) == {"deleted", "mapping"}
    assert all(len(pair) == 2 for pair in log["mapping"])
    stats = json.loads((out / "slice_stats.json").read_text())
    assert set(stats) == {"orig_sloc", "slice_sloc", "percent"}
    assert stats["slice_sloc"] == 3


def test_reduce_tests_writes_loadable_suite(bundle_path, tmp_path):
    out = tmp_path / "out"
    assert main(["reduce-tests", bundle_path, "--out", str(out)]) == 0
    reduced = load_suite(out / "tests_reduced.json")  # same schema as tests.json
    assert len(reduced) == 5
    log = json.loads((out / "reduction_log.json").read_text())
    assert set(log) == {"kept", "removed"}
    assert len(log["kept"]) == 5
    assert all(set(entry) == {"id", "reason"} for entry in log["removed"])


def test_localize_writes_all_three_lists(bundle_path, tmp_path):
    out = tmp_path / "out"
    assert main(["localize", bundle_path, "--out", str(out)]) == 0
    for variant in ("L", "LP", "LR"):
        entries = json.loads((out / f"suspicious_{variant}.json").read_text())
        assert entries, variant
        assert set(entries[0]) == {"line", "score", "rank"}
        ranks = [e["rank"] for e in entries]
        assert ranks == list(range(1, len(entries) + 1))


def test_localize_single_list(bundle_path, tmp_path):
    out = tmp_path / "out"
    assert main(["localize", bundle_path, "--list", "LP", "--out", str(out)]) == 0
    assert (out / "suspicious_LP.json").exists()
    assert not (out / "suspicious_L.json").exists()


def test_stage_commands_accept_a_precomputed_slice(bundle_path, tmp_path):
    slice_dir = tmp_path / "sliced"
    assert main(["slice", bundle_path, "--out", str(slice_dir)]) == 0

    reduced_out = tmp_path / "reduced"
    assert main(["reduce-tests", bundle_path, "--slice", str(slice_dir),
                 "--out", str(reduced_out)]) == 0
    from_slice = json.loads((reduced_out / "reduction_log.json").read_text())

    fresh_out = tmp_path / "fresh"
    assert main(["reduce-tests", bundle_path, "--out", str(fresh_out)]) == 0
    fresh = json.loads((fresh_out / "reduction_log.json").read_text())
    assert from_slice == fresh

    loc_out = tmp_path / "loc"
    assert main(["localize", bundle_path, "--slice", str(slice_dir),
                 "--out", str(loc_out)]) == 0
    for variant in ("L", "LP", "LR"):
        assert (loc_out / f"suspicious_{variant}.json").exists()


def test_repair_writes_result(bundle_path, tmp_path):
    out = tmp_path / "out"
    assert main(["repair", bundle_path, "--config", "Ps-Ts-LP", "--out", str(out)]) == 0
    result = json.loads((out / "repair_result.json").read_text())
    assert set(result) == {
        "patched", "patch", "npc", "nte", "rt_ms", "cost_proxy", "br",
        "stop_reason", "transferred",
    }
    assert result["patched"] is True
    assert result["transferred"] is True
    assert result["patch"]["template"] == "T8"
    assert result["patch"]["new_text"].splitlines()[0] == "if count != 0"


def test_repair_rejects_non_viable_config(bundle_path, tmp_path):
    assert main(["repair", bundle_path, "--config", "Ps-T-L",
                 "--out", str(tmp_path)]) == 2


def test_repair_caps_flags(bundle_path, tmp_path):
    code = main(["repair", bundle_path, "--config", "P-T-L",
                 "--max-candidates", "0", "--out", str(tmp_path)])
    assert code == 1  # no patch under a zero candidate cap
    result = json.loads((tmp_path / "repair_result.json").read_text())
    assert result["patched"] is False
    assert result["npc"] == 0
    assert result["stop_reason"] == "max_candidates"


def test_experiment_csv_and_exit_codes(corpus_dir, tmp_path, capsys):
    out = tmp_path / "report.csv"
    code = main([
        "experiment", str(corpus_dir), "--configs", "P-T-L,P-Ts-L",
        "--out", str(out),
    ])
    assert code == 0  # both configurations patch every bundle
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 26  # 13 bundles x 2 configs
    assert {r["config"] for r in rows} == {"P-T-L", "P-Ts-L"}


def test_experiment_rejects_bad_config_names(corpus_dir, tmp_path):
    assert main(["experiment", str(corpus_dir), "--configs", "Ps-T-L"]) == 2
    assert main(["experiment", str(corpus_dir), "--configs", "nonsense"]) == 2


def test_experiment_missing_corpus_is_exit_two(tmp_path):
    assert main(["experiment", str(tmp_path / "nowhere")]) == 2


def test_experiment_json_format(corpus_dir, tmp_path):
    out = tmp_path / "report.json"
    code = main([
        "experiment", str(corpus_dir), "--configs", "P-T-L",
        "--out", str(out), "--format", "json",
    ])
    assert code == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 13
    assert rows[0]["config"] == "P-T-L"


def test_compare_over_two_reports(corpus_dir, tmp_path, capsys):
    base = tmp_path / "base.csv"
    other = tmp_path / "other.csv"
    assert main(["experiment", str(corpus_dir), "--configs", "P-T-L",
                 "--out", str(base)]) == 0
    code = main(["experiment", str(corpus_dir), "--configs", "Ps-Ts-LP",
                 "--out", str(other)])
    assert code == 1  # some bundles legitimately cannot be patched on the slice
    capsys.readouterr()
    assert main(["compare", str(base), str(other)]) == 0
    printed = capsys.readouterr().out
    assert "mean" in printed
    assert "b04_rate_of" in printed


def test_make_corpus_round_trip(tmp_path):
    out = tmp_path / "corpus"
    assert main(["make-corpus", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir())[:2] == ["b01_pick_max3", "b02_last_of"]
    assert (out / "b01_pick_max3" / "manifest.json").exists()


def test_unreadable_bundle_is_exit_two(tmp_path):
    assert main(["slice", str(tmp_path / "missing")]) == 2
