import csv
import io
import json

import pytest

from reducto.experiment import (
    BundleArtifacts,
    CSV_COLUMNS,
    ManifestError,
    NonViableConfig,
    RepairConfig,
    RepairReport,
    all_configs,
    compare,
    config_by_name,
    emit_report,
    load_bundle,
    load_corpus,
    run_config,
    run_lattice,
    viable_configs,
)
from reducto.harness import MultiAssertTest
from reducto.repair import RepairCaps
from reducto.slicer import NoFailingTests


# ---------------------------------------------------------------------------
# configurations

def test_exactly_eight_viable_configs():
    configs = viable_configs()
    assert len(configs) == 8
    assert [c.name for c in configs] == [
        "P-T-L", "P-T-LR", "P-T-LP",
        "P-Ts-L", "P-Ts-LR", "P-Ts-LP",
        "Ps-Ts-LR", "Ps-Ts-LP",
    ]
    as_tuples = {(c.program, c.suite, c.suspicious) for c in configs}
    assert as_tuples == {
        ("P", "T", "L"), ("P", "T", "LR"), ("P", "T", "LP"),
        ("P", "Ts", "L"), ("P", "Ts", "LR"), ("P", "Ts", "LP"),
        ("Ps", "Ts", "LR"), ("Ps", "Ts", "LP"),
    }


def test_twelve_combinations_four_non_viable():
    combos = all_configs()
    assert len(combos) == 12
    red = {c.name for c in combos if not c.viable}
    assert red == {"Ps-T-L", "Ps-T-LR", "Ps-T-LP", "Ps-Ts-L"}
    assert not RepairConfig("Ps", "T", "L").viable
    assert RepairConfig("P", "Ts", "LP").viable


def test_config_names_round_trip():
    for config in all_configs():
        assert config_by_name(config.name) == config
    with pytest.raises(ValueError):
        config_by_name("P-T")
    with pytest.raises(ValueError):
        config_by_name("Px-T-L")


# ---------------------------------------------------------------------------
# bundles

def test_load_bundle_happy_path(corpus_dir):
    bundle = load_bundle(corpus_dir / "b01_pick_max3")
    assert bundle.name == "b01_pick_max3"
    assert bundle.ground_truth.bug_line == 22
    assert bundle.baseline_run.failing


def test_load_bundle_errors(tmp_path):
    with pytest.raises(ManifestError):
        load_bundle(tmp_path / "missing")

    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "manifest.json").write_text("{not json")
    with pytest.raises(ManifestError):
        load_bundle(bad)

    (bad / "manifest.json").write_text(json.dumps({"program": "p.sl"}))
    with pytest.raises(ManifestError):
        load_bundle(bad)

    (bad / "manifest.json").write_text(json.dumps({"program": "p.sl", "tests": "t.json"}))
    with pytest.raises(ManifestError):
        load_bundle(bad)  # files missing

    (bad / "p.sl").write_text("fn f(a)\nreturn a\nend\n")
    (bad / "t.json").write_text(json.dumps([
        {"id": "t", "call": {"fn": "f", "args": [{"int": 1}]}, "expect": {"value": {"int": 1}}},
    ]))
    with pytest.raises(NoFailingTests):
        load_bundle(bad)

    (bad / "t.json").write_text(json.dumps([
        {"id": "t", "call": {"fn": "f", "args": [{"int": 1}]},
         "expect": {"value": {"int": 1}, "error": "DivByZero"}},
    ]))
    with pytest.raises(MultiAssertTest):
        load_bundle(bad)

    (bad / "p.sl").write_text("fn f(a\nreturn a\nend\n")
    (bad / "t.json").write_text(json.dumps([
        {"id": "t", "call": {"fn": "f", "args": [{"int": 1}]}, "expect": {"value": {"int": 2}}},
    ]))
    with pytest.raises(ManifestError):
        load_bundle(bad)  # unparseable program


def test_load_corpus_requires_bundles(tmp_path):
    with pytest.raises(ManifestError):
        load_corpus(tmp_path)


# ---------------------------------------------------------------------------
# run_config / lattice

def test_non_viable_config_rejected_before_any_work(corpus_artifacts):
    artifacts, _ = corpus_artifacts
    art = artifacts["b01_pick_max3"]
    with pytest.raises(NonViableConfig):
        run_config(art, RepairConfig("Ps", "T", "L"))


def test_baseline_golden_values_b01(corpus_artifacts):
    """Pinned from the deterministic pipeline; the enumeration itself is
    hand-verified in test_repair on the small max3 fixture."""
    artifacts, _ = corpus_artifacts
    report = run_config(artifacts["b01_pick_max3"], RepairConfig("P", "T", "L"))
    assert report.patched
    assert report.patch_line == 22
    assert report.br == 7
    assert report.npc == 35
    assert report.tss_t == 105 and report.tss_ts == 7
    assert report.sloc_p == 65 and report.sloc_ps == 7
    assert report.gt_location_match is True
    assert report.gt_text_match is True  # T9 lands exactly on `if c > m`


def test_artifact_sharing_matches_fresh_computation(corpus_bundles):
    bundle = next(b for b in corpus_bundles if b.name == "b09_rect_area")
    art = BundleArtifacts(bundle)
    from reducto.faultloc import localize, prune_list, regenerate_list, suspicious_json
    from reducto.slicer import SliceSettings, build_criterion, orbs_slice
    from reducto.suite_reducer import reduce_suite

    criterion, baseline = build_criterion(bundle.program, bundle.suite)
    fresh_slice = orbs_slice(bundle.program, criterion, baseline, SliceSettings())
    assert fresh_slice.slice.lines == art.slice_result.slice.lines
    fresh_reduced = reduce_suite(
        bundle.program, fresh_slice.slice, fresh_slice.mapping, bundle.suite
    )
    assert fresh_reduced.kept.ids() == art.reduced.kept.ids()
    assert suspicious_json(localize(bundle.program, bundle.suite)) == suspicious_json(
        art.list_original
    )
    assert suspicious_json(prune_list(art.list_original, fresh_slice.mapping)) == (
        suspicious_json(art.list_pruned)
    )
    assert suspicious_json(
        regenerate_list(fresh_slice.slice, fresh_reduced.kept, fresh_slice.mapping)
    ) == suspicious_json(art.list_regenerated)


def test_cross_config_consistency(corpus_artifacts):
    artifacts, _ = corpus_artifacts
    for art in artifacts.values():
        reports = [run_config(art, c) for c in viable_configs()]
        assert len({r.tss_ts for r in reports}) == 1
        assert len({r.sloc_ps for r in reports}) == 1
        assert len({r.slice_pct for r in reports}) == 1


def test_lattice_row_counts(corpus_bundles, lattice_reports):
    twelve = {b.name for b in corpus_bundles[:12]}
    subset = [r for r in lattice_reports if r.bundle in twelve]
    assert len(subset) == 96
    by_bundle = {}
    for r in lattice_reports:
        by_bundle.setdefault(r.bundle, []).append(r.config)
    assert all(len(configs) == 8 for configs in by_bundle.values())


def test_baseline_dominance_bookkeeping(lattice_reports):
    # whenever the baseline and the pruned-list run patch the same location,
    # the pruned list reports an equal or better rank for it
    rows = {(r.bundle, r.config): r for r in lattice_reports}
    bundles = sorted({r.bundle for r in lattice_reports})
    compared = 0
    for bundle in bundles:
        base = rows[(bundle, "P-T-L")]
        pruned = rows[(bundle, "P-T-LP")]
        if base.patched and pruned.patched and base.patch_line == pruned.patch_line:
            compared += 1
            assert pruned.br <= base.br, bundle
    assert compared >= 1


def test_lattice_marks_ps_configs_failed_on_non_fixpoint_slice(corpus_bundles):
    from reducto.slicer import SliceSettings

    bundle = next(b for b in corpus_bundles if b.name == "b09_rect_area")
    reports = run_lattice([bundle], settings=SliceSettings(max_passes=0))
    by_config = {r.config: r for r in reports}
    assert len(reports) == 8
    for name, report in by_config.items():
        if name.startswith("Ps-"):
            assert not report.patched
            assert report.stop_reason.startswith("stage-error")
        else:
            assert not report.stop_reason.startswith("stage-error")


# ---------------------------------------------------------------------------
# emission

def fake_report(**overrides):
    base = dict(
        bundle="bx", config="P-T-L", sloc_p=20442, sloc_ps=836,
        slice_pct=100.0 * 836 / 20442, tss_t=2196, tss_ts=73, br=82,
        npc=1938, nte=687946, rt_ms=10946000.0, cost_proxy=689884,
        patched=True, patch_line=9, same_location=True, transferred=None,
        stop_reason="patched",
    )
    base.update(overrides)
    return RepairReport(**base)


def test_csv_columns_and_percent_formatting():
    document = emit_report([fake_report()], "csv")
    rows = list(csv.reader(io.StringIO(document)))
    assert rows[0] == list(CSV_COLUMNS)
    row = dict(zip(rows[0], rows[1]))
    assert row["slice_pct"] == "4.1"  # one decimal place
    assert row["patched"] == "true"
    assert row["transferred"] == ""
    assert row["br"] == "82"


def test_csv_empty_report_set_is_header_only():
    document = emit_report([], "csv")
    assert document == ",".join(CSV_COLUMNS) + "\n"


def test_json_and_csv_carry_identical_values(corpus_artifacts):
    artifacts, _ = corpus_artifacts
    art = artifacts["b02_last_of"]
    reports = [run_config(art, c) for c in viable_configs()]
    csv_rows = list(csv.DictReader(io.StringIO(emit_report(reports, "csv"))))
    json_rows = json.loads(emit_report(reports, "json"))
    assert len(csv_rows) == len(json_rows) == 8
    for c_row, j_row in zip(csv_rows, json_rows):
        for column in CSV_COLUMNS:
            j_val = j_row[column]
            if j_val is None:
                assert c_row[column] == ""
            elif isinstance(j_val, bool):
                assert c_row[column] == ("true" if j_val else "false")
            else:
                assert c_row[column] == str(j_val)


def test_report_rows_sorted_by_bundle_then_config_order(corpus_artifacts):
    artifacts, _ = corpus_artifacts
    reports = []
    for name in ("b03_series_sum", "b02_last_of"):
        art = artifacts[name]
        for config in reversed(viable_configs()):
            reports.append(run_config(art, config))
    rows = list(csv.DictReader(io.StringIO(emit_report(reports, "csv"))))
    assert [r["bundle"] for r in rows[:8]] == ["b02_last_of"] * 8
    assert [r["config"] for r in rows[:8]] == [c.name for c in viable_configs()]


def test_unknown_format_rejected():
    with pytest.raises(ValueError):
        emit_report([], "xml")


# ---------------------------------------------------------------------------
# compare

def test_compare_reproduces_published_reduction_shapes():
    # a 10946s -> 990s repair time is a 91% reduction
    base = fake_report(rt_ms=10946.0, nte=687946, npc=573)
    other = fake_report(config="Ps-Ts-LP", rt_ms=990.0, nte=48492, npc=502)
    summary = compare(base, other)
    assert round(summary.rt_reduction_pct) == 91
    # 687946 -> 48492 test executions is a 93% reduction
    assert round(summary.nte_reduction_pct) == 93
    assert summary.npc_reduction_pct == pytest.approx((573 - 502) / 573 * 100)
    assert summary.same_location is True


def test_compare_identical_reports_zero_everywhere():
    report = fake_report()
    summary = compare(report, report)
    assert summary.rt_reduction_pct == 0.0
    assert summary.nte_reduction_pct == 0.0
    assert summary.npc_reduction_pct == 0.0
    assert summary.br_delta == 0
    assert summary.same_location is True


def test_compare_negative_when_other_is_worse():
    base = fake_report(rt_ms=492.0)
    other = fake_report(config="P-T-LR", rt_ms=1348.08)
    summary = compare(base, other)
    assert round(summary.rt_reduction_pct) == -174


def test_compare_requires_same_bundle():
    with pytest.raises(ValueError):
        compare(fake_report(), fake_report(bundle="by"))


def test_compare_handles_missing_metrics():
    base = fake_report()
    other = fake_report(config="P-T-LP", patched=False, br=None, npc=None,
                        nte=None, rt_ms=None, cost_proxy=None, patch_line=None,
                        stop_reason="exhausted")
    summary = compare(base, other)
    assert summary.rt_reduction_pct is None
    assert summary.br_delta is None
    assert summary.same_location is None
