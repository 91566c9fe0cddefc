import json
from pathlib import Path

from reducto.corpus import BUNDLE_DEFS, build_corpus
from reducto.experiment import load_bundle
from reducto.harness import run_suite


def test_at_least_twelve_bundles_across_required_classes():
    assert len(BUNDLE_DEFS) >= 12
    classes = {b.bug_class for b in BUNDLE_DEFS}
    for required in (
        "wrong-relational-operator",
        "off-by-one-index",
        "wrong-integer-constant",
        "missing-guard",
        "wrong-returned-variable",
    ):
        assert required in classes


def test_generation_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    build_corpus(a)
    build_corpus(b)
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_committed_corpus_matches_generator(tmp_path, corpus_dir):
    committed = Path(corpus_dir)
    fresh = tmp_path / "fresh"
    build_corpus(fresh)
    fresh_files = sorted(p.relative_to(fresh) for p in fresh.rglob("*") if p.is_file())
    committed_files = sorted(
        p.relative_to(committed) for p in committed.rglob("*") if p.is_file()
    )
    assert fresh_files == committed_files
    for rel in fresh_files:
        assert (fresh / rel).read_bytes() == (committed / rel).read_bytes(), rel


def test_bundle_shape_constraints(corpus_bundles):
    for bundle in corpus_bundles:
        total = len(bundle.suite)
        assert 40 <= total <= 200, bundle.name
        relevant = [t for t in bundle.suite if t.id.startswith("r")]
        assert relevant, bundle.name
        assert len(relevant) <= 0.2 * total, bundle.name
        assert bundle.ground_truth is not None
        assert 1 <= bundle.ground_truth.bug_line <= len(bundle.program)


def test_ground_truth_patch_fixes_every_bundle(corpus_dir, corpus_bundles):
    from reducto.source import SourceProgram

    for bundle in corpus_bundles:
        manifest = json.loads(
            (Path(corpus_dir) / bundle.name / "manifest.json").read_text()
        )
        gt = manifest["ground_truth"]
        lines = list(bundle.program.lines)
        lines[gt["bug_line"] - 1:gt["bug_line"]] = gt["patched_text"].split("\n")
        fixed = SourceProgram(tuple(lines), bundle.name + "-fixed")
        result = run_suite(fixed, bundle.suite)
        assert not result.failing, f"{bundle.name}: ground truth does not fix the bug"


def test_bundles_have_error_and_output_expectations(corpus_bundles):
    kinds = {t.expect_kind for b in corpus_bundles for t in b.suite}
    assert kinds == {"value", "error", "output"}


def test_bundle_loads_cleanly_via_loader(corpus_dir):
    bundle = load_bundle(Path(corpus_dir) / "b13_element_at")
    assert bundle.ground_truth.patched_text.startswith("if i >= 0")
