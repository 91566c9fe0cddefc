"""Bundle I/O, the eight-point configuration lattice, and report emission.

A configuration picks a program variant (P or Ps), a suite variant (T or
Ts) and a suspicious-list variant (L, LR or LP).  Of the twelve
combinations, four are not viable: the original suite and the original
list refer to lines that a slice no longer contains, so Ps pairs only
with Ts and with a reduced list.  Per-bundle artifacts (slice, reduced
suite, the three lists) are built once and shared by every configuration.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import interp
from .faultloc import (
    PROV_ORIGINAL,
    SuspiciousList,
    RankedLine,
    localize,
    prune_list,
    regenerate_list,
)
from .harness import (
    MultiAssertTest,
    SuiteFormatError,
    SuiteResult,
    TestSuite,
    load_suite,
    run_suite,
)
from .parser import ParseError, parse
from .repair import (
    RepairCaps,
    RepairResult,
    edit_new_text,
    map_patch_to_original,
    repair,
)
from .slicer import (
    Baseline,
    LineMapping,
    NoFailingTests,
    SliceResult,
    SliceSettings,
    TestSignatures,
    build_criterion,
    orbs_slice,
)
from .source import SourceProgram
from .suite_reducer import ReducedSuite, reduce_suite, verify_reduction


class ManifestError(Exception):
    """The bundle manifest or one of its referenced files is unusable."""


class NonViableConfig(Exception):
    """Requested a red-node configuration (Ps with T or with L)."""


# ---------------------------------------------------------------------------
# Configurations

PROGRAM_VARIANTS = ("P", "Ps")
SUITE_VARIANTS = ("T", "Ts")
LIST_VARIANTS = ("L", "LR", "LP")


@dataclass(frozen=True)
class RepairConfig:
    program: str
    suite: str
    suspicious: str

    def __post_init__(self):
        if (
            self.program not in PROGRAM_VARIANTS
            or self.suite not in SUITE_VARIANTS
            or self.suspicious not in LIST_VARIANTS
        ):
            raise ValueError(f"bad configuration {self}")

    @property
    def name(self) -> str:
        return f"{self.program}-{self.suite}-{self.suspicious}"

    @property
    def viable(self) -> bool:
        return not (self.program == "Ps" and (self.suite == "T" or self.suspicious == "L"))


def all_configs() -> tuple[RepairConfig, ...]:
    return tuple(
        RepairConfig(p, t, l)
        for p in PROGRAM_VARIANTS
        for t in SUITE_VARIANTS
        for l in LIST_VARIANTS
    )


_VIABLE_ORDER = (
    ("P", "T", "L"),
    ("P", "T", "LR"),
    ("P", "T", "LP"),
    ("P", "Ts", "L"),
    ("P", "Ts", "LR"),
    ("P", "Ts", "LP"),
    ("Ps", "Ts", "LR"),
    ("Ps", "Ts", "LP"),
)


def viable_configs() -> tuple[RepairConfig, ...]:
    """The eight viable configurations, in report order."""
    return tuple(RepairConfig(*combo) for combo in _VIABLE_ORDER)


def config_by_name(name: str) -> RepairConfig:
    parts = name.split("-")
    if len(parts) != 3:
        raise ValueError(f"bad configuration name {name!r}")
    return RepairConfig(*parts)


# ---------------------------------------------------------------------------
# Bundles

@dataclass(frozen=True)
class GroundTruth:
    bug_line: int
    patched_text: str


@dataclass
class BugBundle:
    name: str
    program: SourceProgram
    suite: TestSuite
    ground_truth: Optional[GroundTruth]
    baseline_run: SuiteResult  # suite outcomes on the original program


def load_bundle(path, budget: int = interp.DEFAULT_BUDGET) -> BugBundle:
    """Load and validate one bundle directory.

    Enforces the manifest schema, the one-expectation-per-test rule, and
    the presence of at least one failing test on the original program.
    """
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise ManifestError(f"{root}: no manifest.json")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{manifest_path}: {exc}") from exc
    if not isinstance(manifest, dict) or "program" not in manifest or "tests" not in manifest:
        raise ManifestError(f"{manifest_path}: manifest needs 'program' and 'tests'")

    program_path = root / manifest["program"]
    tests_path = root / manifest["tests"]
    if not program_path.is_file():
        raise ManifestError(f"{program_path}: missing program file")
    if not tests_path.is_file():
        raise ManifestError(f"{tests_path}: missing tests file")

    program = SourceProgram.from_text(
        program_path.read_text(encoding="utf-8"), id=root.name
    )
    try:
        parse(program)
    except ParseError as exc:
        raise ManifestError(f"{program_path}: program does not parse: {exc}") from exc

    try:
        suite = load_suite(tests_path)
    except MultiAssertTest:
        raise
    except (SuiteFormatError, ValueError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{tests_path}: {exc}") from exc

    ground_truth = None
    if manifest.get("ground_truth") is not None:
        gt = manifest["ground_truth"]
        if not isinstance(gt, dict) or "bug_line" not in gt or "patched_text" not in gt:
            raise ManifestError(f"{manifest_path}: malformed ground_truth")
        ground_truth = GroundTruth(int(gt["bug_line"]), str(gt["patched_text"]))

    baseline_run = run_suite(program, suite, budget)
    if not baseline_run.failing:
        raise NoFailingTests(f"{root.name}: every test passes on the original program")
    return BugBundle(root.name, program, suite, ground_truth, baseline_run)


def load_corpus(path, budget: int = interp.DEFAULT_BUDGET) -> list[BugBundle]:
    root = Path(path)
    if not root.is_dir():
        raise ManifestError(f"{root}: not a directory")
    bundle_dirs = sorted(p for p in root.iterdir() if (p / "manifest.json").is_file())
    if not bundle_dirs:
        raise ManifestError(f"{root}: no bundles found")
    return [load_bundle(p, budget) for p in bundle_dirs]


# ---------------------------------------------------------------------------
# Shared per-bundle artifacts

@dataclass
class StageTimings:
    slice_s: float = 0.0
    reduce_s: float = 0.0
    localize_s: float = 0.0


class BundleArtifacts:
    """Everything derivable from a bundle, computed once and shared.

    All three suspicious lists are derived regardless of which
    configurations run, so rank comparisons across provenances come for
    free from a single build.
    """

    def __init__(
        self,
        bundle: BugBundle,
        settings: SliceSettings = SliceSettings(),
        budget: int = interp.DEFAULT_BUDGET,
    ):
        self.bundle = bundle
        self.settings = settings
        self.budget = budget
        self.timings = StageTimings()
        self._repair_cache: dict = {}

        self.criterion: TestSignatures
        self.baseline: Baseline
        self.criterion, self.baseline = build_criterion(
            bundle.program, bundle.suite, budget, _result=bundle.baseline_run
        )

        started = time.perf_counter()
        self.slice_result: SliceResult = orbs_slice(
            bundle.program, self.criterion, self.baseline, settings
        )
        self.timings.slice_s = time.perf_counter() - started

        started = time.perf_counter()
        self.reduced: ReducedSuite = reduce_suite(
            bundle.program,
            self.slice_result.slice,
            self.slice_result.mapping,
            bundle.suite,
            budget,
            _on_original=bundle.baseline_run,
        )
        self.timings.reduce_s = time.perf_counter() - started

        started = time.perf_counter()
        self.list_original: SuspiciousList = localize(bundle.program, bundle.suite, budget)
        self.list_pruned: SuspiciousList = prune_list(
            self.list_original, self.slice_result.mapping
        )
        self.list_regenerated: SuspiciousList = regenerate_list(
            self.slice_result.slice, self.reduced.kept, self.slice_result.mapping, budget
        )
        self.timings.localize_s = time.perf_counter() - started

        self.failing_ids = tuple(bundle.baseline_run.failing)

    def suspicious(self, variant: str) -> SuspiciousList:
        return {
            "L": self.list_original,
            "LR": self.list_regenerated,
            "LP": self.list_pruned,
        }[variant]

    def cached_repair(self, config_name: str) -> Optional[RepairResult]:
        entry = self._repair_cache.get(config_name)
        return entry[0] if entry else None

    def suite(self, variant: str) -> TestSuite:
        return self.bundle.suite if variant == "T" else self.reduced.kept

    def verify(self) -> list:
        return verify_reduction(
            self.slice_result.slice,
            self.reduced,
            self.baseline,
            self.slice_result.mapping,
            self.budget,
        )


# ---------------------------------------------------------------------------
# Reports

@dataclass(frozen=True)
class RepairReport:
    bundle: str
    config: str
    sloc_p: int
    sloc_ps: Optional[int]
    slice_pct: Optional[float]
    tss_t: int
    tss_ts: Optional[int]
    br: Optional[int]
    npc: Optional[int]
    nte: Optional[int]
    rt_ms: Optional[float]
    cost_proxy: Optional[int]
    patched: bool
    patch_line: Optional[int]  # original-program coordinates
    same_location: Optional[bool]
    transferred: Optional[bool]
    stop_reason: str
    # not serialized: ground-truth comparison when the bundle carries one
    gt_location_match: Optional[bool] = None
    gt_text_match: Optional[bool] = None


CSV_COLUMNS = (
    "bundle", "config", "sloc_p", "sloc_ps", "slice_pct", "tss_t", "tss_ts",
    "br", "npc", "nte", "rt_ms", "cost_proxy", "patched", "patch_line",
    "same_location", "transferred", "stop_reason",
)


def _translate_list(suspicious: SuspiciousList, mapping: LineMapping) -> SuspiciousList:
    """Original-coordinate list re-expressed in slice coordinates."""
    entries = []
    for entry in suspicious.entries:
        slice_line = mapping.to_slice(entry.line)
        if slice_line is None:
            raise NonViableConfig(
                f"list {suspicious.provenance} refers to line {entry.line}, "
                "which is not in the slice"
            )
        entries.append(RankedLine(slice_line, entry.score, entry.rank))
    return SuspiciousList(suspicious.provenance, tuple(entries))


class NonFixpointSlice(Exception):
    """The slicer hit its pass cap; sliced-program configurations refuse
    to run on the flagged result."""


def run_config(
    artifacts: BundleArtifacts,
    config: RepairConfig,
    caps: RepairCaps = RepairCaps(),
    baseline_patch_line: Optional[int] = None,
) -> RepairReport:
    """Run one viable configuration against prebuilt artifacts."""
    if not config.viable:
        raise NonViableConfig(f"{config.name} is not viable")

    bundle = artifacts.bundle
    slice_result = artifacts.slice_result
    key = config.name
    if key in artifacts._repair_cache:
        result, patch_line_orig, transferred = artifacts._repair_cache[key]
    else:
        if config.program == "Ps" and not slice_result.fixpoint:
            raise NonFixpointSlice(
                f"{bundle.name}: slice is flagged non-fixpoint; "
                "refusing to repair on it"
            )
        suite = artifacts.suite(config.suite)
        suspicious = artifacts.suspicious(config.suspicious)
        if config.program == "Ps":
            program = slice_result.slice
            suspicious = _translate_list(suspicious, slice_result.mapping)
        else:
            program = bundle.program
        result = repair(
            program, suite, suspicious, caps,
            failing_ids=list(artifacts.failing_ids), budget=artifacts.budget,
        )
        patch_line_orig = None
        transferred = None
        if result.patched:
            if config.program == "Ps":
                patched_original, patch_line_orig = map_patch_to_original(
                    result.patch, slice_result.mapping, bundle.program
                )
                full = run_suite(patched_original, bundle.suite, artifacts.budget)
                transferred = not full.failing
            else:
                patch_line_orig = result.patch.line
        artifacts._repair_cache[key] = (result, patch_line_orig, transferred)

    same_location = None
    if result.patched and baseline_patch_line is not None:
        same_location = patch_line_orig == baseline_patch_line

    gt_location = None
    gt_text = None
    if bundle.ground_truth is not None and result.patched:
        gt_location = patch_line_orig == bundle.ground_truth.bug_line
        if gt_location:
            original_text = bundle.program.line(patch_line_orig)
            gt_text = (
                edit_new_text(result.patch.edit, original_text).strip()
                == bundle.ground_truth.patched_text.strip()
            )
        else:
            gt_text = False

    return RepairReport(
        bundle=bundle.name,
        config=config.name,
        sloc_p=slice_result.original_sloc,
        sloc_ps=slice_result.slice_sloc,
        slice_pct=slice_result.percent,
        tss_t=len(bundle.suite),
        tss_ts=len(artifacts.reduced.kept),
        br=result.br,
        npc=result.npc,
        nte=result.nte,
        rt_ms=result.rt_ms,
        cost_proxy=result.cost_proxy,
        patched=result.patched,
        patch_line=patch_line_orig,
        same_location=same_location,
        transferred=transferred,
        stop_reason=result.stop_reason,
        gt_location_match=gt_location,
        gt_text_match=gt_text,
    )


def _failure_report(artifacts: BundleArtifacts, config: RepairConfig, error: str) -> RepairReport:
    bundle = artifacts.bundle
    slice_result = artifacts.slice_result
    return RepairReport(
        bundle=bundle.name,
        config=config.name,
        sloc_p=slice_result.original_sloc,
        sloc_ps=slice_result.slice_sloc,
        slice_pct=slice_result.percent,
        tss_t=len(bundle.suite),
        tss_ts=len(artifacts.reduced.kept),
        br=None, npc=None, nte=None, rt_ms=None, cost_proxy=None,
        patched=False, patch_line=None, same_location=None, transferred=None,
        stop_reason=f"stage-error: {error}",
    )


def run_lattice(
    bundles,
    caps: RepairCaps = RepairCaps(),
    settings: SliceSettings = SliceSettings(),
    budget: int = interp.DEFAULT_BUDGET,
    configs: Optional[list[RepairConfig]] = None,
    artifacts_cache: Optional[dict] = None,
) -> list[RepairReport]:
    """All viable configurations for every bundle; one configuration's
    failure never aborts the others.  ``artifacts_cache`` (bundle name to
    BundleArtifacts) reuses prebuilt shared artifacts."""
    if configs is None:
        configs = list(viable_configs())
    for config in configs:
        if not config.viable:
            raise NonViableConfig(f"{config.name} is not viable")
    reports = []
    for bundle in sorted(bundles, key=lambda b: b.name):
        if artifacts_cache is not None and bundle.name in artifacts_cache:
            artifacts = artifacts_cache[bundle.name]
        else:
            artifacts = BundleArtifacts(bundle, settings, budget)
        baseline_cfg = RepairConfig("P", "T", "L")
        try:
            baseline_line = run_config(artifacts, baseline_cfg, caps).patch_line
        except Exception:  # keep going; baseline comparisons just vanish
            baseline_line = None
        for config in configs:
            try:
                report = run_config(
                    artifacts, config, caps, baseline_patch_line=baseline_line
                )
            except Exception as exc:
                report = _failure_report(artifacts, config, str(exc))
            reports.append(report)
    return reports


# ---------------------------------------------------------------------------
# Emission

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def report_row(report: RepairReport) -> dict:
    """Typed row used by both emitters; rt_ms is the only run-varying column."""
    return {
        "bundle": report.bundle,
        "config": report.config,
        "sloc_p": report.sloc_p,
        "sloc_ps": report.sloc_ps,
        "slice_pct": None if report.slice_pct is None else round(report.slice_pct, 1),
        "tss_t": report.tss_t,
        "tss_ts": report.tss_ts,
        "br": report.br,
        "npc": report.npc,
        "nte": report.nte,
        "rt_ms": None if report.rt_ms is None else round(report.rt_ms, 3),
        "cost_proxy": report.cost_proxy,
        "patched": report.patched,
        "patch_line": report.patch_line,
        "same_location": report.same_location,
        "transferred": report.transferred,
        "stop_reason": report.stop_reason,
    }


def _sorted_reports(reports) -> list[RepairReport]:
    order = {combo: i for i, combo in enumerate(c.name for c in viable_configs())}
    return sorted(reports, key=lambda r: (r.bundle, order.get(r.config, 99)))


def emit_report(reports, fmt: str = "csv") -> str:
    """CSV or JSON document, one row per report, stable ordering."""
    rows = [report_row(r) for r in _sorted_reports(reports)]
    if fmt == "json":
        return json.dumps(rows, indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_cell(row[col]) for col in CSV_COLUMNS])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Comparison

@dataclass(frozen=True)
class ReductionSummary:
    rt_reduction_pct: Optional[float]
    nte_reduction_pct: Optional[float]
    npc_reduction_pct: Optional[float]
    br_delta: Optional[int]  # positive: the other run ranked the patch better
    same_location: Optional[bool]


def _reduction_pct(base, other) -> Optional[float]:
    if base is None or other is None or base == 0:
        return None
    return (base - other) / base * 100.0


def compare(baseline: RepairReport, other: RepairReport) -> ReductionSummary:
    """Percentage reductions relative to the baseline report; negative
    values mean the other configuration did worse."""
    if baseline.bundle != other.bundle:
        raise ValueError("compare needs two reports for the same bundle")
    br_delta = None
    if baseline.br is not None and other.br is not None:
        br_delta = baseline.br - other.br
    same = None
    if baseline.patched and other.patched:
        same = baseline.patch_line == other.patch_line
    return ReductionSummary(
        rt_reduction_pct=_reduction_pct(baseline.rt_ms, other.rt_ms),
        nte_reduction_pct=_reduction_pct(baseline.nte, other.nte),
        npc_reduction_pct=_reduction_pct(baseline.npc, other.npc),
        br_delta=br_delta,
        same_location=same,
    )
