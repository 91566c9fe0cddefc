"""Observation-based slicing: delete windows of lines, keep what preserves
the criterion, iterate to a fixpoint.

The scan order is fixed for reproducibility: passes run top to bottom over
the current slice; at each index the window grows from one line up to the
configured maximum, the first accepted width wins, and the scan stays at
the same index after a successful deletion (lines shift up into it).  A
pass that deletes nothing terminates the loop.

Acceptance is structural: a candidate is kept only if it parses and every
criterion test reproduces its baseline failure signature exactly (with
error lines compared in original-program coordinates), or every watched
trace matches value for value.  Printed text plays no part, so candidates
whose wrong values merely render the same as the baseline's are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

from . import interp
from .harness import (
    FailureSignature,
    SuiteResult,
    TestCase,
    TestSuite,
    run_suite,
    run_test,
    signature,
)
from .parser import ParseError, parse
from .source import SourceProgram, count_sloc
from .values import values_equal


class NoFailingTests(Exception):
    """The suite passes entirely; there is no bug behavior to preserve."""


class BaselineMismatch(Exception):
    """The unmodified program does not reproduce its own baseline."""


@dataclass(frozen=True)
class SliceSettings:
    delta: int = 3  # maximum deletion-window length, in lines
    budget: int = interp.DEFAULT_BUDGET
    max_passes: int = 50

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError("delta must be >= 1")


@dataclass(frozen=True)
class LineMapping:
    """Strictly monotonic bijection between slice lines and surviving
    original lines, stored as (slice_line, original_line) pairs."""

    pairs: tuple[tuple[int, int], ...]

    @classmethod
    def identity(cls, n: int) -> "LineMapping":
        return cls(tuple((i, i) for i in range(1, n + 1)))

    @classmethod
    def from_survivors(cls, originals) -> "LineMapping":
        return cls(tuple((i, orig) for i, orig in enumerate(originals, start=1)))

    def to_original(self, slice_line: Optional[int]) -> Optional[int]:
        if slice_line is None:
            return None
        for s, o in self.pairs:
            if s == slice_line:
                return o
        return None

    def to_slice(self, original_line: int) -> Optional[int]:
        for s, o in self.pairs:
            if o == original_line:
                return s
        return None

    def original_lines(self) -> tuple[int, ...]:
        return tuple(o for _, o in self.pairs)

    def as_dict_to_original(self) -> dict:
        return {s: o for s, o in self.pairs}


@dataclass(frozen=True)
class VarTrace:
    """Preserve the values of one variable immediately before one line,
    across a set of calls.  ``line`` is in the coordinates of whatever
    program a candidate check runs; None means the line was deleted."""

    var: str
    line: Optional[int]
    inputs: tuple  # of (function name, args tuple)


@dataclass(frozen=True)
class TestSignatures:
    """Preserve the failure signatures of the given (failing) tests."""

    tests: tuple[TestCase, ...]

    def __post_init__(self):
        if not self.tests:
            raise ValueError("criterion needs at least one failing test")


Criterion = Union[VarTrace, TestSignatures]


@dataclass(frozen=True)
class Baseline:
    """Expected observations from the unmodified program.

    For TestSignatures: (test id, FailureSignature) pairs sorted by id.
    For VarTrace: one (trace tuple, budget_exceeded flag) per input, in
    input order.
    """

    entries: tuple

    def signature_for(self, test_id: str) -> FailureSignature:
        for tid, sig in self.entries:
            if tid == test_id:
                return sig
        raise KeyError(test_id)


@dataclass(frozen=True)
class Acceptance:
    accepted: bool
    reason: Optional[str] = None  # "Unbuildable" | "BehaviorChanged"
    detail: Optional[str] = None

    def __bool__(self):
        return self.accepted


@dataclass(frozen=True)
class SliceResult:
    slice: SourceProgram
    deleted: tuple[int, ...]  # original line numbers, ascending
    mapping: LineMapping
    original_sloc: int
    slice_sloc: int
    percent: float
    fixpoint: bool  # False when the pass cap stopped the scan early
    passes: int

    def stats(self) -> dict:
        return {
            "orig_sloc": self.original_sloc,
            "slice_sloc": self.slice_sloc,
            "percent": self.percent,
        }


def signature_on(
    program_or_code,
    test: TestCase,
    budget: int,
    line_map: Optional[LineMapping] = None,
) -> FailureSignature:
    """Signature of one test with error lines reported in original
    coordinates (via ``line_map``) so signatures stay comparable across a
    program and its slices."""
    outcome = run_test(program_or_code, test, budget)
    sig = signature(test.id, outcome)
    if line_map is not None and sig.error_line is not None and sig.error_line != 0:
        sig = replace(sig, error_line=line_map.to_original(sig.error_line))
    return sig


def build_criterion(
    program: SourceProgram,
    suite: TestSuite,
    budget: int = interp.DEFAULT_BUDGET,
    _result: Optional[SuiteResult] = None,
) -> tuple[TestSignatures, Baseline]:
    """Criterion and baseline for the repair pipeline: all failing tests
    and their signatures on the unmodified program."""
    result = _result if _result is not None else run_suite(program, suite, budget)
    if not result.failing:
        raise NoFailingTests("every test passes; nothing to slice against")
    failing = tuple(t for t in suite if t.id in set(result.failing))
    entries = tuple(
        sorted(
            ((t.id, signature(t.id, result.outcomes[t.id])) for t in failing),
            key=lambda pair: pair[0],
        )
    )
    return TestSignatures(failing), Baseline(entries)


def build_var_criterion(
    program: SourceProgram,
    var: str,
    line: int,
    inputs,
    budget: int = interp.DEFAULT_BUDGET,
) -> tuple[VarTrace, Baseline]:
    """Classic slicing criterion: variable ``var`` observed before ``line``
    over the given (function, args) calls."""
    ast = parse(program)
    code = interp.compile_ast(ast)
    entries = []
    for fn, args in inputs:
        result = interp.execute(code, fn, list(args), budget, watch=(var, line))
        entries.append((result.trace, result.status == "budget_exceeded"))
    return VarTrace(var, line, tuple((fn, tuple(args)) for fn, args in inputs)), Baseline(
        tuple(entries)
    )


def candidate_accepts(
    candidate: SourceProgram,
    criterion: Criterion,
    baseline: Baseline,
    settings: SliceSettings,
    line_map: Optional[LineMapping] = None,
) -> Acceptance:
    """Accept iff the candidate parses and reproduces the baseline exactly."""
    try:
        ast = parse(candidate)
    except ParseError as exc:
        return Acceptance(False, "Unbuildable", f"line {exc.line}: {exc.reason}")
    code = interp.compile_ast(ast)

    if isinstance(criterion, TestSignatures):
        for test in criterion.tests:
            observed = signature_on(code, test, settings.budget, line_map)
            expected = baseline.signature_for(test.id)
            if observed != expected:
                return Acceptance(False, "BehaviorChanged", test.id)
        return Acceptance(True)

    for (fn, args), (expect_trace, expect_exhausted) in zip(
        criterion.inputs, baseline.entries
    ):
        watch = (criterion.var, criterion.line) if criterion.line is not None else None
        try:
            result = interp.execute(code, fn, list(args), settings.budget, watch=watch)
        except interp.CallSetupError:
            # the input cannot even start on this candidate
            return Acceptance(False, "BehaviorChanged", f"{fn}{tuple(args)!r}")
        exhausted = result.status == "budget_exceeded"
        if exhausted != expect_exhausted:
            return Acceptance(False, "BehaviorChanged", f"{fn}{tuple(args)!r}")
        trace = result.trace if criterion.line is not None else ()
        if len(trace) != len(expect_trace) or not all(
            values_equal(a, b) for a, b in zip(trace, expect_trace)
        ):
            return Acceptance(False, "BehaviorChanged", f"{fn}{tuple(args)!r}")
    return Acceptance(True)


def _criterion_for_window(
    criterion: Criterion, current_line: Optional[int], start: int, width: int
) -> tuple[Criterion, Optional[int]]:
    """Re-anchor a VarTrace criterion after deleting lines [start, start+width)."""
    if not isinstance(criterion, VarTrace) or current_line is None:
        return criterion, current_line
    if start <= current_line < start + width:
        new_line = None
    elif current_line >= start + width:
        new_line = current_line - width
    else:
        new_line = current_line
    return replace(criterion, line=new_line), new_line


def orbs_slice(
    program: SourceProgram,
    criterion: Criterion,
    baseline: Baseline,
    settings: SliceSettings = SliceSettings(),
) -> SliceResult:
    """Delete-observe loop over the whole program.

    Raises BaselineMismatch if the unmodified program fails its own
    baseline (a broken precondition, not a slicing outcome).
    """
    n = len(program)
    identity = LineMapping.identity(n)
    var_line = criterion.line if isinstance(criterion, VarTrace) else None
    self_check = candidate_accepts(program, criterion, baseline, settings, identity)
    if not self_check:
        raise BaselineMismatch(
            f"program does not reproduce its own baseline: {self_check.reason} "
            f"({self_check.detail})"
        )

    lines = list(program.lines)
    originals = list(range(1, n + 1))
    cur_criterion = criterion
    cur_line = var_line
    passes = 0
    fixpoint = False

    while passes < settings.max_passes:
        passes += 1
        deleted_this_pass = 0
        i = 1
        while i <= len(lines):
            accepted_width = 0
            for width in range(1, settings.delta + 1):
                if i + width - 1 > len(lines):
                    break
                cand_lines = lines[: i - 1] + lines[i - 1 + width:]
                cand_originals = originals[: i - 1] + originals[i - 1 + width:]
                cand = SourceProgram(tuple(cand_lines), program.id)
                cand_criterion, cand_line = _criterion_for_window(
                    cur_criterion, cur_line, i, width
                )
                line_map = LineMapping.from_survivors(cand_originals)
                if candidate_accepts(cand, cand_criterion, baseline, settings, line_map):
                    accepted_width = width
                    lines = cand_lines
                    originals = cand_originals
                    cur_criterion, cur_line = cand_criterion, cand_line
                    break
            if accepted_width:
                deleted_this_pass += accepted_width
                # stay at the same index: following lines shifted up into it
            else:
                i += 1
        if deleted_this_pass == 0:
            fixpoint = True
            break

    slice_program = SourceProgram(tuple(lines), program.id)
    mapping = LineMapping.from_survivors(originals)
    survivors = set(originals)
    deleted = tuple(x for x in range(1, n + 1) if x not in survivors)
    orig_sloc = count_sloc(program)
    slice_sloc = count_sloc(slice_program)
    percent = (100.0 * slice_sloc / orig_sloc) if orig_sloc else 0.0
    return SliceResult(
        slice=slice_program,
        deleted=deleted,
        mapping=mapping,
        original_sloc=orig_sloc,
        slice_sloc=slice_sloc,
        percent=percent,
        fixpoint=fixpoint,
        passes=passes,
    )


@dataclass(frozen=True)
class MinimalityReport:
    minimal: bool
    counterexample: Optional[int]  # 1-based line of the checked program


def minimality_check(
    slice_program: SourceProgram,
    criterion: Criterion,
    baseline: Baseline,
    settings: SliceSettings = SliceSettings(),
    line_map: Optional[LineMapping] = None,
) -> MinimalityReport:
    """1-minimality: no single-line deletion of the slice is acceptable.

    ``line_map`` gives the slice's lines in original coordinates (identity
    when the checked program is the original).
    """
    n = len(slice_program)
    if line_map is None:
        line_map = LineMapping.identity(n)
    var_line = criterion.line if isinstance(criterion, VarTrace) else None
    originals = list(line_map.original_lines())
    for i in range(1, n + 1):
        cand = slice_program.without_lines([i])
        cand_originals = originals[: i - 1] + originals[i:]
        cand_criterion, _ = _criterion_for_window(criterion, var_line, i, 1)
        cand_map = LineMapping.from_survivors(cand_originals)
        if candidate_accepts(cand, cand_criterion, baseline, settings, cand_map):
            return MinimalityReport(False, i)
    return MinimalityReport(True, None)


# ---------------------------------------------------------------------------
# On-disk artifacts

def deletion_log_json(result: SliceResult) -> dict:
    return {
        "deleted": list(result.deleted),
        "mapping": [[s, o] for s, o in result.mapping.pairs],
    }


def slice_result_from_log(program: SourceProgram, log: dict) -> tuple[SourceProgram, LineMapping]:
    """Rebuild (slice, mapping) from a deletion log against the original."""
    mapping = LineMapping(tuple((int(s), int(o)) for s, o in log["mapping"]))
    deleted = set(int(x) for x in log["deleted"])
    survivors = mapping.original_lines()
    if set(survivors) | deleted != set(range(1, len(program) + 1)) or (
        set(survivors) & deleted
    ):
        raise ValueError("deletion log inconsistent with program")
    slice_program = SourceProgram(
        tuple(program.line(o) for o in survivors), program.id
    )
    return slice_program, mapping
