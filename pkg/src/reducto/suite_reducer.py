"""Test-suite reduction driven by the sliced program.

A passing test survives iff it still passes when run against the slice;
failing tests are always retained.  The dynamic check is authoritative,
coverage is recorded as the explanation: a removed test whose original
coverage lies entirely in deleted lines is tagged CoversOnlyDeletedCode,
any other removal is tagged FailsOnSlice.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import interp
from .harness import TestSuite, run_suite, run_test
from .parser import parse
from .slicer import Baseline, LineMapping, signature_on
from .source import SourceProgram

FAILS_ON_SLICE = "FailsOnSlice"
COVERS_ONLY_DELETED = "CoversOnlyDeletedCode"


class InvalidSlice(Exception):
    """The mapping does not describe the given slice of the original."""


@dataclass(frozen=True)
class RemovedTest:
    id: str
    reason: str  # FailsOnSlice | CoversOnlyDeletedCode


@dataclass(frozen=True)
class ReducedSuite:
    kept: TestSuite
    removed: tuple[RemovedTest, ...]

    def removed_ids(self) -> list[str]:
        return [r.id for r in self.removed]


def _check_mapping(program: SourceProgram, slice_program: SourceProgram, mapping: LineMapping):
    survivors = mapping.original_lines()
    if len(survivors) != len(slice_program):
        raise InvalidSlice("mapping length differs from slice length")
    if list(survivors) != sorted(set(survivors)):
        raise InvalidSlice("mapping is not strictly monotonic")
    for slice_line, orig_line in mapping.pairs:
        if not (1 <= orig_line <= len(program)):
            raise InvalidSlice(f"original line {orig_line} out of range")
        if slice_program.line(slice_line) != program.line(orig_line):
            raise InvalidSlice(f"slice line {slice_line} does not match original {orig_line}")


def reduce_suite(
    program: SourceProgram,
    slice_program: SourceProgram,
    mapping: LineMapping,
    suite: TestSuite,
    budget: int = interp.DEFAULT_BUDGET,
    _on_original=None,
) -> ReducedSuite:
    """Produce the reduced suite: every original failing test, plus every
    passing test that still passes on the slice."""
    _check_mapping(program, slice_program, mapping)
    on_original = _on_original if _on_original is not None else run_suite(
        program, suite, budget
    )
    failing = set(on_original.failing)
    survivors = set(mapping.original_lines())

    slice_code = None
    try:
        slice_code = interp.compile_ast(parse(slice_program))
    except Exception:
        pass  # unbuildable slice: every passing test is removed below

    kept_ids = []
    removed = []
    for test in suite:
        if test.id in failing:
            kept_ids.append(test.id)
            continue
        if slice_code is None:
            outcome_passed = False
        else:
            outcome_passed = run_test(slice_program, test, budget, _code=slice_code).passed
        if outcome_passed:
            kept_ids.append(test.id)
        else:
            coverage = on_original.outcomes[test.id].covered
            if coverage and not (coverage & survivors):
                removed.append(RemovedTest(test.id, COVERS_ONLY_DELETED))
            else:
                removed.append(RemovedTest(test.id, FAILS_ON_SLICE))
    return ReducedSuite(suite.subset(kept_ids), tuple(removed))


@dataclass(frozen=True)
class Violation:
    test_id: str
    problem: str


def verify_reduction(
    slice_program: SourceProgram,
    reduced: ReducedSuite,
    baseline: Baseline,
    mapping: LineMapping,
    budget: int = interp.DEFAULT_BUDGET,
) -> list[Violation]:
    """Check the reduction postcondition on the slice itself.

    Every kept failing test must reproduce its baseline signature (in
    original coordinates), and every other kept test must pass.  Returns
    the violations, empty when the reduction holds.
    """
    violations = []
    baseline_ids = {tid for tid, _ in baseline.entries}
    for test in reduced.kept:
        if test.id in baseline_ids:
            observed = signature_on(slice_program, test, budget, mapping)
            if observed != baseline.signature_for(test.id):
                violations.append(
                    Violation(test.id, "failing test does not reproduce its baseline signature")
                )
        else:
            if not run_test(slice_program, test, budget).passed:
                violations.append(Violation(test.id, "kept passing test fails on the slice"))
    return violations


def reduction_log_json(reduced: ReducedSuite) -> dict:
    return {
        "kept": reduced.kept.ids(),
        "removed": [{"id": r.id, "reason": r.reason} for r in reduced.removed],
    }
