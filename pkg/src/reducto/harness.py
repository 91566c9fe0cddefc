"""Single-expectation test cases, suite execution and failure signatures.

Every test makes exactly one call and checks exactly one thing: a returned
value, an error kind, or the printed output sequence.  Outcomes are
canonicalized into FailureSignatures whose comparison is purely structural;
no printed representation ever enters a signature, so two values that
happen to render identically still compare by their bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from . import interp
from .interp import ERROR_KINDS, CallSetupError, execute
from .parser import Ast, ParseError, parse
from .source import SourceProgram
from .values import value_from_json, value_to_json, values_equal

EXPECT_VALUE = "value"
EXPECT_ERROR = "error"
EXPECT_OUTPUT = "output"


class SuiteFormatError(Exception):
    """A tests file violates the schema (including the one-expectation rule)."""


@dataclass(frozen=True)
class TestCase:
    id: str
    function: str
    args: tuple
    expect_kind: str  # value | error | output
    expect: object  # frozen value | error kind string | tuple of frozen values


@dataclass(frozen=True)
class TestSuite:
    tests: tuple[TestCase, ...]

    def __post_init__(self):
        seen = set()
        for t in self.tests:
            if t.id in seen:
                raise SuiteFormatError(f"duplicate test id {t.id!r}")
            seen.add(t.id)

    def __len__(self):
        return len(self.tests)

    def __iter__(self):
        return iter(self.tests)

    def ids(self) -> list[str]:
        return [t.id for t in self.tests]

    def by_id(self, test_id: str) -> TestCase:
        for t in self.tests:
            if t.id == test_id:
                return t
        raise KeyError(test_id)

    def subset(self, ids) -> "TestSuite":
        keep = set(ids)
        return TestSuite(tuple(t for t in self.tests if t.id in keep))


PASS = "Pass"
FAIL = "Fail"
ERRORED = "Errored"
UNBUILDABLE = "Unbuildable"
BUDGET_EXCEEDED = "BudgetExceeded"


@dataclass(frozen=True)
class Outcome:
    kind: str  # Pass | Fail | Errored | Unbuildable | BudgetExceeded
    covered: frozenset
    expected: Optional[str] = None  # canonical JSON of what was expected
    actual: Optional[str] = None  # canonical JSON of what was observed
    error_kind: Optional[str] = None
    error_line: Optional[int] = None
    error_message: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.kind == PASS


@dataclass(frozen=True)
class FailureSignature:
    """Canonical, platform-stable digest of one test outcome.

    Tuple fields only; the human-readable error message is deliberately
    not part of the comparison.
    """

    test_id: str
    outcome: str
    error_kind: Optional[str] = None
    error_line: Optional[int] = None
    expected: Optional[str] = None
    actual: Optional[str] = None


def _canon(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def run_test(
    program: SourceProgram | Ast,
    test: TestCase,
    budget: int = interp.DEFAULT_BUDGET,
    _code=None,
) -> Outcome:
    """Execute one test; parse failures become Unbuildable outcomes."""
    if _code is None:
        if isinstance(program, SourceProgram):
            try:
                ast = parse(program)
            except ParseError:
                return Outcome(UNBUILDABLE, frozenset())
        else:
            ast = program
        code = interp.compile_ast(ast)
    else:
        code = _code

    try:
        result = execute(code, test.function, list(test.args), budget)
    except CallSetupError as exc:
        # The call itself cannot start; report the error at line 0.
        if test.expect_kind == EXPECT_ERROR and test.expect == exc.kind:
            return Outcome(PASS, frozenset(), error_kind=exc.kind, error_line=0)
        return Outcome(
            ERRORED,
            frozenset(),
            error_kind=exc.kind,
            error_line=0,
            error_message=exc.message,
        )

    covered = result.covered
    if result.status == "budget_exceeded":
        return Outcome(BUDGET_EXCEEDED, covered)
    if result.status == "runtime_error":
        if test.expect_kind == EXPECT_ERROR and test.expect == result.error_kind:
            return Outcome(
                PASS, covered, error_kind=result.error_kind, error_line=result.error_line
            )
        return Outcome(
            ERRORED,
            covered,
            error_kind=result.error_kind,
            error_line=result.error_line,
            error_message=result.error_message,
        )

    # completed
    if test.expect_kind == EXPECT_VALUE:
        if values_equal(result.return_value, test.expect):
            return Outcome(PASS, covered)
        return Outcome(
            FAIL,
            covered,
            expected=_canon({"value": value_to_json(test.expect)}),
            actual=_canon({"value": value_to_json(result.return_value)}),
        )
    if test.expect_kind == EXPECT_OUTPUT:
        if len(result.output) == len(test.expect) and all(
            values_equal(a, b) for a, b in zip(result.output, test.expect)
        ):
            return Outcome(PASS, covered)
        return Outcome(
            FAIL,
            covered,
            expected=_canon({"output": [value_to_json(v) for v in test.expect]}),
            actual=_canon({"output": [value_to_json(v) for v in result.output]}),
        )
    # expected an error, program completed
    return Outcome(
        FAIL,
        covered,
        expected=_canon({"error": test.expect}),
        actual=_canon({"value": value_to_json(result.return_value)}),
    )


@dataclass(frozen=True)
class SuiteResult:
    outcomes: dict  # test id -> Outcome
    passing: tuple[str, ...]
    failing: tuple[str, ...]  # everything that is not a Pass


def run_suite(
    program: SourceProgram | Ast,
    suite: TestSuite,
    budget: int = interp.DEFAULT_BUDGET,
) -> SuiteResult:
    """Run every test independently; the partition is exhaustive and disjoint."""
    code = None
    if isinstance(program, SourceProgram):
        try:
            code = interp.compile_ast(parse(program))
        except ParseError:
            outcomes = {t.id: Outcome(UNBUILDABLE, frozenset()) for t in suite}
            return SuiteResult(outcomes, (), tuple(suite.ids()))
    else:
        code = interp.compile_ast(program)
    outcomes = {}
    passing = []
    failing = []
    for test in suite:
        outcome = run_test(program, test, budget, _code=code)
        outcomes[test.id] = outcome
        (passing if outcome.passed else failing).append(test.id)
    return SuiteResult(outcomes, tuple(passing), tuple(failing))


def signature(test_id: str, outcome: Outcome) -> FailureSignature:
    """Canonical signature; total and deterministic for every outcome class."""
    if outcome.kind == ERRORED:
        return FailureSignature(
            test_id, ERRORED, error_kind=outcome.error_kind, error_line=outcome.error_line
        )
    if outcome.kind == FAIL:
        return FailureSignature(
            test_id, FAIL, expected=outcome.expected, actual=outcome.actual
        )
    return FailureSignature(test_id, outcome.kind)


# ---------------------------------------------------------------------------
# Tests-file format: a JSON array of
#   {"id": str, "call": {"fn": str, "args": [value, ...]},
#    "expect": {"value": v} | {"error": kind} | {"output": [v, ...]}}

def _parse_expect(obj, test_id: str) -> tuple[str, object]:
    if not isinstance(obj, dict):
        raise SuiteFormatError(f"test {test_id!r}: expect must be an object")
    if len(obj) != 1:
        raise MultiAssertTest(test_id)
    (key, payload), = obj.items()
    if key == EXPECT_VALUE:
        return EXPECT_VALUE, value_from_json(payload)
    if key == EXPECT_ERROR:
        if payload not in ERROR_KINDS:
            raise SuiteFormatError(f"test {test_id!r}: unknown error kind {payload!r}")
        return EXPECT_ERROR, payload
    if key == EXPECT_OUTPUT:
        if not isinstance(payload, list):
            raise SuiteFormatError(f"test {test_id!r}: output expectation must be a list")
        return EXPECT_OUTPUT, tuple(value_from_json(v) for v in payload)
    raise SuiteFormatError(f"test {test_id!r}: unknown expectation {key!r}")


class MultiAssertTest(SuiteFormatError):
    """A test bundles several expectations; refactor it into one per test."""

    def __init__(self, test_id: str):
        super().__init__(
            f"test {test_id!r} carries multiple expectations; "
            "split it into single-expectation tests"
        )
        self.test_id = test_id


def suite_from_json(data) -> TestSuite:
    if not isinstance(data, list):
        raise SuiteFormatError("tests file must be a JSON array")
    tests = []
    for entry in data:
        if not isinstance(entry, dict) or "id" not in entry:
            raise SuiteFormatError(f"malformed test entry: {entry!r}")
        test_id = entry["id"]
        if not isinstance(test_id, str):
            raise SuiteFormatError(f"test id must be a string: {test_id!r}")
        call = entry.get("call")
        if not isinstance(call, dict) or "fn" not in call or "args" not in call:
            raise SuiteFormatError(f"test {test_id!r}: malformed call")
        args = tuple(value_from_json(a) for a in call["args"])
        if "expect" not in entry:
            raise SuiteFormatError(f"test {test_id!r}: missing expectation")
        kind, expect = _parse_expect(entry["expect"], test_id)
        tests.append(TestCase(test_id, call["fn"], args, kind, expect))
    return TestSuite(tuple(tests))


def suite_to_json(suite: TestSuite) -> list:
    out = []
    for t in suite:
        if t.expect_kind == EXPECT_VALUE:
            expect = {"value": value_to_json(t.expect)}
        elif t.expect_kind == EXPECT_ERROR:
            expect = {"error": t.expect}
        else:
            expect = {"output": [value_to_json(v) for v in t.expect]}
        out.append(
            {
                "id": t.id,
                "call": {"fn": t.function, "args": [value_to_json(a) for a in t.args]},
                "expect": expect,
            }
        )
    return out


def load_suite(path) -> TestSuite:
    with open(path, "r", encoding="utf-8") as fh:
        return suite_from_json(json.load(fh))


def save_suite(suite: TestSuite, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(suite_to_json(suite), fh, indent=2, sort_keys=True)
        fh.write("\n")
