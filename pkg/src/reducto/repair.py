"""Template-based patch generation and test-driven validation.

The catalog is nine single-line fix templates, tried in a fixed order so
that candidate counts are reproducible:

  T1 relational-operator replacement      T6 statement deletion
  T2 arithmetic-operator replacement      T7 return-expression substitution
  T3 boolean-operator swap / negation     T8 guard insertion (div or index)
  T4 integer-constant mutation            T9 variable-use substitution
  T5 index off-by-one

Within one template, instantiations enumerate operator/operand positions
left to right and replacements in catalog order.  Validation runs the
failing tests first and stops at the first non-passing outcome; the number
of patch candidates validated (NPC) and of individual test executions
(NTE) are the engine's cost metrics, plus a deterministic proxy
(NTE + candidates parsed) that stands in for wall-clock time in tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from . import interp
from . import parser as P
from .faultloc import SuspiciousList
from .harness import BUDGET_EXCEEDED, TestCase, TestSuite, run_suite, run_test
from .parser import Ast, ParseError, parse
from .source import SourceProgram, is_blank, is_comment

RELATIONAL = list(P.RELATIONAL_OPS)
ARITHMETIC = list(P.ARITHMETIC_OPS)

TEMPLATE_IDS = ("T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9")


@dataclass(frozen=True)
class ReplaceLine:
    text: str


@dataclass(frozen=True)
class DeleteLine:
    pass


@dataclass(frozen=True)
class InsertGuard:
    guard: str
    closer: str


Edit = Union[ReplaceLine, DeleteLine, InsertGuard]


@dataclass(frozen=True)
class Instantiation:
    template: str
    edit: Edit


@dataclass(frozen=True)
class PatchCandidate:
    template: str
    line: int  # coordinates of the program being repaired
    edit: Edit
    program: SourceProgram  # base program with the edit applied


class UnmappableEdit(Exception):
    """The patch location does not survive in the target program."""


def apply_edit(program: SourceProgram, line: int, edit: Edit) -> SourceProgram:
    lines = list(program.lines)
    idx = line - 1
    if isinstance(edit, ReplaceLine):
        lines[idx] = edit.text
    elif isinstance(edit, DeleteLine):
        del lines[idx]
    else:
        indent = lines[idx][: len(lines[idx]) - len(lines[idx].lstrip())]
        lines[idx:idx + 1] = [indent + edit.guard, lines[idx], indent + edit.closer]
    return SourceProgram(tuple(lines), program.id)


def edit_new_text(edit: Edit, original: str) -> str:
    """The replacement text an edit produces, for reports."""
    if isinstance(edit, ReplaceLine):
        return edit.text
    if isinstance(edit, DeleteLine):
        return ""
    return "\n".join([edit.guard, original, edit.closer])


# ---------------------------------------------------------------------------
# Statement analysis

def _walk_expr(expr: P.Expr):
    yield expr
    t = type(expr)
    if t is P.Binary:
        yield from _walk_expr(expr.left)
        yield from _walk_expr(expr.right)
    elif t is P.Unary:
        yield from _walk_expr(expr.operand)
    elif t is P.Index:
        yield from _walk_expr(expr.base)
        yield from _walk_expr(expr.index)
    elif t is P.Len:
        yield from _walk_expr(expr.arg)
    elif t is P.Call:
        for arg in expr.args:
            yield from _walk_expr(arg)
    elif t is P.ArrayLit:
        for item in expr.items:
            yield from _walk_expr(item)


def _statement_exprs(stmt) -> list[P.Expr]:
    if isinstance(stmt, (P.Let, P.Assign, P.Return, P.Print)):
        return [stmt.expr]
    if isinstance(stmt, P.IndexAssign):
        return [stmt.index, stmt.expr]
    if isinstance(stmt, (P.If, P.While)):
        return [stmt.cond]
    return []


def _find_statement(ast: Ast, line: int):
    """(function, statement) at a line; None for headers/else/end/no code."""

    def search(stmts):
        for stmt in stmts:
            if stmt.line == line:
                return stmt
            if isinstance(stmt, P.If):
                found = search(stmt.then_body)
                if found is None and stmt.else_body is not None:
                    found = search(stmt.else_body)
                if found is not None:
                    return found
            elif isinstance(stmt, P.While):
                found = search(stmt.body)
                if found is not None:
                    return found
        return None

    for fn in ast.functions.values():
        if fn.line <= line <= fn.end_line:
            return fn, search(fn.body)
    return None, None


def _scope_vars(fn: P.Function, line: int) -> list[str]:
    """Parameters plus every assigned name bound textually before the line,
    in order of first appearance."""
    names = list(fn.params)

    def collect(stmts):
        for stmt in stmts:
            if stmt.line >= line:
                continue
            if isinstance(stmt, (P.Let, P.Assign, P.IndexAssign)) and stmt.name not in names:
                names.append(stmt.name)
            if isinstance(stmt, P.If):
                collect(stmt.then_body)
                if stmt.else_body is not None:
                    collect(stmt.else_body)
            elif isinstance(stmt, P.While):
                collect(stmt.body)

    collect(fn.body)
    return names


def _replace_span(text: str, start: int, end: int, new: str) -> str:
    return text[:start] + new + text[end:]


def applicable_templates(
    program: SourceProgram, line: int, ast: Optional[Ast] = None
) -> list[Instantiation]:
    """All template instantiations for one line, in catalog order.

    Structural lines (fn/if/while headers keep their operator mutations
    but cannot be deleted or wrapped; else/end lines yield nothing).
    """
    raw = program.line(line)
    if is_blank(raw) or is_comment(raw):
        return []
    if ast is None:
        try:
            ast = parse(program)
        except ParseError:
            return []
    fn, stmt = _find_statement(ast, line)
    if fn is None or stmt is None:
        return []

    text = raw.strip()
    indent = raw[: len(raw) - len(raw.lstrip())]
    exprs = _statement_exprs(stmt)
    nodes = [node for expr in exprs for node in _walk_expr(expr)]
    structural = isinstance(stmt, (P.If, P.While))
    out: list[Instantiation] = []

    def emit(template: str, edit: Edit):
        out.append(Instantiation(template, edit))

    # T1 / T2: operator replacement at each position, left to right
    for template, ops in (("T1", RELATIONAL), ("T2", ARITHMETIC)):
        sites = sorted(
            (n for n in nodes if type(n) is P.Binary and n.op in ops),
            key=lambda n: n.op_start,
        )
        for site in sites:
            for op in ops:
                if op == site.op:
                    continue
                emit(template, ReplaceLine(
                    indent + _replace_span(text, site.op_start, site.op_end, op)
                ))

    # T3: boolean-operator swap, then condition negation
    bool_sites = sorted(
        (n for n in nodes if type(n) is P.Binary and n.op in ("and", "or")),
        key=lambda n: n.op_start,
    )
    for site in bool_sites:
        other = "or" if site.op == "and" else "and"
        emit("T3", ReplaceLine(
            indent + _replace_span(text, site.op_start, site.op_end, other)
        ))
    if isinstance(stmt, (P.If, P.While)):
        keyword = "if" if isinstance(stmt, P.If) else "while"
        cond_text = text[stmt.cond.start:stmt.cond.end]
        emit("T3", ReplaceLine(f"{indent}{keyword} not ({cond_text})"))

    # T4: integer-constant mutation (+1, -1, 0, negate)
    int_sites = sorted(
        (n for n in nodes if type(n) is P.Lit and type(n.value) is int),
        key=lambda n: n.start,
    )
    for site in int_sites:
        for replacement in (site.value + 1, site.value - 1, 0, -site.value):
            if replacement == site.value:
                continue
            emit("T4", ReplaceLine(
                indent + _replace_span(text, site.start, site.end, str(replacement))
            ))

    # T5: index off-by-one
    index_sites = sorted((n for n in nodes if type(n) is P.Index), key=lambda n: n.start)
    for site in index_sites:
        idx_text = text[site.index.start:site.index.end]
        for suffix in (" + 1", " - 1"):
            emit("T5", ReplaceLine(
                indent + _replace_span(text, site.index.start, site.index.end, idx_text + suffix)
            ))

    # T6: statement deletion (non-structural only)
    if not structural:
        emit("T6", DeleteLine())

    # T7: return-expression substitution with another in-scope variable
    if isinstance(stmt, P.Return):
        current = stmt.expr.name if type(stmt.expr) is P.Var else None
        for name in _scope_vars(fn, line):
            if name != current:
                emit("T7", ReplaceLine(f"{indent}return {name}"))

    # T8: guard insertion around divisions and indexings
    if not structural:
        div_sites = sorted(
            (n for n in nodes if type(n) is P.Binary and n.op in ("/", "%")),
            key=lambda n: n.op_start,
        )
        for site in div_sites:
            divisor = text[site.right.start:site.right.end]
            for zero in ("0", "0.0"):
                emit("T8", InsertGuard(f"if {divisor} != {zero}", "end"))
        for site in index_sites:
            idx_text = text[site.index.start:site.index.end]
            base_text = text[site.base.start:site.base.end]
            emit("T8", InsertGuard(
                f"if {idx_text} >= 0 and {idx_text} < len({base_text})", "end"
            ))

    # T9: variable-use substitution
    var_sites = sorted((n for n in nodes if type(n) is P.Var), key=lambda n: n.start)
    scope = _scope_vars(fn, line)
    for site in var_sites:
        for name in scope:
            if name != site.name:
                emit("T9", ReplaceLine(
                    indent + _replace_span(text, site.start, site.end, name)
                ))

    return out


# ---------------------------------------------------------------------------
# Candidate stream

@dataclass(frozen=True)
class RepairCaps:
    max_candidates: int = 2000
    max_nte: int = 500_000
    wall_clock_s: float = 120.0


def generate_candidates(
    program: SourceProgram,
    suspicious: SuspiciousList,
    caps: RepairCaps = RepairCaps(),
    ast: Optional[Ast] = None,
) -> Iterator[PatchCandidate]:
    """Candidates in list-rank order, template order within one location,
    stopping at caps.max_candidates."""
    if ast is None:
        try:
            ast = parse(program)
        except ParseError:
            return
    produced = 0
    for entry in suspicious.entries:
        for inst in applicable_templates(program, entry.line, ast):
            if produced >= caps.max_candidates:
                return
            produced += 1
            yield PatchCandidate(
                inst.template,
                entry.line,
                inst.edit,
                apply_edit(program, entry.line, inst.edit),
            )


# ---------------------------------------------------------------------------
# Validation

PLAUSIBLE = "Plausible"
FAILS_FAILING = "FailsFailingTest"
FAILS_REGRESSION = "FailsRegression"
UNBUILDABLE_PATCH = "Unbuildable"
BUDGET_VERDICT = "BudgetExceeded"


@dataclass(frozen=True)
class ValidationResult:
    verdict: str
    tests_executed: int
    first_failure: Optional[str] = None


def validation_order(suite: TestSuite, failing_ids) -> list[TestCase]:
    failing = set(failing_ids)
    first = [t for t in suite if t.id in failing]
    rest = [t for t in suite if t.id not in failing]
    return first + rest


def validate_patch(
    candidate: PatchCandidate,
    suite: TestSuite,
    failing_ids,
    budget: int = interp.DEFAULT_BUDGET,
    _code=None,
) -> ValidationResult:
    """Failing tests first, early exit at the first non-Pass, every
    execution counted."""
    if _code is None:
        try:
            _code = interp.compile_ast(parse(candidate.program))
        except ParseError:
            return ValidationResult(UNBUILDABLE_PATCH, 0)
    failing = set(failing_ids)
    executed = 0
    for test in validation_order(suite, failing_ids):
        outcome = run_test(candidate.program, test, budget, _code=_code)
        executed += 1
        if not outcome.passed:
            if outcome.kind == BUDGET_EXCEEDED:
                verdict = BUDGET_VERDICT
            elif test.id in failing:
                verdict = FAILS_FAILING
            else:
                verdict = FAILS_REGRESSION
            return ValidationResult(verdict, executed, test.id)
    return ValidationResult(PLAUSIBLE, executed)


# ---------------------------------------------------------------------------
# The repair loop

STOP_PATCHED = "patched"
STOP_EXHAUSTED = "exhausted"
STOP_MAX_CANDIDATES = "max_candidates"
STOP_MAX_NTE = "max_nte"
STOP_WALL_CLOCK = "wall_clock"


@dataclass(frozen=True)
class RepairResult:
    patch: Optional[PatchCandidate]
    npc: int  # candidates submitted to validation
    nte: int  # total test executions
    unbuildable: int  # candidates that failed to parse (not counted in NPC)
    candidates_generated: int
    rt_ms: float
    cost_proxy: int  # nte + candidates parsed
    br: Optional[int]  # rank of the patched location in the list used
    stop_reason: str

    @property
    def patched(self) -> bool:
        return self.patch is not None


def repair(
    program: SourceProgram,
    suite: TestSuite,
    suspicious: SuspiciousList,
    caps: RepairCaps = RepairCaps(),
    failing_ids=None,
    budget: int = interp.DEFAULT_BUDGET,
) -> RepairResult:
    """Iterate candidates until one passes the whole suite or a cap stops
    the search.  Unbuildable candidates are skipped and tallied separately
    from NPC."""
    started = time.perf_counter()
    if failing_ids is None:
        failing_ids = list(run_suite(program, suite, budget).failing)
    ast = parse(program)

    npc = 0
    nte = 0
    unbuildable = 0
    generated = 0
    patch = None
    br = None
    stop = STOP_MAX_CANDIDATES if caps.max_candidates == 0 else STOP_EXHAUSTED

    for candidate in generate_candidates(program, suspicious, caps, ast):
        generated += 1
        try:
            code = interp.compile_ast(parse(candidate.program))
        except ParseError:
            unbuildable += 1
        else:
            npc += 1
            result = validate_patch(candidate, suite, failing_ids, budget, _code=code)
            nte += result.tests_executed
            if result.verdict == PLAUSIBLE:
                patch = candidate
                br = suspicious.rank_of(candidate.line)
                stop = STOP_PATCHED
                break
            if nte >= caps.max_nte:
                stop = STOP_MAX_NTE
                break
        if time.perf_counter() - started > caps.wall_clock_s:
            stop = STOP_WALL_CLOCK
            break
    else:
        if generated >= caps.max_candidates:
            stop = STOP_MAX_CANDIDATES

    rt_ms = (time.perf_counter() - started) * 1000.0
    return RepairResult(
        patch=patch,
        npc=npc,
        nte=nte,
        unbuildable=unbuildable,
        candidates_generated=generated,
        rt_ms=rt_ms,
        cost_proxy=nte + generated,
        br=br,
        stop_reason=stop,
    )


def map_patch_to_original(
    candidate: PatchCandidate,
    mapping,
    original: SourceProgram,
) -> tuple[SourceProgram, int]:
    """Re-apply a patch found on a slice at the corresponding original line.

    Returns (patched original, original line).  Raises UnmappableEdit when
    the patched location does not survive in the original (cannot happen
    for slices, which only delete lines, but guarded regardless).
    """
    original_line = mapping.to_original(candidate.line)
    if original_line is None:
        raise UnmappableEdit(f"line {candidate.line} has no original counterpart")
    return apply_edit(original, original_line, candidate.edit), original_line
