"""Differential comparison of per-target outcomes and bug classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from . import query_ast as qa
from .executor import ExecOutcome, OutcomeKind, ResultSet, cells_equal, compare_values


class VerdictKind(str, Enum):
    CONSISTENT = "consistent"
    ERROR_BUG = "error_bug"
    WRONG_RESULT_BUG = "wrong_result_bug"
    NON_COMPARABLE = "non_comparable"


@dataclass
class Verdict:
    kind: VerdictKind
    reason: str = ""
    #: target label whose failure triggered an error bug
    failing_target: str | None = None
    #: minimal pair of target labels disagreeing on results
    disagreeing: tuple[str, str] | None = None
    #: a semantic rejection of a pre-validated query signals a toolkit defect
    self_check_failure: bool = False

    @property
    def is_bug(self) -> bool:
        return self.kind in (VerdictKind.ERROR_BUG, VerdictKind.WRONG_RESULT_BUG)


def result_set_equal(a: ResultSet, b: ResultSet) -> bool:
    """Compare result sets: as sequences when either is ordered, as
    multisets of rows otherwise; cells use result-cell identity."""
    if len(a.columns) != len(b.columns):
        return False
    rows_a, rows_b = a.rows, b.rows
    if len(rows_a) != len(rows_b):
        return False
    if not (a.ordered or b.ordered):
        rows_a = _sorted_rows(rows_a)
        rows_b = _sorted_rows(rows_b)
    return all(_row_equal(x, y) for x, y in zip(rows_a, rows_b))


def _row_equal(a: tuple, b: tuple) -> bool:
    return len(a) == len(b) and all(cells_equal(x, y) for x, y in zip(a, b))


def _sorted_rows(rows: list[tuple]) -> list[tuple]:
    from functools import cmp_to_key

    def compare(ra: tuple, rb: tuple) -> int:
        for x, y in zip(ra, rb):
            c = compare_values(x, y)
            if c:
                return c
        return 0

    return sorted(rows, key=cmp_to_key(compare))


def compare(outcomes: Mapping[str, ExecOutcome], query: qa.Query | None = None) -> Verdict:
    """Differential verdict over two or more per-target outcomes.

    Timeouts and semantic rejections make a query non-comparable; a target
    failing where another succeeds is an error bug; successful targets with
    unequal result sets are a wrong-result bug.
    """
    if len(outcomes) < 2:
        raise ValueError("differential comparison requires at least two outcomes")
    labels = list(outcomes)
    for label in labels:
        if outcomes[label].kind == OutcomeKind.TIMEOUT:
            return Verdict(VerdictKind.NON_COMPARABLE, reason=f"timeout on {label}")
    for label in labels:
        if outcomes[label].kind == OutcomeKind.SEMANTIC_REJECTION:
            return Verdict(
                VerdictKind.NON_COMPARABLE,
                reason=f"semantic rejection on {label}: {outcomes[label].message}",
                self_check_failure=True,
            )
    succeeded = [l for l in labels if outcomes[l].kind == OutcomeKind.SUCCESS]
    failed = [
        l for l in labels
        if outcomes[l].kind in (OutcomeKind.RUNTIME_ERROR, OutcomeKind.CONNECTION_LOST)
    ]
    if failed and succeeded:
        label = failed[0]
        return Verdict(
            VerdictKind.ERROR_BUG,
            reason=f"{label} failed: {outcomes[label].message}",
            failing_target=label,
        )
    if failed:
        return Verdict(VerdictKind.NON_COMPARABLE, reason="all targets failed")
    for i in range(len(succeeded)):
        for j in range(i + 1, len(succeeded)):
            a, b = succeeded[i], succeeded[j]
            if not result_set_equal(outcomes[a].result, outcomes[b].result):
                return Verdict(
                    VerdictKind.WRONG_RESULT_BUG,
                    reason=f"{a} and {b} disagree on results",
                    disagreeing=(a, b),
                )
    return Verdict(VerdictKind.CONSISTENT)


def crash_only_verdict(outcomes: Mapping[str, ExecOutcome]) -> Verdict:
    """Single-target mode: only lost connections count as bugs."""
    for label, outcome in outcomes.items():
        if outcome.kind == OutcomeKind.CONNECTION_LOST:
            return Verdict(
                VerdictKind.ERROR_BUG,
                reason=f"{label} lost its connection: {outcome.message}",
                failing_target=label,
            )
    return Verdict(VerdictKind.CONSISTENT)
