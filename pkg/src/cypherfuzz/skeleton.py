"""Clause skeletons: clause sequences with uninstantiated holes.

A skeleton fixes the clause kinds and which optional sub-parts (OPTIONAL
marker, WHERE) are present, leaving patterns, expressions and return
items as holes for the completion stage.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Union

from . import query_ast as qa
from .errors import ConfigError, GenerationError

HOLE = "□"  # rendered hole marker

#: Probability that a MATCH or WITH skeleton carries a WHERE hole.
WHERE_PROBABILITY = 0.5
#: Probability that a MATCH skeleton is OPTIONAL.
OPTIONAL_PROBABILITY = 0.5
#: Retries before capability filtering gives up on a clause count.
FILTER_RETRIES = 100


@dataclass(frozen=True)
class MatchSkel:
    optional: bool = False
    where: bool = False


@dataclass(frozen=True)
class WithSkel:
    where: bool = False


@dataclass(frozen=True)
class UnwindSkel:
    pass


@dataclass(frozen=True)
class ReturnSkel:
    pass


SkeletonClause = Union[MatchSkel, WithSkel, UnwindSkel, ReturnSkel]


@dataclass(frozen=True)
class Skeleton:
    clauses: tuple[SkeletonClause, ...]

    def __len__(self) -> int:
        return len(self.clauses)


@dataclass(frozen=True)
class EngineCaps:
    """Engine-specific restrictions on legal clause sequences."""

    allows_optional_match_before_match: bool = True

    @staticmethod
    def intersect(caps: list["EngineCaps"]) -> "EngineCaps":
        if not caps:
            return EngineCaps()
        return EngineCaps(
            allows_optional_match_before_match=all(
                c.allows_optional_match_before_match for c in caps
            )
        )


def render_skeleton(skeleton: Skeleton) -> str:
    parts = []
    for clause in skeleton.clauses:
        if isinstance(clause, MatchSkel):
            text = ("OPTIONAL MATCH " if clause.optional else "MATCH ") + HOLE
            if clause.where:
                text += f" WHERE {HOLE}"
        elif isinstance(clause, WithSkel):
            text = f"WITH {HOLE}"
            if clause.where:
                text += f" WHERE {HOLE}"
        elif isinstance(clause, UnwindSkel):
            text = f"UNWIND {HOLE}"
        else:
            text = f"RETURN {HOLE}"
        parts.append(text)
    return " ".join(parts)


def is_grammatical(skeleton: Skeleton) -> bool:
    """Recognizer for the skeleton grammar: clauses then a final RETURN."""
    if not skeleton.clauses:
        return False
    if not isinstance(skeleton.clauses[-1], ReturnSkel):
        return False
    return all(
        isinstance(c, (MatchSkel, WithSkel, UnwindSkel))
        for c in skeleton.clauses[:-1]
    )


def respects_caps(skeleton: Skeleton, caps: EngineCaps) -> bool:
    if caps.allows_optional_match_before_match:
        return True
    saw_optional = False
    for clause in skeleton.clauses:
        if isinstance(clause, MatchSkel):
            if clause.optional:
                saw_optional = True
            elif saw_optional:
                return False
    return True


def generate_skeleton(
    rng: random.Random, n_clauses: int, caps: EngineCaps | None = None
) -> Skeleton:
    """Random skeleton with exactly `n_clauses` clauses (RETURN counted).

    Sequences violating the capability intersection are regenerated; after
    :data:`FILTER_RETRIES` failures a generation error is raised.
    """
    if n_clauses < 1:
        raise ConfigError(f"n_clauses must be >= 1, got {n_clauses}")
    caps = caps or EngineCaps()
    for _ in range(FILTER_RETRIES):
        clauses: list[SkeletonClause] = []
        for _ in range(n_clauses - 1):
            kind = rng.choice(("match", "with", "unwind"))
            if kind == "match":
                clauses.append(
                    MatchSkel(
                        optional=rng.random() < OPTIONAL_PROBABILITY,
                        where=rng.random() < WHERE_PROBABILITY,
                    )
                )
            elif kind == "with":
                clauses.append(WithSkel(where=rng.random() < WHERE_PROBABILITY))
            else:
                clauses.append(UnwindSkel())
        clauses.append(ReturnSkel())
        skeleton = Skeleton(tuple(clauses))
        if respects_caps(skeleton, caps):
            return skeleton
    raise GenerationError(
        f"no capability-respecting skeleton found in {FILTER_RETRIES} attempts"
    )


def skeleton_of(query: qa.Query) -> Skeleton:
    """Erase all instantiated content of a query, keeping hole markers."""
    clauses: list[SkeletonClause] = []
    for clause in query.clauses:
        if isinstance(clause, qa.Match):
            clauses.append(MatchSkel(optional=clause.optional, where=clause.where is not None))
        elif isinstance(clause, qa.With):
            clauses.append(WithSkel(where=clause.where is not None))
        elif isinstance(clause, qa.Unwind):
            clauses.append(UnwindSkel())
        elif isinstance(clause, qa.Return):
            clauses.append(ReturnSkel())
        else:
            raise TypeError(f"unknown clause {clause!r}")
    return Skeleton(tuple(clauses))
