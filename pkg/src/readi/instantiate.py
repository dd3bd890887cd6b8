"""Ground reasoning paths on a knowledge graph.

Each natural-language relation is bound to top-k schema relations, then a
level-by-level BFS picks, in candidate rank order, the first candidate that
leaves the current frontier.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from readi.kg import KnowledgeGraph, Triple
from readi.paths import Constraint, ReasoningPath
from readi.relindex import RelationIndex


class ErrorReason(str, enum.Enum):
    IRRELEVANT_RELATION = "IrrelevantRelation"
    EMPTY_PATH = "EmptyPath"
    COMPOUND_ENDING = "CompoundEnding"


@dataclass(frozen=True)
class InstantiatorConfig:
    bind_k: int = 5
    queue_threshold: int = 1000
    candidate_filter_k: int = 35
    instance_sample_k: int = 3

    def __post_init__(self):
        for name in ("bind_k", "queue_threshold", "candidate_filter_k", "instance_sample_k"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True)
class InstantiationError:
    reason: ErrorReason
    err_position: int | None
    r_err: str | None
    e_err_set: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "reason": self.reason.value,
            "err_position": self.err_position,
            "r_err": self.r_err,
            "e_err_set": sorted(self.e_err_set),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstantiationError":
        return cls(ErrorReason(d["reason"]), d["err_position"], d["r_err"], frozenset(d["e_err_set"]))


@dataclass(frozen=True)
class ConstraintOutcome:
    constraint_index: int
    start: str
    nl_relations: tuple[str, ...]
    instantiated_relations: tuple[tuple[str, str], ...]
    frontier: frozenset[str]
    step_triples: tuple[frozenset[Triple], ...]
    error: InstantiationError | None = None

    @property
    def instance_triples(self) -> frozenset[Triple]:
        return frozenset().union(*self.step_triples) if self.step_triples else frozenset()

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return {
            "constraint_index": self.constraint_index,
            "start": self.start,
            "nl_relations": list(self.nl_relations),
            "instantiated_relations": [list(p) for p in self.instantiated_relations],
            "frontier": sorted(self.frontier),
            "step_triples": [sorted(list(t) for t in step) for step in self.step_triples],
            "error": self.error.to_dict() if self.error else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConstraintOutcome":
        return cls(
            d["constraint_index"],
            d["start"],
            tuple(d["nl_relations"]),
            tuple(tuple(p) for p in d["instantiated_relations"]),
            frozenset(d["frontier"]),
            tuple(frozenset(Triple(*t) for t in step) for step in d["step_triples"]),
            InstantiationError.from_dict(d["error"]) if d["error"] else None,
        )


def instantiate_constraint(
    c: Constraint,
    g: KnowledgeGraph,
    idx: RelationIndex,
    cfg: InstantiatorConfig = InstantiatorConfig(),
    constraint_index: int = 0,
) -> ConstraintOutcome:
    def outcome(bound, frontier, steps, error=None):
        return ConstraintOutcome(
            constraint_index, c.start, tuple(c.nl_relations), tuple(bound),
            frozenset(frontier), tuple(steps), error,
        )

    if not c.nl_relations:
        err = InstantiationError(ErrorReason.EMPTY_PATH, 0, None, frozenset({c.start}))
        return outcome((), (), (), err)

    frontier: list[str] = [c.start]
    bound: list[tuple[str, str]] = []
    steps: list[frozenset[Triple]] = []
    for i, nl in enumerate(c.nl_relations):
        chosen = None
        for rel in idx.bind_relation(nl, cfg.bind_k).relation_ids:
            if any(g.has_edge_from(e, rel) for e in frontier):
                chosen = rel
                break
        if chosen is None:
            err = InstantiationError(
                ErrorReason.IRRELEVANT_RELATION, i, nl, frozenset(frontier)
            )
            return outcome(bound, frontier if bound else (), steps, err)
        reached = set()
        for e in frontier:
            reached.update(g.successors(e, chosen))
        kept = sorted(reached)[: cfg.queue_threshold]
        kept_set = set(kept)
        steps.append(frozenset(
            Triple(e, chosen, o) for e in frontier for o in g.successors(e, chosen) if o in kept_set
        ))
        bound.append((nl, chosen))
        frontier = kept

    error = None
    if all(g.is_compound(e) for e in frontier):
        error = InstantiationError(ErrorReason.COMPOUND_ENDING, None, None, frozenset(frontier))
    return outcome(bound, frontier, steps, error)


def instantiate_path(
    p: ReasoningPath,
    g: KnowledgeGraph,
    idx: RelationIndex,
    cfg: InstantiatorConfig = InstantiatorConfig(),
) -> list[ConstraintOutcome]:
    return [instantiate_constraint(c, g, idx, cfg, i) for i, c in enumerate(p.constraints)]


def has_error(outcomes: Sequence[ConstraintOutcome]) -> bool:
    return any(o.error is not None for o in outcomes)
