"""The generate / instantiate / edit loop and its traces."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from readi.errors import DataError, GatewayError, PathParseError
from readi.gateway import Call, Gateway
from readi.instantiate import (
    ConstraintOutcome,
    ErrorReason,
    InstantiatorConfig,
    has_error,
    instantiate_path,
)
from readi.kg import KnowledgeGraph, Triple
from readi.paths import ReasoningPath, parse_reasoning_path, serialize_path
from readi.reasoner import parse_kg_answer, parse_table_answer, serialize_evidence
from readi.relindex import RelationIndex
from readi.table import (
    Table,
    TableError,
    TableItems,
    TablePath,
    assemble_table_feedback,
    describe_table,
    instantiate_table,
    parse_table_path,
)

COMPOUND_LABEL = "compound node"


@dataclass(frozen=True)
class SessionConfig:
    max_edit_time: int = 4
    instantiator: InstantiatorConfig = field(default_factory=InstantiatorConfig)
    temperature: float = 0.3
    seed: int | None = None

    def __post_init__(self):
        if self.max_edit_time < 0:
            raise ValueError("max_edit_time must be >= 0")


@dataclass(frozen=True)
class ErrorFeedback:
    reason_lines: tuple[str, ...]
    halfway_instances: tuple[str, ...]
    candidate_relations: tuple[str, ...]

    def render(self) -> str:
        lines = ["Error Message"]
        lines += [f"{n}. {r}" for n, r in enumerate(self.reason_lines, start=1)]
        lines.append("Instantiation Context")
        lines.append("Instantiate Paths: " + ("; ".join(self.halfway_instances) or "none"))
        lines.append("Candidate Relations")
        lines.append(repr(list(self.candidate_relations)))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "reason_lines": list(self.reason_lines),
            "halfway_instances": list(self.halfway_instances),
            "candidate_relations": list(self.candidate_relations),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ErrorFeedback":
        return cls(tuple(d["reason_lines"]), tuple(d["halfway_instances"]), tuple(d["candidate_relations"]))


@dataclass(frozen=True)
class MergedEvidence:
    answer_candidates: frozenset[str] = frozenset()
    evidence_triples: frozenset[Triple] = frozenset()

    def to_dict(self) -> dict:
        return {
            "answer_candidates": sorted(self.answer_candidates),
            "evidence_triples": [list(t) for t in sorted(self.evidence_triples)],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MergedEvidence":
        return cls(
            frozenset(d["answer_candidates"]),
            frozenset(Triple(*t) for t in d["evidence_triples"]),
        )


def _node_label(g: KnowledgeGraph, e: str) -> str:
    return COMPOUND_LABEL if g.is_compound(e) else g.friendly_name(e)


def _sample_chains(o: ConstraintOutcome, g: KnowledgeGraph, k: int) -> list[str]:
    if not o.step_triples:
        return []
    chains = []
    for first in sorted(o.step_triples[0])[:k]:
        chain = [first]
        for step in o.step_triples[1:]:
            nxt = sorted(t for t in step if t.subject == chain[-1].object)
            if not nxt:
                break
            chain.append(nxt[0])
        text = _node_label(g, chain[0].subject)
        for t in chain:
            text += f" --{t.predicate}--> {_node_label(g, t.object)}"
        chains.append(text)
    return chains


def _reason_line(o: ConstraintOutcome, g: KnowledgeGraph) -> str:
    err = o.error
    start = g.friendly_name(o.start)
    if err.reason is ErrorReason.COMPOUND_ENDING:
        return f'<compound node> in the end. (path from "{start}")'
    if err.reason is ErrorReason.EMPTY_PATH:
        return f'empty path from "{start}".'
    return f'relation "{err.r_err}" not instantiated from "{start}" (position {err.err_position}).'


def assemble_feedback(
    outcomes: Sequence[ConstraintOutcome],
    question: str,
    g: KnowledgeGraph,
    idx: RelationIndex,
    cfg: InstantiatorConfig = InstantiatorConfig(),
) -> ErrorFeedback:
    """Error reasons, sampled halfway-done instances and nearby relations.

    All erroring constraints go into one message, in constraint order.
    """
    if not has_error(outcomes):
        raise ValueError("assemble_feedback requires at least one erroring outcome")
    reasons, chains, pool = [], [], set()
    for o in outcomes:
        if o.error is None:
            continue
        reasons.append(_reason_line(o, g))
        chains.extend(_sample_chains(o, g, cfg.instance_sample_k))
        for e in o.error.e_err_set:
            pool.update(g.out_relations(e))
    candidates = idx.rank_by_question(question, pool, cfg.candidate_filter_k) if pool else []
    return ErrorFeedback(tuple(reasons), tuple(chains), tuple(candidates))


def merge_results(outcomes: Sequence[ConstraintOutcome]) -> MergedEvidence:
    evidence: set[Triple] = set()
    for o in outcomes:
        evidence |= o.instance_triples
    frontiers = [o.frontier for o in outcomes if o.error is None]
    if not frontiers:
        # nothing fully grounded: fall back to the longest instantiated prefixes
        frontiers = [o.frontier for o in outcomes if o.instantiated_relations and o.frontier]
    cands = frozenset.intersection(*frontiers) if frontiers else frozenset()
    return MergedEvidence(cands, frozenset(evidence))


def reasoner_candidates(merged: MergedEvidence, outcomes: Sequence[ConstraintOutcome]) -> frozenset[str]:
    """Candidates shown to the reasoner; the union of frontiers when the intersection is empty."""
    if merged.answer_candidates:
        return merged.answer_candidates
    frontiers = [o.frontier for o in outcomes if o.error is None]
    if not frontiers:
        frontiers = [o.frontier for o in outcomes if o.instantiated_relations]
    return frozenset().union(*frontiers) if frontiers else frozenset()


@dataclass
class Iteration:
    path: ReasoningPath
    outcomes: list[ConstraintOutcome]
    feedback: ErrorFeedback | None = None
    parse_error: str | None = None

    def to_dict(self) -> dict:
        return {
            "path": self.path.to_dict(),
            "outcomes": [o.to_dict() for o in self.outcomes],
            "feedback": self.feedback.to_dict() if self.feedback else None,
            "parse_error": self.parse_error,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Iteration":
        return cls(
            ReasoningPath.from_dict(d["path"]),
            [ConstraintOutcome.from_dict(o) for o in d["outcomes"]],
            ErrorFeedback.from_dict(d["feedback"]) if d["feedback"] else None,
            d.get("parse_error"),
        )


@dataclass
class SessionTrace:
    question_id: str
    question: str
    topic_entities: list[str]
    iterations: list[Iteration] = field(default_factory=list)
    edit_calls: int = 0
    merged: MergedEvidence = field(default_factory=MergedEvidence)
    answers: list[str] = field(default_factory=list)
    calls: list[Call] = field(default_factory=list)
    error: str | None = None

    kind = "kg"

    @property
    def final(self) -> Iteration | None:
        return self.iterations[-1] if self.iterations else None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "question_id": self.question_id,
            "question": self.question,
            "topic_entities": list(self.topic_entities),
            "iterations": [it.to_dict() for it in self.iterations],
            "edit_calls": self.edit_calls,
            "merged": self.merged.to_dict(),
            "answers": list(self.answers),
            "calls": [c.to_dict() for c in self.calls],
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SessionTrace":
        return cls(
            d["question_id"],
            d["question"],
            list(d["topic_entities"]),
            [Iteration.from_dict(it) for it in d["iterations"]],
            d["edit_calls"],
            MergedEvidence.from_dict(d["merged"]),
            list(d["answers"]),
            [Call(**c) for c in d["calls"]],
            d.get("error"),
        )


def run_session(
    question: str,
    topic_entities: Sequence[str],
    g: KnowledgeGraph,
    idx: RelationIndex,
    gateway: Gateway,
    cfg: SessionConfig = SessionConfig(),
    question_id: str = "",
) -> SessionTrace:
    if not topic_entities:
        raise ValueError("topic_entities must be non-empty")
    aliases = {e: g.friendly_name(e) for e in topic_entities}
    trace = SessionTrace(question_id, question, list(topic_entities))

    def ask(role: str, slots: Mapping[str, str]) -> str:
        call = gateway.call(role, slots, cfg.temperature)
        trace.calls.append(call)
        return call.response

    def parse(text: str) -> tuple[ReasoningPath, str | None]:
        try:
            return parse_reasoning_path(text, topic_entities, aliases, question_id), None
        except PathParseError as exc:
            return ReasoningPath.empty(topic_entities, question_id), str(exc)

    entity_list = json.dumps([aliases[e] for e in topic_entities], ensure_ascii=False)
    outcomes: list[ConstraintOutcome] = []
    try:
        path, perr = parse(ask("kg_generate", {"question": question, "topic_entities": entity_list}))
        while True:
            outcomes = instantiate_path(path, g, idx, cfg.instantiator)
            it = Iteration(path, outcomes, None, perr)
            trace.iterations.append(it)
            if not has_error(outcomes) or trace.edit_calls >= cfg.max_edit_time:
                break
            it.feedback = assemble_feedback(outcomes, question, g, idx, cfg.instantiator)
            text = ask(
                "kg_edit",
                {
                    "question": question,
                    "topic_entities": entity_list,
                    "previous_path": serialize_path(path, aliases),
                    "feedback": it.feedback.render(),
                },
            )
            trace.edit_calls += 1
            path, perr = parse(text)
        trace.merged = merge_results(outcomes)
        rendering = serialize_evidence(trace.merged, g)
        cands = sorted(g.friendly_name(e) for e in reasoner_candidates(trace.merged, outcomes))
        text = ask(
            "kg_reason",
            {
                "question": question,
                "candidates": ", ".join(cands) or "none",
                "triples": rendering.text or "none",
            },
        )
        trace.answers = parse_kg_answer(text)
    except GatewayError as exc:
        trace.error = str(exc)
        trace.merged = merge_results(outcomes)
        trace.answers = []
    return trace


@dataclass
class TableIteration:
    path: TablePath
    error: TableError | None = None
    feedback: str | None = None

    def to_dict(self) -> dict:
        return {
            "path": self.path.to_dict(),
            "error": self.error.to_dict() if self.error else None,
            "feedback": self.feedback,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TableIteration":
        return cls(
            TablePath.from_dict(d["path"]),
            TableError.from_dict(d["error"]) if d["error"] else None,
            d.get("feedback"),
        )


@dataclass
class TableSessionTrace:
    question_id: str
    question: str
    table_id: str
    iterations: list[TableIteration] = field(default_factory=list)
    edit_calls: int = 0
    items: TableItems = field(default_factory=lambda: TableItems((), ()))
    answers: list[str] = field(default_factory=list)
    calls: list[Call] = field(default_factory=list)
    error: str | None = None

    kind = "table"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "question_id": self.question_id,
            "question": self.question,
            "table_id": self.table_id,
            "iterations": [it.to_dict() for it in self.iterations],
            "edit_calls": self.edit_calls,
            "items": self.items.to_dict(),
            "answers": list(self.answers),
            "calls": [c.to_dict() for c in self.calls],
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TableSessionTrace":
        return cls(
            d["question_id"],
            d["question"],
            d["table_id"],
            [TableIteration.from_dict(it) for it in d["iterations"]],
            d["edit_calls"],
            TableItems.from_dict(d["items"]),
            list(d["answers"]),
            [Call(**c) for c in d["calls"]],
            d.get("error"),
        )


def run_table_session(
    question: str,
    table: Table,
    gateway: Gateway,
    cfg: SessionConfig = SessionConfig(),
    question_id: str = "",
) -> TableSessionTrace:
    trace = TableSessionTrace(question_id, question, table.table_id)
    description = describe_table(table, cfg.seed)

    def ask(role: str, slots: Mapping[str, str]) -> str:
        call = gateway.call(role, slots, cfg.temperature)
        trace.calls.append(call)
        return call.response

    try:
        path = parse_table_path(ask("table_generate", {"question": question, "table": description}))
        while True:
            items, err = instantiate_table(path, table)
            it = TableIteration(path, err)
            trace.iterations.append(it)
            if err is None or trace.edit_calls >= cfg.max_edit_time:
                break
            it.feedback = assemble_table_feedback(err, table, cfg.seed)
            text = ask(
                "table_edit",
                {
                    "question": question,
                    "table": description,
                    "previous_path": path.render(),
                    "feedback": it.feedback,
                },
            )
            trace.edit_calls += 1
            path = parse_table_path(text)
        if items.headers:
            trace.items = items
        else:
            # columns never grounded: hand the reasoner the whole table
            trace.items = TableItems(table.headers, table.rows)
        text = ask("table_reason", {"question": question, "items": trace.items.render()})
        trace.answers = parse_table_answer(text)
    except GatewayError as exc:
        trace.error = str(exc)
        trace.answers = []
    return trace


AnyTrace = Union[SessionTrace, TableSessionTrace]


def trace_from_dict(d: Mapping) -> AnyTrace:
    kind = d.get("kind", "kg")
    if kind == "kg":
        return SessionTrace.from_dict(d)
    if kind == "table":
        return TableSessionTrace.from_dict(d)
    raise DataError(f"unknown trace kind {kind!r}")


def dumps_trace(t: AnyTrace) -> str:
    return json.dumps(t.to_dict(), ensure_ascii=False, sort_keys=True)


def write_traces(path: str | Path, traces: Iterable[AnyTrace]) -> None:
    Path(path).write_text("".join(dumps_trace(t) + "\n" for t in traces), encoding="utf-8")


def read_traces(path: str | Path) -> list[AnyTrace]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(trace_from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: line {lineno}: bad trace record: {exc!r}") from exc
    return out
