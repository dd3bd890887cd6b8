"""Metrics over session traces: Hit@1, denotation accuracy, coverage, path statistics."""
from __future__ import annotations

import csv
import json
import re
import string
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from readi.errors import DataError, ReportError
from readi.instantiate import ErrorReason
from readi.kg import KnowledgeGraph
from readi.session import AnyTrace, SessionTrace, TableSessionTrace

_ARTICLE = re.compile(r"^(?:the|a|an)\s+")
_PUNCT = string.punctuation + "“”‘’«»"


def normalize_answer(s: str) -> str:
    s = " ".join(s.lower().split()).strip(_PUNCT + " ")
    s = _ARTICLE.sub("", s)
    return s.strip(_PUNCT + " ")


def hit_at_1(predicted: Sequence[str], gold: Sequence[str]) -> bool:
    golds = {normalize_answer(g) for g in gold}
    return any(normalize_answer(p) in golds for p in predicted)


def denotation_accuracy(predicted: Sequence[str], gold: Sequence[str]) -> bool:
    return {normalize_answer(p) for p in predicted} == {normalize_answer(g) for g in gold}


def answer_coverage(trace: AnyTrace, gold: Sequence[str], g: KnowledgeGraph | None = None) -> bool:
    """Whether any gold answer appears among the grounded evidence.

    KG traces look at entity names in the merged evidence triples, table traces
    at the cells of the returned items.
    """
    golds = {normalize_answer(x) for x in gold}
    if isinstance(trace, TableSessionTrace):
        seen = {normalize_answer(c) for row in trace.items.rows for c in row}
    else:
        if g is None:
            raise ValueError("a knowledge graph is required for KG answer coverage")
        ents = set()
        for s, _, o in trace.merged.evidence_triples:
            ents.add(s)
            ents.add(o)
        seen = {normalize_answer(g.friendly_name(e)) for e in ents}
    return bool(golds & seen)


def retrieved_knowledge(trace: AnyTrace) -> int:
    if isinstance(trace, TableSessionTrace):
        return len(trace.items.rows)
    return len(trace.merged.evidence_triples)


@dataclass(frozen=True)
class PathMetrics:
    lpp: float = 0.0
    lip: float = 0.0
    aip: float = 0.0
    isr: float = 0.0
    cer: float = 0.0
    cer_per_constraint: float = 0.0


def _question_path_stats(trace: SessionTrace, which: str):
    if not trace.iterations:
        return 0, 0, False, 0, 0
    it = trace.iterations[-1] if which == "final" else trace.iterations[0]
    lpp = sum(len(o.nl_relations) for o in it.outcomes)
    lip = sum(len(o.instantiated_relations) for o in it.outcomes)
    compound = sum(
        1 for o in it.outcomes if o.error is not None and o.error.reason is ErrorReason.COMPOUND_ENDING
    )
    return lpp, lip, compound > 0, compound, len(it.outcomes)


def path_metrics(traces: Sequence[AnyTrace], which: str = "final") -> PathMetrics:
    """Path statistics over KG traces, on the final (default) or initial iteration."""
    if which not in ("final", "initial"):
        raise ValueError("which must be 'final' or 'initial'")
    kg = [t for t in traces if isinstance(t, SessionTrace)]
    if not kg:
        return PathMetrics()
    n = len(kg)
    lpp = lip = aip = isr = cer = 0.0
    n_comp = n_cons = 0
    for t in kg:
        q_lpp, q_lip, q_cer, comp, cons = _question_path_stats(t, which)
        lpp += q_lpp
        lip += q_lip
        aip += q_lip / q_lpp if q_lpp else 0.0
        isr += 1.0 if q_lpp > 0 and q_lip == q_lpp else 0.0
        cer += 1.0 if q_cer else 0.0
        n_comp += comp
        n_cons += cons
    return PathMetrics(lpp / n, lip / n, aip / n, isr / n, cer / n, n_comp / n_cons if n_cons else 0.0)


@dataclass(frozen=True)
class GoldRecord:
    id: str
    question: str
    answers: tuple[str, ...]
    topic_entities: tuple[str, ...] = ()
    table_id: str | None = None

    @classmethod
    def from_dict(cls, d: Mapping) -> "GoldRecord":
        try:
            answers = tuple(str(a) for a in d["answers"])
            rec = cls(
                str(d["id"]),
                str(d["question"]),
                answers,
                tuple(d.get("topic_entities") or ()),
                d.get("table_id"),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed dataset record: {exc!r}") from exc
        if not answers:
            raise DataError(f"record {rec.id}: answers must be non-empty")
        return rec


def load_dataset(path: str | Path) -> list[GoldRecord]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(GoldRecord.from_dict(json.loads(line)))
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from exc
    return out


@dataclass(frozen=True)
class QuestionResult:
    id: str
    hit_at_1: bool
    denotation_accuracy: bool
    answer_coverage: bool
    rk: int
    lpp: int
    lip: int
    edit_calls: int
    error: str | None


@dataclass(frozen=True)
class MetricsReport:
    n_questions: int = 0
    hit_at_1: float = 0.0
    denotation_accuracy: float = 0.0
    answer_coverage: float = 0.0
    avg_rk: float = 0.0
    lpp: float = 0.0
    lip: float = 0.0
    aip: float = 0.0
    isr: float = 0.0
    cer: float = 0.0
    cer_per_constraint: float = 0.0
    avg_edit_calls: float = 0.0
    edit_call_histogram: dict[int, float] = field(default_factory=dict)
    initial: PathMetrics = field(default_factory=PathMetrics)
    n_errors: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["edit_call_histogram"] = {str(k): v for k, v in sorted(self.edit_call_histogram.items())}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _align(traces: Sequence[AnyTrace], gold: Sequence[GoldRecord]) -> list[tuple[AnyTrace, GoldRecord]]:
    by_id = {r.id: r for r in gold}
    trace_ids = [t.question_id for t in traces]
    dup = sorted({i for i in trace_ids if trace_ids.count(i) > 1})
    orphans_t = sorted(set(trace_ids) - set(by_id))
    orphans_g = sorted(set(by_id) - set(trace_ids))
    if dup or orphans_t or orphans_g:
        raise ReportError(
            f"traces and gold do not align: traces without gold {orphans_t}, "
            f"gold without traces {orphans_g}, duplicated trace ids {dup}"
        )
    return [(t, by_id[t.question_id]) for t in traces]


def per_question(traces: Sequence[AnyTrace], gold: Sequence[GoldRecord], g: KnowledgeGraph | None) -> list[QuestionResult]:
    rows = []
    for t, rec in _align(traces, gold):
        lpp, lip = 0, 0
        if isinstance(t, SessionTrace):
            lpp, lip, *_ = _question_path_stats(t, "final")
        rows.append(
            QuestionResult(
                t.question_id,
                hit_at_1(t.answers, rec.answers),
                denotation_accuracy(t.answers, rec.answers),
                answer_coverage(t, rec.answers, g),
                retrieved_knowledge(t),
                lpp,
                lip,
                t.edit_calls,
                t.error,
            )
        )
    return rows


def build_report(
    traces: Sequence[AnyTrace],
    gold_records: Sequence[GoldRecord],
    g: KnowledgeGraph | None = None,
) -> MetricsReport:
    rows = per_question(traces, gold_records, g)
    n = len(rows)
    if n == 0:
        return MetricsReport()
    pm = path_metrics(traces, "final")
    hist = Counter(r.edit_calls for r in rows)
    return MetricsReport(
        n_questions=n,
        hit_at_1=sum(r.hit_at_1 for r in rows) / n,
        denotation_accuracy=sum(r.denotation_accuracy for r in rows) / n,
        answer_coverage=sum(r.answer_coverage for r in rows) / n,
        avg_rk=sum(r.rk for r in rows) / n,
        lpp=pm.lpp,
        lip=pm.lip,
        aip=pm.aip,
        isr=pm.isr,
        cer=pm.cer,
        cer_per_constraint=pm.cer_per_constraint,
        avg_edit_calls=sum(r.edit_calls for r in rows) / n,
        edit_call_histogram={k: hist[k] / n for k in sorted(hist)},
        initial=path_metrics(traces, "initial"),
        n_errors=sum(1 for r in rows if r.error),
    )


def write_per_question_csv(path: str | Path, rows: Iterable[QuestionResult]) -> None:
    rows = list(rows)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "hit_at_1", "denotation_accuracy", "answer_coverage", "rk", "lpp", "lip", "edit_calls", "error"])
        for r in rows:
            w.writerow([r.id, int(r.hit_at_1), int(r.denotation_accuracy), int(r.answer_coverage),
                        r.rk, r.lpp, r.lip, r.edit_calls, r.error or ""])
