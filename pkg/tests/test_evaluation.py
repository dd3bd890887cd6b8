import json
import random

import pytest

from handbuilt import EXPECTED, EXPECTED_HISTOGRAM, EXPECTED_INITIAL, GRAPH, golden_traces, three_traces
from readi.errors import DataError, ReportError
from readi.evaluation import (
    GoldRecord,
    MetricsReport,
    answer_coverage,
    build_report,
    denotation_accuracy,
    hit_at_1,
    load_dataset,
    normalize_answer,
    path_metrics,
    per_question,
    write_per_question_csv,
)
from readi.kg import KnowledgeGraph, Triple
from readi.session import MergedEvidence, SessionTrace


def test_hit_at_1_examples():
    assert hit_at_1(["Germany"], ["German", "Germany"])
    assert not hit_at_1([], ["x"])
    assert hit_at_1(["The De Smet"], ["De Smet"])
    assert hit_at_1(["  de   smet. "], ["De Smet"])


def test_normalization_rules():
    assert normalize_answer("  The  Big   Apple! ") == "big apple"
    assert normalize_answer("an apple") == "apple"
    assert normalize_answer("Theatre") == "theatre"


def test_denotation_accuracy_examples():
    assert denotation_accuracy(["2004"], ["2004"])
    assert denotation_accuracy(["a", "b"], ["b", "a"])
    assert not denotation_accuracy(["a"], ["a", "b"])


def test_answer_coverage_examples(airport_graph):
    t = SessionTrace("q", "Q", ["France"], merged=MergedEvidence(frozenset(), frozenset({
        Triple("cvt1", "location.adjoining_relationship.country", "Germany")})))
    assert answer_coverage(t, ["Germany"], airport_graph)
    assert not answer_coverage(SessionTrace("q", "Q", ["France"]), ["Germany"], airport_graph)
    cvt_only = SessionTrace("q", "Q", ["a"], merged=MergedEvidence(frozenset(), frozenset({Triple("c1", "r", "c2")})))
    assert not answer_coverage(cvt_only, ["x"], KnowledgeGraph([Triple("c1", "r", "c2")]))


def test_half_grounded_session():
    traces, _ = three_traces()
    pm = path_metrics([traces[1]])
    assert (pm.lpp, pm.lip, pm.aip, pm.isr) == (4, 2, 0.5, 0)


def test_three_trace_report_matches_hand_computation():
    traces, gold = three_traces()
    r = build_report(traces, gold, GRAPH)
    for k, v in EXPECTED.items():
        assert getattr(r, k) == pytest.approx(v, abs=1e-9), k
    assert r.edit_call_histogram == pytest.approx(EXPECTED_HISTOGRAM, abs=1e-9)
    for k, v in EXPECTED_INITIAL.items():
        assert getattr(r.initial, k) == pytest.approx(v, abs=1e-9), k


def test_golden_pattern():
    traces, gold = golden_traces()
    r = build_report(traces, gold, GRAPH)
    assert (r.aip, r.isr, r.cer) == (1.0, 1.0, 0.0)


def test_empty_report():
    r = build_report([], [])
    assert r == MetricsReport()
    assert path_metrics([]).lpp == 0


def test_alignment_errors_list_orphans():
    traces, gold = three_traces()
    with pytest.raises(ReportError, match="q3"):
        build_report(traces, gold[:2], GRAPH)
    with pytest.raises(ReportError, match="duplicated"):
        build_report(traces + traces[:1], gold, GRAPH)


def test_invalid_path_metric_selector():
    with pytest.raises(ValueError):
        path_metrics([], "middle")


def test_gold_record_validation(tmp_path):
    with pytest.raises(DataError):
        GoldRecord.from_dict({"id": "x", "question": "q", "answers": []})
    p = tmp_path / "d.jsonl"
    p.write_text('{"id": "a", "question": "q", "answers": ["x"]}\n\nnot json\n')
    with pytest.raises(DataError, match="line 3"):
        load_dataset(p)


def test_report_json_is_stable():
    traces, gold = three_traces()
    a = build_report(traces, gold, GRAPH).to_json()
    b = build_report(list(traces), list(gold), GRAPH).to_json()
    assert a == b
    assert json.loads(a)["edit_call_histogram"] == {"0": 1 / 3, "2": 1 / 3, "4": 1 / 3}


def test_per_question_csv(tmp_path):
    traces, gold = three_traces()
    write_per_question_csv(tmp_path / "pq.csv", per_question(traces, gold, GRAPH))
    lines = (tmp_path / "pq.csv").read_text().splitlines()
    assert lines[0].startswith("id,hit_at_1")
    assert lines[1] == "q1,1,1,1,4,3,3,0,"


def random_sessions(seed, n=10):
    """Sessions whose per-question numbers are drawn first and encoded into traces."""
    from handbuilt import _iteration, _outcome
    from readi.instantiate import ErrorReason

    rng = random.Random(seed)
    rows, traces, gold = [], [], []
    for i in range(n):
        lpp = rng.randint(1, 4)
        lip = rng.randint(0, lpp)
        compound = lip == lpp and rng.random() < 0.3
        reason = ErrorReason.COMPOUND_ENDING if compound else (None if lip == lpp else ErrorReason.IRRELEVANT_RELATION)
        out = _outcome(0, "s1", ["r"] * lpp, lip, {"cvt9"} if compound else ({"E1"} if lip else set()), reason, lip if reason is ErrorReason.IRRELEVANT_RELATION else None)
        rk = rng.randint(0, 3)
        evidence = frozenset(sorted(GRAPH.triples)[:rk])
        edits = rng.randint(0, 4)
        answers = rng.choice([["Paris"], ["Lyon"], []])
        traces.append(SessionTrace(f"r{i}", "Q", ["s1"], [_iteration(out)] * (edits + 1), edits,
                                   MergedEvidence(frozenset(), evidence), answers))
        gold.append(GoldRecord(f"r{i}", "Q", ("Paris",)))
        names = {GRAPH.friendly_name(e) for t in evidence for e in (t[0], t[2])}
        rows.append(dict(lpp=lpp, lip=lip, compound=compound, rk=rk, edits=edits,
                         hit=answers == ["Paris"], ac="Paris" in names))
    return traces, gold, rows


@pytest.mark.parametrize("seed", range(5))
def test_ten_sessions_match_hand_aggregates(seed):
    traces, gold, rows = random_sessions(seed)
    r = build_report(traces, gold, GRAPH)
    n = len(rows)
    assert r.n_questions == n
    assert r.lpp == pytest.approx(sum(x["lpp"] for x in rows) / n, abs=1e-9)
    assert r.lip == pytest.approx(sum(x["lip"] for x in rows) / n, abs=1e-9)
    assert r.aip == pytest.approx(sum(x["lip"] / x["lpp"] for x in rows) / n, abs=1e-9)
    assert r.isr == pytest.approx(sum(x["lip"] == x["lpp"] for x in rows) / n, abs=1e-9)
    assert r.cer == pytest.approx(sum(x["compound"] for x in rows) / n, abs=1e-9)
    assert r.avg_rk == pytest.approx(sum(x["rk"] for x in rows) / n, abs=1e-9)
    assert r.hit_at_1 == pytest.approx(sum(x["hit"] for x in rows) / n, abs=1e-9)
    assert r.answer_coverage == pytest.approx(sum(x["ac"] for x in rows) / n, abs=1e-9)
    assert sum(r.edit_call_histogram.values()) == pytest.approx(1.0)
    for v in (r.hit_at_1, r.denotation_accuracy, r.answer_coverage, r.aip, r.isr, r.cer):
        assert 0.0 <= v <= 1.0
