import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import enumerate_walks, random_case, reference_candidates
from readi.instantiate import (
    ErrorReason,
    InstantiatorConfig,
    has_error,
    instantiate_constraint,
    instantiate_path,
)
from readi.kg import KnowledgeGraph, Triple
from readi.paths import Constraint, ReasoningPath
from readi.relindex import build_index

BIG = InstantiatorConfig(queue_threshold=10**6)


def test_france_border_ends_on_compound(airport_graph, airport_index):
    o = instantiate_constraint(Constraint("France", ("border",)), airport_graph, airport_index)
    assert o.instantiated_relations == (("border", "location.location.adjoin"),)
    assert o.frontier == {"cvt1"}
    assert o.error.reason is ErrorReason.COMPOUND_ENDING
    assert o.error.err_position is None
    assert o.error.e_err_set == {"cvt1"}


def test_nijmegen_chain_succeeds(airport_graph, airport_index):
    o = instantiate_constraint(Constraint("Nijmegen", ("serve_airport", "contain")), airport_graph, airport_index)
    assert [b for _, b in o.instantiated_relations] == ["aviation.serving_airport", "location.location.containedby"]
    assert "Germany" in o.frontier
    assert o.error is None


def test_empty_constraint(airport_graph, airport_index):
    o = instantiate_constraint(Constraint("France", ()), airport_graph, airport_index)
    assert o.error.reason is ErrorReason.EMPTY_PATH
    assert o.error.err_position == 0
    assert o.error.e_err_set == {"France"}


def test_unknown_start_is_irrelevant_relation(airport_graph, airport_index):
    o = instantiate_constraint(Constraint("Atlantis", ("border",)), airport_graph, airport_index)
    assert o.error.reason is ErrorReason.IRRELEVANT_RELATION
    assert o.error.err_position == 0
    assert o.error.r_err == "border"
    assert o.frontier == frozenset()


def test_irrelevant_relation_mid_path(airport_graph, airport_index):
    o = instantiate_constraint(Constraint("Nijmegen", ("serve_airport", "zzz")), airport_graph, airport_index)
    assert o.error.reason is ErrorReason.IRRELEVANT_RELATION
    assert o.error.err_position == 1
    assert o.error.e_err_set == {"WZ_air", "NTA"}
    assert o.frontier == {"WZ_air", "NTA"}
    assert len(o.instantiated_relations) == 1


def test_airport_path_outcomes(airport_graph, airport_index):
    p = ReasoningPath((Constraint("France", ("border",)), Constraint("Nijmegen", ("serve_airport", "contain"))))
    outs = instantiate_path(p, airport_graph, airport_index)
    assert [o.error.reason if o.error else None for o in outs] == [ErrorReason.COMPOUND_ENDING, None]
    assert has_error(outs)


def test_edited_airport_path_succeeds(airport_graph, airport_index):
    p = ReasoningPath((Constraint("France", ("border", "country")), Constraint("Nijmegen", ("serve_airport", "contain"))))
    outs = instantiate_path(p, airport_graph, airport_index)
    assert not has_error(outs)
    assert outs[0].frontier == {"Germany"}
    assert "Germany" in outs[1].frontier


def test_all_empty_path(airport_graph, airport_index):
    outs = instantiate_path(ReasoningPath.empty(["France", "Nijmegen"]), airport_graph, airport_index)
    assert all(o.error.reason is ErrorReason.EMPTY_PATH for o in outs)


def test_has_error_trivial(airport_graph, airport_index):
    ok = instantiate_constraint(Constraint("Nijmegen", ("serve_airport", "contain")), airport_graph, airport_index)
    assert has_error([ok, ok]) is False
    assert has_error([]) is False


def test_config_counts_must_be_positive():
    with pytest.raises(ValueError):
        InstantiatorConfig(queue_threshold=0)


def test_threshold_keeps_smallest_ids():
    leaves = [f"leaf{i:02d}" for i in range(20)]
    g = KnowledgeGraph([Triple("hub", "x.spoke", e) for e in reversed(leaves)])
    idx = build_index(g.relations)
    cfg = InstantiatorConfig(queue_threshold=5)
    runs = [instantiate_constraint(Constraint("hub", ("spoke",)), g, idx, cfg) for _ in range(3)]
    assert runs[0].frontier == set(leaves[:5])
    assert runs[0].instance_triples == {Triple("hub", "x.spoke", e) for e in leaves[:5]}
    assert runs[0] == runs[1] == runs[2]


def test_outcome_dict_round_trip(airport_graph, airport_index):
    from readi.instantiate import ConstraintOutcome

    o = instantiate_constraint(Constraint("France", ("border",)), airport_graph, airport_index)
    assert ConstraintOutcome.from_dict(o.to_dict()) == o


def check_against_oracle(case):
    triples, names, start, nl, k = case
    g = KnowledgeGraph([Triple(*t) for t in triples], names)
    idx = build_index(g.relations)
    cfg = InstantiatorConfig(bind_k=k, queue_threshold=10**6)
    got = instantiate_constraint(Constraint(start, tuple(nl)), g, idx, cfg)
    cands = [reference_candidates(r, g.relations, k) for r in nl]
    chosen, frontier, edges, error = enumerate_walks(triples, start, cands, g.compound_ids)
    assert [b for _, b in got.instantiated_relations] == chosen
    assert got.frontier == frontier
    assert {tuple(t) for t in got.instance_triples} == edges
    assert (got.error.reason.value if got.error else None) == error
    # progress soundness
    assert [n for n, _ in got.instantiated_relations] == nl[: len(chosen)]
    if chosen:
        assert got.frontier


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_walk_enumeration(seed):
    check_against_oracle(random_case(random.Random(seed), max_entities=30, max_len=3))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_error_trichotomy(seed):
    triples, names, start, nl, k = random_case(random.Random(seed))
    g = KnowledgeGraph([Triple(*t) for t in triples], names)
    o = instantiate_constraint(Constraint(start, tuple(nl)), g, build_index(g.relations), InstantiatorConfig(bind_k=k))
    assert len(o.instantiated_relations) <= len(nl)
    assert (o.error is None) == (len(o.instantiated_relations) == len(nl) and not all(g.is_compound(e) for e in o.frontier))
    if o.error is None:
        return
    if o.error.reason is ErrorReason.IRRELEVANT_RELATION:
        assert o.error.r_err == nl[o.error.err_position]
    elif o.error.reason is ErrorReason.EMPTY_PATH:
        assert nl == [] and o.error.e_err_set == {start}
    else:
        assert len(o.instantiated_relations) == len(nl)
        assert all(g.is_compound(e) for e in o.error.e_err_set)
