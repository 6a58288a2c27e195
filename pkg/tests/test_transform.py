import random

import pytest
from hypothesis import given, strategies as st

from limitlog.analysis import check_type_consistent_reference, compute_stratification
from limitlog.corpus import load_example, random_program
from limitlog.engine import EngineConfig, materialise_stratified
from limitlog.model import Comparison, ContractError, Fact, Int, Var, unit_size
from limitlog.oracle import brute_force_materialise
from limitlog.syntax import format_rule, parse_program
from limitlog.transform import reduct, semi_ground, tc_rewrite_reduct

DIST = "min d/3.\nd(X, X, 0) :- node(X).\nd(X, Z, M + N) :- d(X, Y, M), edge(Y, Z, N).\n"
BOUND = 24


def oracle_facts(prog, data=(), bound=BOUND):
    return brute_force_materialise(prog, data, bound=bound).facts()


def test_semi_grounding_of_distance_rules():
    p = parse_program(DIST)
    data = [Fact("node", ("a",)), Fact("node", ("b",)), Fact("edge", ("a", "b"), 5)]
    sg = semi_ground(p, data)
    text = {format_rule(r) for r in sg.rules}
    assert "d(a,a,0) :- node(a)." in text
    recursive = [r for r in sg.rules if r.body and r.body[0].atom.pred == "d"]
    assert recursive
    for r in recursive:
        edge = r.body[1].atom
        assert edge.args[-1] == Int(5) and edge.args[:2] == r.body[0].atom.args[1:2] + r.head.args[1:2]
    assert all(not r.variables() - {"M"} for r in sg.rules)


def test_ground_program_is_its_own_semi_grounding():
    p = parse_program("max q/2.\nq(a, 3) :- e(a), not f(b).\ne(a).")
    sg = semi_ground(p)
    assert sg.rules == p.rules


def test_semi_grounding_preserves_shortest_path_entailment():
    prog, data = load_example("shortest-path")
    sg = semi_ground(prog, data)
    assert oracle_facts(prog, data) == oracle_facts(sg.to_program())


def _semi_positive(src):
    p = parse_program(src)
    return semi_ground(p)


def test_reduct_deletes_rule_on_true_ground_negation():
    sg = _semi_positive("max h/1.\nh(1) :- e(a), not edge(a, b, 1).\nedge(a, b, 1). e(a).")
    assert reduct(sg).rules == ()


def test_reduct_drops_false_ground_negation():
    sg = _semi_positive("max h/1.\nh(1) :- e(a), not edge(a, b, 2).\nedge(a, b, 1). e(a).")
    (r,) = reduct(sg).rules
    assert all(lit.positive for lit in r.literals())


def test_reduct_limit_literal_becomes_strict_comparison():
    sg = _semi_positive("max q/2. max p/1. max h/1.\nh(M) :- p(M), not q(a, M).\nq(a, 4). p(7).")
    (r,) = reduct(sg).rules
    assert Comparison("<", Int(4), Var("M")) in r.body
    assert not any(not lit.positive for lit in r.literals())


def test_reduct_min_limit_literal():
    sg = _semi_positive("min q/2. max p/1. max h/1.\nh(M) :- p(M), not q(a, M).\nq(a, 4). p(7).")
    (r,) = reduct(sg).rules
    assert Comparison("<", Var("M"), Int(4)) in r.body


def test_reduct_drops_limit_literal_without_facts():
    sg = _semi_positive("max q/2. max p/1. max h/1.\nh(M) :- p(M), not q(a, M).\np(7).")
    (r,) = reduct(sg).rules
    assert len(r.body) == 1


def test_reduct_deletes_rule_on_star_fact():
    sg = _semi_positive("max q/2. max p/1. max h/1.\nh(M) :- p(M), not q(a, M).\np(7). q(a, *).")
    assert reduct(sg).rules == ()


def test_reduct_rejects_idb_negation():
    sg = _semi_positive("h :- e, not g.\ng :- e.\ne.")
    with pytest.raises(ContractError):
        reduct(sg)


def test_tc_rewrite_substitutes_guard_values():
    sg = _semi_positive("min a/2. min h/2.\nh(b, N + M) :- a(b, N), not a(b, M), M = N - 1.\na(b, 3).")
    out = tc_rewrite_reduct(sg, validate=True)
    (r,) = out.rules
    assert r.body == ()
    assert r.head.args[-1] == Int(5)


def test_tc_rewrite_deletes_rule_without_guard_fact():
    sg = _semi_positive("min a/2. min h/2.\nh(b, N) :- e(b), lub a(b, N).\ne(b).")
    assert tc_rewrite_reduct(sg, validate=True).rules == ()


def test_tc_rewrite_deletes_rule_on_star_guard():
    sg = _semi_positive("min a/2. min h/2.\nh(b, N) :- e(b), lub a(b, N).\ne(b). a(b, *).")
    assert tc_rewrite_reduct(sg).rules == ()


def test_tc_rewrite_of_shortest_path_second_stratum():
    prog, data = load_example("shortest-path")
    strat = compute_stratification(prog)
    J, _ = materialise_stratified(prog, data, EngineConfig(mode="tc"), stratification=strat)
    ds_facts = [f for f in J.facts() if f.pred == "ds"]
    second = prog.with_rules(strat.strata[1], list(data) + ds_facts)
    out = tc_rewrite_reduct(semi_ground(second), validate=True)
    assert out.is_positive()
    assert check_type_consistent_reference(out)[0]
    got = {f for f in oracle_facts(out.to_program()) if f.pred == "sp_edge"}
    assert got == {Fact("sp_edge", ("a", "b")), Fact("sp_edge", ("b", "c"))}


def _stratum_pairs(rp):
    """(stratum program with lower-strata facts folded in) for each stratum."""
    strat = compute_stratification(rp.program)
    J, _ = materialise_stratified(rp.program, rp.dataset, EngineConfig(mode="tc"))
    for rules in strat.strata:
        heads = {r.head.pred for r in rules}
        lower = [f for f in J.facts() if f.pred not in heads]
        yield rp.program.with_rules(rules, lower)


@given(seed=st.integers(0, 2**32 - 1))
def test_semi_grounding_preserves_entailment(seed):
    rp = random_program(random.Random(seed), type_consistent=False, loose=True)
    sg = semi_ground(rp.program, rp.dataset)
    assert oracle_facts(rp.program, rp.dataset) == oracle_facts(sg.to_program())


@given(seed=st.integers(0, 2**32 - 1))
def test_reduct_preserves_entailment_per_stratum(seed):
    rp = random_program(random.Random(seed))
    for stratum in _stratum_pairs(rp):
        sg = semi_ground(stratum)
        red = reduct(sg)
        assert red.is_positive()
        assert oracle_facts(stratum) == oracle_facts(red.to_program())
        assert red.max_unit_size() <= sg.max_unit_size()


@given(seed=st.integers(0, 2**32 - 1))
def test_tc_rewrite_output_is_type_consistent(seed):
    rp = random_program(random.Random(seed))
    for stratum in _stratum_pairs(rp):
        sg = semi_ground(stratum)
        out = tc_rewrite_reduct(sg)
        assert out.is_positive()
        assert check_type_consistent_reference(out)[0]
        assert oracle_facts(stratum) == oracle_facts(out.to_program())
        assert out.max_unit_size() <= sg.max_unit_size()


def test_unit_size_counts_symbols():
    p = parse_program("max h/2.\nh(X, N + 1) :- e(X), w(X, N).")
    assert unit_size(p.rules[0]) > unit_size(parse_program("h(X) :- e(X).").rules[0])

