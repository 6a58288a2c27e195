import random

import pytest
from hypothesis import assume, given, strategies as st

from limitlog.analysis import (
    check_limit_linear,
    check_type_consistent,
    check_type_consistent_reference,
    classify,
    coarsened_stratification,
    compute_stratification,
    guarded_variables,
    is_valid_stratification,
    product_signs,
)
from limitlog.corpus import load_example, random_program
from limitlog.model import Atom, BinOp, Comparison, Int, Literal, Obj, Rule, Var
from limitlog.oddminsat import BVar, encode
from limitlog.syntax import parse_program
from limitlog.transform import semi_ground

SP, SP_DATA = load_example("shortest-path")
CC, CC_DATA = load_example("closeness")
MODD, _ = load_example("oddminsat")


def assert_lambda_inequalities(prog, levels):
    for r in prog.rules:
        a = levels[r.head.pred]
        for lit in r.literals():
            b = levels.get(lit.atom.pred, 1)
            assert b <= a if lit.positive else b < a


def test_shortest_path_has_two_strata():
    s = compute_stratification(SP)
    assert s.levels["ds"] == 1 and s.levels["sp_edge"] == 2
    assert len(s.strata) == 2
    assert {r.head.pred for r in s.strata[0]} == {"ds"}
    assert {r.head.pred for r in s.strata[1]} == {"sp_edge"}
    assert_lambda_inequalities(SP, s.levels)


def test_positive_program_single_stratum():
    p = parse_program("min d/3.\nd(X, X, 0) :- node(X).\nd(X, Z, M + N) :- d(X, Y, M), edge(Y, Z, N).")
    s = compute_stratification(p)
    assert set(s.levels.values()) == {1}


def test_negative_cycle_witness():
    s = compute_stratification(parse_program("p :- not p."))
    assert not s
    assert s.cycle[0] == s.cycle[-1] == "p"


def test_negative_cycle_through_two_predicates():
    s = compute_stratification(parse_program("p :- e, not q.\nq :- p."))
    assert not s
    assert set(s.cycle) == {"p", "q"}


def test_guarded_variables_in_sp_edge_rule():
    rule = SP.rules[2]
    g = guarded_variables(rule, SP)
    assert {"M1", "M2", "N"} <= g


def test_distance_rule_guardedness():
    p = parse_program("min d/3.\nd(X, Z, M + N) :- d(X, Y, M), edge(Y, Z, N).")
    assert guarded_variables(p.rules[0], p) == {"N"}


def test_fact_rule_has_no_guarded_variables():
    p = parse_program("max p/1.\np(3) :- e.")
    assert guarded_variables(p.rules[0], p) == set()


@pytest.mark.parametrize("prog", [SP, CC, MODD], ids=["sp", "cc", "modd"])
def test_corpus_is_limit_linear(prog):
    ok, diags = check_limit_linear(prog)
    assert ok, diags


def test_product_of_unguarded_variables_is_not_limit_linear():
    p = parse_program("max a/2. max b/2. max h/2.\nh(X, M * N) :- a(X, M), b(X, N).")
    assert not check_limit_linear(p)[0]


@pytest.mark.parametrize("prog,data", [(SP, SP_DATA), (CC, CC_DATA)], ids=["sp", "cc"])
def test_corpus_is_type_consistent(prog, data):
    assert check_type_consistent(prog)[0]
    assert check_type_consistent(prog.with_facts(data))[0]
    assert classify(prog).flags["type_consistent"]


def test_oddminsat_is_not_type_consistent():
    full = MODD.with_facts(encode(1, BVar(0)))
    ok, diags = check_type_consistent(full)
    assert not ok
    vartrue = [d for d in diags if d.startswith("rule 7:")]
    # M1 appears in no standard literal, which is the first condition it breaks.
    assert vartrue and "bullet 2" in vartrue[0] and "M1" in vartrue[0]
    ref_ok, ref_diags = check_type_consistent_reference(semi_ground(full, prune=False))
    assert not ref_ok


def test_flipping_body_limit_type_breaks_fourth_condition():
    p = parse_program(
        "min ds/2. max dz/2.\nds(X, 0) :- source(X).\nds(Y, M + N) :- dz(X, M), edge(X, Y, N).\n"
        "edge(a, b, 1). source(a). dz(a, 2)."
    )
    ok, diags = check_type_consistent(p)
    assert not ok and "bullet 4" in diags[0]
    assert not check_type_consistent_reference(semi_ground(p, prune=False))[0]


def test_report_format_lists_flags_first():
    lines = classify(CC).format().splitlines()
    assert lines[:6] == [
        "safe=true",
        "stratified=true",
        "semi_positive=false",
        "positive=false",
        "limit_linear=true",
        "type_consistent=true",
    ]


def test_report_implications():
    for seed in range(30):
        rp = random_program(random.Random(seed), type_consistent=False, loose=True)
        f = classify(rp.program).flags
        assert not f["type_consistent"] or f["limit_linear"]
        assert not f["limit_linear"] or (f["stratified"] and f["safe"])


@given(coef=st.integers(-3, 3), p=st.integers(1, 3), q=st.integers(0, 2),
       ints=st.lists(st.integers(-4, 4), min_size=1, max_size=4, unique=True))
def test_product_signs_matches_enumeration(coef, p, q, ints):
    powers = {"x": p, "y": q} if q else {"x": p}
    expected = set()
    for x in ints:
        for y in ints:
            v = coef * x**p * (y**q if q else 1)
            expected.add("+" if v > 0 else "-" if v < 0 else "0")
    assert product_signs(coef, powers, ints) == expected


@given(seed=st.integers(0, 2**32 - 1))
def test_fast_checker_agrees_with_reference(seed):
    rp = random_program(random.Random(seed), type_consistent=False, loose=True)
    full = rp.program.with_facts(rp.dataset)
    fast = check_type_consistent(full)[0]
    ref = check_type_consistent_reference(semi_ground(full, prune=False))[0]
    assert fast == ref


@given(seed=st.integers(0, 2**32 - 1))
def test_minimal_and_coarsened_stratifications_are_valid(seed):
    rng = random.Random(seed)
    rp = random_program(rng, type_consistent=False, loose=True)
    s = compute_stratification(rp.program)
    assert is_valid_stratification(rp.program, s.levels)
    assert_lambda_inequalities(rp.program, s.levels)
    c = coarsened_stratification(rp.program, rng)
    assert is_valid_stratification(rp.program, c.levels)
    # the minimal stratification is pointwise below any other
    assert all(s.levels[p] <= c.levels[p] for p in s.levels)


@given(seed=st.integers(0, 2**32 - 1), kind=st.sampled_from(["min", "max"]))
def test_guarded_variables_monotone_under_added_guards(seed, kind):
    rng = random.Random(seed)
    rp = random_program(rng, type_consistent=False, loose=True)
    prog = parse_program(f"{kind} gg/2.\n" + rp.text)
    assume(prog.rules)
    rule = rng.choice(prog.rules)
    before = guarded_variables(rule, prog)
    t = 1 if kind == "max" else -1
    n1, n2 = Var("_G1"), Var("_G2")
    extra = (
        Literal(Atom("gg", (Obj("a"), n1))),
        Literal(Atom("gg", (Obj("a"), n2)), positive=False),
        Comparison("<=", n2, BinOp("+", n1, Int(t))),
        Comparison("<=", BinOp("+", n1, Int(t)), n2),
    )
    bigger = Rule(rule.head, rule.body + extra)
    after = guarded_variables(bigger, prog)
    assert before <= after
    assert {"_G1", "_G2"} <= after
