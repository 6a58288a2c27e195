import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from limitlog.analysis import coarsened_stratification, compute_stratification
from limitlog.corpus import load_example, random_program
from limitlog.engine import (
    NO_VALUE,
    NOT_APPLICABLE,
    DeriveLimit,
    EngineConfig,
    lub_query,
    materialise_stratified,
    opt_rule,
    pseudo_materialise_positive,
    query,
    step,
)
from limitlog.model import (
    ALL_INTS,
    STAR,
    Atom,
    Fact,
    Finite,
    Int,
    Kind,
    Obj,
    ProgramError,
    PseudoInterpretation,
    Rule,
    entails,
)
from limitlog.oracle import OracleVerdict, brute_force_materialise, oracle_entails
from limitlog.syntax import parse_program
from limitlog.transform import reduct, semi_ground, tc_rewrite_reduct

TC = EngineConfig(mode="tc", validate=True)
GENERAL = EngineConfig(mode="general")


def kinds_of(prog):
    return {p: i.kind for p, i in prog.predicates.items()}


def rule_and_J(src, facts):
    prog = parse_program(src)
    kinds = kinds_of(prog)
    return prog.rules[0], PseudoInterpretation.from_facts(facts, kinds), kinds


# ------------------------------------------------------------------ opt_rule


def test_opt_rule_distance_step():
    r, J, k = rule_and_J(
        "min d/3.\nd(a, c, M + 2) :- d(a, b, M), edge(b, c, 2).",
        [Fact("d", ("a", "b"), 5), Fact("edge", ("b", "c"), 2)],
    )
    assert opt_rule(r, J, k) == DeriveLimit("d", ("a", "c"), Finite(7))
    assert opt_rule(r, J, k, mode="tc") == DeriveLimit("d", ("a", "c"), Finite(7))


def test_opt_rule_bounded_and_unbounded():
    src = "max p/2. max q/2.\nq(a, 2 * M) :- p(a, M)."
    r, J, k = rule_and_J(src, [Fact("p", ("a",), 5)])
    assert opt_rule(r, J, k) == DeriveLimit("q", ("a",), Finite(10))
    r, J, k = rule_and_J(src, [Fact("p", ("a",), STAR)])
    assert opt_rule(r, J, k) == DeriveLimit("q", ("a",), ALL_INTS)


def test_opt_rule_integer_optimum_below_rational_bound():
    r, J, k = rule_and_J("max p/2. max q/2.\nq(a, 3 * M) :- p(a, M), 2 * M <= 5.", [Fact("p", ("a",), 9)])
    assert opt_rule(r, J, k) == DeriveLimit("q", ("a",), Finite(6))


def test_opt_rule_missing_object_atom():
    r, J, k = rule_and_J("max p/2. max q/2.\nq(a, M) :- p(a, M), e(b).", [Fact("p", ("a",), 5), Fact("e", ("a",))])
    assert opt_rule(r, J, k) is NOT_APPLICABLE


def test_opt_rule_infeasible_comparisons():
    r, J, k = rule_and_J("max p/2. max q/2.\nq(a, M) :- p(a, M), 7 <= M.", [Fact("p", ("a",), 5)])
    assert opt_rule(r, J, k) is NOT_APPLICABLE


@pytest.mark.parametrize(
    "entry, expected",
    [(4, Finite(4)), (STAR, None)],
)
def test_lub_guard_fixes_value(entry, expected):
    prog = parse_program("max p/2. max h/2.\nh(a, N) :- lub p(a, N).")
    data = [Fact("p", ("a",), entry)]
    for config in (TC, GENERAL):
        J, _ = materialise_stratified(prog, data, config)
        assert J.limit("h", ("a",)) == expected


def _brute_optimum(kinds, head_kind, coeffs, c0, entries, comps, box):
    best = None
    for n1, n2 in itertools.product(range(-box, box + 1), repeat=2):
        vals = (n1, n2)
        ok = True
        for v, (kind, e) in zip(vals, entries):
            if e is STAR:
                continue
            if (kind is Kind.MAX and v > e) or (kind is Kind.MIN and v < e):
                ok = False
        for a, b, k in comps:
            if a * n1 + b * n2 > k:
                ok = False
        if not ok:
            continue
        x = coeffs[0] * n1 + coeffs[1] * n2 + c0
        if best is None or (x > best if head_kind is Kind.MAX else x < best):
            best = x
    return best


@settings(max_examples=150)
@given(seed=st.integers(0, 2**32 - 1))
def test_opt_rule_matches_brute_force(seed):
    rng = random.Random(seed)
    pk, qk, hk = (rng.choice(("max", "min")) for _ in range(3))
    coeffs = (rng.randint(-2, 2), rng.randint(-2, 2))
    c0 = rng.randint(-3, 3)
    comps = [(rng.randint(-2, 2), rng.randint(-2, 2), rng.randint(-5, 5)) for _ in range(rng.randint(0, 2))]
    body = ["p(a, N1)", "q(a, N2)"] + [f"{a} * N1 + {b} * N2 <= {k}" for a, b, k in comps]
    src = f"{pk} p/2. {qk} q/2. {hk} h/2.\nh(a, {coeffs[0]} * N1 + {coeffs[1]} * N2 + {c0}) :- {', '.join(body)}."
    raw = [rng.choice((STAR, rng.randint(-5, 5), rng.randint(-5, 5))) for _ in range(2)]
    r, J, kinds = rule_and_J(src, [Fact("p", ("a",), raw[0]), Fact("q", ("a",), raw[1])])
    entries = [(kinds["p"], raw[0]), (kinds["q"], raw[1])]
    small = _brute_optimum(kinds, kinds["h"], coeffs, c0, entries, comps, 32)
    large = _brute_optimum(kinds, kinds["h"], coeffs, c0, entries, comps, 64)
    got = opt_rule(r, J, kinds)
    if large is None:
        assert got is NOT_APPLICABLE
    elif small == large:
        assert got == DeriveLimit("h", ("a",), Finite(large))
    else:
        assert got == DeriveLimit("h", ("a",), ALL_INTS)


# ---------------------------------------------------------------------- step


def test_step_from_empty_interpretation():
    kinds = {"ass": Kind.MAX}
    J = PseudoInterpretation.from_facts([], kinds)
    out = step([Rule(Atom("ass", (Int(0),)))], J)
    assert out.limit("ass", ()) == Finite(0)
    assert step([Rule(Atom("ass", (Int(0),)))], out) == out


def test_step_merges_by_preorder():
    kinds = {"q": Kind.MAX}
    J = PseudoInterpretation.from_facts([], kinds)
    rules = [Rule(Atom("q", (Obj("a"), Int(v)))) for v in (3, 7)]
    assert step(rules, J).limit("q", ("a",)) == Finite(7)


# ----------------------------------------------------------- positive fixpoint


def test_unbounded_increment_cycle_diverges():
    prog = parse_program("max p/1.\np(0).\np(N + 1) :- p(N).")
    J, trace = materialise_stratified(prog, (), TC)
    assert J.limit("p", ()) is ALL_INTS
    assert trace.exact and trace.strata[0].promotions


def test_min_divergence_goes_to_all_ints():
    prog = parse_program("min p/1.\np(0).\np(N - 2) :- p(N).")
    J, _ = materialise_stratified(prog, (), TC)
    assert J.limit("p", ()) is ALL_INTS
    assert query(prog, (), Fact("p", (), -10**9), TC) == "entailed"


def test_shortest_path_first_stratum():
    prog, data = load_example("shortest-path")
    first = prog.with_rules([r for r in prog.rules if r.head.pred == "ds"], data)
    J, trace = pseudo_materialise_positive(semi_ground(first), TC)
    assert {v: J.limit("ds", (v,)) for v in "abc"} == {"a": Finite(0), "b": Finite(1), "c": Finite(3)}
    assert trace.complete and trace.exact


def test_positive_program_without_limits_is_classical():
    prog = parse_program("path(X, Y) :- link(X, Y).\npath(X, Z) :- path(X, Y), link(Y, Z).")
    data = [Fact("link", (x, y)) for x, y in [("a", "b"), ("b", "c"), ("c", "a"), ("d", "a")]]
    J, _ = materialise_stratified(prog, data, TC)
    got = {f.objects for f in J.facts() if f.pred == "path"}
    assert got == {(x, y) for x in "abcd" for y in "abc"}


# ---------------------------------------------------------------- stratified


def test_shortest_path_example():
    prog, data = load_example("shortest-path")
    J, trace = materialise_stratified(prog, data, TC)
    assert {f.objects for f in J.facts() if f.pred == "sp_edge"} == {("a", "b"), ("b", "c")}
    assert [J.limit("ds", (v,)) for v in "abc"] == [Finite(0), Finite(1), Finite(3)]
    assert trace.status == "exact"
    assert query(prog, data, Fact("ds", ("c",), 10), TC) == "entailed"
    assert query(prog, data, Fact("ds", ("c",), 2), TC) == "not-entailed"
    assert query(prog, data, Fact("sp_edge", ("a", "c")), TC) == "not-entailed"
    assert lub_query(prog, data, "ds", ("c",), TC) == Finite(3)
    assert lub_query(prog, data, "ds", ("zz",), TC) is NO_VALUE


def test_closeness_example_keeps_first_node_on_ties():
    prog, data = load_example("closeness")
    J, _ = materialise_stratified(prog, data, TC)
    assert [f.objects for f in J.facts() if f.pred == "centre"] == [("a",)]


def test_tc_mode_rejects_non_type_consistent_program():
    prog, data = load_example("oddminsat")
    with pytest.raises(ProgramError):
        materialise_stratified(prog, data, TC)


def test_general_mode_promotion_makes_answers_unknown():
    prog = parse_program("max p/1. max q/1.\np(0).\np(N + 1) :- p(N).\nq(1).")
    config = EngineConfig(mode="general", cap_floor=256)
    result = materialise_stratified(prog, (), config)
    J, trace = result
    assert J.limit("p", ()) is ALL_INTS
    assert trace.status == "promoted-heuristic"
    assert "cap 256" in trace.strata[0].promotions[0][1]
    assert query(prog, (), Fact("p", (), 5), config, result) == "unknown"
    assert lub_query(prog, (), "p", (), config, result) == "unknown"


def test_general_mode_answers_lower_strata_after_promotion():
    prog = parse_program("max p/1. max q/1.\nq(1).\np(0) :- not r.\np(N + 1) :- p(N).\nr :- q(5).")
    config = EngineConfig(mode="general", cap_floor=256)
    result = materialise_stratified(prog, (), config)
    assert result[1].first_inexact_stratum() == 2
    assert query(prog, (), Fact("q", (), 1), config, result) == "entailed"
    assert query(prog, (), Fact("p", (), 1), config, result) == "unknown"


def test_iteration_cap_reports_incomplete():
    prog = parse_program("max p/1.\np(0).\np(N + 1) :- p(N).")
    config = EngineConfig(mode="general", max_iterations=5)
    _, trace = materialise_stratified(prog, (), config)
    assert trace.status == "incomplete"
    assert query(prog, (), Fact("p", (), 1), config) == "unknown"


def test_general_mode_exact_without_promotion():
    prog, data = load_example("shortest-path")
    J, trace = materialise_stratified(prog, data, GENERAL)
    assert trace.status == "exact"
    assert J == materialise_stratified(prog, data, TC)[0]


# ---------------------------------------------------------------- properties


def _monotone(kind, old, new):
    if old is None:
        return True
    if old is ALL_INTS:
        return False
    if new is ALL_INTS:
        return True
    return new.value >= old.value if kind is Kind.MAX else new.value <= old.value


@given(seed=st.integers(0, 2**32 - 1))
def test_trace_is_monotone(seed):
    rp = random_program(random.Random(seed))
    J, trace = materialise_stratified(rp.program, rp.dataset, TC)
    for s in trace.strata:
        for _, (pred, _objs), old, new in s.history:
            assert _monotone(J.kinds[pred], old, new)


@given(seed=st.integers(0, 2**32 - 1))
def test_stratification_invariance(seed):
    rng = random.Random(seed)
    rp = random_program(rng)
    full = rp.program.with_facts(rp.dataset)
    J, _ = materialise_stratified(rp.program, rp.dataset, TC)
    coarse = coarsened_stratification(full, rng)
    J2, _ = materialise_stratified(rp.program, rp.dataset, TC, stratification=coarse)
    assert set(J.facts()) == set(J2.facts())


@given(seed=st.integers(0, 2**32 - 1))
def test_stratum_fixpoint_is_idempotent(seed):
    rp = random_program(random.Random(seed))
    full = rp.program.with_facts(rp.dataset)
    J, trace = materialise_stratified(rp.program, rp.dataset, TC)
    strata = compute_stratification(full).strata
    before = PseudoInterpretation.from_facts(full.facts, kinds_of(full))
    for rules, after in zip(strata, trace.snapshots):
        stratum = full.with_rules(rules, before.facts())
        positive = tc_rewrite_reduct(semi_ground(stratum))
        again, _ = pseudo_materialise_positive(positive, TC, after)
        assert set(again.facts()) == set(after.facts())
        before = after


@settings(max_examples=60)
@given(seed=st.integers(0, 2**32 - 1))
def test_engine_matches_oracle_on_tc_programs(seed):
    rp = random_program(random.Random(seed))
    J, _ = materialise_stratified(rp.program, rp.dataset, TC)
    store = brute_force_materialise(rp.program, rp.dataset, bound=64)
    objs = sorted(rp.program.objects() | {o for f in rp.dataset for o in f.objects})
    for p, info in rp.program.predicates.items():
        n = info.arity - (info.kind is not Kind.OBJECT)
        values = [None] if info.kind is Kind.OBJECT else range(-48, 49, 3)
        for ob in itertools.product(objs, repeat=n):
            for v in values:
                f = Fact(p, ob, v)
                verdict = oracle_entails(store, f)
                if verdict is not OracleVerdict.OUT_OF_WINDOW:
                    assert entails(J, f) == (verdict is OracleVerdict.TRUE), f


@given(seed=st.integers(0, 2**32 - 1))
def test_general_mode_agrees_with_tc_mode(seed):
    rp = random_program(random.Random(seed))
    J, _ = materialise_stratified(rp.program, rp.dataset, TC)
    J2, trace = materialise_stratified(rp.program, rp.dataset, GENERAL)
    if trace.exact:
        assert set(J.facts()) == set(J2.facts())


def test_reduct_pipeline_matches_tc_pipeline_on_shortest_path():
    prog, data = load_example("shortest-path")
    full = prog.with_facts(data)
    sg = semi_ground(full.with_rules([r for r in prog.rules if r.head.pred == "ds"], data))
    assert set(pseudo_materialise_positive(reduct(sg), GENERAL)[0].facts()) == set(
        pseudo_materialise_positive(tc_rewrite_reduct(sg), TC)[0].facts()
    )
