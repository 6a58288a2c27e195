import random

import pytest
from hypothesis import given, strategies as st

from limitlog.corpus import load_example, random_program
from limitlog.model import ALL_INTS, STAR, Comparison, Fact, Finite, Kind, Literal, ProgramError, PseudoInterpretation, Var
from limitlog.oracle import brute_force_materialise
from limitlog.syntax import (
    ParseError,
    check_ordered,
    parse_dataset,
    parse_fact,
    parse_program,
    print_facts,
    print_program,
    print_pseudo,
)

DIST = """
min d/3.
d(X, X, 0) :- node(X).
d(X, Z, M + N) :- d(X, Y, M), edge(Y, Z, N).
"""


def test_distance_rules_parse():
    p = parse_program(DIST)
    assert len(p.rules) == 2
    assert p.kind("d") is Kind.MIN
    assert p.kind("edge") is Kind.ORDINARY
    assert p.kind("node") is Kind.OBJECT
    assert p.idb() == {"d"}


def test_undeclared_ordinary_edb_fact():
    p = parse_program("p(a, 3).")
    assert p.facts == (Fact("p", ("a",), 3),)
    assert p.kind("p") is Kind.ORDINARY


def test_compound_body_argument_is_pulled_out():
    p = parse_program("min d/3.\nq(X) :- d(X, Z, M + N), e(M), f(N).")
    (rule,) = p.rules
    lit = rule.body[0]
    assert isinstance(lit, Literal) and isinstance(lit.atom.args[-1], Var)
    fresh = lit.atom.args[-1].name
    assert fresh not in {"M", "N", "Z", "X"}
    cmps = [b for b in rule.body if isinstance(b, Comparison)]
    assert len(cmps) == 2 and {c.op for c in cmps} == {"<="}
    assert all(fresh in set(c.variables()) for c in cmps)


@pytest.mark.parametrize("kind,t", [("max", 1), ("min", -1)])
def test_lub_expansion(kind, t):
    p = parse_program(f"{kind} a/2.\nh(X) :- lub a(X, N).")
    (rule,) = p.rules
    pos, neg, c1, c2 = rule.body
    assert pos.positive and pos.atom.pred == "a" and pos.atom.args[-1] == Var("N")
    assert not neg.positive and neg.atom.pred == "a"
    m = neg.atom.args[-1]
    assert isinstance(m, Var) and m.name not in ("N", "X")
    # m = n + t as two comparisons whose difference is +-(m - n - t)
    for c in (c1, c2):
        diff = c.difference()
        assert diff.evaluate({m.name: 5 + t, "N": 5}) == 0
        assert diff.evaluate({m.name: 6 + t, "N": 5}) != 0
    assert {c1.op, c2.op} == {"<="}


def test_syntax_error_position():
    with pytest.raises(ParseError) as e:
        parse_program("min d/3.\nd(X, Y :- e(X).")
    assert e.value.line == 2


def test_arity_mismatch():
    with pytest.raises(ProgramError):
        parse_program("e(a). e(a, b).")


def test_missing_declaration_for_numeric_idb():
    with pytest.raises(ProgramError):
        parse_program("p(X, N + 1) :- w(X, N).")


def test_star_in_rule_body_rejected():
    with pytest.raises((ParseError, ProgramError)):
        parse_program("min d/2.\nq(X) :- d(X, *).")


def test_unsafe_rule_rejected():
    with pytest.raises(ProgramError):
        parse_program("q(X) :- not e(X).")


def test_dataset_examples():
    assert len(parse_dataset("edge(a,b,1). source(a).")) == 2
    assert parse_dataset("max q/2.\nq(a,*).") == [Fact("q", ("a",), STAR)]
    facts = parse_dataset("first(a). next(a,b). last(b).")
    assert {f.pred for f in facts} == {"first", "next", "last"}


def test_dataset_rejects_rules_and_ordinary_star():
    with pytest.raises(ParseError):
        parse_dataset("p(X) :- e(X).")
    with pytest.raises(ParseError):
        parse_dataset("w(a, *).")


@pytest.mark.parametrize(
    "facts,ok",
    [
        (["first(a)", "next(a,b)", "last(b)", "node(a)", "node(b)"], True),
        (["first(a)", "last(a)", "next(a,a)"], False),
        (["first(a)", "last(b)", "node(c)"], False),
    ],
)
def test_check_ordered(facts, ok):
    result, diag = check_ordered([parse_fact(f) for f in facts])
    assert result is ok and diag


def test_print_pseudo_examples():
    J = PseudoInterpretation(limits={("q", ("a",)): ALL_INTS}, kinds={"q": Kind.MAX})
    assert print_pseudo(J) == "q(a,*).\n"
    J = PseudoInterpretation(limits={("d", ("a", "c")): Finite(3)}, kinds={"d": Kind.MIN})
    line = print_pseudo(J)
    assert line.startswith("d(a,c,3).") and "%" in line
    assert print_pseudo(PseudoInterpretation()) == ""


@pytest.mark.parametrize("name", ["shortest-path", "closeness", "oddminsat"])
def test_corpus_round_trip(name):
    prog, data = load_example(name)
    again = parse_program(print_program(prog))
    assert again == prog
    assert parse_dataset(print_facts(data), prog.declarations) == sorted(data, key=Fact.sort_key)


@given(seed=st.integers(0, 2**32 - 1), loose=st.booleans())
def test_random_program_round_trip(seed, loose):
    rp = random_program(random.Random(seed), type_consistent=not loose, loose=loose)
    text = print_program(rp.program)
    assert parse_program(text) == rp.program
    assert print_program(parse_program(text)) == text


@given(a=st.integers(-4, 4), b=st.integers(-4, 4), c=st.integers(1, 3))
def test_flattening_preserves_ground_entailment(a, b, c):
    data = f"max p/2.\np(a, {a}). w(a, {b}). w(b, {c})."
    compound = parse_program(data + "\nmax h/2.\nh(X, N) :- p(X, N + 1), w(X, N - 1).\nh(X, 2 * N) :- w(X, N + " + str(c) + ").")
    flat = parse_program(
        data
        + "\nmax h/2.\nh(X, N) :- p(X, U), U = N + 1, w(X, V), V = N - 1.\nh(X, 2 * N) :- w(X, U), U = N + "
        + str(c)
        + "."
    )
    assert brute_force_materialise(compound, bound=16).facts() == brute_force_materialise(flat, bound=16).facts()
