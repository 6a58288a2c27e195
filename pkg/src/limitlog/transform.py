"""Semi-grounding and reducts."""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .analysis import guard_patterns, object_vars, ordinary_vars, check_type_consistent_reference
from .model import (
    ALL_INTS,
    Atom,
    BodyItem,
    Comparison,
    ContractError,
    Fact,
    Finite,
    Int,
    Kind,
    Literal,
    Obj,
    PredicateInfo,
    Program,
    PseudoInterpretation,
    Rule,
    Term,
    Var,
    poly_term,
    satisfies,
    term_poly,
    unit_size,
)


@dataclass(frozen=True)
class SemiGroundProgram:
    """Semi-ground rules plus the facts they are evaluated against.

    ``origin[i]`` is the index of the source rule that produced ``rules[i]``.
    """

    rules: tuple[Rule, ...]
    origin: tuple[int, ...]
    facts: tuple[Fact, ...]
    predicates: Mapping[str, PredicateInfo]

    @property
    def kinds(self) -> dict[str, Kind]:
        return {p: i.kind for p, i in self.predicates.items()}

    def idb(self) -> set[str]:
        return {r.head.pred for r in self.rules}

    def is_positive(self) -> bool:
        return all(lit.positive for r in self.rules for lit in r.literals())

    def to_program(self) -> Program:
        from .syntax import build_program

        decls = {p: (i.kind, i.arity) for p, i in self.predicates.items() if i.is_limit}
        return build_program(self.rules, self.facts, decls)

    def max_unit_size(self) -> int:
        return max((unit_size(r) for r in self.rules), default=0)

    def __len__(self) -> int:
        return len(self.rules)


# ------------------------------------------------------------ simplification


def simplify_term(t: Term) -> Term:
    if isinstance(t, (Obj, Var, Int)) or t is None:
        return t
    try:
        return poly_term(term_poly(t))
    except TypeError:
        return t


def simplify_rule(rule: Rule, fold: bool = True) -> Rule | None:
    """Normalise every numeric term; fold ground comparisons when ``fold``.

    Returns ``None`` when a ground comparison is false.
    """
    head = Atom(rule.head.pred, tuple(simplify_term(a) for a in rule.head.args))
    body: list[BodyItem] = []
    for b in rule.body:
        if isinstance(b, Literal):
            body.append(Literal(Atom(b.atom.pred, tuple(simplify_term(a) for a in b.atom.args)), b.positive))
            continue
        c = Comparison(b.op, simplify_term(b.left), simplify_term(b.right))
        if fold and next(c.variables(), None) is None:
            if not c.holds():
                return None
            continue
        body.append(c)
    return Rule(head, tuple(body), rule.pos)


# ------------------------------------------------------------ semi-grounding


def _bind(term: Term, value, env: dict) -> bool:
    if isinstance(term, Var):
        if term.name in env:
            return env[term.name] == value
        env[term.name] = value
        return True
    if isinstance(term, Obj):
        return term.name == value
    if isinstance(term, Int):
        return term.value == value
    return False


def semi_ground(
    prog: Program,
    dataset: Iterable[Fact] = (),
    prune: bool = True,
    constants: tuple[Sequence[str], Sequence[int]] | None = None,
) -> SemiGroundProgram:
    """Replace object variables and ordinary numeric variables by constants.

    With ``prune`` the instances are restricted by joining positive EDB
    literals with the facts, and false ground comparisons remove an
    instance.  Without it every combination of constants is produced and
    comparisons are kept verbatim, which is the literal definition.
    """
    facts = tuple(sorted(set(prog.facts) | set(dataset), key=Fact.sort_key))
    if set(dataset) - set(prog.facts):
        prog = prog.with_facts(dataset)
    kinds = {p: i.kind for p, i in prog.predicates.items()}
    if constants is None:
        objs = sorted(prog.objects())
        ints = sorted(prog.integers())
    else:
        objs, ints = sorted(constants[0]), sorted(constants[1])
    idb = prog.idb()
    by_pred: dict[str, list[Fact]] = {}
    for f in facts:
        by_pred.setdefault(f.pred, []).append(f)

    out: dict[Rule, int] = {}
    for ri, rule in enumerate(prog.rules):
        ovars = object_vars(rule, kinds)
        nvars = ordinary_vars(rule, kinds)
        targets = ovars | nvars
        joins = []
        if prune:
            joins = [
                lit.atom
                for lit in rule.literals()
                if lit.positive and lit.atom.pred not in idb and set(lit.atom.variables()) & targets
            ]

        def envs(i: int, env: dict):
            if i == len(joins):
                yield env
                return
            atom = joins[i]
            limit = kinds.get(atom.pred, Kind.OBJECT).is_limit
            seen = set()
            for f in by_pred.get(atom.pred, ()):
                if limit:
                    if f.objects in seen:
                        continue
                    seen.add(f.objects)
                    values = list(f.objects)
                    args = atom.args[:-1]
                else:
                    values = list(f.objects) + ([] if f.value is None else [f.value])
                    args = atom.args
                if len(values) != len(args):
                    continue
                e = dict(env)
                if all(_bind(a, v, e) for a, v in zip(args, values)):
                    yield from envs(i + 1, e)

        for env in envs(0, {}):
            free_o = sorted(ovars - env.keys())
            free_n = sorted(nvars - env.keys())
            for oc in itertools.product(objs, repeat=len(free_o)):
                for nc in itertools.product(ints, repeat=len(free_n)):
                    full: dict[str, Term] = {v: Obj(x) for v, x in env.items() if v in ovars}
                    full.update({v: Int(x) for v, x in env.items() if v in nvars})
                    full.update({v: Obj(x) for v, x in zip(free_o, oc)})
                    full.update({v: Int(x) for v, x in zip(free_n, nc)})
                    inst = simplify_rule(rule.substitute(full), fold=prune)
                    if inst is not None and inst not in out:
                        out[inst] = ri
    return SemiGroundProgram(tuple(out), tuple(out.values()), facts, dict(prog.predicates))


# ------------------------------------------------------------------- reducts


def _facts_view(sg: SemiGroundProgram) -> PseudoInterpretation:
    return PseudoInterpretation.from_facts(sg.facts, sg.kinds)


def _check_negation(sg: SemiGroundProgram) -> None:
    idb = sg.idb()
    for r in sg.rules:
        for lit in r.literals():
            if not lit.positive and lit.atom.pred in idb:
                raise ContractError(f"negation on IDB predicate {lit.atom.pred}: program is not semi-positive")


def reduct(sg: SemiGroundProgram) -> SemiGroundProgram:
    """Eliminate negative literals using the facts of a semi-positive program."""
    _check_negation(sg)
    D = _facts_view(sg)
    kinds = sg.kinds
    rules, origin = [], []
    for r, o in zip(sg.rules, sg.origin):
        body: list[BodyItem] = []
        keep = True
        for b in r.body:
            if not isinstance(b, Literal) or b.positive:
                body.append(b)
                continue
            atom = b.atom
            if atom.is_ground():
                if satisfies(D, atom):
                    keep = False
                    break
                continue
            kind = kinds.get(atom.pred, Kind.OBJECT)
            if not kind.is_limit or not isinstance(atom.args[-1], Var):
                raise ContractError(f"non-ground negative literal over non-limit predicate {atom.pred}")
            entry = D.limit(atom.pred, tuple(a.name for a in atom.args[:-1]))
            if entry is ALL_INTS:
                keep = False
                break
            if entry is None:
                continue
            m = atom.args[-1]
            k = Int(entry.value)
            body.append(Comparison("<", k, m) if kind is Kind.MAX else Comparison("<", m, k))
        if keep:
            rules.append(Rule(r.head, tuple(body), r.pos))
            origin.append(o)
    return SemiGroundProgram(tuple(rules), tuple(origin), sg.facts, sg.predicates)


def _rewrite_guards(r: Rule, kinds, D: PseudoInterpretation) -> Rule | None:
    """Remove every negative literal of ``r``; ``None`` when the rule can never fire."""
    negatives = [i for i, b in enumerate(r.body) if isinstance(b, Literal) and not b.positive]
    if not negatives:
        return r
    patterns = None
    drop: set[int] = set()
    env: dict[str, Int] = {}
    for i in negatives:
        atom = r.body[i].atom
        if atom.is_ground():
            if satisfies(D, atom):
                return None
            drop.add(i)
            continue
        if patterns is None:
            patterns = {g.neg: g for g in guard_patterns(r, kinds)}
        g = patterns.get(i)
        if g is None:
            raise ContractError(f"unguarded negative literal over {atom.pred}: program is not type-consistent")
        entry = D.limit(atom.pred, tuple(a.name for a in atom.args[:-1]))
        if entry is None or entry is ALL_INTS:
            return None
        for v, k in ((g.n1, entry.value), (g.n2, entry.value + g.t)):
            if env.setdefault(v, Int(k)) != Int(k):
                # two guards fix the same variable to different values
                return None
        drop.update((g.pos, g.neg, *g.comparisons))
    rule = Rule(r.head, tuple(b for i, b in enumerate(r.body) if i not in drop), r.pos)
    return simplify_rule(rule.substitute(env), fold=True) if env else rule


def tc_rewrite_reduct(sg: SemiGroundProgram, validate: bool = False) -> SemiGroundProgram:
    """Reduct of a semi-positive type-consistent program, kept type-consistent.

    Each guard ``A(a, n), not A(a, m), m = n + t`` whose ``A`` has lub value
    ``k`` in the facts is removed with ``n := k`` and ``m := k + t``; a guard
    with no value deletes the rule.
    """
    _check_negation(sg)
    kinds = sg.kinds
    if validate:
        ok, diags = check_type_consistent_reference(sg.rules, kinds)
        if not ok:
            raise ContractError("input is not type-consistent: " + "; ".join(diags))
    D = _facts_view(sg)
    rules, origin = [], []
    for r, o in zip(sg.rules, sg.origin):
        cur = _rewrite_guards(r, kinds, D)
        if cur is not None:
            rules.append(cur)
            origin.append(o)
    out = SemiGroundProgram(tuple(rules), tuple(origin), sg.facts, sg.predicates)
    if validate:
        ok, diags = check_type_consistent_reference(out.rules, kinds)
        if not ok:
            raise ContractError("rewritten program is not type-consistent: " + "; ".join(diags))
    return out


__all__ = [
    "SemiGroundProgram",
    "reduct",
    "semi_ground",
    "simplify_rule",
    "simplify_term",
    "tc_rewrite_reduct",
    "unit_size",
    "Finite",
]
