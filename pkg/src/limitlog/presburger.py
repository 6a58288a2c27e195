"""Presburger encoding of positive semi-ground programs as SMT-LIB2 text.

The document asserts the encoding of every rule and fact together with the
negated encoding of a query fact, so it is unsatisfiable exactly when the
query is entailed.  Only the satisfiability form is produced; no
quantifier-prefix normal form is attempted.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Union

from .model import (
    STAR,
    Atom,
    BinOp,
    Comparison,
    ContractError,
    Fact,
    Int,
    Kind,
    NumTerm,
    Obj,
    Rule,
    Var,
    eval_term,
    subst_term,
    term_vars,
)
from .syntax import format_fact
from .transform import SemiGroundProgram

# ------------------------------------------------------------------ formulas


@dataclass(frozen=True)
class BoolVar:
    name: str


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Cmp:
    op: str  # '<' or '<='
    left: NumTerm
    right: NumTerm


@dataclass(frozen=True)
class Forall:
    variables: tuple[str, ...]
    body: "Formula"


Formula = Union[BoolVar, Not, And, Or, Implies, Cmp, Forall]
TRUE = And(())


def holds(phi: Formula, env: Mapping[str, object], bound: int) -> bool:
    """Truth of ``phi``; quantified integers range over ``[-bound, bound]``."""
    if isinstance(phi, BoolVar):
        return bool(env[phi.name])
    if isinstance(phi, Not):
        return not holds(phi.arg, env, bound)
    if isinstance(phi, And):
        return all(holds(a, env, bound) for a in phi.args)
    if isinstance(phi, Or):
        return any(holds(a, env, bound) for a in phi.args)
    if isinstance(phi, Implies):
        return not holds(phi.lhs, env, bound) or holds(phi.rhs, env, bound)
    if isinstance(phi, Cmp):
        a, b = eval_term(phi.left, env), eval_term(phi.right, env)
        return a < b if phi.op == "<" else a <= b
    values = range(-bound, bound + 1)
    for combo in itertools.product(values, repeat=len(phi.variables)):
        if not holds(phi.body, {**env, **dict(zip(phi.variables, combo))}, bound):
            return False
    return True


# ------------------------------------------------------------------ printing


def _smt_term(t: NumTerm) -> str:
    if isinstance(t, Int):
        return str(t.value) if t.value >= 0 else f"(- {-t.value})"
    if isinstance(t, Var):
        return t.name
    return f"({t.op} {_smt_term(t.left)} {_smt_term(t.right)})"


def _smt(phi: Formula) -> str:
    if isinstance(phi, BoolVar):
        return phi.name
    if isinstance(phi, Not):
        return f"(not {_smt(phi.arg)})"
    if isinstance(phi, (And, Or)):
        if not phi.args:
            return "true" if isinstance(phi, And) else "false"
        if len(phi.args) == 1:
            return _smt(phi.args[0])
        op = "and" if isinstance(phi, And) else "or"
        return f"({op} {' '.join(_smt(a) for a in phi.args)})"
    if isinstance(phi, Implies):
        return f"(=> {_smt(phi.lhs)} {_smt(phi.rhs)})"
    if isinstance(phi, Cmp):
        return f"({phi.op} {_smt_term(phi.left)} {_smt_term(phi.right)})"
    binders = " ".join(f"({v} Int)" for v in phi.variables)
    return f"(forall ({binders}) {_smt(phi.body)})"


def _nonlinear(phi: Formula) -> bool:
    def term(t: NumTerm) -> bool:
        if isinstance(t, BinOp):
            if t.op == "*" and next(term_vars(t.left), None) and next(term_vars(t.right), None):
                return True
            return term(t.left) or term(t.right)
        return False

    if isinstance(phi, Cmp):
        return term(phi.left) or term(phi.right)
    if isinstance(phi, (And, Or)):
        return any(_nonlinear(a) for a in phi.args)
    if isinstance(phi, Not):
        return _nonlinear(phi.arg)
    if isinstance(phi, Implies):
        return _nonlinear(phi.lhs) or _nonlinear(phi.rhs)
    if isinstance(phi, Forall):
        return _nonlinear(phi.body)
    return False


@dataclass
class PresburgerDocument:
    booleans: list[str] = field(default_factory=list)
    integers: list[str] = field(default_factory=list)
    rules: list[Formula] = field(default_factory=list)
    negated_query: Formula = TRUE
    comments: list[str] = field(default_factory=list)

    def assertions(self) -> list[Formula]:
        return [*self.rules, self.negated_query]

    def to_smtlib(self) -> str:
        logic = "NIA" if any(_nonlinear(a) for a in self.assertions()) else "LIA"
        lines = [f"; {c}" for c in self.comments]
        lines.append(f"(set-logic {logic})")
        lines += [f"(declare-const {b} Bool)" for b in self.booleans]
        lines += [f"(declare-const {i} Int)" for i in self.integers]
        lines += [f"(assert {_smt(a)})" for a in self.assertions()]
        lines.append("(check-sat)")
        return "\n".join(lines) + "\n"

    def satisfiable(self, bound: int = 8, max_assignments: int = 2_000_000) -> bool:
        """Brute-force satisfiability with integers restricted to ``[-bound, bound]``.

        Only meaningful for small documents; quantified variables are bounded
        too, so this is exact for ground programs whose constants lie strictly
        inside the window.
        """
        n = 2 ** len(self.booleans) * (2 * bound + 1) ** len(self.integers)
        if n > max_assignments:
            raise ValueError(f"{n} assignments exceed the enumeration limit {max_assignments}")
        # Booleans false before true, so sparse models are found early.
        for bools in itertools.product((False, True), repeat=len(self.booleans)):
            env: dict[str, object] = dict(zip(self.booleans, bools))
            for ints in itertools.product(range(-bound, bound + 1), repeat=len(self.integers)):
                env.update(zip(self.integers, ints))
                if all(holds(a, env, bound) for a in self.assertions()):
                    return True
        return False


# ------------------------------------------------------------------ encoding


class _Names:
    """Injective naming of encoding variables."""

    def __init__(self) -> None:
        self.by_key: dict[tuple, str] = {}
        self.taken: set[str] = set()
        self.booleans: list[str] = []
        self.integers: list[str] = []

    def get(self, prefix: str, pred: str, parts: Iterable[object], integer: bool = False) -> str:
        key = (prefix, pred, tuple(parts))
        if key in self.by_key:
            return self.by_key[key]
        base = "_".join([prefix, pred, *map(str, key[2])])
        name, i = base, 1
        while name in self.taken:
            name, i = f"{base}.{i}", i + 1
        self.taken.add(name)
        self.by_key[key] = name
        (self.integers if integer else self.booleans).append(name)
        return name


class _Encoder:
    def __init__(self, kinds: Mapping[str, Kind]):
        self.kinds = kinds
        self.names = _Names()

    def atom(self, atom: Atom) -> Formula:
        kind = self.kinds.get(atom.pred)
        if kind is None:
            kind = Kind.OBJECT if not atom.args or isinstance(atom.args[-1], Obj) else Kind.ORDINARY
        n_obj = len(atom.args) - (kind is not Kind.OBJECT)
        objs = []
        for a in atom.args[:n_obj]:
            if not isinstance(a, Obj):
                raise ContractError(f"atom {atom.pred} has a non-ground object argument: input is not semi-ground")
            objs.append(a.name)
        if kind is Kind.OBJECT:
            return BoolVar(self.names.get("defined", atom.pred, objs))
        s = atom.args[-1]
        if kind is Kind.ORDINARY:
            if s is STAR or next(term_vars(s), None) is not None:
                raise ContractError(f"ordinary atom {atom.pred} has a non-ground value: input is not semi-ground")
            return BoolVar(self.names.get("defined", atom.pred, [*objs, eval_term(s)]))
        defined = BoolVar(self.names.get("defined", atom.pred, objs))
        fin = BoolVar(self.names.get("fin", atom.pred, objs))
        if s is STAR:
            return And((defined, Not(fin)))
        val = Var(self.names.get("val", atom.pred, objs, integer=True))
        better = Cmp("<=", s, val) if kind is Kind.MAX else Cmp("<=", val, s)
        return And((defined, Or((Not(fin), better))))

    def rule(self, rule: Rule) -> Formula:
        names = sorted(rule.variables())
        env = {v: Var(f"v_{v}") for v in names}
        body: list[Formula] = []
        for b in rule.body:
            if isinstance(b, Comparison):
                body.append(Cmp(b.op, subst_term(b.left, env), subst_term(b.right, env)))
            elif not b.positive:
                raise ContractError("negative literal: the encoding needs a positive program")
            else:
                body.append(self.atom(b.atom.substitute(env)))
        phi: Formula = Implies(And(tuple(body)), self.atom(rule.head.substitute(env)))
        return Forall(tuple(env[v].name for v in names), phi) if names else phi


def emit_presburger(sg: SemiGroundProgram, query: Fact) -> PresburgerDocument:
    """Encoding of ``sg`` (rules and facts) conjoined with the negated query."""
    enc = _Encoder(sg.kinds)
    rules = [enc.atom(f.atom()) for f in sg.facts]
    rules += [enc.rule(r) for r in sg.rules]
    negated = Not(enc.atom(query.atom()))
    return PresburgerDocument(
        booleans=enc.names.booleans,
        integers=enc.names.integers,
        rules=rules,
        negated_query=negated,
        comments=[
            f"query: {format_fact(query)}",
            "unsat iff the query is entailed by the program and its facts",
        ],
    )


__all__ = ["PresburgerDocument", "emit_presburger", "holds"]
