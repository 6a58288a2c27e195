"""Abstract syntax, facts and pseudo-interpretations for limit Datalog."""

from __future__ import annotations

import enum
import functools
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Union

from .poly import Poly


class LimitLogError(Exception):
    """Base class for all errors raised by the package."""


class ProgramError(LimitLogError):
    """A program or dataset violates a structural requirement."""


class ContractError(LimitLogError):
    """An operation was called outside its precondition."""


class Kind(enum.Enum):
    OBJECT = "object"
    ORDINARY = "ordinary"
    MIN = "min"
    MAX = "max"

    @property
    def is_limit(self) -> bool:
        return self in (Kind.MIN, Kind.MAX)


@dataclass(frozen=True)
class PredicateInfo:
    name: str
    arity: int
    kind: Kind
    is_edb: bool = True

    @property
    def numeric(self) -> bool:
        return self.kind is not Kind.OBJECT

    @property
    def is_limit(self) -> bool:
        return self.kind.is_limit

    def preceq(self, a: int, b: int) -> bool:
        """``a`` is at most as good as ``b``: ``<=`` for max, ``>=`` for min."""
        return a <= b if self.kind is Kind.MAX else a >= b


# --------------------------------------------------------------------- terms


class Star:
    """The all-integers marker written ``*`` in the numeric position of a fact."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "STAR"

    def __reduce__(self):
        return (Star, ())


STAR = Star()


@dataclass(frozen=True)
class Obj:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*'
    left: "NumTerm"
    right: "NumTerm"


NumTerm = Union[Int, Var, BinOp]
Term = Union[Obj, Var, Int, BinOp, Star]


@functools.lru_cache(maxsize=1 << 16)
def term_poly(t: NumTerm) -> Poly:
    if isinstance(t, Int):
        return Poly.const(t.value)
    if isinstance(t, Var):
        return Poly.var(t.name)
    if isinstance(t, BinOp):
        a, b = term_poly(t.left), term_poly(t.right)
        if t.op == "+":
            return a + b
        if t.op == "-":
            return a - b
        return a * b
    raise TypeError(f"not a numeric term: {t!r}")


def poly_term(p: Poly) -> NumTerm:
    """Canonical term for a polynomial: monomials in sorted order, constant last."""
    parts: list[tuple[int, NumTerm | None]] = []
    terms = p.terms
    for mono in sorted((m for m in terms if m), key=lambda m: (len(m), m)):
        coef = terms[mono]
        body: NumTerm = Var(mono[0])
        for v in mono[1:]:
            body = BinOp("*", body, Var(v))
        parts.append((coef, body))
    const = p.constant
    if not parts:
        return Int(const)

    def scaled(coef: int, body: NumTerm) -> NumTerm:
        return body if coef == 1 else BinOp("*", Int(coef), body)

    coef, body = parts[0]
    acc: NumTerm = scaled(coef, body)
    for coef, body in parts[1:]:
        acc = BinOp("+", acc, scaled(coef, body)) if coef > 0 else BinOp("-", acc, scaled(-coef, body))
    if const > 0:
        acc = BinOp("+", acc, Int(const))
    elif const < 0:
        acc = BinOp("-", acc, Int(-const))
    return acc


def term_vars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, BinOp):
        yield from term_vars(t.left)
        yield from term_vars(t.right)


def eval_term(t: NumTerm, env: Mapping[str, int] | None = None) -> int:
    if isinstance(t, Int):
        return t.value
    if isinstance(t, Var):
        if env is None or t.name not in env:
            raise ContractError(f"unbound variable {t.name}")
        return env[t.name]
    a, b = eval_term(t.left, env), eval_term(t.right, env)
    return a + b if t.op == "+" else a - b if t.op == "-" else a * b


def subst_term(t: Term, env: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return env.get(t.name, t)
    if isinstance(t, BinOp):
        return BinOp(t.op, subst_term(t.left, env), subst_term(t.right, env))
    return t


# --------------------------------------------------------------------- atoms


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> Iterator[str]:
        for a in self.args:
            yield from term_vars(a)

    def is_ground(self) -> bool:
        return next(self.variables(), None) is None

    def substitute(self, env: Mapping[str, Term]) -> Atom:
        return Atom(self.pred, tuple(subst_term(a, env) for a in self.args))


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def variables(self) -> Iterator[str]:
        return self.atom.variables()

    def substitute(self, env: Mapping[str, Term]) -> Literal:
        return Literal(self.atom.substitute(env), self.positive)


@dataclass(frozen=True)
class Comparison:
    op: str  # '<' or '<='
    left: NumTerm
    right: NumTerm

    def variables(self) -> Iterator[str]:
        yield from term_vars(self.left)
        yield from term_vars(self.right)

    def substitute(self, env: Mapping[str, Term]) -> Comparison:
        return Comparison(self.op, subst_term(self.left, env), subst_term(self.right, env))

    def difference(self) -> Poly:
        """``left - right``; the comparison holds iff this is ``<= 0`` (``< 0``)."""
        return term_poly(self.left) - term_poly(self.right)

    def holds(self, env: Mapping[str, int] | None = None) -> bool:
        a, b = eval_term(self.left, env), eval_term(self.right, env)
        return a < b if self.op == "<" else a <= b


BodyItem = Union[Literal, Comparison]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[BodyItem, ...] = ()
    pos: tuple[int, int] | None = field(default=None, compare=False)

    def variables(self) -> set[str]:
        out = set(self.head.variables())
        for item in self.body:
            out.update(item.variables())
        return out

    def literals(self) -> Iterator[Literal]:
        return (b for b in self.body if isinstance(b, Literal))

    def comparisons(self) -> Iterator[Comparison]:
        return (b for b in self.body if isinstance(b, Comparison))

    def substitute(self, env: Mapping[str, Term]) -> Rule:
        return Rule(self.head.substitute(env), tuple(b.substitute(env) for b in self.body), self.pos)


@dataclass(frozen=True, order=True)
class Fact:
    pred: str
    objects: tuple[str, ...] = ()
    value: int | Star | None = None

    @property
    def is_star(self) -> bool:
        return self.value is STAR

    def atom(self) -> Atom:
        args: list[Term] = [Obj(o) for o in self.objects]
        if self.value is STAR:
            args.append(STAR)
        elif self.value is not None:
            args.append(Int(self.value))
        return Atom(self.pred, tuple(args))

    def sort_key(self):
        v = self.value
        return (self.pred, self.objects, (0, 0) if v is None else (1, 0) if v is STAR else (2, v))


def unit_size(rule: Rule) -> int:
    """Size of a rule counting every symbol, integers included, as one unit."""

    def tsize(t: Term) -> int:
        return 1 + tsize(t.left) + tsize(t.right) if isinstance(t, BinOp) else 1

    def asize(a: Atom) -> int:
        return 1 + sum(tsize(x) for x in a.args)

    total = asize(rule.head)
    for b in rule.body:
        total += 1 + (asize(b.atom) if isinstance(b, Literal) else tsize(b.left) + tsize(b.right))
    return total


# ------------------------------------------------------------------- program


@dataclass(frozen=True)
class Program:
    rules: tuple[Rule, ...]
    facts: tuple[Fact, ...]
    predicates: Mapping[str, PredicateInfo]
    declarations: Mapping[str, tuple[Kind, int]] = field(default_factory=dict)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Program)
            and self.rules == other.rules
            and self.facts == other.facts
            and dict(self.predicates) == dict(other.predicates)
            and dict(self.declarations) == dict(other.declarations)
        )

    def __hash__(self) -> int:
        return hash((self.rules, self.facts))

    def kind(self, pred: str) -> Kind:
        info = self.predicates.get(pred)
        return info.kind if info else Kind.OBJECT

    def idb(self) -> set[str]:
        return {r.head.pred for r in self.rules}

    def limit_kinds(self) -> dict[str, Kind]:
        return {p: i.kind for p, i in self.predicates.items() if i.is_limit}

    def with_facts(self, facts: Iterable[Fact]) -> Program:
        from .syntax import build_program

        return build_program(self.rules, tuple(self.facts) + tuple(facts), self.declarations)

    def with_rules(self, rules: Iterable[Rule], facts: Iterable[Fact] | None = None) -> Program:
        from .syntax import build_program

        return build_program(
            tuple(rules), tuple(self.facts if facts is None else facts), self.declarations,
            extra_kinds=self.limit_kinds(),
        )

    def objects(self) -> set[str]:
        out = {o for f in self.facts for o in f.objects}
        for r in self.rules:
            for a in [r.head] + [lit.atom for lit in r.literals()]:
                out.update(x.name for x in a.args if isinstance(x, Obj))
        return out

    def integers(self) -> set[int]:
        out = {f.value for f in self.facts if isinstance(f.value, int)}

        def walk(t):
            if isinstance(t, Int):
                out.add(t.value)
            elif isinstance(t, BinOp):
                walk(t.left)
                walk(t.right)

        for r in self.rules:
            for a in [r.head] + [lit.atom for lit in r.literals()]:
                for x in a.args:
                    walk(x)
            for c in r.comparisons():
                walk(c.left)
                walk(c.right)
        return out


# ------------------------------------------------------ pseudo-interpretations


@dataclass(frozen=True)
class Finite:
    value: int

    def __repr__(self) -> str:
        return f"Finite({self.value})"


class AllInts:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "AllInts"

    def __reduce__(self):
        return (AllInts, ())


ALL_INTS = AllInts()
LimitValue = Union[Finite, AllInts]


def better(kind: Kind, a: LimitValue, b: LimitValue) -> LimitValue:
    """Join of two limit values: the ``preceq``-larger, ``AllInts`` absorbing."""
    if a is ALL_INTS or b is ALL_INTS:
        return ALL_INTS
    if kind is Kind.MAX:
        return a if a.value >= b.value else b
    return a if a.value <= b.value else b


SlotKey = tuple[str, tuple[str, ...]]


class PseudoInterpretation:
    """Finite representation of a limit-closed Herbrand interpretation.

    Object facts and ordinary numeric facts are kept verbatim; every limit
    predicate and object tuple carries at most one ``LimitValue``.
    """

    __slots__ = ("objects", "ordinary", "limits", "kinds")

    def __init__(
        self,
        objects: Iterable[tuple[str, tuple[str, ...]]] = (),
        ordinary: Iterable[tuple[str, tuple[str, ...], int]] = (),
        limits: Mapping[SlotKey, LimitValue] | None = None,
        kinds: Mapping[str, Kind] | None = None,
    ):
        self.objects = frozenset(objects)
        self.ordinary = frozenset(ordinary)
        self.limits = MappingProxyType(dict(limits or {}))
        self.kinds = MappingProxyType(dict(kinds or {}))

    @classmethod
    def from_facts(cls, facts: Iterable[Fact], kinds: Mapping[str, Kind]) -> PseudoInterpretation:
        objects, ordinary, limits = set(), set(), {}
        for f in facts:
            kind = kinds.get(f.pred)
            if kind is not None and kind.is_limit:
                v = ALL_INTS if f.value is STAR else Finite(f.value)
                key = (f.pred, f.objects)
                limits[key] = better(kind, limits[key], v) if key in limits else v
            elif f.value is None:
                objects.add((f.pred, f.objects))
            elif f.value is STAR:
                raise ProgramError(f"'*' used on non-limit predicate {f.pred}")
            else:
                ordinary.add((f.pred, f.objects, f.value))
        return cls(objects, ordinary, limits, kinds)

    def limit(self, pred: str, objs: tuple[str, ...]) -> LimitValue | None:
        return self.limits.get((pred, objs))

    def kind(self, pred: str) -> Kind:
        k = self.kinds.get(pred)
        if k is None or not k.is_limit:
            raise ContractError(f"{pred} is not a limit predicate")
        return k

    def updated(
        self,
        objects: Iterable = (),
        ordinary: Iterable = (),
        limits: Mapping[SlotKey, LimitValue] | None = None,
    ) -> PseudoInterpretation:
        merged = dict(self.limits)
        for key, v in (limits or {}).items():
            merged[key] = better(self.kind(key[0]), merged[key], v) if key in merged else v
        return PseudoInterpretation(self.objects | set(objects), self.ordinary | set(ordinary), merged, self.kinds)

    def facts(self) -> list[Fact]:
        out = [Fact(p, o) for p, o in self.objects]
        out += [Fact(p, o, k) for p, o, k in self.ordinary]
        out += [Fact(p, o, STAR if v is ALL_INTS else v.value) for (p, o), v in self.limits.items()]
        return sorted(out, key=Fact.sort_key)

    def __len__(self) -> int:
        return len(self.objects) + len(self.ordinary) + len(self.limits)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, PseudoInterpretation)
            and self.objects == other.objects
            and self.ordinary == other.ordinary
            and dict(self.limits) == dict(other.limits)
        )

    def __hash__(self) -> int:
        return hash((self.objects, self.ordinary, frozenset(self.limits.items())))

    def __repr__(self) -> str:
        return f"PseudoInterpretation({len(self)} facts)"


# ---------------------------------------------------------------- satisfaction


def _ground_key(atom: Atom) -> tuple[tuple[str, ...], NumTerm | Star | None]:
    objs, last = [], None
    for i, a in enumerate(atom.args):
        if isinstance(a, Obj):
            objs.append(a.name)
        elif i == len(atom.args) - 1:
            last = a
        else:
            raise ContractError(f"unexpected argument {a!r} in {atom.pred}")
    return tuple(objs), last


def satisfies(J: PseudoInterpretation, alpha: Atom | Literal | Comparison) -> bool:
    """Truth of a ground atom, literal or comparison in the interpretation ``J`` denotes."""
    if isinstance(alpha, Comparison):
        if next(alpha.variables(), None) is not None:
            raise ContractError("comparison is not ground")
        return alpha.holds()
    if isinstance(alpha, Literal):
        return satisfies(J, alpha.atom) == alpha.positive
    if not alpha.is_ground():
        raise ContractError(f"atom {alpha.pred} is not ground")
    objs, last = _ground_key(alpha)
    kind = J.kinds.get(alpha.pred)
    if kind is not None and kind.is_limit:
        entry = J.limit(alpha.pred, objs)
        if entry is None:
            return False
        if entry is ALL_INTS:
            return True
        if last is STAR:
            return False
        k = eval_term(last)
        return k <= entry.value if kind is Kind.MAX else k >= entry.value
    if last is None:
        return (alpha.pred, objs) in J.objects
    if last is STAR:
        raise ContractError("'*' on a non-limit atom")
    return (alpha.pred, objs, eval_term(last)) in J.ordinary


def satisfies_lub(J: PseudoInterpretation, pred: str, objs: tuple[str, ...], k: int) -> bool:
    """``k`` is exactly the limit value of ``pred(objs)`` in ``J``."""
    return J.limit(pred, tuple(objs)) == Finite(k)


def entails(J: PseudoInterpretation, fact: Fact) -> bool:
    if fact.value is STAR:
        kind = J.kinds.get(fact.pred)
        return kind is not None and kind.is_limit and J.limit(fact.pred, fact.objects) is ALL_INTS
    return satisfies(J, fact.atom())
