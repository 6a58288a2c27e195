"""Static analysis: safety, stratification, guardedness, limit-linearity and
type-consistency.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .model import (
    Atom,
    BinOp,
    Comparison,
    Kind,
    Literal,
    Program,
    Rule,
    Var,
    term_poly,
    term_vars,
)
from .poly import Poly

# ------------------------------------------------------------------ helpers


def numeric_vars(rule: Rule, kinds: Mapping[str, Kind]) -> set[str]:
    out: set[str] = set()
    for c in rule.comparisons():
        out.update(c.variables())
    for a in [rule.head] + [lit.atom for lit in rule.literals()]:
        for i, x in enumerate(a.args):
            if isinstance(x, BinOp):
                out.update(term_vars(x))
            elif isinstance(x, Var) and i == len(a.args) - 1 and kinds.get(a.pred, Kind.OBJECT) is not Kind.OBJECT:
                out.add(x.name)
    return out


def object_vars(rule: Rule, kinds: Mapping[str, Kind]) -> set[str]:
    return rule.variables() - numeric_vars(rule, kinds)


def ordinary_vars(rule: Rule, kinds: Mapping[str, Kind], positive_only: bool = False) -> set[str]:
    """Numeric variables of ordinary numeric body literals."""
    out: set[str] = set()
    for lit in rule.literals():
        if positive_only and not lit.positive:
            continue
        if kinds.get(lit.atom.pred) is Kind.ORDINARY and lit.atom.args:
            out.update(term_vars(lit.atom.args[-1]))
    return out


def _kinds(prog: Program | Mapping[str, Kind]) -> Mapping[str, Kind]:
    if isinstance(prog, Program):
        return {p: i.kind for p, i in prog.predicates.items()}
    return prog


def program_constants(prog: Program) -> tuple[list[str], list[int]]:
    return sorted(prog.objects()), sorted(prog.integers())


# ------------------------------------------------------------------- safety


def check_safety(prog: Program) -> tuple[bool, list[str]]:
    kinds = _kinds(prog)
    diags = []
    for i, r in enumerate(prog.rules):
        bound = {v for lit in r.literals() if lit.positive for v in lit.variables()}
        bad = sorted(object_vars(r, kinds) - bound)
        if bad:
            diags.append(f"rule {i + 1}: unsafe object variable(s) {', '.join(bad)}")
    return not diags, diags


# ------------------------------------------------------------ stratification


@dataclass(frozen=True)
class Stratification:
    levels: Mapping[str, int]
    strata: tuple[tuple[Rule, ...], ...]

    def level(self, pred: str) -> int:
        return self.levels.get(pred, 1)

    def __len__(self) -> int:
        return len(self.strata)

    def __bool__(self) -> bool:
        # A program without rules has zero strata but is still stratified.
        return True


@dataclass(frozen=True)
class StratificationFailure:
    cycle: tuple[str, ...]

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        return "cycle through negation: " + " -> ".join(self.cycle)


def _edges(prog: Program) -> list[tuple[str, str, bool]]:
    return [(lit.atom.pred, r.head.pred, not lit.positive) for r in prog.rules for lit in r.literals()]


def _build_strata(prog: Program, levels: Mapping[str, int]) -> Stratification:
    top = max((levels[r.head.pred] for r in prog.rules), default=0)
    strata = tuple(tuple(r for r in prog.rules if levels[r.head.pred] == i) for i in range(1, top + 1))
    return Stratification(dict(levels), strata)


def compute_stratification(prog: Program) -> Stratification | StratificationFailure:
    """Minimal stratification, or a cycle through negation as a witness."""
    preds = set(prog.predicates) | {p for e in _edges(prog) for p in e[:2]}
    edges = _edges(prog)
    level = {p: 1 for p in preds}
    for _ in range(len(preds) + 1):
        changed = False
        for b, a, neg in edges:
            want = level[b] + neg
            if want > level[a]:
                level[a] = want
                changed = True
        if not changed:
            return _build_strata(prog, level)
    return StratificationFailure(_negative_cycle(edges))


def _negative_cycle(edges: list[tuple[str, str, bool]]) -> tuple[str, ...]:
    succ: dict[str, list[str]] = {}
    for b, a, _ in edges:
        succ.setdefault(b, []).append(a)
    for b, a, neg in sorted(edges):
        if not neg:
            continue
        # path a ->* b closes the cycle b -> a ->* b
        prev = {a: None}
        queue = deque([a])
        while queue:
            x = queue.popleft()
            if x == b:
                path = [b]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return (b,) + tuple(reversed(path))
            for y in succ.get(x, ()):
                if y not in prev:
                    prev[y] = x
                    queue.append(y)
    return ()


def is_valid_stratification(prog: Program, levels: Mapping[str, int]) -> bool:
    return all(
        levels.get(b, 1) + neg <= levels.get(a, 1) and levels.get(b, 1) >= 1 for b, a, neg in _edges(prog)
    )


def stratification_from_levels(prog: Program, levels: Mapping[str, int]) -> Stratification:
    if not is_valid_stratification(prog, levels):
        raise ValueError("levels do not form a stratification")
    full = {p: levels.get(p, 1) for p in set(prog.predicates) | {r.head.pred for r in prog.rules}}
    return _build_strata(prog, full)


def coarsened_stratification(prog: Program, rng: random.Random) -> Stratification:
    """A random valid stratification, usually with more strata than the minimal one."""
    base = compute_stratification(prog)
    if not base:
        raise ValueError(str(base))
    bump = {p: rng.randint(0, 2) for p in base.levels}
    edges = _edges(prog)
    level = {p: base.levels[p] + bump[p] for p in base.levels}
    for _ in range(len(level) + 1):
        changed = False
        for b, a, neg in edges:
            if level[b] + neg > level[a]:
                level[a] = level[b] + neg
                changed = True
        if not changed:
            break
    return stratification_from_levels(prog, level)


def is_semi_positive(prog: Program) -> bool:
    idb = prog.idb()
    return all(lit.positive or lit.atom.pred not in idb for r in prog.rules for lit in r.literals())


def is_positive(prog: Program) -> bool:
    return all(lit.positive for r in prog.rules for lit in r.literals())


# ------------------------------------------------------------- guardedness


@dataclass(frozen=True)
class GuardPattern:
    """``A(s, n1), not A(s, n2)`` with ``n2 = n1 + t`` spelled as two comparisons."""

    pos: int  # index into rule.body
    neg: int
    comparisons: tuple[int, int]
    n1: str
    n2: str
    t: int


def _same_objects(a: Atom, b: Atom, collapse: bool) -> bool:
    if len(a.args) != len(b.args):
        return False
    for x, y in zip(a.args[:-1], b.args[:-1]):
        if x != y and not collapse:
            return False
    return True


def guard_patterns(
    rule: Rule,
    kinds: Mapping[str, Kind],
    env: Mapping[str, int] | None = None,
    collapse_objects: bool = False,
) -> list[GuardPattern]:
    """Every lub pattern in the body, in body order.

    ``env`` fixes some numeric variables before comparing polynomials;
    ``collapse_objects`` treats all object terms as equal, which is what
    grounding does when only one object exists.
    """
    body = rule.body
    cmp_polys: list[tuple[int, Poly]] = []
    for j, b in enumerate(body):
        if isinstance(b, Comparison) and b.op == "<=":
            p = b.difference()
            cmp_polys.append((j, p.substitute(env) if env else p))
    out = []
    used: set[int] = set()
    for i, pl in enumerate(body):
        if not (isinstance(pl, Literal) and pl.positive):
            continue
        kind = kinds.get(pl.atom.pred)
        if kind is None or not kind.is_limit or not isinstance(pl.atom.args[-1], Var):
            continue
        n1 = pl.atom.args[-1].name
        t = 1 if kind is Kind.MAX else -1
        for k, nl in enumerate(body):
            if not (isinstance(nl, Literal) and not nl.positive and nl.atom.pred == pl.atom.pred):
                continue
            if not isinstance(nl.atom.args[-1], Var) or not _same_objects(pl.atom, nl.atom, collapse_objects):
                continue
            n2 = nl.atom.args[-1].name
            if n2 == n1:
                continue
            target = Poly.var(n2) - Poly.var(n1) - Poly.const(t)
            up = next((j for j, p in cmp_polys if p == target and j not in used), None)
            down = next((j for j, p in cmp_polys if p == -target and j not in used and j != up), None)
            if up is None or down is None:
                continue
            used.update((up, down))
            out.append(GuardPattern(i, k, (up, down), n1, n2, t))
            break
    return out


def guarded_variables(rule: Rule, prog: Program | Mapping[str, Kind]) -> set[str]:
    kinds = _kinds(prog)
    out = ordinary_vars(rule, kinds, positive_only=True)
    for g in guard_patterns(rule, kinds):
        out.update((g.n1, g.n2))
    return out


# ------------------------------------------------------------ limit-linearity


def numeric_terms(rule: Rule, kinds: Mapping[str, Kind]) -> list[tuple[str, object]]:
    """``(role, term)`` pairs for every numeric term of the rule."""
    out: list[tuple[str, object]] = []
    if rule.head.args and kinds.get(rule.head.pred, Kind.OBJECT) is not Kind.OBJECT:
        out.append(("head", rule.head.args[-1]))
    for lit in rule.literals():
        if lit.atom.args and kinds.get(lit.atom.pred, Kind.OBJECT) is not Kind.OBJECT:
            out.append(("literal", lit.atom.args[-1]))
    for c in rule.comparisons():
        out.append(("left", c.left))
        out.append(("right", c.right))
    return out


def _linear_shape(p: Poly, o_plus: set[str], ordinary: set[str], guarded: set[str]) -> bool:
    monos = [m for m in p.terms if m and not set(m) <= o_plus]
    choices = []
    for mono in monos:
        opts = []
        for v in set(mono):
            if mono.count(v) != 1 or v in ordinary:
                continue
            rest = list(mono)
            rest.remove(v)
            if set(rest) <= guarded:
                opts.append(v)
        if not opts:
            return False
        choices.append(sorted(opts))

    def assign(i: int, taken: set[str]) -> bool:
        if i == len(choices):
            return True
        return any(v not in taken and assign(i + 1, taken | {v}) for v in choices[i])

    return assign(0, set())


def limit_linear_diagnostics(rule: Rule, prog: Program | Mapping[str, Kind]) -> list[str]:
    kinds = _kinds(prog)
    o_plus = ordinary_vars(rule, kinds, positive_only=True)
    ordinary = ordinary_vars(rule, kinds)
    guarded = guarded_variables(rule, kinds)
    diags = []
    for role, t in numeric_terms(rule, kinds):
        if not _linear_shape(term_poly(t), o_plus, ordinary, guarded):
            from .syntax import format_term

            diags.append(f"{role} term {format_term(t)} is not of the form s0 + sum(si * mi)")
    return diags


def check_limit_linear(prog: Program) -> tuple[bool, list[str]]:
    diags = []
    for i, r in enumerate(prog.rules):
        diags += [f"rule {i + 1}: {d}" for d in limit_linear_diagnostics(r, prog)]
    return not diags, diags


# ---------------------------------------------------------- type-consistency


def _sign(k: int) -> str:
    return "+" if k > 0 else "-" if k < 0 else "0"


def product_signs(coef: int, powers: Mapping[str, int], ints: Sequence[int]) -> set[str]:
    """Signs ``coef * prod(v ** e)`` can take with every ``v`` ranging over ``ints``."""
    if coef == 0:
        return {"0"}
    if not powers:
        return {_sign(coef)}
    pos = any(k > 0 for k in ints)
    neg = any(k < 0 for k in ints)
    total = sum(powers.values())
    some_odd = any(e % 2 for e in powers.values())

    def can_be(s: int) -> bool:
        c = coef * s  # ask whether coef' * prod can be positive
        if c > 0:
            return pos or (neg and total % 2 == 0)
        return (neg and total % 2 == 1) or (pos and neg and some_odd)

    out = set()
    if can_be(1):
        out.add("+")
    if can_be(-1):
        out.add("-")
    if 0 in ints:
        out.add("0")
    return out


def poly_signs(p: Poly, ints: Sequence[int]) -> set[str]:
    items = list(p.items())
    if not items:
        return {"0"}
    if len(items) == 1:
        mono, coef = items[0]
        powers: dict[str, int] = {}
        for v in mono:
            powers[v] = powers.get(v, 0) + 1
        return product_signs(coef, powers, ints)
    vs = sorted(p.variables())
    return {_sign(p.evaluate(dict(zip(vs, combo)))) for combo in itertools.product(ints, repeat=len(vs))}


_SAME = {"+": True, "-": False}


def _tc_bullets(
    rule: Rule,
    kinds: Mapping[str, Kind],
    survivors: set[str],
    guarded: set[str],
    term_groups: list[tuple[str, dict[tuple[str, ...], Poly]]],
    ints: Sequence[int],
) -> str | None:
    """Shared bullet logic: returns the first violation or ``None``.

    ``term_groups`` maps each numeric term to its coefficient groups keyed by
    monomials over the surviving variables; coefficients are polynomials
    over variables still to be grounded (constants in the reference case).
    """
    signs_cache: dict[Poly, set[str]] = {}

    def signs(c: Poly) -> set[str]:
        if c not in signs_cache:
            signs_cache[c] = poly_signs(c, ints)
        return signs_cache[c]

    for role, groups in term_groups:
        for mono, c in groups.items():
            if len(mono) >= 2 and signs(c) - {"0"}:
                return f"bullet 1: {role} term has a non-linear monomial {'*'.join(mono)}"
    lits = [b for b in rule.body if isinstance(b, Literal)]
    for v in sorted(survivors):
        count = sum(v in set(lit.variables()) for lit in lits)
        if count == 1:
            continue
        if count == 0:
            alive = any(v in mono and signs(c) - {"0"} for _, g in term_groups for mono, c in g.items())
            if not alive:
                continue
        return f"bullet 2: variable {v} occurs in {count} standard body literals"
    for lit in lits:
        if not lit.positive:
            for v in lit.variables():
                if v in survivors and v not in guarded:
                    return f"bullet 3: variable {v} in a negative literal is unguarded"

    def limit_lits(v: str) -> list[Kind]:
        return [
            kinds[lit.atom.pred]
            for lit in lits
            if lit.positive and kinds.get(lit.atom.pred, Kind.OBJECT).is_limit and v in set(lit.variables())
        ]

    head_kind = kinds.get(rule.head.pred, Kind.OBJECT)
    for role, groups in term_groups:
        if role == "head" and head_kind.is_limit:
            want = {"+": head_kind, "-": Kind.MIN if head_kind is Kind.MAX else Kind.MAX}
            bullet = 4
        elif role == "left":
            want = {"+": Kind.MIN, "-": Kind.MAX}
            bullet = 5
        elif role == "right":
            want = {"+": Kind.MAX, "-": Kind.MIN}
            bullet = 5
        else:
            continue
        for mono, c in groups.items():
            if len(mono) != 1 or mono[0] in guarded:
                continue
            v = mono[0]
            for s in sorted(signs(c) - {"0"}):
                found = limit_lits(v)
                if len(found) != 1 or found[0] is not want[s]:
                    return (
                        f"bullet {bullet}: unguarded {v} with {'positive' if s == '+' else 'negative'} "
                        f"coefficient in {role} term needs a unique positive {want[s].value} body literal"
                    )
    return None


def _rule_terms(rule: Rule, kinds: Mapping[str, Kind]) -> list[tuple[str, Poly]]:
    return [(role, term_poly(t)) for role, t in numeric_terms(rule, kinds) if role != "literal"]


def rule_type_consistency(
    rule: Rule, prog: Program, constants: tuple[Sequence[str], Sequence[int]] | None = None
) -> str | None:
    """First type-consistency violation of the semi-grounding of ``rule``, or ``None``.

    Works on the rule itself: variables that grounding would replace are kept
    symbolic and only the signs their products can take are examined.
    """
    kinds = _kinds(prog)
    objs, ints = constants or program_constants(prog)
    if limit_linear_diagnostics(rule, kinds):
        return "rule is not limit-linear"
    grounded = ordinary_vars(rule, kinds)
    if (object_vars(rule, kinds) and not objs) or (grounded and not ints):
        return None
    survivors = numeric_vars(rule, kinds) - grounded
    collapse = len(objs) == 1
    candidates = {
        a.args[-1].name
        for lit in rule.literals()
        for a in [lit.atom]
        if kinds.get(a.pred, Kind.OBJECT).is_limit and isinstance(a.args[-1], Var)
    }
    relevant = sorted(
        {v for c in rule.comparisons() if c.op == "<=" and set(c.variables()) & candidates for v in c.variables()}
        & grounded
    )
    terms = _rule_terms(rule, kinds)
    for combo in itertools.product(ints, repeat=len(relevant)):
        env = dict(zip(relevant, combo))
        guarded = set()
        for g in guard_patterns(rule, kinds, env or None, collapse):
            if g.n1 in survivors and g.n2 in survivors:
                guarded.update((g.n1, g.n2))
        groups = [(role, p.substitute(env).coefficient_groups(survivors)) for role, p in terms]
        groups = [(role, {m: c for m, c in g.items() if m}) for role, g in groups]
        bad = _tc_bullets(rule, kinds, survivors, guarded, groups, ints)
        if bad:
            return bad
    return None


def check_type_consistent(prog: Program) -> tuple[bool, list[str]]:
    ok_ll, ll_diags = check_limit_linear(prog)
    if not ok_ll:
        return False, ["not limit-linear"] + ll_diags
    constants = program_constants(prog)
    diags = []
    for i, r in enumerate(prog.rules):
        bad = rule_type_consistency(r, prog, constants)
        if bad:
            diags.append(f"rule {i + 1}: {bad}")
    return not diags, diags


def semi_ground_rule_violation(rule: Rule, kinds: Mapping[str, Kind]) -> str | None:
    """The definition applied literally to one semi-ground, simplified rule."""
    guarded = set()
    for g in guard_patterns(rule, kinds):
        guarded.update((g.n1, g.n2))
    survivors = set(rule.variables())
    groups = [(role, p.coefficient_groups(survivors)) for role, p in _rule_terms(rule, kinds)]
    groups = [(role, {m: c for m, c in g.items() if m}) for role, g in groups]
    for role, g in groups:
        for mono in g:
            if len(mono) >= 2:
                return f"bullet 1: {role} term has a non-linear monomial {'*'.join(mono)}"
    return _tc_bullets(rule, kinds, survivors, guarded, groups, [])


def check_type_consistent_reference(rules: Iterable[Rule] | object, kinds: Mapping[str, Kind] | None = None):
    """Type-consistency of an explicit semi-ground program.

    Accepts a ``SemiGroundProgram`` or a sequence of semi-ground rules together
    with the predicate kinds.
    """
    if kinds is None:
        kinds = rules.kinds
        rules = rules.rules
    diags = []
    for i, r in enumerate(rules):
        bad = semi_ground_rule_violation(r, kinds)
        if bad:
            diags.append(f"instance {i + 1}: {bad}")
    return not diags, diags


# ----------------------------------------------------------- classification

FLAGS = ("safe", "stratified", "semi_positive", "positive", "limit_linear", "type_consistent")


@dataclass
class ClassificationReport:
    flags: dict[str, bool]
    diagnostics: list[str] = field(default_factory=list)
    guarded: dict[int, frozenset[str]] = field(default_factory=dict)
    stratification: Stratification | StratificationFailure | None = None

    def __getattr__(self, name: str) -> bool:
        flags = self.__dict__.get("flags", {})
        if name in flags:
            return flags[name]
        raise AttributeError(name)

    def format(self) -> str:
        lines = [f"{k}={'true' if self.flags[k] else 'false'}" for k in FLAGS]
        lines += self.diagnostics
        return "\n".join(lines) + "\n"


def classify(prog: Program) -> ClassificationReport:
    safe, diags = check_safety(prog)
    strat = compute_stratification(prog)
    if not strat:
        diags.append(str(strat))
    ll, ll_diags = check_limit_linear(prog)
    diags += ll_diags
    limit_linear = ll and bool(strat) and safe
    tc = False
    if limit_linear:
        tc, tc_diags = check_type_consistent(prog)
        diags += tc_diags
    flags = {
        "safe": safe,
        "stratified": bool(strat),
        "semi_positive": is_semi_positive(prog),
        "positive": is_positive(prog),
        "limit_linear": limit_linear,
        "type_consistent": tc,
    }
    guarded = {i: frozenset(guarded_variables(r, prog)) for i, r in enumerate(prog.rules)}
    return ClassificationReport(flags, diags, guarded, strat)
