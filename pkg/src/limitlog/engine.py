"""Evaluation: per-rule optimisation, positive fixpoints and the stratified driver."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Literal as TLiteral, Union

from . import analysis
from .linear import INFEASIBLE, SearchBudgetExceeded, Unbounded, optimise
from .model import (
    ALL_INTS,
    Atom,
    Comparison,
    ContractError,
    Fact,
    Finite,
    Kind,
    LimitValue,
    Literal,
    Obj,
    Program,
    ProgramError,
    PseudoInterpretation,
    Rule,
    SlotKey,
    Var,
    better,
    entails,
    satisfies,
    term_poly,
)
from .poly import Poly
from .transform import SemiGroundProgram, reduct, semi_ground, tc_rewrite_reduct

# ------------------------------------------------------------------- config


@dataclass(frozen=True)
class EngineConfig:
    """``mode`` is ``"tc"`` (exact, needs type-consistency) or ``"general"``."""

    mode: TLiteral["tc", "general"] = "tc"
    threshold: int | TLiteral["auto"] = "auto"
    max_iterations: int = 100_000
    magnitude_cap: int | TLiteral["auto"] = "auto"
    cap_exponent: int = 3
    cap_floor: int = 2**16
    search_budget: int = 200_000
    validate: bool = False

    def __post_init__(self):
        if self.mode not in ("tc", "general"):
            raise ValueError(f"unknown mode {self.mode!r}")


# ------------------------------------------------------------------ results


@dataclass(frozen=True)
class NotApplicable:
    pass


@dataclass(frozen=True)
class Derive:
    fact: Fact


@dataclass(frozen=True)
class DeriveLimit:
    pred: str
    objects: tuple[str, ...]
    value: LimitValue


NOT_APPLICABLE = NotApplicable()
Outcome = Union[NotApplicable, Derive, DeriveLimit]


@dataclass
class StratumTrace:
    index: int
    rules: int = 0
    iterations: int = 0
    history: list[tuple[int, SlotKey, LimitValue | None, LimitValue]] = field(default_factory=list)
    improvements: dict[SlotKey, int] = field(default_factory=dict)
    promotions: list[tuple[SlotKey, str]] = field(default_factory=list)
    exact: bool = True
    complete: bool = True
    threshold: int | None = None
    magnitude_cap: int | None = None
    note: str = ""


@dataclass
class EvaluationTrace:
    mode: str
    levels: Mapping[str, int] = field(default_factory=dict)
    strata: list[StratumTrace] = field(default_factory=list)
    snapshots: list[PseudoInterpretation] = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return all(s.exact for s in self.strata)

    @property
    def complete(self) -> bool:
        return all(s.complete for s in self.strata)

    @property
    def status(self) -> str:
        if not self.complete:
            return "incomplete"
        return "exact" if self.exact else "promoted-heuristic"

    def first_inexact_stratum(self) -> int | None:
        for s in self.strata:
            if not s.exact or not s.complete:
                return s.index
        return None

    def summary(self) -> str:
        lines = [f"% mode={self.mode} status={self.status} strata={len(self.strata)}"]
        for s in self.strata:
            lines.append(
                f"% stratum {s.index}: rules={s.rules} iterations={s.iterations} "
                f"promotions={len(s.promotions)} exact={str(s.exact).lower()} complete={str(s.complete).lower()}"
                + (f" ({s.note})" if s.note else "")
            )
        return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ opt_rule


def _objects_of(atom: Atom, numeric: bool) -> tuple[str, ...]:
    args = atom.args[:-1] if numeric else atom.args
    out = []
    for a in args:
        if not isinstance(a, Obj):
            raise ContractError(f"atom {atom.pred} is not semi-ground")
        out.append(a.name)
    return tuple(out)


def opt_rule(
    rule: Rule,
    J,
    kinds: Mapping[str, Kind] | None = None,
    mode: str = "general",
    budget: int = 200_000,
) -> Outcome:
    """Optimal consequence of one semi-ground positive rule over ``J``."""
    kinds = J.kinds if kinds is None else kinds
    bounds: dict[str, list[tuple[Kind, LimitValue]]] = {}
    for b in rule.body:
        if not isinstance(b, Literal):
            continue
        if not b.positive:
            raise ContractError("opt_rule needs a positive rule")
        atom = b.atom
        kind = kinds.get(atom.pred, Kind.OBJECT)
        if atom.is_ground():
            if not satisfies(J, atom):
                return NOT_APPLICABLE
            continue
        last = atom.args[-1]
        if not kind.is_limit or not isinstance(last, Var):
            raise ContractError(f"literal over {atom.pred} is not semi-ground")
        entry = J.limit(atom.pred, _objects_of(atom, True))
        if entry is None:
            return NOT_APPLICABLE
        bounds.setdefault(last.name, []).append((kind, entry))

    head = rule.head
    hkind = kinds.get(head.pred, Kind.OBJECT)
    comparisons = [b for b in rule.body if isinstance(b, Comparison)]
    if mode == "tc":
        out = _opt_tc(rule, hkind, bounds, comparisons)
        if out is not None:
            return out
    return _opt_general(rule, hkind, bounds, comparisons, budget)


def _opt_tc(rule: Rule, hkind: Kind, bounds, comparisons) -> Outcome | None:
    # every variable sits in exactly one limit literal; push it to its extreme
    if any(len(v) != 1 for v in bounds.values()):
        return None
    used = set(rule.head.variables())
    for c in comparisons:
        used.update(c.variables())
    if not used <= bounds.keys():
        return None
    env: dict[str, int] = {}
    infinite: dict[str, int] = {}  # variable -> direction of its unbounded side
    for v, [(kind, entry)] in bounds.items():
        if entry is ALL_INTS:
            infinite[v] = 1 if kind is Kind.MAX else -1
        else:
            env[v] = entry.value
    for c in comparisons:
        diff = c.difference()
        if infinite and diff.variables() & infinite.keys():
            continue
        value = diff.evaluate(env)
        if value > 0 or (c.op == "<" and value == 0):
            return NOT_APPLICABLE
    return _head_outcome(rule.head, hkind, env, infinite)


def _head_outcome(head: Atom, hkind: Kind, env: Mapping[str, int], infinite=()) -> Outcome:
    numeric = hkind is not Kind.OBJECT
    objs = _objects_of(head, numeric)
    if not numeric:
        return Derive(Fact(head.pred, objs))
    p = term_poly(head.args[-1])
    if hkind.is_limit:
        if p.variables() & set(infinite):
            return DeriveLimit(head.pred, objs, ALL_INTS)
        return DeriveLimit(head.pred, objs, Finite(p.evaluate(env)))
    if p.variables() - env.keys():
        raise ContractError(f"ordinary head {head.pred} has an unbound numeric term")
    return Derive(Fact(head.pred, objs, p.evaluate(env)))


def _propagate(rows: list[tuple[dict[str, int], int]], rounds: int = 64) -> dict[str, tuple[float, float]] | None:
    """Interval bound propagation over linear rows ``sum + const <= 0``."""
    box: dict[str, list[float]] = {}
    for coefs, _ in rows:
        for v in coefs:
            box.setdefault(v, [-math.inf, math.inf])
    for _ in range(rounds):
        changed = False
        for coefs, const in rows:
            for v, a in coefs.items():
                rest = -const
                for w, b in coefs.items():
                    if w == v:
                        continue
                    lo, hi = box[w]
                    rest -= b * lo if b > 0 else b * hi
                    if rest != rest:
                        break
                if rest in (math.inf, -math.inf) or rest != rest:
                    if rest == -math.inf:
                        return None
                    continue
                rest = int(rest)
                if a > 0:
                    nb = rest // a
                    if nb < box[v][1]:
                        box[v][1] = nb
                        changed = True
                else:
                    nb = -(rest // (-a))
                    if nb > box[v][0]:
                        box[v][0] = nb
                        changed = True
                if box[v][0] > box[v][1]:
                    return None
        if not changed:
            break
    return {v: (lo, hi) for v, (lo, hi) in box.items()}


def _opt_general(rule: Rule, hkind: Kind, bounds, comparisons, budget: int) -> Outcome:
    polys: list[Poly] = []
    for v, entries in bounds.items():
        for kind, entry in entries:
            if entry is not ALL_INTS:
                polys.append(Poly.var(v) - Poly.const(entry.value) if kind is Kind.MAX else Poly.const(entry.value) - Poly.var(v))
    for c in comparisons:
        d = c.difference()
        polys.append(d + Poly.const(1) if c.op == "<" else d)
    head_poly = term_poly(rule.head.args[-1]) if hkind is not Kind.OBJECT else None

    fixed: dict[str, int] = {}
    while True:
        linear = [p.linear() for p in polys if p.is_linear() and not p.is_ground()]
        for p in polys:
            if p.is_ground() and p.constant > 0:
                return NOT_APPLICABLE
        box = _propagate([(dict(c), k) for c, k in linear])
        if box is None:
            return NOT_APPLICABLE
        new = {v: int(lo) for v, (lo, hi) in box.items() if lo == hi}
        if not new:
            break
        fixed.update(new)
        polys = [p.substitute(new) for p in polys]
        if head_poly is not None:
            head_poly = head_poly.substitute(new)
    for p in polys:
        if not p.is_linear():
            raise ContractError("non-linear constraint remains after fixing guarded variables")
        if p.is_ground() and p.constant > 0:
            return NOT_APPLICABLE
    rows = [p.linear() for p in polys if not p.is_ground()]
    if hkind.is_limit:
        if not head_poly.is_linear():
            raise ContractError("non-linear head term remains after fixing guarded variables")
        res = optimise(rows, head_poly.linear(), maximise=hkind is Kind.MAX, budget=budget)
        objs = _objects_of(rule.head, True)
        if res is INFEASIBLE:
            return NOT_APPLICABLE
        if isinstance(res, Unbounded):
            return DeriveLimit(rule.head.pred, objs, ALL_INTS)
        return DeriveLimit(rule.head.pred, objs, Finite(res.value))
    res = optimise(rows, None, budget=budget)
    if res is INFEASIBLE:
        return NOT_APPLICABLE
    env = dict(fixed)
    env.update(res.point)
    if head_poly is not None:
        free = head_poly.variables() - env.keys()
        if free:
            raise ContractError(f"ordinary head {rule.head.pred} has an unbound numeric term")
    return _head_outcome(rule.head, hkind, env)


# --------------------------------------------------------------- fixpoints


class _Store:
    """Mutable pseudo-interpretation used while iterating."""

    def __init__(self, kinds: Mapping[str, Kind], initial: PseudoInterpretation | None = None):
        self.kinds = dict(kinds)
        self.objects: set = set(initial.objects) if initial else set()
        self.ordinary: set = set(initial.ordinary) if initial else set()
        self.limits: dict[SlotKey, LimitValue] = dict(initial.limits) if initial else {}

    def limit(self, pred: str, objs: tuple[str, ...]) -> LimitValue | None:
        return self.limits.get((pred, objs))

    def add_facts(self, facts: Iterable[Fact]) -> None:
        tmp = PseudoInterpretation.from_facts(facts, self.kinds)
        self.objects |= tmp.objects
        self.ordinary |= tmp.ordinary
        for k, v in tmp.limits.items():
            self.limits[k] = better(self.kinds[k[0]], self.limits[k], v) if k in self.limits else v

    def freeze(self) -> PseudoInterpretation:
        return PseudoInterpretation(self.objects, self.ordinary, self.limits, self.kinds)


def _slot_key(atom: Atom, kinds: Mapping[str, Kind]) -> tuple[str, tuple]:
    numeric = kinds.get(atom.pred, Kind.OBJECT) is not Kind.OBJECT
    args = atom.args[:-1] if numeric else atom.args
    return atom.pred, tuple(a.name if isinstance(a, Obj) else a for a in args)


def step(rules: Iterable[Rule], J: PseudoInterpretation, mode: str = "general", budget: int = 200_000) -> PseudoInterpretation:
    """One application of the immediate consequence operator."""
    store = _Store(J.kinds, J)
    derived = [opt_rule(r, J, J.kinds, mode, budget) for r in rules]
    for d in derived:
        _merge(store, d)
    return store.freeze()


def _merge(store: _Store, d: Outcome) -> tuple[SlotKey, LimitValue | None, LimitValue] | tuple[SlotKey] | None:
    """Merge one derivation; returns a description of the change, if any."""
    if isinstance(d, Derive):
        f = d.fact
        if f.value is None:
            key = (f.pred, f.objects)
            if key in store.objects:
                return None
            store.objects.add(key)
            return (key,)
        key3 = (f.pred, f.objects, f.value)
        if key3 in store.ordinary:
            return None
        store.ordinary.add(key3)
        return ((f.pred, f.objects),)
    if isinstance(d, DeriveLimit):
        key = (d.pred, d.objects)
        old = store.limits.get(key)
        new = d.value if old is None else better(store.kinds[d.pred], old, d.value)
        if new == old:
            return None
        store.limits[key] = new
        return (key, old, new)
    return None


def _magnitude_cap(rules: Iterable[Rule], facts: Iterable[Fact], config: EngineConfig) -> int:
    if config.magnitude_cap != "auto":
        return int(config.magnitude_cap)
    biggest = max((abs(f.value) for f in facts if isinstance(f.value, int)), default=0)
    for r in rules:
        terms = [t for lit in r.literals() for t in lit.atom.args] + list(r.head.args)
        terms += [t for c in r.comparisons() for t in (c.left, c.right)]
        for t in terms:
            if not isinstance(t, Obj):
                biggest = max([biggest] + [abs(k) for k in term_poly(t).terms.values()])
    return max(config.cap_floor, (1 + biggest) ** config.cap_exponent)


def pseudo_materialise_positive(
    program: SemiGroundProgram,
    config: EngineConfig = EngineConfig(),
    initial: PseudoInterpretation | None = None,
    index: int = 1,
) -> tuple[PseudoInterpretation, StratumTrace]:
    """Pseudo-materialisation of a positive semi-ground program.

    Rules are applied synchronously; after the first round only rules with a
    body slot that changed in the previous round are re-evaluated.
    """
    if not program.is_positive():
        raise ContractError("pseudo_materialise_positive needs a positive program")
    kinds = program.kinds
    rules = list(program.rules)
    store = _Store(kinds, initial)
    store.add_facts(program.facts)
    trace = StratumTrace(index, rules=len(rules))

    dependents: dict[tuple, list[int]] = {}
    slots: set[SlotKey] = set(k for k in store.limits)
    for i, r in enumerate(rules):
        for lit in r.literals():
            dependents.setdefault(_slot_key(lit.atom, kinds), []).append(i)
            if kinds.get(lit.atom.pred, Kind.OBJECT).is_limit:
                slots.add(_slot_key(lit.atom, kinds))
        if kinds.get(r.head.pred, Kind.OBJECT).is_limit:
            slots.add(_slot_key(r.head, kinds))
    if config.mode == "tc":
        threshold = len(slots) * len(rules) + 1 if config.threshold == "auto" else int(config.threshold)
        cap = None
    else:
        threshold = None if config.threshold == "auto" else int(config.threshold)
        cap = _magnitude_cap(rules, program.facts, config)
    trace.threshold, trace.magnitude_cap = threshold, cap

    pending = list(range(len(rules)))
    iteration = 0
    while pending:
        iteration += 1
        if iteration > config.max_iterations:
            trace.complete = False
            trace.note = f"no fixpoint after {config.max_iterations} iterations"
            break
        try:
            outcomes = [opt_rule(rules[i], store, kinds, config.mode, config.search_budget) for i in pending]
        except SearchBudgetExceeded as e:
            trace.complete = False
            trace.note = str(e)
            break
        changed: set[tuple] = set()
        for d in outcomes:
            change = _merge(store, d)
            if change is None:
                continue
            key = change[0]
            changed.add(key)
            if len(change) == 3:
                _, old, new = change
                trace.history.append((iteration, key, old, new))
                if isinstance(old, Finite) and isinstance(new, Finite):
                    trace.improvements[key] = trace.improvements.get(key, 0) + 1
        for key in sorted(changed, key=repr):
            entry = store.limits.get(key) if key in store.limits else None
            if not isinstance(entry, Finite):
                continue
            reason = None
            if threshold is not None and trace.improvements.get(key, 0) > threshold:
                reason = f"improved {trace.improvements[key]} times (threshold {threshold})"
            elif cap is not None and abs(entry.value) > cap:
                reason = f"magnitude {abs(entry.value)} exceeds cap {cap}"
            if reason:
                store.limits[key] = ALL_INTS
                trace.history.append((iteration, key, entry, ALL_INTS))
                trace.promotions.append((key, reason))
                if config.mode != "tc":
                    trace.exact = False
        pending = sorted({i for key in changed for i in dependents.get(key, ())})
    trace.iterations = iteration
    if not trace.complete:
        trace.exact = False
    return store.freeze(), trace


# ---------------------------------------------------------- stratified driver


def _require(prog: Program, config: EngineConfig) -> None:
    safe, diags = analysis.check_safety(prog)
    if not safe:
        raise ProgramError("; ".join(diags))
    ll, diags = analysis.check_limit_linear(prog)
    if not ll:
        raise ProgramError("program is not limit-linear: " + "; ".join(diags))
    if config.mode == "tc":
        tc, diags = analysis.check_type_consistent(prog)
        if not tc:
            raise ProgramError("tc mode needs a type-consistent program: " + "; ".join(diags))


def materialise_stratified(
    prog: Program,
    dataset: Iterable[Fact] = (),
    config: EngineConfig = EngineConfig(),
    stratification: analysis.Stratification | None = None,
    check: bool = True,
) -> tuple[PseudoInterpretation, EvaluationTrace]:
    """Stratum by stratum: semi-ground, eliminate negation, run the positive fixpoint."""
    dataset = list(dataset)
    full = prog.with_facts(dataset) if dataset else prog
    if check:
        _require(full, config)
    strat = stratification or analysis.compute_stratification(full)
    if not strat:
        raise ProgramError(str(strat))
    kinds = {p: i.kind for p, i in full.predicates.items()}
    J = PseudoInterpretation.from_facts(full.facts, kinds)
    trace = EvaluationTrace(config.mode, dict(strat.levels))
    for i, rules in enumerate(strat.strata, start=1):
        facts = J.facts()
        stratum = full.with_rules(rules, facts)
        sg = semi_ground(stratum)
        positive = tc_rewrite_reduct(sg, validate=config.validate) if config.mode == "tc" else reduct(sg)
        J, st = pseudo_materialise_positive(positive, config, J, index=i)
        J = PseudoInterpretation(J.objects, J.ordinary, J.limits, kinds)
        trace.strata.append(st)
        trace.snapshots.append(J)
        if not st.complete:
            break
    return J, trace


Verdict = TLiteral["entailed", "not-entailed", "unknown"]


def _depends_on_inexact(trace: EvaluationTrace, pred: str) -> bool:
    first = trace.first_inexact_stratum()
    if first is None:
        return False
    if not trace.complete:
        return True
    return trace.levels.get(pred, 1) >= first


def query(
    prog: Program,
    dataset: Iterable[Fact],
    fact: Fact,
    config: EngineConfig = EngineConfig(),
    result: tuple[PseudoInterpretation, EvaluationTrace] | None = None,
) -> Verdict:
    J, trace = result or materialise_stratified(prog, dataset, config)
    if _depends_on_inexact(trace, fact.pred):
        return "unknown"
    return "entailed" if entails(J, fact) else "not-entailed"


class _NoValue:
    def __repr__(self) -> str:
        return "NoValue"


NO_VALUE = _NoValue()
UNKNOWN = "unknown"


def lub_query(
    prog: Program,
    dataset: Iterable[Fact],
    pred: str,
    objects: tuple[str, ...],
    config: EngineConfig = EngineConfig(),
    result: tuple[PseudoInterpretation, EvaluationTrace] | None = None,
):
    J, trace = result or materialise_stratified(prog, dataset, config)
    if _depends_on_inexact(trace, pred):
        return UNKNOWN
    kind = J.kinds.get(pred)
    if kind is None or not kind.is_limit:
        raise ContractError(f"{pred} is not a limit predicate")
    entry = J.limit(pred, tuple(objects))
    return NO_VALUE if entry is None else entry
