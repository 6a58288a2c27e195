"""Bounded brute-force materialisation, used to check the engine.

Every numeric variable ranges over the window ``[-B, B]`` (or over the values
an ordinary fact gives it), limit facts are kept as boolean masks over the
window and closed under the limit axiom inside it.  The result is exact for
facts well inside the window and never invents facts; near the boundary it
may miss some.
"""

from __future__ import annotations

import enum
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .analysis import compute_stratification, object_vars
from .model import (
    STAR,
    Atom,
    Comparison,
    ContractError,
    Fact,
    Kind,
    Obj,
    Program,
    ProgramError,
    Rule,
    Var,
    term_poly,
)
from .poly import Poly

DEFAULT_BOUND = 64


def default_bound() -> int:
    return int(os.environ.get("LIMITLOG_ORACLE_BOUND", DEFAULT_BOUND))


class OracleVerdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    OUT_OF_WINDOW = "out-of-window"


@dataclass
class BoundedStore:
    bound: int
    kinds: Mapping[str, Kind]
    objects: set = field(default_factory=set)
    ordinary: set = field(default_factory=set)
    limits: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return 2 * self.bound + 1

    def mask(self, pred: str, objs: tuple[str, ...]) -> np.ndarray | None:
        return self.limits.get((pred, objs))

    def values(self, pred: str, objs: tuple[str, ...]) -> list[int]:
        m = self.limits.get((pred, objs))
        if m is None:
            return []
        return [int(i) - self.bound for i in np.flatnonzero(m)]

    def facts(self) -> set[Fact]:
        out = {Fact(p, o) for p, o in self.objects}
        out |= {Fact(p, o, k) for p, o, k in self.ordinary}
        for (p, o), m in self.limits.items():
            out |= {Fact(p, o, int(i) - self.bound) for i in np.flatnonzero(m)}
        return out

    def copy(self) -> BoundedStore:
        return BoundedStore(
            self.bound, self.kinds, set(self.objects), set(self.ordinary), {k: v.copy() for k, v in self.limits.items()}
        )


def _closure(kind: Kind, best: int, B: int) -> np.ndarray:
    idx = np.arange(-B, B + 1)
    return idx <= best if kind is Kind.MAX else idx >= best


def _add_limit(store: BoundedStore, key, new: np.ndarray) -> bool:
    old = store.limits.get(key)
    if old is None:
        if not new.any():
            return False
        store.limits[key] = new.copy()
        return True
    merged = old | new
    if (merged == old).all():
        return False
    store.limits[key] = merged
    return True


def _add_fact(store: BoundedStore, f: Fact) -> None:
    kind = store.kinds.get(f.pred, Kind.OBJECT)
    B = store.bound
    if kind.is_limit:
        if f.value is STAR:
            m = np.ones(store.width, dtype=bool)
        else:
            m = _closure(kind, max(-B - 1, min(B + 1, f.value)), B)
        _add_limit(store, (f.pred, f.objects), m)
    elif f.value is None:
        store.objects.add((f.pred, f.objects))
    else:
        store.ordinary.add((f.pred, f.objects, f.value))


# --------------------------------------------------------------- rule eval


def _solve_equalities(rule: Rule, positive_vars: set[str]) -> tuple[dict[str, Poly], list[Comparison]]:
    """Turn ``s <= t, t <= s`` pairs into definitions ``v := poly`` where possible."""
    comps = list(rule.comparisons())
    defs: dict[str, Poly] = {}
    used = set()
    for i, c in enumerate(comps):
        if i in used or c.op != "<=":
            continue
        d = c.difference()
        for j in range(i + 1, len(comps)):
            c2 = comps[j]
            if j in used or c2.op != "<=" or c2.difference() != -d:
                continue
            d_sub = d.substitute_poly(defs)
            cands = sorted(
                (v for v in d_sub.variables() if _unit_linear(d_sub, v)),
                key=lambda v: (v in positive_vars, v),
            )
            if not cands:
                break
            v = cands[0]
            coef = d_sub.terms[(v,)]
            rest = d_sub - Poly({(v,): coef})
            sol = rest.scale(-coef)  # coef * v + rest = 0  ->  v = -rest / coef
            defs = {w: p.substitute_poly({v: sol}) for w, p in defs.items()}
            defs[v] = sol
            used.update((i, j))
            break
    remaining = [c for k, c in enumerate(comps) if k not in used]
    return defs, remaining


def _unit_linear(p: Poly, v: str) -> bool:
    """``v`` occurs only in the monomial ``v`` with coefficient +-1."""
    if p.terms.get((v,), 0) not in (1, -1):
        return False
    return all(v not in m for m in p.terms if m != (v,))


class _RuleEval:
    def __init__(self, rule: Rule, kinds: Mapping[str, Kind]):
        self.rule = rule
        self.kinds = kinds
        self.ovars = object_vars(rule, kinds)
        pos_numeric: set[str] = set()
        for lit in rule.literals():
            if lit.positive and kinds.get(lit.atom.pred, Kind.OBJECT) is not Kind.OBJECT:
                if isinstance(lit.atom.args[-1], Var):
                    pos_numeric.add(lit.atom.args[-1].name)
        self.pos_numeric = pos_numeric
        self.defs, self.comps = _solve_equalities(rule, pos_numeric)

    def instances(self, store: BoundedStore):
        """Object bindings obtained by joining positive literals with the store."""
        lits = [lit for lit in self.rule.literals() if lit.positive]

        def go(i: int, env: dict):
            if i == len(lits):
                yield env
                return
            atom = lits[i].atom
            kind = self.kinds.get(atom.pred, Kind.OBJECT)
            obj_args = atom.args[:-1] if kind is not Kind.OBJECT else atom.args
            if kind is Kind.OBJECT:
                cands = [o for p, o in store.objects if p == atom.pred]
            elif kind is Kind.ORDINARY:
                cands = [o for p, o, _ in store.ordinary if p == atom.pred]
            else:
                cands = [o for p, o in store.limits if p == atom.pred]
            seen = set()
            for objs in cands:
                if objs in seen or len(objs) != len(obj_args):
                    continue
                seen.add(objs)
                e = dict(env)
                ok = True
                for a, o in zip(obj_args, objs):
                    if isinstance(a, Obj):
                        ok = a.name == o
                    elif isinstance(a, Var):
                        ok = e.setdefault(a.name, o) == o
                    else:
                        ok = False
                    if not ok:
                        break
                if ok:
                    yield from go(i + 1, e)

        seen_envs = set()
        for env in go(0, {}):
            key = tuple(sorted((k, v) for k, v in env.items() if k in self.ovars))
            if key not in seen_envs:
                seen_envs.add(key)
                yield {k: v for k, v in env.items() if k in self.ovars}

    def evaluate(self, store: BoundedStore, env: dict[str, str]):
        """Returns ``None`` or the head contribution for one object binding."""
        B = store.bound
        window = np.arange(-B, B + 1, dtype=np.int64)
        rule = self.rule.substitute({k: Obj(v) for k, v in env.items()})
        enum_vars: dict[str, np.ndarray] = {}
        checks: list[tuple[Atom, bool]] = []
        for lit in rule.literals():
            atom = lit.atom
            kind = self.kinds.get(atom.pred, Kind.OBJECT)
            objs = tuple(a.name for a in (atom.args[:-1] if kind is not Kind.OBJECT else atom.args))
            if kind is Kind.OBJECT:
                if ((atom.pred, objs) in store.objects) != lit.positive:
                    return None
                continue
            last = atom.args[-1]
            if isinstance(last, Var) and lit.positive and last.name not in self.defs:
                if kind is Kind.ORDINARY:
                    vals = np.array(sorted(k for p, o, k in store.ordinary if p == atom.pred and o == objs), dtype=np.int64)
                else:
                    m = store.mask(atom.pred, objs)
                    vals = window[m] if m is not None else np.zeros(0, dtype=np.int64)
                prev = enum_vars.get(last.name)
                enum_vars[last.name] = vals if prev is None else np.intersect1d(prev, vals)
            checks.append((atom, lit.positive))
        all_vars = set(rule.variables())
        for v in sorted(all_vars - enum_vars.keys() - self.defs.keys()):
            enum_vars[v] = window
        names = sorted(enum_vars)
        if any(len(enum_vars[n]) == 0 for n in names):
            return None
        grids = np.meshgrid(*[enum_vars[n] for n in names], indexing="ij", sparse=True) if names else []
        values: dict[str, np.ndarray] = dict(zip(names, grids))
        for v, p in self.defs.items():
            values[v] = _eval_poly(p, values)
        shape = np.broadcast_shapes(*[np.shape(a) for a in values.values()]) if values else ()
        mask = np.ones(shape, dtype=bool)
        for v in self.defs:
            x = values[v]
            mask &= (x >= -B) & (x <= B)
        for atom, positive in checks:
            kind = self.kinds.get(atom.pred, Kind.OBJECT)
            objs = tuple(a.name for a in atom.args[:-1])
            x = _eval_poly(term_poly(atom.args[-1]), values)
            if kind is Kind.ORDINARY:
                allowed = np.array(sorted(k for p, o, k in store.ordinary if p == atom.pred and o == objs), dtype=np.int64)
                hit = np.isin(x, allowed)
            else:
                m = store.mask(atom.pred, objs)
                inside = (x >= -B) & (x <= B)
                if m is None:
                    hit = np.zeros(np.shape(x), dtype=bool)
                else:
                    hit = inside & m[np.clip(x + B, 0, 2 * B)]
                if not positive:
                    # outside the window the truth is unknown; only trust the inside
                    hit = ~hit & inside
                    mask &= hit
                    continue
            mask &= hit if positive else ~hit
        for c in self.comps:
            left = _eval_poly(term_poly(c.left), values)
            right = _eval_poly(term_poly(c.right), values)
            mask &= (left < right) if c.op == "<" else (left <= right)
        if not mask.any():
            return None
        head = rule.head
        hkind = self.kinds.get(head.pred, Kind.OBJECT)
        if hkind is Kind.OBJECT:
            return Fact(head.pred, tuple(a.name for a in head.args))
        objs = tuple(a.name for a in head.args[:-1])
        s = np.broadcast_to(_eval_poly(term_poly(head.args[-1]), values), mask.shape)[mask]
        if hkind is Kind.ORDINARY:
            return [Fact(head.pred, objs, int(k)) for k in np.unique(s)]
        best = int(s.max()) if hkind is Kind.MAX else int(s.min())
        return (head.pred, objs, best)


def _eval_poly(p: Poly, values: Mapping[str, np.ndarray]):
    total = np.int64(0)
    for mono, coef in p.items():
        term = np.int64(coef)
        for v in mono:
            term = term * values[v]
        total = total + term
    return total


# ------------------------------------------------------------ materialise


def brute_force_materialise(
    prog: Program,
    dataset: Iterable[Fact] = (),
    bound: int | None = None,
    max_rounds: int | None = None,
) -> BoundedStore:
    """Stratum-by-stratum naive fixpoint with numeric variables in ``[-B, B]``."""
    B = default_bound() if bound is None else bound
    dataset = list(dataset)
    full = prog.with_facts(dataset) if dataset else prog
    strat = compute_stratification(full)
    if not strat:
        raise ProgramError(str(strat))
    kinds = {p: i.kind for p, i in full.predicates.items()}
    store = BoundedStore(B, kinds)
    for f in full.facts:
        _add_fact(store, f)
    if max_rounds is None:
        max_rounds = 4 * (2 * B + 2) * max(1, len(full.rules)) + 64
    for rules in strat.strata:
        evals = [_RuleEval(r, kinds) for r in rules]
        for _ in range(max_rounds):
            changed = False
            derived = []
            for ev in evals:
                for env in ev.instances(store):
                    out = ev.evaluate(store, env)
                    if out is not None:
                        derived.append(out)
            for out in derived:
                changed |= _commit(store, out)
            if not changed:
                break
        else:
            raise RuntimeError("oracle fixpoint did not converge within its round limit")
    return store


def _commit(store: BoundedStore, out) -> bool:
    B = store.bound
    if isinstance(out, Fact):
        key = (out.pred, out.objects)
        if key in store.objects:
            return False
        store.objects.add(key)
        return True
    if isinstance(out, list):
        changed = False
        for f in out:
            key = (f.pred, f.objects, f.value)
            if key not in store.ordinary:
                store.ordinary.add(key)
                changed = True
        return changed
    pred, objs, best = out
    kind = store.kinds[pred]
    return _add_limit(store, (pred, objs), _closure(kind, max(-B - 1, min(B + 1, best)), B))


def oracle_entails(store: BoundedStore, fact: Fact, bound: int | None = None) -> OracleVerdict:
    B = store.bound if bound is None else bound
    kind = store.kinds.get(fact.pred, Kind.OBJECT)
    key = (fact.pred, fact.objects)
    if fact.value is STAR:
        if not kind.is_limit:
            raise ContractError(f"'*' on non-limit predicate {fact.pred}")
        m = store.limits.get(key)
        return OracleVerdict.TRUE if m is not None and bool(m.all()) else OracleVerdict.FALSE
    if fact.value is None:
        return OracleVerdict.TRUE if key in store.objects else OracleVerdict.FALSE
    if kind is Kind.ORDINARY:
        return OracleVerdict.TRUE if (fact.pred, fact.objects, fact.value) in store.ordinary else OracleVerdict.FALSE
    if abs(fact.value) > B:
        return OracleVerdict.OUT_OF_WINDOW
    m = store.limits.get(key)
    if m is None:
        return OracleVerdict.FALSE
    return OracleVerdict.TRUE if bool(m[fact.value + store.bound]) else OracleVerdict.FALSE


def oracle_lub(store: BoundedStore, pred: str, objs: tuple[str, ...]):
    """Window-relative lub: an int, ``"saturated"`` or ``None``."""
    m = store.limits.get((pred, tuple(objs)))
    if m is None or not m.any():
        return None
    if m.all():
        return "saturated"
    idx = np.flatnonzero(m)
    kind = store.kinds[pred]
    return int(idx.max()) - store.bound if kind is Kind.MAX else int(idx.min()) - store.bound


__all__ = [
    "BoundedStore",
    "DEFAULT_BOUND",
    "OracleVerdict",
    "brute_force_materialise",
    "default_bound",
    "oracle_entails",
    "oracle_lub",
]
