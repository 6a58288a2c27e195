"""Exact integer optimisation over small systems of linear inequalities.

Variables are eliminated with Fourier-Motzkin (integer coefficients, each
derived row tightened by its gcd), which decides rational feasibility and
whether the objective is bounded.  Integer points are then found by
back-substitution through the projections, enumerating each variable's
integer range.  An integer-feasible system whose objective is unbounded over
the rationals is unbounded over the integers too (the integer hull of a
rational polyhedron has the same recession cone), so no search is needed in
that case beyond one integer witness.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass

# sum(coef * var) <= bound
Row = tuple[tuple[tuple[str, int], ...], int]


class SearchBudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class Infeasible:
    pass


@dataclass(frozen=True)
class Unbounded:
    witness: Mapping[str, int]


@dataclass(frozen=True)
class Optimum:
    value: int
    point: Mapping[str, int]


INFEASIBLE = Infeasible()


def make_row(coefs: Mapping[str, int], const: int) -> Row | bool:
    """Row for ``sum(coefs) + const <= 0``; a bool when the row has no variables."""
    items = tuple(sorted((v, c) for v, c in coefs.items() if c))
    bound = -const
    if not items:
        return bound >= 0
    g = 0
    for _, c in items:
        g = math.gcd(g, c)
    return tuple((v, c // g) for v, c in items), bound // g


def _combine(pos: Row, neg: Row, var: str) -> Row | bool:
    a = dict(pos[0])[var]
    b = -dict(neg[0])[var]
    coefs: dict[str, int] = {}
    for v, c in pos[0]:
        coefs[v] = coefs.get(v, 0) + c * b
    for v, c in neg[0]:
        coefs[v] = coefs.get(v, 0) + c * a
    coefs.pop(var, None)
    return make_row(coefs, -(pos[1] * b + neg[1] * a))


def _eliminate(rows: list[Row], var: str) -> list[Row] | None:
    pos, neg, rest = [], [], []
    for r in rows:
        c = dict(r[0]).get(var, 0)
        (pos if c > 0 else neg if c < 0 else rest).append(r)
    out = set(rest)
    for p in pos:
        for n in neg:
            r = _combine(p, n, var)
            if r is False:
                return None
            if r is not True:
                out.add(r)
    return _prune(out)


def _prune(rows) -> list[Row]:
    """Keep only the tightest bound per coefficient vector."""
    best: dict[tuple, int] = {}
    for coefs, b in rows:
        if coefs not in best or b < best[coefs]:
            best[coefs] = b
    return sorted(best.items())


def _range(rows: Sequence[Row], var: str, env: Mapping[str, int]) -> tuple[float, float] | None:
    lo, hi = -math.inf, math.inf
    for coefs, b in rows:
        a = 0
        rhs = b
        for v, c in coefs:
            if v == var:
                a = c
            else:
                rhs -= c * env[v]
        if a > 0:
            hi = min(hi, rhs // a)
        elif a < 0:
            lo = max(lo, -((rhs) // (-a)))
        elif rhs < 0:
            return None
    if lo > hi:
        return None
    return lo, hi


def _values(lo: float, hi: float, descending: bool) -> Iterator[int]:
    if descending and hi != math.inf:
        k = int(hi)
        while k >= lo:
            yield k
            k -= 1
        return
    if lo != -math.inf:
        k = int(lo)
        while k <= hi:
            yield k
            k += 1
        return
    if hi != math.inf:
        k = int(hi)
        while True:
            yield k
            k -= 1
    k = 0
    yield 0
    while True:
        k += 1
        yield k
        yield -k


class _Search:
    def __init__(self, levels: list[tuple[str, list[Row]]], budget: int):
        self.levels = levels  # outermost variable first
        self.budget = budget
        self.nodes = 0

    def run(self, i: int, env: dict[str, int]) -> dict[str, int] | None:
        if i == len(self.levels):
            return dict(env)
        var, rows = self.levels[i]
        rng = _range(rows, var, env)
        if rng is None:
            return None
        for k in _values(*rng, descending=(i == 0)):
            self.nodes += 1
            if self.nodes > self.budget:
                raise SearchBudgetExceeded(f"integer search exceeded {self.budget} nodes")
            env[var] = k
            found = self.run(i + 1, env)
            if found is not None:
                return found
        env.pop(var, None)
        return None


def _cost(rows: list[Row], v: str) -> tuple[int, str]:
    p = sum(1 for r in rows if dict(r[0]).get(v, 0) > 0)
    n = sum(1 for r in rows if dict(r[0]).get(v, 0) < 0)
    return (p * n - p - n, v)


def optimise(
    constraints: Sequence[tuple[Mapping[str, int], int]],
    objective: tuple[Mapping[str, int], int] | None = None,
    maximise: bool = True,
    budget: int = 200_000,
) -> Infeasible | Unbounded | Optimum:
    """Optimise ``objective`` over integer points of ``sum(c*x) + k <= 0`` rows.

    With no objective the result is ``Optimum(0, point)`` for any integer
    point, or ``INFEASIBLE``.
    """
    rows: list[Row] = []
    variables: set[str] = set()
    for coefs, const in constraints:
        r = make_row(coefs, const)
        if r is False:
            return INFEASIBLE
        if r is not True:
            rows.append(r)
            variables.update(v for v, _ in r[0])
    Z = "\x00z"
    if objective is not None:
        sign = 1 if maximise else -1
        ocoefs, oconst = objective
        ocoefs = {v: sign * c for v, c in ocoefs.items() if c}
        variables.update(ocoefs)
        # z <= sign * objective, z is maximised
        r = make_row({Z: 1, **{v: -c for v, c in ocoefs.items()}}, -sign * oconst)
        if r is not True:
            rows.append(r)
    rows = _prune(rows)
    order: list[str] = []
    systems: list[list[Row]] = [rows]
    cur = rows
    remaining = set(variables)
    while remaining:
        v = min(remaining, key=lambda x: _cost(cur, x))
        remaining.discard(v)
        order.append(v)
        cur = _eliminate(cur, v)
        if cur is None:
            return INFEASIBLE
        systems.append(cur)
    levels = [(order[i], systems[i]) for i in range(len(order) - 1, -1, -1)]
    if objective is None:
        point = _Search(levels, budget).run(0, {})
        return INFEASIBLE if point is None else Optimum(0, point)
    zrange = _range(systems[-1], Z, {})
    if zrange is None:
        return INFEASIBLE
    point = _Search([(Z, systems[-1])] + levels, budget).run(0, {})
    if point is None:
        return INFEASIBLE
    value = point.pop(Z)
    if zrange[1] == math.inf:
        return Unbounded(point)
    return Optimum(value if maximise else -value, point)
