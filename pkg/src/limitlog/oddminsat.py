"""OddMinSAT instances: does the lexicographically minimal satisfying
assignment of a formula set its last variable?
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from importlib import resources
from typing import Union

from .model import Fact, LimitLogError, Program
from .syntax import parse_program


@dataclass(frozen=True)
class BVar:
    index: int


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    arg: "Formula"


Formula = Union[BVar, Or, Not]


class Unsatisfiable(LimitLogError):
    """The formula has no satisfying assignment, so the instance is ill-posed."""


def evaluate(phi: Formula, sigma: dict[int, bool]) -> bool:
    if isinstance(phi, BVar):
        return sigma[phi.index]
    if isinstance(phi, Or):
        return evaluate(phi.left, sigma) or evaluate(phi.right, sigma)
    return not evaluate(phi.arg, sigma)


def show(phi: Formula) -> str:
    if isinstance(phi, BVar):
        return f"x{phi.index}"
    if isinstance(phi, Or):
        return f"({show(phi.left)} | {show(phi.right)})"
    return f"~{show(phi.arg)}"


def minimal_assignment(n_vars: int, phi: Formula) -> dict[int, bool] | None:
    """First satisfying assignment in ascending order of ``<x_N, ..., x_0>``."""
    for bits in itertools.product((False, True), repeat=n_vars):
        sigma = {n_vars - 1 - i: b for i, b in enumerate(bits)}
        if evaluate(phi, sigma):
            return sigma
    return None


def brute_force_oddminsat(n_vars: int, phi: Formula) -> bool:
    sigma = minimal_assignment(n_vars, phi)
    if sigma is None:
        raise Unsatisfiable(f"{show(phi)} is unsatisfiable")
    return sigma[0]


def program() -> Program:
    text = resources.files("limitlog.corpus").joinpath("oddminsat.lpl").read_text()
    return parse_program(text)


def encode(n_vars: int, phi: Formula, check: bool = True) -> list[Fact]:
    """Dataset describing ``phi`` over variables ``x_{n_vars-1} .. x_0``."""
    if check and minimal_assignment(n_vars, phi) is None:
        raise Unsatisfiable(f"{show(phi)} is unsatisfiable; the fixpoint would not terminate")
    names: dict[Formula, str] = {}
    facts: list[Fact] = [Fact("shift", (f"x{i}",), 2**i) for i in range(n_vars)]

    def name(psi: Formula) -> str:
        if psi in names:
            return names[psi]
        if isinstance(psi, BVar):
            n = f"x{psi.index}"
        else:
            n = f"f{len([k for k in names if not isinstance(k, BVar)])}"
        names[psi] = n
        if isinstance(psi, Or):
            facts.append(Fact("disj", (n, name(psi.left), name(psi.right))))
        elif isinstance(psi, Not):
            facts.append(Fact("neg", (n, name(psi.arg))))
        return n

    facts.append(Fact("root", (name(phi),)))
    return sorted(set(facts), key=Fact.sort_key)


def random_formula(n_vars: int, rng: random.Random, size: int | None = None) -> Formula:
    size = rng.randint(1, 2 * n_vars + 2) if size is None else size

    def build(k: int) -> Formula:
        if k <= 1:
            leaf: Formula = BVar(rng.randrange(n_vars))
            return Not(leaf) if rng.random() < 0.3 else leaf
        if rng.random() < 0.25:
            return Not(build(k - 1))
        left = rng.randint(1, k - 1)
        return Or(build(left), build(k - left))

    return build(size)


def random_satisfiable(max_vars: int, rng: random.Random) -> tuple[int, Formula]:
    while True:
        n = rng.randint(1, max_vars)
        phi = random_formula(n, rng)
        if minimal_assignment(n, phi) is not None:
            return n, phi


def oddminsat_encode(n_vars: int, phi: Formula) -> tuple[Program, list[Fact]]:
    return program(), encode(n_vars, phi)


def decode(facts) -> tuple[int, Formula]:
    """Recover ``(n_vars, phi)`` from a dataset produced by :func:`encode`."""
    shifts = {f.objects[0]: f.value for f in facts if f.pred == "shift"}
    disj = {f.objects[0]: f.objects[1:] for f in facts if f.pred == "disj"}
    neg = {f.objects[0]: f.objects[1] for f in facts if f.pred == "neg"}
    roots = [f.objects[0] for f in facts if f.pred == "root"]
    if len(roots) != 1:
        raise LimitLogError("dataset must have exactly one root fact")

    def build(x: str) -> Formula:
        if x in disj:
            return Or(build(disj[x][0]), build(disj[x][1]))
        if x in neg:
            return Not(build(neg[x]))
        if x in shifts:
            return BVar(shifts[x].bit_length() - 1)
        raise LimitLogError(f"node {x} is neither a variable nor a gate")

    return len(shifts), build(roots[0])
