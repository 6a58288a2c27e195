"""Integer polynomials over numeric variables.

Used to put numeric terms into the normal form ``k0 + sum(k_i * m_i)`` (or a
general sum of monomials when the term is not linear) so that analysis and
evaluation never depend on how a term happened to be written.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

Monomial = tuple[str, ...]  # sorted variable names, repeated for powers


class Poly:
    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, int] | None = None):
        self._terms: dict[Monomial, int] = {}
        if terms:
            for mono, coef in terms.items():
                if coef:
                    self._terms[tuple(sorted(mono))] = self._terms.get(tuple(sorted(mono)), 0) + coef
            self._terms = {m: c for m, c in self._terms.items() if c}

    @classmethod
    def _make(cls, terms: dict[Monomial, int]) -> Poly:
        # keys already sorted; skips the normalisation done by __init__
        p = object.__new__(cls)
        p._terms = {m: c for m, c in terms.items() if c}
        return p

    @classmethod
    def const(cls, value: int) -> Poly:
        return cls._make({(): value})

    @classmethod
    def var(cls, name: str) -> Poly:
        return cls._make({(name,): 1})

    @property
    def terms(self) -> dict[Monomial, int]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __add__(self, other: Poly) -> Poly:
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return Poly._make(out)

    def __neg__(self) -> Poly:
        return Poly._make({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: Poly) -> Poly:
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) - c
        return Poly._make(out)

    def __mul__(self, other: Poly) -> Poly:
        out: dict[Monomial, int] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = tuple(sorted(m1 + m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly._make(out)

    def scale(self, k: int) -> Poly:
        return Poly._make({m: c * k for m, c in self._terms.items()})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Poly) and self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        return f"Poly({self._terms!r})"

    @property
    def constant(self) -> int:
        return self._terms.get((), 0)

    def variables(self) -> set[str]:
        return {v for m in self._terms for v in m}

    def is_ground(self) -> bool:
        return all(not m for m in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((len(m) for m in self._terms), default=0)

    def is_linear(self) -> bool:
        return self.degree() <= 1

    def linear(self) -> tuple[dict[str, int], int]:
        """Return ``(coefficients, constant)``; raises if the polynomial is not linear."""
        if not self.is_linear():
            raise ValueError(f"non-linear term {self!r}")
        return {m[0]: c for m, c in self._terms.items() if m}, self.constant

    def substitute(self, values: Mapping[str, int]) -> Poly:
        out: dict[Monomial, int] = {}
        for mono, coef in self._terms.items():
            rest = []
            for v in mono:
                if v in values:
                    coef *= values[v]
                else:
                    rest.append(v)
            key = tuple(rest)
            out[key] = out.get(key, 0) + coef
        return Poly._make(out)

    def substitute_poly(self, values: Mapping[str, Poly]) -> Poly:
        out = Poly()
        for mono, coef in self._terms.items():
            acc = Poly.const(coef)
            for v in mono:
                acc = acc * (values[v] if v in values else Poly.var(v))
            out = out + acc
        return out

    def evaluate(self, values: Mapping[str, int]) -> int:
        total = 0
        for mono, coef in self._terms.items():
            for v in mono:
                coef *= values[v]
            total += coef
        return total

    def coefficient_groups(self, keep: Iterable[str]) -> dict[Monomial, Poly]:
        """Split into ``sum(coef_poly * monomial)`` where monomials range over ``keep``.

        The coefficient of each monomial in the kept variables is itself a
        polynomial over the remaining variables.
        """
        keep = set(keep)
        groups: dict[Monomial, dict[Monomial, int]] = {}
        for mono, coef in self._terms.items():
            kept = tuple(v for v in mono if v in keep)
            rest = tuple(v for v in mono if v not in keep)
            g = groups.setdefault(kept, {})
            g[rest] = g.get(rest, 0) + coef
        return {k: Poly(v) for k, v in groups.items() if Poly(v)._terms}
