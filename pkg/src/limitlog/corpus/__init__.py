"""Bundled example programs and seeded generators."""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from importlib import resources

from ..analysis import classify
from ..model import STAR, Fact, Program
from ..syntax import ParseError, parse_dataset, parse_program

EXAMPLES = {
    "shortest-path": "shortest_path",
    "closeness": "closeness",
    "oddminsat": "oddminsat",
}


def read_text(filename: str) -> str:
    return resources.files(__name__).joinpath(filename).read_text()


def load_example(name: str) -> tuple[Program, list[Fact]]:
    """Program and dataset of a bundled example, by CLI or file stem name."""
    stem = EXAMPLES.get(name, name)
    prog = parse_program(read_text(f"{stem}.lpl"))
    return prog, parse_dataset(read_text(f"{stem}.lpd"), prog.declarations)


def shortest_path_program() -> Program:
    return load_example("shortest_path")[0]


def closeness_program() -> Program:
    return load_example("closeness")[0]


# ------------------------------------------------------------------- graphs


@dataclass(frozen=True)
class Graph:
    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], int]


def random_weighted_digraph(rng: random.Random, max_nodes: int = 12, max_weight: int = 9) -> Graph:
    n = rng.randint(2, max_nodes)
    nodes = tuple(f"v{i}" for i in range(n))
    p = rng.uniform(0.15, 0.5)
    edges = {
        (x, y): rng.randint(1, max_weight) for x in nodes for y in nodes if x != y and rng.random() < p
    }
    return Graph(nodes, edges)


def shortest_path_instance(rng: random.Random, max_nodes: int = 12) -> tuple[Graph, str, str, list[Fact]]:
    g = random_weighted_digraph(rng, max_nodes)
    source, target = rng.sample(g.nodes, 2)
    facts = [Fact("edge", e, w) for e, w in g.edges.items()]
    facts += [Fact("source", (source,)), Fact("target", (target,))]
    return g, source, target, facts


def strongly_connected_digraph(rng: random.Random, max_nodes: int = 8, max_weight: int = 9) -> Graph:
    n = rng.randint(2, max_nodes)
    nodes = tuple(f"v{i}" for i in range(n))
    cycle = list(nodes)
    rng.shuffle(cycle)
    edges = {(cycle[i], cycle[(i + 1) % n]): rng.randint(1, max_weight) for i in range(n)}
    for x in nodes:
        for y in nodes:
            if x != y and (x, y) not in edges and rng.random() < 0.25:
                edges[(x, y)] = rng.randint(1, max_weight)
    return Graph(nodes, edges)


def closeness_instance(rng: random.Random, max_nodes: int = 8) -> tuple[Graph, list[str], list[Fact]]:
    g = strongly_connected_digraph(rng, max_nodes)
    order = list(g.nodes)
    rng.shuffle(order)
    facts = [Fact("node", (v,)) for v in g.nodes]
    facts += [Fact("edge", e, w) for e, w in g.edges.items()]
    facts += [Fact("first", (order[0],)), Fact("last", (order[-1],))]
    facts += [Fact("next", (a, b)) for a, b in zip(order, order[1:])]
    return g, order, facts


def graph_of(facts) -> Graph:
    edges = {f.objects: f.value for f in facts if f.pred == "edge"}
    nodes = {o for e in edges for o in e} | {f.objects[0] for f in facts if f.pred == "node"}
    return Graph(tuple(sorted(nodes)), edges)


def dijkstra(g: Graph, source: str) -> dict[str, int]:
    dist = {source: 0}
    heap = [(0, source)]
    while heap:
        d, x = heapq.heappop(heap)
        if d > dist[x]:
            continue
        for (a, b), w in g.edges.items():
            if a == x and d + w < dist.get(b, d + w + 1):
                dist[b] = d + w
                heapq.heappush(heap, (d + w, b))
    return dist


def shortest_path_edges(g: Graph, source: str, target: str) -> set[tuple[str, str]]:
    """Edges lying on some shortest path from ``source`` to ``target``."""
    dist = dijkstra(g, source)
    tight = {(x, y) for (x, y), w in g.edges.items() if x in dist and y in dist and dist[x] + w == dist[y]}
    reach = {target}
    changed = True
    while changed:
        changed = False
        for x, y in tight:
            if y in reach and x not in reach:
                reach.add(x)
                changed = True
    return {(x, y) for x, y in tight if y in reach}


def closeness_centre(g: Graph, order: list[str]) -> str:
    """First node in ``order`` among those of minimal farness."""
    farness = {v: sum(dijkstra(g, v).values()) for v in g.nodes}
    best = min(farness.values())
    return next(v for v in order if farness[v] == best)


def order_of(facts) -> list[str]:
    succ = {f.objects[0]: f.objects[1] for f in facts if f.pred == "next"}
    cur = next(f.objects[0] for f in facts if f.pred == "first")
    order = [cur]
    while cur in succ:
        cur = succ[cur]
        order.append(cur)
    return order


# ----------------------------------------------------------------- programs

# EDB signature shared by generated programs: e/1 and r/2 over objects,
# w/2 ordinary numeric, c/2 a limit predicate whose type is drawn per program.
OBJECTS = ("a", "b")
_IDB = ("p", "q", "s")


@dataclass(frozen=True)
class RandomProgram:
    text: str
    program: Program
    dataset: tuple[Fact, ...]
    strata: int


class _Gen:
    def __init__(self, rng: random.Random, consts: int, loose: bool):
        self.rng = rng
        self.consts = consts
        self.loose = loose
        self.kinds = {p: rng.choice(("min", "max")) for p in (*_IDB, "c")}
        # p/q/s carry an object argument, t is a nullary-object limit predicate.
        self.kinds["t"] = rng.choice(("min", "max"))

    def const(self) -> int:
        return self.rng.randint(-self.consts, self.consts)

    def num(self, names: list[str]) -> str:
        """A small linear term over ``names``."""
        r = self.rng
        c = self.const()
        if not names or r.random() < 0.15:
            return str(c)
        v = r.choice(names)
        coef = r.choice((1, 1, 1, -1, 2)) if self.loose else r.choice((1, 1, 1, -1))
        term = v if coef == 1 else f"-{v}" if coef == -1 else f"{coef} * {v}"
        if self.loose and len(names) == 2 and r.random() < 0.2:
            term = f"{names[0]} * {names[1]}"
        elif len(names) == 2 and r.random() < 0.25:
            other = names[1] if v == names[0] else names[0]
            term = f"{term} + {other}"
        if c:
            term = f"{term} + {c}" if c > 0 else f"{term} - {-c}"
        return term

    def limit_atom(self, pred: str, obj: str, value: str) -> str:
        return f"{pred}({value})" if pred == "t" else f"{pred}({obj}, {value})"

    def rule(self, head: str, allowed: list[str], lower: list[str]) -> str:
        r = self.rng
        body: list[str] = []
        obj = r.choice(("X", "X", *OBJECTS))
        # One object-binding literal so that X is safe.
        body.append(r.choice((f"e({obj})", f"r({obj}, Y)", f"r(Y, {obj})")) if obj == "X" else "")
        nvars = r.randint(0, 2)
        names = [f"N{i + 1}" for i in range(nvars)]
        sources = [p for p in allowed if p != "o"] + ["c", "w"]
        for v in names:
            src = r.choice(sources)
            arg = obj if src != "t" else ""
            if src == "w":
                body.append(f"w({arg}, {v})")
            elif r.random() < 0.4 and src in lower:
                body.append(f"lub {self.limit_atom(src, arg, v)}")
            else:
                body.append(self.limit_atom(src, arg, v))
        if r.random() < 0.4 and names:
            a = self.num(names)
            op = r.choice(("<=", "<"))
            body.append(f"{a} {op} {self.const()}" if r.random() < 0.5 else f"{self.const()} {op} {a}")
        if r.random() < 0.3:
            neg = [f"not e({obj})", f"not w({obj}, {self.const()})"]
            if "o" in lower:
                neg.append(f"not o({obj})")
            if self.loose and names and lower:
                src = r.choice([p for p in lower if p != "o"] or ["c"])
                neg.append(f"not {self.limit_atom(src, obj, self.num(names))}")
            body.append(r.choice(neg))
        if "o" in allowed and r.random() < 0.25:
            body.append(f"o({obj})")
        body = [b for b in body if b]
        if head == "o":
            h = f"o({obj})"
        else:
            h = self.limit_atom(head, obj, self.num(names))
        return f"{h} :- {', '.join(body)}." if body else f"{h}."

    def program(self, max_rules: int, max_strata: int) -> str:
        r = self.rng
        nstrata = r.randint(1, max_strata)
        preds = ["p", "q", "s", "t", "o"]
        r.shuffle(preds)
        level = {p: r.randint(1, nstrata) for p in preds}
        lines = [f"{self.kinds[p]} {p}/{1 if p == 't' else 2}." for p in (*_IDB, "t", "c")]
        for _ in range(r.randint(1, max_rules)):
            head = r.choice(preds)
            allowed = [p for p in preds if level[p] <= level[head]]
            lower = [p for p in preds if level[p] < level[head]]
            lines.append(self.rule(head, allowed, lower))
        return "\n".join(lines) + "\n"

    def dataset(self, max_facts: int) -> list[Fact]:
        r = self.rng
        facts = set()
        for _ in range(r.randint(0, max_facts)):
            x, y = r.choice(OBJECTS), r.choice(OBJECTS)
            pick = r.randrange(5)
            if pick == 0:
                facts.add(Fact("e", (x,)))
            elif pick == 1:
                facts.add(Fact("r", (x, y)))
            elif pick == 2:
                facts.add(Fact("w", (x,), self.const()))
            else:
                facts.add(Fact("c", (x,), STAR if r.random() < 0.1 else self.const()))
        return sorted(facts, key=Fact.sort_key)


def random_program(
    rng: random.Random,
    *,
    type_consistent: bool = True,
    loose: bool = False,
    max_strata: int = 3,
    max_rules: int = 6,
    max_facts: int = 10,
    consts: int = 4,
    attempts: int = 10_000,
) -> RandomProgram:
    """Draw until a safe, stratified, limit-linear program is found.

    With ``type_consistent`` the program must also be type-consistent.
    ``loose`` widens the term grammar (coefficient 2, products of variables,
    negated limit literals) to exercise the classifiers.
    """
    for _ in range(attempts):
        g = _Gen(rng, consts, loose)
        text = g.program(max_rules, max_strata)
        data = g.dataset(max_facts)
        try:
            prog = parse_program(text)
        except ParseError:
            continue
        # Type-consistency is judged after semi-grounding, so the dataset's
        # constants matter: a program without object constants is vacuously
        # type-consistent on its own.
        report = classify(prog.with_facts(data))
        f = report.flags
        if not (f["safe"] and f["stratified"] and f["limit_linear"]):
            continue
        if type_consistent and not f["type_consistent"]:
            continue
        strata = len(report.stratification.strata)
        if strata > max_strata:
            continue
        return RandomProgram(text, prog, tuple(data), strata)
    raise RuntimeError(f"no suitable program in {attempts} attempts")


__all__ = [
    "EXAMPLES",
    "Graph",
    "RandomProgram",
    "closeness_centre",
    "closeness_instance",
    "dijkstra",
    "graph_of",
    "order_of",
    "shortest_path_edges",
    "closeness_program",
    "load_example",
    "random_program",
    "read_text",
    "shortest_path_instance",
    "shortest_path_program",
    "strongly_connected_digraph",
]
