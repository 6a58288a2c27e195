"""Concrete syntax for programs (``.lpl``), datasets (``.lpd``) and queries.

Grammar, informally::

    program  := (decl | rule | fact)*
    decl     := ('min' | 'max') name '/' int '.'
    rule     := atom [':-' body] '.'
    body     := item (',' item)*
    item     := atom | 'not' atom | 'lub' atom | term (op term)+
    op       := '<' | '<=' | '>' | '>=' | '='

Variables start with an uppercase letter or ``_``; objects are lowercase
identifiers or single-quoted strings; ``%`` starts a comment.  ``*`` in the
numeric position of a fact stands for every integer.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .model import (
    ALL_INTS,
    STAR,
    Atom,
    BinOp,
    BodyItem,
    Comparison,
    Fact,
    Finite,
    Int,
    Kind,
    LimitLogError,
    Literal,
    Obj,
    PredicateInfo,
    Program,
    ProgramError,
    PseudoInterpretation,
    Rule,
    Star,
    Term,
    Var,
    term_vars,
)


class ParseError(LimitLogError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col


KEYWORDS = {"not", "lub"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<int>\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\\n]|\\.)*')
  | (?P<op>:-|<=|>=|[<>=+\-*/(),.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            out.append(Token(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


# -------------------------------------------------------------------- parser


@dataclass
class _Statement:
    kind: str  # 'decl', 'rule'
    payload: object
    line: int
    col: int


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind in ("quoted",):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    # statements
    def statements(self) -> list[_Statement]:
        out = []
        while self.tok.kind != "eof":
            out.append(self.statement())
        return out

    def statement(self) -> _Statement:
        t = self.tok
        if t.kind == "name" and t.text in ("min", "max") and self.peek().kind == "name" and self.peek(2).text == "/":
            self.next()
            name = self.next().text
            self.expect("/")
            if self.tok.kind != "int":
                raise self.error("expected arity")
            arity = int(self.next().text)
            self.expect(".")
            return _Statement("decl", (Kind.MIN if t.text == "min" else Kind.MAX, name, arity), t.line, t.col)
        head = self.atom()
        body: list[tuple[str, object]] = []
        if self.at(":-"):
            self.next()
            body.append(self.body_item())
            while self.at(","):
                self.next()
                body.append(self.body_item())
        self.expect(".")
        return _Statement("rule", (head, body), t.line, t.col)

    def body_item(self) -> tuple[str, object]:
        t = self.tok
        if t.kind == "name" and t.text in KEYWORDS and self.peek().kind == "name":
            self.next()
            return (t.text, self.atom())
        if t.kind == "name":
            return ("pos", self.atom())
        terms = [self.expr()]
        ops = []
        while self.tok.kind == "op" and self.tok.text in ("<", "<=", ">", ">=", "="):
            ops.append(self.next().text)
            terms.append(self.expr())
        if not ops:
            raise self.error("expected a comparison operator", t)
        return ("cmp", (terms, ops))

    def atom(self) -> Atom:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            raise self.error(f"expected predicate name, found {t.text or 'end of input'!r}")
        self.next()
        args: list[Term] = []
        if self.at("("):
            self.next()
            args.append(self.arg())
            while self.at(","):
                self.next()
                args.append(self.arg())
            self.expect(")")
        return Atom(t.text, tuple(args))

    def arg(self) -> Term:
        t = self.tok
        if t.kind == "name":
            self.next()
            return Obj(t.text)
        if t.kind == "quoted":
            self.next()
            return Obj(_unquote(t.text))
        if self.at("*") and self.peek().text in (",", ")"):
            self.next()
            return STAR
        return self.expr()

    def expr(self) -> Term:
        left = self.product()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.next().text
            left = BinOp(op, left, self.product())
        return left

    def product(self) -> Term:
        left = self.primary()
        while self.at("*"):
            self.next()
            left = BinOp("*", left, self.primary())
        return left

    def primary(self) -> Term:
        t = self.tok
        if t.kind == "int":
            self.next()
            return Int(int(t.text))
        if self.at("-") and self.peek().kind == "int":
            self.next()
            return Int(-int(self.next().text))
        if self.at("-"):
            self.next()
            return BinOp("*", Int(-1), self.primary())
        if t.kind == "var":
            self.next()
            return Var(t.text)
        if self.at("("):
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind in ("name", "quoted"):
            raise self.error("object constant used in arithmetic")
        raise self.error(f"expected a term, found {t.text or 'end of input'!r}")


# ------------------------------------------------------------ normalisation


def _fresh(prefix: str, used: set[str]) -> str:
    i = 1
    while f"{prefix}{i}" in used:
        i += 1
    name = f"{prefix}{i}"
    used.add(name)
    return name


def _eq(a: Term, b: Term) -> list[Comparison]:
    return [Comparison("<=", a, b), Comparison("<=", b, a)]


def _cmp(op: str, a: Term, b: Term) -> list[Comparison]:
    if op == "=":
        return _eq(a, b)
    if op == ">":
        return [Comparison("<", b, a)]
    if op == ">=":
        return [Comparison("<=", b, a)]
    return [Comparison(op, a, b)]


def _check_numeric_term(t: Term, st: _Statement) -> None:
    if isinstance(t, (Obj, Star)):
        raise ParseError("object or '*' inside an arithmetic term", st.line, st.col)
    if isinstance(t, BinOp):
        _check_numeric_term(t.left, st)
        _check_numeric_term(t.right, st)


def _build_rule(st: _Statement, limit_kinds: Mapping[str, Kind]) -> Rule | Fact:
    head, raw_body = st.payload
    for a in head.args:
        if isinstance(a, BinOp):
            _check_numeric_term(a, st)
    if not raw_body and head.is_ground() and all(not isinstance(a, BinOp) for a in head.args):
        return _fact_of(head, st)
    if any(a is STAR for a in head.args):
        raise ParseError("'*' may only appear in facts", st.line, st.col)
    used = {v for v in head.variables()}
    for kind, payload in raw_body:
        if kind == "cmp":
            for t in payload[0]:
                used.update(term_vars(t))
        else:
            used.update(payload.variables())
    body: list[BodyItem] = []
    for kind, payload in raw_body:
        if kind == "cmp":
            terms, ops = payload
            for t in terms:
                _check_numeric_term(t, st)
            for a, op, b in zip(terms, ops, terms[1:]):
                body.extend(_cmp(op, a, b))
            continue
        atom: Atom = payload
        if any(a is STAR for a in atom.args):
            raise ParseError("'*' may not appear in a rule body", st.line, st.col)
        args, extra = [], []
        for a in atom.args:
            if isinstance(a, BinOp):
                _check_numeric_term(a, st)
                v = Var(_fresh("_V", used))
                args.append(v)
                extra.extend(_eq(v, a))
            else:
                args.append(a)
        atom = Atom(atom.pred, tuple(args))
        if kind == "lub":
            k = limit_kinds.get(atom.pred)
            if k is None or not k.is_limit:
                raise ParseError(f"lub applied to non-limit predicate {atom.pred}", st.line, st.col)
            if not atom.args:
                raise ParseError("lub needs a numeric argument", st.line, st.col)
            n = atom.args[-1]
            m = Var(_fresh("_L", used))
            t = 1 if k is Kind.MAX else -1
            body.append(Literal(atom, True))
            body.append(Literal(Atom(atom.pred, atom.args[:-1] + (m,)), False))
            body.extend(_eq(m, BinOp("+", n, Int(t))))
        else:
            body.append(Literal(atom, kind == "pos"))
        body.extend(extra)
    return Rule(head, tuple(body), (st.line, st.col))


def _fact_of(atom: Atom, st: _Statement | None = None) -> Fact:
    objs: list[str] = []
    value = None
    for i, a in enumerate(atom.args):
        if isinstance(a, Obj) and value is None:
            objs.append(a.name)
        elif i == len(atom.args) - 1 and isinstance(a, (Int, Star)):
            value = STAR if a is STAR else a.value
        else:
            where = (st.line, st.col) if st else (0, 0)
            raise ParseError(f"malformed fact over {atom.pred}", *where)
    return Fact(atom.pred, tuple(objs), value)


# ------------------------------------------------------------ sort inference


def build_program(
    rules: Sequence[Rule],
    facts: Iterable[Fact],
    declarations: Mapping[str, tuple[Kind, int]],
    extra_kinds: Mapping[str, Kind] | None = None,
) -> Program:
    """Infer predicate signatures, validate sorts and assemble a ``Program``."""
    decls = dict(declarations)
    for p, k in (extra_kinds or {}).items():
        decls.setdefault(p, (k, -1))
    facts = sorted(set(facts), key=Fact.sort_key)
    arity: dict[str, int] = {}
    numeric: set[str] = {p for p, (k, _) in decls.items() if k.is_limit}

    def note(pred: str, n: int, where: str) -> None:
        if arity.setdefault(pred, n) != n:
            raise ProgramError(f"{where}: predicate {pred} used with arity {n} and {arity[pred]}")

    for p, (k, n) in decls.items():
        if n >= 0:
            note(p, n, "declaration")
            if n < 1:
                raise ProgramError(f"limit predicate {p} needs a numeric argument")
    for f in facts:
        note(f.pred, len(f.objects) + (f.value is not None), f"fact {f.pred}")
        if f.value is not None:
            numeric.add(f.pred)
    rule_atoms = []
    for r in rules:
        atoms = [r.head] + [lit.atom for lit in r.literals()]
        loc = f"line {r.pos[0]}" if r.pos else "rule"
        for a in atoms:
            note(a.pred, a.arity, loc)
        rule_atoms.append(atoms)

    # fixpoint over numeric predicates and numeric variables per rule
    num_vars: list[set[str]] = []
    for r in rules:
        nv: set[str] = set()
        for c in r.comparisons():
            nv.update(c.variables())
        for a in [r.head] + [lit.atom for lit in r.literals()]:
            for x in a.args:
                if isinstance(x, BinOp):
                    nv.update(term_vars(x))
        num_vars.append(nv)
    changed = True
    while changed:
        changed = False
        for atoms, nv in zip(rule_atoms, num_vars):
            for a in atoms:
                if not a.args:
                    continue
                last = a.args[-1]
                is_num = isinstance(last, (Int, BinOp)) or (isinstance(last, Var) and last.name in nv)
                if is_num and a.pred not in numeric:
                    numeric.add(a.pred)
                    changed = True
                if a.pred in numeric and isinstance(last, Var) and last.name not in nv:
                    nv.add(last.name)
                    changed = True

    for r, atoms, nv in zip(rules, rule_atoms, num_vars):
        loc = f"line {r.pos[0]}" if r.pos else "rule"
        for a in atoms:
            n_num = 1 if a.pred in numeric else 0
            for i, x in enumerate(a.args):
                numeric_slot = n_num and i == len(a.args) - 1
                if numeric_slot and isinstance(x, Obj):
                    raise ProgramError(f"{loc}: object in numeric position of {a.pred}")
                if not numeric_slot and (isinstance(x, (Int, BinOp)) or (isinstance(x, Var) and x.name in nv)):
                    raise ProgramError(f"{loc}: numeric term in object position of {a.pred}")
    for f in facts:
        if f.pred in numeric and f.value is None:
            raise ProgramError(f"fact {f.pred} lacks its numeric argument")

    idb = {r.head.pred for r in rules}
    preds: dict[str, PredicateInfo] = {}
    for p, n in arity.items():
        if p in decls:
            kind = decls[p][0]
        elif p in numeric:
            kind = Kind.ORDINARY
        else:
            kind = Kind.OBJECT
        if kind is Kind.ORDINARY and p in idb:
            raise ProgramError(f"numeric IDB predicate {p} needs a 'min' or 'max' declaration")
        preds[p] = PredicateInfo(p, n, kind, p not in idb)
    for p, (k, n) in decls.items():
        if p not in preds and n >= 0:
            preds[p] = PredicateInfo(p, n, k, True)
    for f in facts:
        if f.value is STAR and not preds[f.pred].is_limit:
            raise ProgramError(f"'*' used on non-limit predicate {f.pred}")
    return Program(tuple(rules), tuple(facts), preds, {p: d for p, d in declarations.items()})


# --------------------------------------------------------------- public API


def _split(text: str) -> tuple[dict[str, tuple[Kind, int]], list[_Statement]]:
    decls: dict[str, tuple[Kind, int]] = {}
    rest = []
    for st in _Parser(text).statements():
        if st.kind == "decl":
            kind, name, n = st.payload
            if name in decls and decls[name] != (kind, n):
                raise ParseError(f"conflicting declarations for {name}", st.line, st.col)
            decls[name] = (kind, n)
        else:
            rest.append(st)
    return decls, rest


def parse_program(
    text: str,
    dataset: Iterable[Fact] = (),
    declarations: Mapping[str, tuple[Kind, int]] | None = None,
    check_safety: bool = True,
) -> Program:
    decls, stmts = _split(text)
    for p, d in (declarations or {}).items():
        decls.setdefault(p, d)
    kinds = {p: k for p, (k, _) in decls.items()}
    rules, facts = [], list(dataset)
    for st in stmts:
        item = _build_rule(st, kinds)
        (facts if isinstance(item, Fact) else rules).append(item)
    prog = build_program(rules, facts, decls)
    if check_safety:
        from .analysis import check_safety as _safety

        ok, diags = _safety(prog)
        if not ok:
            raise ProgramError("; ".join(diags))
    return prog


def parse_dataset(
    text: str, declarations: Mapping[str, tuple[Kind, int]] | None = None
) -> list[Fact]:
    """Facts of a dataset file; declarations in the file are honoured for ``*``."""
    decls, stmts = _split(text)
    for p, d in (declarations or {}).items():
        decls.setdefault(p, d)
    facts = []
    for st in stmts:
        head, body = st.payload
        if body or not head.is_ground():
            raise ParseError("rules are not allowed in a dataset", st.line, st.col)
        f = _fact_of(head, st)
        if f.value is STAR and (f.pred not in decls or not decls[f.pred][0].is_limit):
            raise ParseError(f"'*' used on non-limit predicate {f.pred}", st.line, st.col)
        facts.append(f)
    return facts


def parse_declarations(text: str) -> dict[str, tuple[Kind, int]]:
    return _split(text)[0]


def parse_fact(text: str) -> Fact:
    text = text.strip()
    if not text.endswith("."):
        text += "."
    p = _Parser(text)
    st = p.statement()
    if p.tok.kind != "eof":
        raise p.error("trailing input after fact")
    head, body = st.payload
    if body:
        raise ParseError("expected a fact", st.line, st.col)
    return _fact_of(head, st)


parse_query = parse_fact


def check_ordered(facts: Iterable[Fact]) -> tuple[bool, str]:
    """Whether ``first``/``next``/``last`` enumerate all objects without repetition."""
    facts = list(facts)
    objects = {o for f in facts for o in f.objects}
    first = [f for f in facts if f.pred == "first"]
    last = [f for f in facts if f.pred == "last"]
    nxt = [f for f in facts if f.pred == "next"]
    for f in first + last + nxt:
        want = 2 if f.pred == "next" else 1
        if len(f.objects) != want or f.value is not None:
            return False, f"malformed order fact {f.pred}{f.objects}"
    if not objects:
        return (not first and not last and not nxt), "empty dataset"
    if len(first) != 1 or len(last) != 1:
        return False, f"expected exactly one first and one last fact, found {len(first)} and {len(last)}"
    succ: dict[str, str] = {}
    for f in nxt:
        a, b = f.objects
        if a in succ:
            return False, f"object {a} has two successors"
        succ[a] = b
    seq = [first[0].objects[0]]
    seen = {seq[0]}
    while seq[-1] in succ:
        b = succ[seq[-1]]
        if b in seen:
            return False, f"repetition: {b} enumerated twice"
        seq.append(b)
        seen.add(b)
    if len(succ) != len(seq) - 1:
        return False, "next facts do not form a single chain from first"
    if seq[-1] != last[0].objects[0]:
        return False, f"enumeration ends at {seq[-1]} but last is {last[0].objects[0]}"
    missing = sorted(objects - seen)
    if missing:
        return False, f"objects not enumerated: {', '.join(missing)}"
    return True, "ordered"


# ------------------------------------------------------------------ printing

_PLAIN = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_PREC = {"+": 1, "-": 1, "*": 2}


def format_object(name: str) -> str:
    if _PLAIN.match(name) and name not in KEYWORDS | {"min", "max"}:
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_term(t: Term) -> str:
    if isinstance(t, Obj):
        return format_object(t.name)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Int):
        return str(t.value)
    if t is STAR:
        return "*"
    if isinstance(t, BinOp):
        p = _PREC[t.op]
        left = format_term(t.left)
        if isinstance(t.left, BinOp) and _PREC[t.left.op] < p:
            left = f"({left})"
        right = format_term(t.right)
        if isinstance(t.right, BinOp) and _PREC[t.right.op] <= p:
            right = f"({right})"
        if isinstance(t.right, Int) and t.right.value < 0 and t.op != "*":
            right = f"({right})"
        return f"{left} {t.op} {right}"
    raise TypeError(f"cannot format {t!r}")


def format_atom(a: Atom) -> str:
    if not a.args:
        return a.pred
    return f"{a.pred}({','.join(format_term(x) for x in a.args)})"


def format_item(b: BodyItem) -> str:
    if isinstance(b, Literal):
        return format_atom(b.atom) if b.positive else f"not {format_atom(b.atom)}"
    return f"{format_term(b.left)} {b.op} {format_term(b.right)}"


def format_rule(r: Rule) -> str:
    if not r.body:
        return f"{format_atom(r.head)}."
    return f"{format_atom(r.head)} :- {', '.join(format_item(b) for b in r.body)}."


def format_fact(f: Fact) -> str:
    return f"{format_atom(f.atom())}."


def print_program(prog: Program) -> str:
    lines = [f"{k.value} {p}/{n}." for p, (k, n) in sorted(prog.declarations.items())]
    lines += [format_rule(r) for r in prog.rules]
    lines += [format_fact(f) for f in sorted(prog.facts, key=Fact.sort_key)]
    return "".join(line + "\n" for line in lines)


def print_facts(facts: Iterable[Fact]) -> str:
    return "".join(format_fact(f) + "\n" for f in sorted(facts, key=Fact.sort_key))


def print_pseudo(J: PseudoInterpretation) -> str:
    lines = []
    for f in J.facts():
        line = format_fact(f)
        kind = J.kinds.get(f.pred)
        if kind is not None and kind.is_limit and isinstance(J.limit(f.pred, f.objects), Finite):
            line += " % lub"
        lines.append(line)
    return "".join(line + "\n" for line in lines)


__all__ = [
    "ALL_INTS",
    "ParseError",
    "build_program",
    "check_ordered",
    "format_atom",
    "format_fact",
    "format_rule",
    "format_term",
    "parse_dataset",
    "parse_declarations",
    "parse_fact",
    "parse_program",
    "parse_query",
    "print_facts",
    "print_program",
    "print_pseudo",
    "tokenize",
]
