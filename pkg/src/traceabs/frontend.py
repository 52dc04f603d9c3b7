"""Parser for the input language and lowering to program automata.

Grammar::

    program := decl* stmt*
    decl    := "var" ident ("," ident)* ";"
    stmt    := ident ":=" linexpr ";" | "havoc" ident ";" | "assume" "(" bexpr ")" ";"
             | "assert" "(" bexpr ")" ";" | "if" "(" bexpr ")" block ("else" block)?
             | "while" "(" bexpr ")" block
    block   := "{" stmt* "}"

Comments run from ``//`` to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .program import Edge, ProgramAutomaton
from .syntax import (
    And,
    Assign,
    Assume,
    BConst,
    BoolExpr,
    Cmp,
    Havoc,
    LinExpr,
    Not,
    Or,
    Statement,
    conj,
    disj,
    negate,
    seq,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


# -- AST --------------------------------------------------------------------


@dataclass(frozen=True)
class AssignStmt:
    target: str
    expr: LinExpr


@dataclass(frozen=True)
class HavocStmt:
    target: str


@dataclass(frozen=True)
class AssumeStmt:
    cond: BoolExpr


@dataclass(frozen=True)
class AssertStmt:
    cond: BoolExpr


@dataclass(frozen=True)
class IfStmt:
    cond: BoolExpr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class WhileStmt:
    cond: BoolExpr
    body: tuple["Stmt", ...]


Stmt = Union[AssignStmt, HavocStmt, AssumeStmt, AssertStmt, IfStmt, WhileStmt]


@dataclass(frozen=True)
class Program:
    variables: tuple[str, ...]
    body: tuple[Stmt, ...]


# -- lexer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>:=|<=|>=|==|!=|&&|\|\||[-+*<>!(){};,])
    """,
    re.VERBOSE,
)
KEYWORDS = {"var", "havoc", "assume", "assert", "if", "else", "while", "true", "false"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, source: str, declared: Optional[set[str]] = None):
        self.toks = tokenize(source)
        self.i = 0
        self.declared: Optional[set[str]] = declared

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def eat(self, text: str) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def use(self, t: Token) -> str:
        if self.declared is not None and t.text not in self.declared:
            raise self.error(f"use of undeclared variable {t.text!r}", t)
        return t.text

    # program structure

    def program(self) -> Program:
        names: list[str] = []
        self.declared = set()
        while self.at("var"):
            self.eat("var")
            while True:
                t = self.ident()
                if t.text in self.declared:
                    raise self.error(f"variable {t.text!r} declared twice", t)
                self.declared.add(t.text)
                names.append(t.text)
                if not self.at(","):
                    break
                self.eat(",")
            self.eat(";")
        body = []
        while self.tok.kind != "eof":
            body.append(self.stmt())
        return Program(tuple(names), tuple(body))

    def block(self) -> tuple[Stmt, ...]:
        self.eat("{")
        out = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            out.append(self.stmt())
        self.eat("}")
        return tuple(out)

    def stmt(self) -> Stmt:
        t = self.tok
        if t.kind == "ident":
            target = self.use(self.ident())
            self.eat(":=")
            e = self.linexpr()
            self.eat(";")
            return AssignStmt(target, e)
        if self.at("havoc"):
            self.eat("havoc")
            target = self.use(self.ident())
            self.eat(";")
            return HavocStmt(target)
        if self.at("assume") or self.at("assert"):
            kw = self.eat(t.text).text
            self.eat("(")
            b = self.bexpr()
            self.eat(")")
            self.eat(";")
            return AssumeStmt(b) if kw == "assume" else AssertStmt(b)
        if self.at("if"):
            self.eat("if")
            self.eat("(")
            b = self.bexpr()
            self.eat(")")
            then = self.block()
            orelse: tuple[Stmt, ...] = ()
            if self.at("else"):
                self.eat("else")
                orelse = self.block()
            return IfStmt(b, then, orelse)
        if self.at("while"):
            self.eat("while")
            self.eat("(")
            b = self.bexpr()
            self.eat(")")
            return WhileStmt(b, self.block())
        raise self.error(f"unexpected {t.text or 'end of input'!r}")

    # expressions

    def linexpr(self) -> LinExpr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.eat(self.tok.text).text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> LinExpr:
        start = self.tok
        e = self.factor()
        while self.at("*"):
            self.eat("*")
            rhs = self.factor()
            if e.is_constant():
                e = rhs.scale(e.const)
            elif rhs.is_constant():
                e = e.scale(rhs.const)
            else:
                raise self.error("non-linear expression: product of two variables", start)
        return e

    def factor(self) -> LinExpr:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return LinExpr.constant(int(t.text))
        if t.kind == "ident":
            return LinExpr.var(self.use(self.ident()))
        if self.at("-"):
            self.eat("-")
            return -self.factor()
        if self.at("("):
            self.eat("(")
            e = self.linexpr()
            self.eat(")")
            return e
        raise self.error(f"expected expression, found {t.text or 'end of input'!r}")

    def bexpr(self) -> BoolExpr:
        parts = [self.band()]
        while self.at("||"):
            self.eat("||")
            parts.append(self.band())
        return disj(*parts) if len(parts) > 1 else parts[0]

    def band(self) -> BoolExpr:
        parts = [self.bunary()]
        while self.at("&&"):
            self.eat("&&")
            parts.append(self.bunary())
        return conj(*parts) if len(parts) > 1 else parts[0]

    def bunary(self) -> BoolExpr:
        if self.at("!"):
            self.eat("!")
            return Not(self.bunary())
        if self.at("true"):
            self.eat("true")
            return BConst(True)
        if self.at("false"):
            self.eat("false")
            return BConst(False)
        if self.at("("):
            # either a parenthesized guard or a comparison whose lhs is parenthesized
            save = self.i
            try:
                return self.comparison()
            except ParseError:
                self.i = save
            self.eat("(")
            b = self.bexpr()
            self.eat(")")
            return b
        return self.comparison()

    def comparison(self) -> BoolExpr:
        lhs = self.linexpr()
        t = self.tok
        if t.kind != "op" or t.text not in ("<", "<=", ">", ">=", "==", "!="):
            raise self.error(f"expected comparison operator, found {t.text or 'end of input'!r}")
        self.i += 1
        return Cmp(t.text, lhs, self.linexpr())


def parse_program(source: str) -> Program:
    """Parse a whole program; raises ParseError with line/column on failure."""
    p = _Parser(source)
    return p.program()


def parse_statement(text: str) -> Statement:
    """Parse a serialized statement such as ``x := 0; y := 42`` or ``assume(x < 100)``."""
    p = _Parser(text)
    parts: list[Statement] = []
    while p.tok.kind != "eof":
        if p.at("assume"):
            p.eat("assume")
            p.eat("(")
            parts.append(Assume(p.bexpr()))
            p.eat(")")
        elif p.at("havoc"):
            p.eat("havoc")
            parts.append(Havoc(p.ident().text))
        else:
            target = p.ident().text
            p.eat(":=")
            parts.append(Assign(target, p.linexpr()))
        if p.at(";"):
            p.eat(";")
        elif p.tok.kind != "eof":
            raise p.error("expected ';'")
    return seq(parts)


def parse_bexpr(text: str) -> BoolExpr:
    p = _Parser(text)
    b = p.bexpr()
    if p.tok.kind != "eof":
        raise p.error("trailing input")
    return b


_EXPECT = re.compile(r"//\s*@expect\s+(safe|unsafe)\b", re.IGNORECASE)


def expected_verdict(source: str) -> Optional[str]:
    """The ``// @expect safe|unsafe`` header, upper-cased, or None."""
    m = _EXPECT.search(source)
    return m.group(1).upper() if m else None


# -- lowering ---------------------------------------------------------------

_TRUE = Assume(BConst(True))


class _Lowering:
    def __init__(self) -> None:
        self.edges: list[tuple[int, Statement, int]] = []
        self.errors: set[int] = set()
        self.count = 0

    def fresh(self) -> int:
        self.count += 1
        return self.count - 1

    def emit(self, src: int, stmt: Statement, dst: int) -> None:
        self.edges.append((src, stmt, dst))

    def block(self, stmts: tuple[Stmt, ...], entry: int, exit: int) -> None:
        # group maximal runs of assignments (and havocs) into single fused letters
        groups: list[Union[list[Statement], Stmt]] = []
        for s in stmts:
            if isinstance(s, (AssignStmt, HavocStmt)):
                letter = Assign(s.target, s.expr) if isinstance(s, AssignStmt) else Havoc(s.target)
                if groups and isinstance(groups[-1], list):
                    groups[-1].append(letter)
                else:
                    groups.append([letter])
            else:
                groups.append(s)
        if not groups:
            self.emit(entry, _TRUE, exit)
            return
        cur = entry
        for i, g in enumerate(groups):
            nxt = exit if i == len(groups) - 1 else self.fresh()
            if isinstance(g, list):
                self.emit(cur, seq(g), nxt)
            else:
                self.stmt(g, cur, nxt)
            cur = nxt

    def stmt(self, s: Stmt, entry: int, exit: int) -> None:
        if isinstance(s, AssumeStmt):
            self.emit(entry, Assume(s.cond), exit)
        elif isinstance(s, AssertStmt):
            err = self.fresh()
            self.errors.add(err)
            self.emit(entry, Assume(negate(s.cond)), err)
            self.emit(entry, Assume(s.cond), exit)
        elif isinstance(s, IfStmt):
            then_entry, else_entry = self.fresh(), self.fresh()
            self.emit(entry, Assume(s.cond), then_entry)
            self.emit(entry, Assume(negate(s.cond)), else_entry)
            self.block(s.then, then_entry, exit)
            self.block(s.orelse, else_entry, exit)
        elif isinstance(s, WhileStmt):
            body = self.fresh()
            self.emit(entry, Assume(s.cond), body)
            self.emit(entry, Assume(negate(s.cond)), exit)
            self.block(s.body, body, entry)
        else:  # pragma: no cover - grouped by block()
            raise TypeError(s)


def lower(ast: Program, *, prune: bool = True) -> ProgramAutomaton:
    """Lower an AST to a program automaton.

    Empty blocks produce ``assume(true)`` edges which are then contracted.  With
    ``prune`` (the default), locations that cannot reach an error location are
    dropped; they carry no error traces.
    """
    low = _Lowering()
    entry, exit = low.fresh(), low.fresh()
    low.block(ast.body, entry, exit)
    edges, initial = _contract(low.edges, entry, low.errors)
    if prune:
        edges = _prune(edges, initial, low.errors)
    return _renumber(edges, initial, low.errors, ast.variables)


def _contract(
    edges: list[tuple[int, Statement, int]], initial: int, errors: set[int]
) -> tuple[list[tuple[int, Statement, int]], int]:
    """Merge u into v for every ``u -[assume(true)]-> v`` that is u's only exit."""
    edges = list(edges)
    changed = True
    while changed:
        changed = False
        outs: dict[int, list[tuple[int, Statement, int]]] = {}
        for e in edges:
            outs.setdefault(e[0], []).append(e)
        for u, es in sorted(outs.items()):
            if len(es) != 1:
                continue
            _, stmt, v = es[0]
            if stmt != _TRUE or u == v or u in errors or v in errors:
                continue
            edges = [(v if a == u else a, s, v if b == u else b) for a, s, b in edges if (a, s, b) != es[0]]
            if initial == u:
                initial = v
            changed = True
            break
    return edges, initial


def _prune(edges: list[tuple[int, Statement, int]], initial: int, errors: set[int]) -> list[tuple[int, Statement, int]]:
    live = set(errors)
    grew = True
    while grew:
        grew = False
        for a, _, b in edges:
            if b in live and a not in live:
                live.add(a)
                grew = True
    reach = {initial}
    grew = True
    while grew:
        grew = False
        for a, _, b in edges:
            if a in reach and b not in reach:
                reach.add(b)
                grew = True
    keep = live & reach
    return [e for e in edges if e[0] in keep and e[2] in keep]


def _renumber(
    edges: list[tuple[int, Statement, int]], initial: int, errors: set[int], variables: tuple[str, ...]
) -> ProgramAutomaton:
    """Dense numbering in breadth-first order from the initial location."""
    outs: dict[int, list[tuple[int, Statement, int]]] = {}
    for e in edges:
        outs.setdefault(e[0], []).append(e)
    order = [initial]
    seen = {initial}
    k = 0
    while k < len(order):
        for _, s, b in sorted(outs.get(order[k], []), key=lambda e: (str(e[1]), e[2])):
            if b not in seen:
                seen.add(b)
                order.append(b)
        k += 1
    ids = {q: i for i, q in enumerate(order)}
    new_edges = [Edge(ids[a], s, ids[b]) for a, s, b in edges if a in ids and b in ids]
    new_errors = {ids[q] for q in errors if q in ids}
    return ProgramAutomaton.build(new_edges, 0, new_errors, variables)


def compile_program(source: str, *, prune: bool = True) -> ProgramAutomaton:
    return lower(parse_program(source), prune=prune)
