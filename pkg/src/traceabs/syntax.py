"""Program alphabet: linear expressions, boolean guards and statements.

Every value here is immutable and kept in canonical form, so structural
equality coincides with equality of the printed form.  Statements are the
letters of every automaton in the package; their printed form doubles as the
identity and ordering key.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union


@dataclass(frozen=True)
class LinExpr:
    """sum(coef * var) + const with no zero coefficients, terms sorted by name."""

    terms: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def of(coeffs: Mapping[str, int] | Iterable[tuple[str, int]], const: int = 0) -> LinExpr:
        acc: dict[str, int] = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for v, c in items:
            acc[v] = acc.get(v, 0) + c
        return LinExpr(tuple(sorted((v, c) for v, c in acc.items() if c != 0)), const)

    @staticmethod
    def var(name: str) -> LinExpr:
        return LinExpr(((name, 1),), 0)

    @staticmethod
    def constant(value: int) -> LinExpr:
        return LinExpr((), value)

    @property
    def coeffs(self) -> dict[str, int]:
        return dict(self.terms)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.terms)

    def coeff(self, name: str) -> int:
        for v, c in self.terms:
            if v == name:
                return c
        return 0

    def is_constant(self) -> bool:
        return not self.terms

    def __add__(self, other: LinExpr) -> LinExpr:
        return LinExpr.of(list(self.terms) + list(other.terms), self.const + other.const)

    def __neg__(self) -> LinExpr:
        return LinExpr(tuple((v, -c) for v, c in self.terms), -self.const)

    def __sub__(self, other: LinExpr) -> LinExpr:
        return self + (-other)

    def scale(self, k: int) -> LinExpr:
        if k == 0:
            return LinExpr()
        return LinExpr(tuple((v, c * k) for v, c in self.terms), self.const * k)

    def substitute(self, name: str, expr: LinExpr) -> LinExpr:
        c = self.coeff(name)
        if c == 0:
            return self
        rest = LinExpr(tuple(t for t in self.terms if t[0] != name), self.const)
        return rest + expr.scale(c)

    def rename(self, mapping: Mapping[str, str]) -> LinExpr:
        return LinExpr.of([(mapping.get(v, v), c) for v, c in self.terms], self.const)

    def evaluate(self, state: Mapping[str, int]) -> int:
        return sum(c * state[v] for v, c in self.terms) + self.const

    def __str__(self) -> str:
        parts: list[str] = []
        for v, c in self.terms:
            mag = abs(c)
            body = v if mag == 1 else f"{mag}*{v}"
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if c > 0 else f"- {body}")
        if self.const or not parts:
            if not parts:
                parts.append(str(self.const))
            else:
                parts.append(f"+ {self.const}" if self.const > 0 else f"- {-self.const}")
        return " ".join(parts)


# -- boolean expressions ----------------------------------------------------

COMPARISONS = ("<", "<=", ">", ">=", "==", "!=")
_NEGATED = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


@dataclass(frozen=True)
class BConst:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Cmp:
    op: str
    lhs: LinExpr
    rhs: LinExpr

    def __post_init__(self) -> None:
        if self.op not in COMPARISONS:
            raise ValueError(f"unknown comparison {self.op!r}")

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


@dataclass(frozen=True)
class And:
    args: tuple[BoolExpr, ...]

    def __str__(self) -> str:
        return " && ".join(_wrap(a, And) for a in self.args)


@dataclass(frozen=True)
class Or:
    args: tuple[BoolExpr, ...]

    def __str__(self) -> str:
        return " || ".join(_wrap(a, Or) for a in self.args)


@dataclass(frozen=True)
class Not:
    arg: BoolExpr

    def __str__(self) -> str:
        if isinstance(self.arg, (BConst, Not)):
            return f"!{self.arg}"
        return f"!({self.arg})"


BoolExpr = Union[BConst, Cmp, And, Or, Not]


def _wrap(e: BoolExpr, parent: type) -> str:
    if isinstance(e, (And, Or)) and not isinstance(e, parent):
        return f"({e})"
    return str(e)


def conj(*args: BoolExpr) -> BoolExpr:
    flat: list[BoolExpr] = []
    for a in args:
        flat.extend(a.args if isinstance(a, And) else (a,))
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*args: BoolExpr) -> BoolExpr:
    flat: list[BoolExpr] = []
    for a in args:
        flat.extend(a.args if isinstance(a, Or) else (a,))
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def negate(e: BoolExpr) -> BoolExpr:
    """Syntactic negation pushed to the atoms (De Morgan, flipped comparisons)."""
    if isinstance(e, BConst):
        return BConst(not e.value)
    if isinstance(e, Cmp):
        return Cmp(_NEGATED[e.op], e.lhs, e.rhs)
    if isinstance(e, And):
        return disj(*(negate(a) for a in e.args))
    if isinstance(e, Or):
        return conj(*(negate(a) for a in e.args))
    return e.arg


def bool_vars(e: BoolExpr) -> frozenset[str]:
    if isinstance(e, BConst):
        return frozenset()
    if isinstance(e, Cmp):
        return e.lhs.variables | e.rhs.variables
    if isinstance(e, Not):
        return bool_vars(e.arg)
    out: frozenset[str] = frozenset()
    for a in e.args:
        out |= bool_vars(a)
    return out


def eval_bool(e: BoolExpr, state: Mapping[str, int]) -> bool:
    if isinstance(e, BConst):
        return e.value
    if isinstance(e, Cmp):
        lhs, rhs = e.lhs.evaluate(state), e.rhs.evaluate(state)
        return {
            "<": lhs < rhs,
            "<=": lhs <= rhs,
            ">": lhs > rhs,
            ">=": lhs >= rhs,
            "==": lhs == rhs,
            "!=": lhs != rhs,
        }[e.op]
    if isinstance(e, And):
        return all(eval_bool(a, state) for a in e.args)
    if isinstance(e, Or):
        return any(eval_bool(a, state) for a in e.args)
    return not eval_bool(e.arg, state)


# -- statements -------------------------------------------------------------


class _Ordered:
    """Statements compare, hash and order by their canonical serialization (cached)."""

    def __str__(self) -> str:
        text = self.__dict__.get("_text")
        if text is None:
            text = self._render()
            object.__setattr__(self, "_text", text)
        return text

    def _render(self) -> str:
        raise NotImplementedError

    def _same(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, _Ordered):
            return NotImplemented
        return str(self) == str(other)

    def _hash(self) -> int:
        return hash(str(self))

    def __lt__(self, other: Statement) -> bool:
        return str(self) < str(other)

    def __le__(self, other: Statement) -> bool:
        return str(self) <= str(other)

    def __gt__(self, other: Statement) -> bool:
        return str(self) > str(other)

    def __ge__(self, other: Statement) -> bool:
        return str(self) >= str(other)


@dataclass(frozen=True, eq=True)
class Assume(_Ordered):
    cond: BoolExpr

    def _render(self) -> str:
        return f"assume({self.cond})"


@dataclass(frozen=True, eq=True)
class Assign(_Ordered):
    target: str
    expr: LinExpr

    def _render(self) -> str:
        return f"{self.target} := {self.expr}"


@dataclass(frozen=True, eq=True)
class Havoc(_Ordered):
    target: str

    def _render(self) -> str:
        return f"havoc {self.target}"


@dataclass(frozen=True, eq=True)
class Seq(_Ordered):
    first: Statement
    second: Statement

    def _render(self) -> str:
        return f"{self.first}; {self.second}"


Statement = Union[Assume, Assign, Havoc, Seq]

# the generated field-wise methods would walk whole expression trees
for _cls in (Assume, Assign, Havoc, Seq):
    _cls.__eq__ = _Ordered._same  # type: ignore[method-assign]
    _cls.__hash__ = _Ordered._hash  # type: ignore[method-assign]


def flatten(s: Statement) -> list[Statement]:
    if isinstance(s, Seq):
        return flatten(s.first) + flatten(s.second)
    return [s]


def seq(parts: Iterable[Statement]) -> Statement:
    """Right-associated composition; the canonical shape of every Seq."""
    flat: list[Statement] = []
    for p in parts:
        flat.extend(flatten(p))
    if not flat:
        raise ValueError("empty statement sequence")
    out = flat[-1]
    for p in reversed(flat[:-1]):
        out = Seq(p, out)
    return out


def canonical(s: Statement) -> Statement:
    return seq(flatten(s))


def statement_vars(s: Statement) -> frozenset[str]:
    if isinstance(s, Assume):
        return bool_vars(s.cond)
    if isinstance(s, Assign):
        return s.expr.variables | {s.target}
    if isinstance(s, Havoc):
        return frozenset({s.target})
    return statement_vars(s.first) | statement_vars(s.second)


def has_havoc(s: Statement) -> bool:
    return any(isinstance(p, Havoc) for p in flatten(s))
