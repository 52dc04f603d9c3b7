from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Any, Iterable, Mapping, Optional, Sequence

from ..linsolve import Atom, Predicate, guard_cubes
from ..syntax import Assign, Assume, Havoc, LinExpr, Seq, Statement

INF = math.inf


def floor_div(n: int, d: int) -> int:
    return n // d


def ceil_div(n: int, d: int) -> int:
    return -((-n) // d)


def split_eq(atom: Atom) -> list[tuple[tuple[tuple[str, int], ...], int]]:
    """An le/eq atom as a list of (terms, bound) upper-bound constraints."""
    if atom.kind == "le":
        return [(atom.terms, atom.bound)]
    if atom.kind == "eq":
        return [(atom.terms, atom.bound), (tuple((v, -c) for v, c in atom.terms), -atom.bound)]
    return []


class Domain(ABC):
    """An abstract domain over a fixed, ordered variable set.

    Values are immutable and hashable; every operation returns a new value.
    """

    name: str = ""

    def __init__(self, variables: Sequence[str]):
        self.variables = tuple(variables)
        self.index = {v: i for i, v in enumerate(self.variables)}
        self._post_cache: dict[tuple[Any, Statement], Any] = {}

    # lattice ---------------------------------------------------------------

    @abstractmethod
    def top(self) -> Any: ...

    @abstractmethod
    def bottom(self) -> Any: ...

    @abstractmethod
    def is_bottom(self, a: Any) -> bool: ...

    @abstractmethod
    def leq(self, a: Any, b: Any) -> bool: ...

    @abstractmethod
    def join(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def widen(self, a: Any, b: Any) -> Any: ...

    def equal(self, a: Any, b: Any) -> bool:
        return self.leq(a, b) and self.leq(b, a)

    def join_all(self, values: Iterable[Any]) -> Any:
        out = self.bottom()
        for v in values:
            out = self.join(out, v)
        return out

    # transfer --------------------------------------------------------------

    @abstractmethod
    def guard(self, a: Any, atoms: Sequence[Atom]) -> Any:
        """Restrict ``a`` to the conjunction ``atoms`` (sound over-approximation)."""

    @abstractmethod
    def assign(self, a: Any, x: str, expr: LinExpr) -> Any: ...

    @abstractmethod
    def forget(self, a: Any, x: str) -> Any: ...

    def post(self, a: Any, s: Statement) -> Any:
        key = (a, s)
        hit = self._post_cache.get(key)
        if hit is not None:
            return hit
        out = self._post(a, s)
        if len(self._post_cache) > 200_000:
            self._post_cache.clear()
        self._post_cache[key] = out
        return out

    def _post(self, a: Any, s: Statement) -> Any:
        if self.is_bottom(a):
            return a
        if isinstance(s, Assume):
            cubes = guard_cubes(s.cond)
            return self.join_all(self.guard(a, c) for c in cubes)
        if isinstance(s, Assign):
            return self.assign(a, s.target, s.expr)
        if isinstance(s, Havoc):
            return self.forget(a, s.target)
        assert isinstance(s, Seq)
        return self.post(self.post(a, s.first), s.second)

    # predicates ------------------------------------------------------------

    @abstractmethod
    def to_predicate(self, a: Any) -> Predicate: ...

    @abstractmethod
    def representable(self, atom: Atom) -> bool:
        """Whether ``atom`` is captured exactly by this domain."""

    def from_predicate(self, p: Predicate) -> Optional[Any]:
        """The abstract value denoting exactly ``p``, or None if ``p`` is not representable."""
        if p.is_false:
            return self.bottom()
        if p.is_true:
            return self.top()
        if not p.is_conjunctive:
            return None
        (cube,) = p.cubes
        if not all(self.representable(a) for a in cube):
            return None
        return self.guard(self.top(), sorted(cube))

    def contains(self, a: Any, state: Mapping[str, int]) -> bool:
        return self.to_predicate(a).holds(state)

    def show(self, a: Any) -> str:
        return str(self.to_predicate(a))

    def linear_bounds(self, a: Any, expr: LinExpr) -> tuple[float, float]:
        """Interval of ``expr`` under ``a`` from per-variable bounds."""
        lo: float = expr.const
        hi: float = expr.const
        for v, c in expr.terms:
            vlo, vhi = self.var_bounds(a, v)
            if c > 0:
                lo, hi = lo + c * vlo, hi + c * vhi
            else:
                lo, hi = lo + c * vhi, hi + c * vlo
        return lo, hi

    def var_bounds(self, a: Any, v: str) -> tuple[float, float]:
        return (-INF, INF)
