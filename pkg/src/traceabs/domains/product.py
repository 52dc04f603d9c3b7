"""Reduced product of congruences and octagons."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..linsolve import Atom, Predicate, make_atom
from ..syntax import LinExpr
from .base import INF, Domain
from .congruence import CongruenceDomain, CongState
from .octagon import OctagonDomain, OctState


@dataclass(frozen=True)
class CompState:
    cong: CongState
    oct: OctState


class CongruenceOctagonDomain(Domain):
    name = "comp"

    def __init__(self, variables: Sequence[str]):
        super().__init__(variables)
        self.c = CongruenceDomain(variables)
        self.o = OctagonDomain(variables)

    def _bot(self) -> CompState:
        return CompState(self.c.bottom(), self.o.bottom())

    def reduce(self, cong: CongState, octs: OctState) -> CompState:
        """Exchange constants and tighten octagon bounds to the residue class."""
        if cong.vals is None or octs.m is None:
            return self._bot()
        c, o = cong, octs
        atoms = []
        for v in self.variables:
            m, r = self.c.value(c, v)
            lo, hi = self.o.var_bounds(o, v)
            if m == 0:
                if r < lo or r > hi:
                    return self._bot()
                if lo != hi:
                    atoms.append(make_atom("eq", {v: 1}, r))
                continue
            if lo == hi:
                c = self.c.meet_var(c, v, (0, int(lo)))
                if c.vals is None:
                    return self._bot()
                continue
            if m > 1:
                nlo = lo if lo == -INF else lo + (r - lo) % m
                nhi = hi if hi == INF else hi - (hi - r) % m
                if nlo > nhi:
                    return self._bot()
                if nlo == nhi:
                    c = self.c.meet_var(c, v, (0, int(nlo)))
                    if c.vals is None:
                        return self._bot()
                if nlo != lo:
                    atoms.append(make_atom("le", {v: -1}, -int(nlo)))
                if nhi != hi:
                    atoms.append(make_atom("le", {v: 1}, int(nhi)))
        if atoms:
            o = self.o.guard(o, atoms)
            if o.m is None:
                return self._bot()
        return CompState(c, o)

    def top(self) -> CompState:
        return CompState(self.c.top(), self.o.top())

    def bottom(self) -> CompState:
        return self._bot()

    def is_bottom(self, a: CompState) -> bool:
        return self.c.is_bottom(a.cong) or self.o.is_bottom(a.oct)

    def leq(self, a: CompState, b: CompState) -> bool:
        if self.is_bottom(a):
            return True
        if self.is_bottom(b):
            return False
        return self.c.leq(a.cong, b.cong) and self.o.leq(a.oct, b.oct)

    def join(self, a: CompState, b: CompState) -> CompState:
        if self.is_bottom(a):
            return b
        if self.is_bottom(b):
            return a
        return self.reduce(self.c.join(a.cong, b.cong), self.o.join(a.oct, b.oct))

    def widen(self, a: CompState, b: CompState) -> CompState:
        if self.is_bottom(a):
            return b
        if self.is_bottom(b):
            return a
        # componentwise, unreduced, so the octagon part still stabilises
        return CompState(self.c.widen(a.cong, b.cong), self.o.widen(a.oct, b.oct))

    def guard(self, a: CompState, atoms: Sequence[Atom]) -> CompState:
        if self.is_bottom(a):
            return a
        return self.reduce(self.c.guard(a.cong, atoms), self.o.guard(a.oct, atoms))

    def assign(self, a: CompState, x: str, expr: LinExpr) -> CompState:
        if self.is_bottom(a):
            return a
        return self.reduce(self.c.assign(a.cong, x, expr), self.o.assign(a.oct, x, expr))

    def forget(self, a: CompState, x: str) -> CompState:
        if self.is_bottom(a):
            return a
        return CompState(self.c.forget(a.cong, x), self.o.forget(a.oct, x))

    def var_bounds(self, a: CompState, v: str) -> tuple[float, float]:
        return self.o.var_bounds(a.oct, v)

    def to_predicate(self, a: CompState) -> Predicate:
        if self.is_bottom(a):
            return Predicate.of([])
        return self.c.to_predicate(a.cong) & self.o.to_predicate(a.oct)

    def representable(self, atom: Atom) -> bool:
        return self.c.representable(atom) or self.o.representable(atom)

    def contains(self, a: CompState, state: Mapping[str, int]) -> bool:
        return self.c.contains(a.cong, state) and self.o.contains(a.oct, state)
