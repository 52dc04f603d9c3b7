from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..linsolve import Atom, Predicate, make_atom
from ..syntax import LinExpr
from .base import INF, Domain, ceil_div, floor_div, split_eq

Bound = tuple[float, float]


@dataclass(frozen=True)
class IntervalState:
    """Per-variable [lo, hi]; ``bounds is None`` is bottom."""

    bounds: Optional[tuple[Bound, ...]]


class IntervalDomain(Domain):
    name = "interval"
    propagation_rounds = 8

    def top(self) -> IntervalState:
        return IntervalState(tuple((-INF, INF) for _ in self.variables))

    def bottom(self) -> IntervalState:
        return IntervalState(None)

    def is_bottom(self, a: IntervalState) -> bool:
        return a.bounds is None

    def var_bounds(self, a: IntervalState, v: str) -> Bound:
        assert a.bounds is not None
        return a.bounds[self.index[v]]

    def leq(self, a: IntervalState, b: IntervalState) -> bool:
        if a.bounds is None:
            return True
        if b.bounds is None:
            return False
        return all(bl <= al and ah <= bh for (al, ah), (bl, bh) in zip(a.bounds, b.bounds))

    def join(self, a: IntervalState, b: IntervalState) -> IntervalState:
        if a.bounds is None:
            return b
        if b.bounds is None:
            return a
        return IntervalState(tuple((min(al, bl), max(ah, bh)) for (al, ah), (bl, bh) in zip(a.bounds, b.bounds)))

    def widen(self, a: IntervalState, b: IntervalState) -> IntervalState:
        if a.bounds is None:
            return b
        if b.bounds is None:
            return a
        return IntervalState(
            tuple(
                (al if bl >= al else -INF, ah if bh <= ah else INF)
                for (al, ah), (bl, bh) in zip(a.bounds, b.bounds)
            )
        )

    def guard(self, a: IntervalState, atoms: Sequence[Atom]) -> IntervalState:
        if a.bounds is None:
            return a
        b = list(a.bounds)
        constraints = [c for atom in atoms for c in split_eq(atom)]
        congs = [atom for atom in atoms if atom.kind == "cong" and len(atom.terms) == 1 and atom.terms[0][1] == 1]
        for _ in range(self.propagation_rounds):
            changed = False
            for terms, bound in constraints:
                out = _propagate(b, self.index, terms, bound)
                if out is None:
                    return self.bottom()
                changed = changed or out
            for atom in congs:
                i = self.index[atom.terms[0][0]]
                lo, hi = b[i]
                nlo = lo if lo == -INF else lo + (atom.bound - lo) % atom.modulus
                nhi = hi if hi == INF else hi - (hi - atom.bound) % atom.modulus
                if nlo > nhi:
                    return self.bottom()
                if (nlo, nhi) != (lo, hi):
                    b[i] = (nlo, nhi)
                    changed = True
            if not changed:
                break
        return IntervalState(tuple(b))

    def assign(self, a: IntervalState, x: str, expr: LinExpr) -> IntervalState:
        if a.bounds is None:
            return a
        lo, hi = self.linear_bounds(a, expr)
        b = list(a.bounds)
        b[self.index[x]] = (lo, hi)
        return IntervalState(tuple(b))

    def forget(self, a: IntervalState, x: str) -> IntervalState:
        if a.bounds is None:
            return a
        b = list(a.bounds)
        b[self.index[x]] = (-INF, INF)
        return IntervalState(tuple(b))

    def to_predicate(self, a: IntervalState) -> Predicate:
        if a.bounds is None:
            return Predicate.of([])
        atoms = []
        for v, (lo, hi) in zip(self.variables, a.bounds):
            if lo == hi:
                atoms.append(make_atom("eq", {v: 1}, int(lo)))
                continue
            if lo != -INF:
                atoms.append(make_atom("le", {v: -1}, -int(lo)))
            if hi != INF:
                atoms.append(make_atom("le", {v: 1}, int(hi)))
        return Predicate.cube(atoms)

    def representable(self, atom: Atom) -> bool:
        return atom.kind in ("le", "eq") and len(atom.terms) == 1

    def contains(self, a: IntervalState, state) -> bool:
        if a.bounds is None:
            return False
        return all(lo <= state[v] <= hi for v, (lo, hi) in zip(self.variables, a.bounds))


def _propagate(b: list[Bound], index: dict[str, int], terms, bound: int) -> Optional[bool]:
    """Tighten ``b`` with ``sum terms <= bound``; None if empty, else whether anything changed."""
    mins = []
    for v, c in terms:
        lo, hi = b[index[v]]
        mins.append(c * lo if c > 0 else c * hi)
    total_finite = sum(m for m in mins if m != -INF)
    n_inf = sum(1 for m in mins if m == -INF)
    if n_inf == 0 and total_finite > bound:
        return None
    changed = False
    for (v, c), m in zip(terms, mins):
        if m == -INF:
            if n_inf > 1:
                continue
            rest = total_finite
        else:
            if n_inf > 0:
                continue
            rest = total_finite - m
        lim = bound - rest
        i = index[v]
        lo, hi = b[i]
        if c > 0:
            nh = floor_div(int(lim), c)
            if nh < hi:
                hi, changed = nh, True
        else:
            nl = ceil_div(int(lim), c)
            if nl > lo:
                lo, changed = nl, True
        if lo > hi:
            return None
        b[i] = (lo, hi)
    return changed
