"""Non-relational congruences ``x = r (mod m)``; ``m == 0`` pins ``x`` to ``r``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from ..linsolve import Atom, Predicate, make_atom
from ..syntax import LinExpr
from .base import Domain

Cong = tuple[int, int]
TOP: Cong = (1, 0)


def norm(m: int, r: int) -> Cong:
    m = abs(m)
    return (0, r) if m == 0 else (m, r % m)


def cong_leq(a: Cong, b: Cong) -> bool:
    (m1, r1), (m2, r2) = a, b
    if m2 == 0:
        return m1 == 0 and r1 == r2
    return m1 % m2 == 0 and (r1 - r2) % m2 == 0


def cong_join(a: Cong, b: Cong) -> Cong:
    (m1, r1), (m2, r2) = a, b
    return norm(math.gcd(m1, m2, abs(r1 - r2)), r1)


def cong_meet(a: Cong, b: Cong) -> Optional[Cong]:
    """Intersection by the Chinese remainder theorem; None when empty."""
    (m1, r1), (m2, r2) = a, b
    if m1 == 0:
        return a if (m2 == 0 and r1 == r2) or (m2 and (r1 - r2) % m2 == 0) else None
    if m2 == 0:
        return b if (r2 - r1) % m1 == 0 else None
    g = math.gcd(m1, m2)
    if (r2 - r1) % g:
        return None
    lcm = m1 // g * m2
    # r1 + m1*t = r2 (mod m2)
    t = ((r2 - r1) // g) * pow(m1 // g, -1, m2 // g) % (m2 // g) if m2 // g > 1 else 0
    return norm(lcm, r1 + m1 * t)


def solve_linear(c: int, rhs: Cong) -> Optional[Cong]:
    """All x with ``c*x`` in ``rhs``; None when there is none."""
    m, r = rhs
    if m == 0:
        return (0, r // c) if r % c == 0 else None
    g = math.gcd(c, m)
    if r % g:
        return None
    m2 = m // g
    if m2 == 1:
        return TOP
    return norm(m2, (r // g) * pow((c // g) % m2, -1, m2))


@dataclass(frozen=True)
class CongState:
    vals: Optional[tuple[Cong, ...]]


class CongruenceDomain(Domain):
    name = "congruence"
    guard_rounds = 3

    def top(self) -> CongState:
        return CongState(tuple(TOP for _ in self.variables))

    def bottom(self) -> CongState:
        return CongState(None)

    def is_bottom(self, a: CongState) -> bool:
        return a.vals is None

    def leq(self, a: CongState, b: CongState) -> bool:
        if a.vals is None:
            return True
        if b.vals is None:
            return False
        return all(cong_leq(x, y) for x, y in zip(a.vals, b.vals))

    def join(self, a: CongState, b: CongState) -> CongState:
        if a.vals is None:
            return b
        if b.vals is None:
            return a
        return CongState(tuple(cong_join(x, y) for x, y in zip(a.vals, b.vals)))

    # moduli only shrink by divisibility, so chains are finite
    widen = join

    def value(self, a: CongState, v: str) -> Cong:
        assert a.vals is not None
        return a.vals[self.index[v]]

    def eval_expr(self, a: CongState, terms, const: int) -> Cong:
        m, r = 0, const
        for v, c in terms:
            vm, vr = self.value(a, v)
            m = math.gcd(m, abs(c) * vm)
            r += c * vr
        return norm(m, r)

    def meet_var(self, a: CongState, v: str, c: Cong) -> CongState:
        if a.vals is None:
            return a
        i = self.index[v]
        new = cong_meet(a.vals[i], c)
        if new is None:
            return self.bottom()
        if new == a.vals[i]:
            return a
        vals = list(a.vals)
        vals[i] = new
        return CongState(tuple(vals))

    def guard(self, a: CongState, atoms: Sequence[Atom]) -> CongState:
        for _ in range(self.guard_rounds):
            before = a
            for atom in atoms:
                a = self._guard_atom(a, atom)
                if a.vals is None:
                    return a
            if a == before:
                break
        return a

    def _guard_atom(self, a: CongState, atom: Atom) -> CongState:
        if a.vals is None:
            return a
        if atom.kind == "le":
            m, r = self.eval_expr(a, atom.terms, 0)
            if m == 0 and r > atom.bound:
                return self.bottom()
            return a
        modulus = 0 if atom.kind == "eq" else atom.modulus
        for v, c in atom.terms:
            others = tuple(t for t in atom.terms if t[0] != v)
            om, orr = self.eval_expr(a, others, 0)
            rhs = norm(math.gcd(om, modulus), atom.bound - orr)
            sol = solve_linear(c, rhs)
            if sol is None:
                return self.bottom()
            a = self.meet_var(a, v, sol)
            if a.vals is None:
                return a
        return a

    def assign(self, a: CongState, x: str, expr: LinExpr) -> CongState:
        if a.vals is None:
            return a
        vals = list(a.vals)
        vals[self.index[x]] = self.eval_expr(a, expr.terms, expr.const)
        return CongState(tuple(vals))

    def forget(self, a: CongState, x: str) -> CongState:
        if a.vals is None:
            return a
        vals = list(a.vals)
        vals[self.index[x]] = TOP
        return CongState(tuple(vals))

    def to_predicate(self, a: CongState) -> Predicate:
        if a.vals is None:
            return Predicate.of([])
        atoms = []
        for v, (m, r) in zip(self.variables, a.vals):
            if m == 0:
                atoms.append(make_atom("eq", {v: 1}, r))
            elif m > 1:
                atoms.append(make_atom("cong", {v: 1}, r, m))
        return Predicate.cube(atoms)

    def representable(self, atom: Atom) -> bool:
        return atom.kind in ("eq", "cong") and len(atom.terms) == 1

    def contains(self, a: CongState, state) -> bool:
        if a.vals is None:
            return False
        return all(cong_leq((0, state[v]), c) for v, c in zip(self.variables, a.vals))
