"""Octagons as difference-bound matrices over the doubled variable set.

Index ``2k`` stands for ``+x_k`` and ``2k+1`` for ``-x_k``; ``m[i][j]`` bounds
``v_i - v_j``.  Every value except a widening result is tightly closed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..linsolve import Atom, Predicate, make_atom
from ..syntax import LinExpr
from .base import INF, Domain, ceil_div, floor_div, split_eq

Matrix = tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class OctState:
    m: Optional[Matrix]


def _bar(i: int) -> int:
    return i ^ 1


def _lit(var_index: int, sign: int) -> int:
    return 2 * var_index + (0 if sign > 0 else 1)


def _floor2(v: float) -> float:
    return v if v == INF else 2 * floor_div(int(v), 2)


class OctagonDomain(Domain):
    name = "octagon"
    guard_rounds = 2

    def __init__(self, variables: Sequence[str]):
        super().__init__(variables)
        self.n = 2 * len(self.variables)

    # lattice ---------------------------------------------------------------

    def top(self) -> OctState:
        n = self.n
        return OctState(tuple(tuple(0 if i == j else INF for j in range(n)) for i in range(n)))

    def bottom(self) -> OctState:
        return OctState(None)

    def is_bottom(self, a: OctState) -> bool:
        return a.m is None

    def leq(self, a: OctState, b: OctState) -> bool:
        if a.m is None:
            return True
        if b.m is None:
            return False
        return all(x <= y for ra, rb in zip(a.m, b.m) for x, y in zip(ra, rb))

    def join(self, a: OctState, b: OctState) -> OctState:
        if a.m is None:
            return b
        if b.m is None:
            return a
        return OctState(tuple(tuple(max(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(a.m, b.m)))

    def widen(self, a: OctState, b: OctState) -> OctState:
        if a.m is None:
            return b
        if b.m is None:
            return a
        # no closure afterwards: closing a widened matrix can break termination
        return OctState(tuple(tuple(x if y <= x else INF for x, y in zip(ra, rb)) for ra, rb in zip(a.m, b.m)))

    # closure -----------------------------------------------------------------

    def _close(self, m: list[list[float]]) -> Optional[Matrix]:
        n = self.n
        for k in range(n):
            mk = m[k]
            for i in range(n):
                mik = m[i][k]
                if mik == INF:
                    continue
                mi = m[i]
                for j in range(n):
                    v = mik + mk[j]
                    if v < mi[j]:
                        mi[j] = v
        for i in range(n):
            if m[i][i] < 0:
                return None
            m[i][_bar(i)] = _floor2(m[i][_bar(i)])
        for i in range(n):
            hi = m[i][_bar(i)]
            mi = m[i]
            for j in range(n):
                v = (hi + m[_bar(j)][j]) / 2
                if v < mi[j]:
                    mi[j] = v
        for i in range(n):
            if m[i][i] < 0 or m[i][_bar(i)] + m[_bar(i)][i] < 0:
                return None
            m[i][i] = 0
        return tuple(tuple(int(v) if v != INF else INF for v in row) for row in m)

    def _closed(self, m: list[list[float]]) -> OctState:
        return OctState(self._close(m))

    @staticmethod
    def _add(m: list[list[float]], i: int, j: int, c: float) -> None:
        # v_i - v_j <= c, with its coherent twin
        if c < m[i][j]:
            m[i][j] = c
        if c < m[_bar(j)][_bar(i)]:
            m[_bar(j)][_bar(i)] = c

    def _add_linear(self, m: list[list[float]], terms, bound: int) -> bool:
        """Add ``sum terms <= bound`` when it is octagonal; report whether it was."""
        if len(terms) == 1:
            (v, c), = terms
            b = floor_div(bound, c) if c > 0 else ceil_div(bound, c)
            k = self.index[v]
            if c > 0:
                self._add(m, 2 * k, 2 * k + 1, 2 * b)
            else:
                self._add(m, 2 * k + 1, 2 * k, -2 * b)
            return True
        if len(terms) == 2 and all(abs(c) == 1 for _, c in terms):
            (x, a), (y, b) = terms
            self._add(m, _lit(self.index[x], a), _lit(self.index[y], -b), bound)
            return True
        return False

    # transfer --------------------------------------------------------------

    def var_bounds(self, a: OctState, v: str) -> tuple[float, float]:
        assert a.m is not None
        k = self.index[v]
        hi = a.m[2 * k][2 * k + 1]
        lo = a.m[2 * k + 1][2 * k]
        return (-INF if lo == INF else -lo / 2, INF if hi == INF else hi / 2)

    def guard(self, a: OctState, atoms: Sequence[Atom]) -> OctState:
        if a.m is None:
            return a
        m = [list(r) for r in a.m]
        rest = []
        for atom in atoms:
            for terms, bound in split_eq(atom):
                if not self._add_linear(m, terms, bound):
                    rest.append((terms, bound))
        cur = self._closed(m)
        for _ in range(self.guard_rounds if rest else 0):
            if cur.m is None:
                return cur
            m = [list(r) for r in cur.m]
            for terms, bound in rest:
                self._derive(cur, m, terms, bound)
            nxt = self._closed(m)
            if nxt == cur:
                break
            cur = nxt
        return cur

    def _derive(self, a: OctState, m: list[list[float]], terms, bound: int) -> None:
        """Octagonal consequences of a general constraint under the bounds of ``a``."""
        bounds = {v: self.var_bounds(a, v) for v, _ in terms}

        def rest_min(skip: set[str]) -> float:
            total = 0.0
            for v, c in terms:
                if v in skip:
                    continue
                lo, hi = bounds[v]
                total += c * lo if c > 0 else c * hi
            return total

        for v, c in terms:
            r = rest_min({v})
            if r == -INF:
                continue
            self._add_linear(m, ((v, c),), int(bound - r))
        for i, (x, cx) in enumerate(terms):
            for y, cy in terms[i + 1:]:
                if abs(cx) != abs(cy):
                    continue
                r = rest_min({x, y})
                if r == -INF:
                    continue
                g = abs(cx)
                self._add_linear(m, ((x, cx // g), (y, cy // g)), floor_div(int(bound - r), g))

    def assign(self, a: OctState, x: str, expr: LinExpr) -> OctState:
        if a.m is None:
            return a
        k = self.index[x]
        coeffs = expr.coeffs
        c = expr.const
        if not coeffs:
            m = self._forget_rows(a.m, k)
            self._add(m, 2 * k, 2 * k + 1, 2 * c)
            self._add(m, 2 * k + 1, 2 * k, -2 * c)
            return self._closed(m)
        if set(coeffs) == {x} and abs(coeffs[x]) == 1:
            m = [list(r) for r in a.m]
            if coeffs[x] == -1:
                m = self._swap(m, 2 * k, 2 * k + 1)
            return OctState(self._shift(m, k, c))
        if len(coeffs) == 1 and x not in coeffs:
            (y, cy), = coeffs.items()
            if abs(cy) == 1:
                m = self._forget_rows(a.m, k)
                ly = _lit(self.index[y], cy)
                # x - (cy*y) == c
                self._add(m, 2 * k, ly, c)
                self._add(m, ly, 2 * k, -c)
                return self._closed(m)
        lo, hi = self.linear_bounds(a, expr)
        pairs = []
        for y in self.variables:
            if y == x:
                continue
            for sign in (1, -1):
                # bounds on x - sign*y evaluated in the pre-state
                plo, phi = self.linear_bounds(a, expr - LinExpr.var(y).scale(sign))
                pairs.append((y, sign, plo, phi))
        m = self._forget_rows(a.m, k)
        if hi != INF:
            self._add(m, 2 * k, 2 * k + 1, 2 * int(hi))
        if lo != -INF:
            self._add(m, 2 * k + 1, 2 * k, -2 * int(lo))
        for y, sign, plo, phi in pairs:
            ly = _lit(self.index[y], sign)
            if phi != INF:
                self._add(m, 2 * k, ly, int(phi))
            if plo != -INF:
                self._add(m, ly, 2 * k, -int(plo))
        return self._closed(m)

    def _swap(self, m: list[list[float]], p: int, q: int) -> list[list[float]]:
        m[p], m[q] = m[q], m[p]
        for row in m:
            row[p], row[q] = row[q], row[p]
        return m

    def _shift(self, m: list[list[float]], k: int, c: int) -> Matrix:
        pos, neg = 2 * k, 2 * k + 1
        for i in range(self.n):
            for j in range(self.n):
                d = 0
                if i == pos:
                    d += c
                elif i == neg:
                    d -= c
                if j == pos:
                    d -= c
                elif j == neg:
                    d += c
                if d and m[i][j] != INF:
                    m[i][j] += d
        return tuple(tuple(r) for r in m)

    def _forget_rows(self, m: Matrix, k: int) -> list[list[float]]:
        out = [list(r) for r in m]
        for p in (2 * k, 2 * k + 1):
            for j in range(self.n):
                out[p][j] = INF
                out[j][p] = INF
            out[p][p] = 0
        return out

    def forget(self, a: OctState, x: str) -> OctState:
        if a.m is None:
            return a
        m = self._forget_rows(a.m, self.index[x])
        return OctState(tuple(tuple(r) for r in m))

    # predicates ------------------------------------------------------------

    def to_predicate(self, a: OctState) -> Predicate:
        if a.m is None:
            return Predicate.of([])
        m = a.m
        atoms: list = []
        bounds = {v: self.var_bounds(a, v) for v in self.variables}
        for v, (lo, hi) in bounds.items():
            if hi != INF:
                atoms.append(make_atom("le", {v: 1}, int(hi)))
            if lo != -INF:
                atoms.append(make_atom("le", {v: -1}, -int(lo)))
        for i in range(self.n):
            for j in range(self.n):
                if i // 2 == j // 2 or m[i][j] == INF:
                    continue
                x, y = self.variables[i // 2], self.variables[j // 2]
                sx = 1 if i % 2 == 0 else -1
                sy = -1 if j % 2 == 0 else 1
                # skip constraints already implied by the unary bounds
                ux = bounds[x][1] if sx > 0 else -bounds[x][0]
                uy = bounds[y][1] if sy > 0 else -bounds[y][0]
                if ux + uy <= m[i][j]:
                    continue
                atoms.append(make_atom("le", {x: sx, y: sy}, int(m[i][j])))
        return Predicate.cube(atoms)

    def representable(self, atom: Atom) -> bool:
        if atom.kind not in ("le", "eq"):
            return False
        if len(atom.terms) == 1:
            return True
        return len(atom.terms) == 2 and all(abs(c) == 1 for _, c in atom.terms)

    def contains(self, a: OctState, state: Mapping[str, int]) -> bool:
        if a.m is None:
            return False
        vals = []
        for v in self.variables:
            vals += [state[v], -state[v]]
        return all(vals[i] - vals[j] <= a.m[i][j] for i in range(self.n) for j in range(self.n))
