"""Decision procedure for linear integer constraints with congruence atoms.

Predicates are kept in disjunctive normal form.  Satisfiability of a cube runs
in three stages:

1. equalities (congruences become equalities over a fresh integer) are
   eliminated exactly over the integers by unit-coefficient substitution and
   Euclid-style coefficient reduction;
2. Fourier-Motzkin elimination with integer tightening decides the remaining
   inequalities over the rationals, which is sound for UNSAT over the integers;
3. a budgeted backtracking search reconstructs an integer model from the
   elimination stages.  An exhausted budget yields UNKNOWN, never a verdict.
"""

from __future__ import annotations

import enum
import itertools
import math
import subprocess
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Optional, Union

from .syntax import BConst, BoolExpr, Cmp, LinExpr, negate, And, Or, Not

DEFAULT_BUDGET = 10_000
MAX_NEGATED_MODULUS = 64
MAX_FM_CONSTRAINTS = 4_000

Terms = tuple[tuple[str, int], ...]


# -- atoms ------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Atom:
    """``terms <= bound`` (le), ``terms == bound`` (eq) or ``terms = bound (mod modulus)`` (cong)."""

    kind: str
    terms: Terms
    bound: int
    modulus: int = 0

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.terms)

    def coeff(self, name: str) -> int:
        for v, c in self.terms:
            if v == name:
                return c
        return 0

    def value(self, state: Mapping[str, int]) -> int:
        return sum(c * state[v] for v, c in self.terms)

    def holds(self, state: Mapping[str, int]) -> bool:
        val = self.value(state)
        if self.kind == "le":
            return val <= self.bound
        if self.kind == "eq":
            return val == self.bound
        return (val - self.bound) % self.modulus == 0

    def substitute(self, name: str, expr: LinExpr) -> Union["Atom", bool]:
        k = self.coeff(name)
        if k == 0:
            return self
        coeffs = dict(self.terms)
        del coeffs[name]
        for v, c in expr.terms:
            coeffs[v] = coeffs.get(v, 0) + k * c
        return make_atom(self.kind, coeffs, self.bound - k * expr.const, self.modulus)

    def rename(self, mapping: Mapping[str, str]) -> Union["Atom", bool]:
        coeffs: dict[str, int] = {}
        for v, c in self.terms:
            w = mapping.get(v, v)
            coeffs[w] = coeffs.get(w, 0) + c
        return make_atom(self.kind, coeffs, self.bound, self.modulus)

    def __str__(self) -> str:
        if self.kind == "le" and len(self.terms) == 1 and abs(self.terms[0][1]) == 1:
            v, c = self.terms[0]
            return f"{v} <= {self.bound}" if c > 0 else f"{v} >= {-self.bound}"
        expr = str(LinExpr(self.terms))
        if self.kind == "le":
            return f"{expr} <= {self.bound}"
        if self.kind == "eq":
            return f"{expr} == {self.bound}"
        if len(self.terms) > 1 or self.terms[0][1] != 1:
            expr = f"({expr})"
        return f"{expr} mod {self.modulus} == {self.bound}"


def make_atom(kind: str, coeffs: Mapping[str, int], bound: int, modulus: int = 0) -> Union[Atom, bool]:
    """Canonical atom, or a bool when the constraint is trivially decided."""
    if kind == "cong":
        if modulus <= 0:
            raise ValueError("congruence modulus must be positive")
        items = [(v, c % modulus) for v, c in coeffs.items()]
        items = [(v, c) for v, c in items if c]
        bound %= modulus
        if not items:
            return bound == 0
        g = math.gcd(modulus, *(c for _, c in items))
        if bound % g:
            return False
        modulus //= g
        if modulus == 1:
            return True
        return Atom("cong", tuple(sorted((v, c // g) for v, c in items)), bound // g, modulus)
    items = [(v, c) for v, c in coeffs.items() if c]
    if not items:
        return 0 <= bound if kind == "le" else bound == 0
    g = math.gcd(*(c for _, c in items))
    if kind == "le":
        return Atom("le", tuple(sorted((v, c // g) for v, c in items)), bound // g)
    if kind != "eq":
        raise ValueError(f"unknown atom kind {kind!r}")
    if bound % g:
        return False
    items.sort()
    sign = -1 if items[0][1] < 0 else 1
    return Atom("eq", tuple((v, sign * c // g) for v, c in items), sign * bound // g)


def le(expr: LinExpr, bound: int = 0) -> Union[Atom, bool]:
    """expr <= bound."""
    return make_atom("le", expr.coeffs, bound - expr.const)


def eq(expr: LinExpr, bound: int = 0) -> Union[Atom, bool]:
    return make_atom("eq", expr.coeffs, bound - expr.const)


def cong(expr: LinExpr, residue: int, modulus: int) -> Union[Atom, bool]:
    return make_atom("cong", expr.coeffs, residue - expr.const, modulus)


class NegationTooLarge(Exception):
    pass


def negate_atom(a: Atom) -> list[Atom]:
    """The negation of ``a`` as a disjunction of atoms."""
    coeffs = dict(a.terms)
    neg = {v: -c for v, c in coeffs.items()}
    if a.kind == "le":
        out = [make_atom("le", neg, -a.bound - 1)]
    elif a.kind == "eq":
        out = [make_atom("le", coeffs, a.bound - 1), make_atom("le", neg, -a.bound - 1)]
    else:
        if a.modulus > MAX_NEGATED_MODULUS:
            raise NegationTooLarge(f"negating a congruence modulo {a.modulus}")
        out = [make_atom("cong", coeffs, r, a.modulus) for r in range(a.modulus) if r != a.bound]
    # canonical atoms are never trivially decided, so neither are their negations
    return [x for x in out if isinstance(x, Atom)]


# -- predicates -------------------------------------------------------------

Cube = frozenset[Atom]


def _normalize_cube(atoms: Iterable[Union[Atom, bool]]) -> Optional[Cube]:
    """Merge bounds on equal term vectors; None when the cube is trivially false."""
    upper: dict[Terms, int] = {}
    equal: dict[Terms, int] = {}
    congs: set[Atom] = set()
    for a in atoms:
        if a is True:
            continue
        if a is False:
            return None
        assert isinstance(a, Atom)
        if a.kind == "le":
            upper[a.terms] = min(upper.get(a.terms, a.bound), a.bound)
        elif a.kind == "eq":
            if equal.setdefault(a.terms, a.bound) != a.bound:
                return None
        else:
            congs.add(a)
    out: set[Atom] = set(congs)
    # equalities subsume the bounds on their terms (both orientations)
    for t, b in equal.items():
        neg = tuple((v, -c) for v, c in t)
        if t in upper:
            if b > upper.pop(t):
                return None
        if neg in upper:
            if -b > upper.pop(neg):
                return None
        out.add(Atom("eq", t, b))
    for t, b in list(upper.items()):
        if t not in upper:
            continue
        neg = tuple((v, -c) for v, c in t)
        if neg in upper:
            lo = -upper[neg]
            if lo > b:
                return None
            if lo == b:
                del upper[t]
                del upper[neg]
                e = make_atom("eq", dict(t), b)
                if e is False:
                    return None
                if isinstance(e, Atom):
                    out.add(e)
    for t, b in upper.items():
        out.add(Atom("le", t, b))
    for c in congs:
        # a congruence decided by an equality on a single variable is redundant or false
        if len(c.terms) == 1:
            v, k = c.terms[0]
            fixed = equal.get(((v, 1),))
            if fixed is not None:
                if (k * fixed - c.bound) % c.modulus:
                    return None
                out.discard(c)
    return frozenset(out)


@dataclass(frozen=True)
class Predicate:
    """A finite disjunction of cubes; ``true`` is one empty cube, ``false`` no cube."""

    cubes: frozenset[Cube]

    @staticmethod
    def of(cubes: Iterable[Iterable[Union[Atom, bool]]]) -> "Predicate":
        normal: set[Cube] = set()
        for c in cubes:
            n = _normalize_cube(c)
            if n is None:
                continue
            if not n:
                return TRUE
            normal.add(n)
        # drop cubes that syntactically contain another cube
        kept = [c for c in normal if not any(o < c for o in normal)]
        return Predicate(frozenset(kept))

    @staticmethod
    def atom(a: Union[Atom, bool]) -> "Predicate":
        return Predicate.of([[a]])

    @staticmethod
    def cube(atoms: Iterable[Union[Atom, bool]]) -> "Predicate":
        return Predicate.of([list(atoms)])

    @property
    def is_true(self) -> bool:
        return frozenset() in self.cubes

    @property
    def is_false(self) -> bool:
        return not self.cubes

    @property
    def is_conjunctive(self) -> bool:
        return len(self.cubes) == 1

    @property
    def variables(self) -> frozenset[str]:
        out: set[str] = set()
        for c in self.cubes:
            for a in c:
                out |= a.variables
        return frozenset(out)

    def sorted_cubes(self) -> list[list[Atom]]:
        return sorted((sorted(c) for c in self.cubes))

    def __and__(self, other: "Predicate") -> "Predicate":
        if self.is_false or other.is_false:
            return FALSE
        return Predicate.of([a | b for a in self.cubes for b in other.cubes])

    def __or__(self, other: "Predicate") -> "Predicate":
        return Predicate.of(list(self.cubes) + list(other.cubes))

    def holds(self, state: Mapping[str, int]) -> bool:
        return any(all(a.holds(state) for a in c) for c in self.cubes)

    def substitute(self, name: str, expr: LinExpr) -> "Predicate":
        return Predicate.of([[a.substitute(name, expr) for a in c] for c in self.cubes])

    def rename(self, mapping: Mapping[str, str]) -> "Predicate":
        return Predicate.of([[a.rename(mapping) for a in c] for c in self.cubes])

    def __str__(self) -> str:
        if self.is_false:
            return "false"
        if self.is_true:
            return "true"
        parts = [_cube_str(c) for c in self.sorted_cubes()]
        if len(parts) == 1:
            return parts[0]
        return " || ".join(f"({p})" if len(c) > 1 else p for p, c in zip(parts, self.sorted_cubes()))

    def __repr__(self) -> str:
        return f"Predicate({self})"


def _atom_key(a: Atom) -> tuple:
    return (sorted(a.variables), a.kind != "eq", a.terms and a.terms[0][1] > 0, a.terms, a.bound)


def _cube_str(atoms: Iterable[Atom]) -> str:
    return " && ".join(str(a) for a in sorted(atoms, key=_atom_key))


TRUE = Predicate(frozenset({frozenset()}))
FALSE = Predicate(frozenset())


def from_bexpr(b: BoolExpr) -> Predicate:
    """DNF of a guard; ``!=`` splits into ``<`` or ``>``."""
    if isinstance(b, BConst):
        return TRUE if b.value else FALSE
    if isinstance(b, Not):
        return from_bexpr(negate(b.arg))
    if isinstance(b, And):
        out = TRUE
        for a in b.args:
            out = out & from_bexpr(a)
            if out.is_false:
                break
        return out
    if isinstance(b, Or):
        out = FALSE
        for a in b.args:
            out = out | from_bexpr(a)
        return out
    assert isinstance(b, Cmp)
    d = b.lhs - b.rhs
    if b.op == "<":
        return Predicate.atom(le(d, -1))
    if b.op == "<=":
        return Predicate.atom(le(d, 0))
    if b.op == ">":
        return Predicate.atom(le(-d, -1))
    if b.op == ">=":
        return Predicate.atom(le(-d, 0))
    if b.op == "==":
        return Predicate.atom(eq(d, 0))
    return Predicate.of([[le(d, -1)], [le(-d, -1)]])


def guard_cubes(b: BoolExpr) -> list[list[Atom]]:
    """The guard as sorted conjunctive cubes of atoms (false = no cube)."""
    return from_bexpr(b).sorted_cubes()


# -- satisfiability -----------------------------------------------------------


class Status(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SatResult:
    status: Status
    model: Optional[dict[str, int]] = None
    reason: str = ""

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def unsat(self) -> bool:
        return self.status is Status.UNSAT

    @property
    def unknown(self) -> bool:
        return self.status is Status.UNKNOWN


UNSAT_RESULT = SatResult(Status.UNSAT)


class _OutOfBudget(Exception):
    pass


@dataclass
class _Budget:
    left: int

    def spend(self, n: int = 1) -> None:
        self.left -= n
        if self.left < 0:
            raise _OutOfBudget()


def _subst_into(coeffs: dict[str, int], c: int, v: str, expr: dict[str, int], const: int) -> int:
    """Replace ``v`` by ``expr + const`` in ``coeffs <op> c``; returns the new constant."""
    k = coeffs.pop(v, 0)
    if not k:
        return c
    for w, e in expr.items():
        nv = coeffs.get(w, 0) + k * e
        if nv:
            coeffs[w] = nv
        else:
            coeffs.pop(w, None)
    return c - k * const


@dataclass
class _Stage:
    var: str
    constraints: list[tuple[dict[str, int], int]]
    exact: bool


def _solve_cube(atoms: Iterable[Atom], budget: _Budget) -> SatResult:
    fresh = itertools.count()
    eqs: list[tuple[dict[str, int], int]] = []
    ineqs: list[tuple[dict[str, int], int]] = []
    atoms = list(atoms)
    program_vars = sorted({v for a in atoms for v in a.variables})
    for a in atoms:
        d = dict(a.terms)
        if a.kind == "le":
            ineqs.append((d, a.bound))
        elif a.kind == "eq":
            eqs.append((d, a.bound))
        else:
            d[f"#k{next(fresh)}"] = -a.modulus
            eqs.append((d, a.bound))

    substitutions: list[tuple[str, dict[str, int], int]] = []
    while eqs:
        coeffs, c = eqs.pop()
        coeffs = {v: k for v, k in coeffs.items() if k}
        if not coeffs:
            if c != 0:
                return UNSAT_RESULT
            continue
        g = math.gcd(*coeffs.values())
        if c % g:
            return UNSAT_RESULT
        coeffs = {v: k // g for v, k in coeffs.items()}
        c //= g
        v, a = min(coeffs.items(), key=lambda kv: (abs(kv[1]), kv[0]))
        if abs(a) == 1:
            expr = {w: -k * a for w, k in coeffs.items() if w != v}
            const = c * a
        else:
            # a*v + sum (q_w*a + r_w)*w = q_c*a + r_c; set t = v + sum q_w*w - q_c
            t = f"#t{next(fresh)}"
            expr = {w: -(k // a) for w, k in coeffs.items() if w != v and k // a}
            expr[t] = 1
            const = c // a
            reduced = {w: k - (k // a) * a for w, k in coeffs.items() if w != v}
            reduced = {w: k for w, k in reduced.items() if k}
            reduced[t] = a
            eqs.append((reduced, c - (c // a) * a))
        for i, (d, cc) in enumerate(eqs):
            if v in d:
                d = dict(d)
                eqs[i] = (d, _subst_into(d, cc, v, expr, const))
        for i, (d, cc) in enumerate(ineqs):
            if v in d:
                d = dict(d)
                ineqs[i] = (d, _subst_into(d, cc, v, expr, const))
        substitutions.append((v, expr, const))

    stages = _fourier_motzkin(ineqs, budget)
    if stages is None:
        return UNSAT_RESULT
    model: dict[str, int] = {}
    found = _search(stages, len(stages) - 1, model, budget)
    if not found:
        if found is None:
            raise _OutOfBudget()
        return UNSAT_RESULT
    for v, expr, const in reversed(substitutions):
        model[v] = const + sum(k * model.setdefault(w, 0) for w, k in expr.items())
    result = {v: model.get(v, 0) for v in program_vars}
    for a in atoms:
        if not a.holds(result):  # pragma: no cover - internal consistency guard
            raise AssertionError(f"model {result} violates {a}")
    return SatResult(Status.SAT, result)


def _tighten(coeffs: dict[str, int], c: int) -> tuple[tuple[tuple[str, int], ...], int]:
    g = math.gcd(*coeffs.values())
    return tuple(sorted((v, k // g) for v, k in coeffs.items())), c // g


def _fourier_motzkin(
    ineqs: list[tuple[dict[str, int], int]], budget: _Budget
) -> Optional[list[_Stage]]:
    """Eliminate every variable; None on a rational contradiction."""
    current: dict[tuple[tuple[str, int], ...], int] = {}

    def add(coeffs: dict[str, int], c: int, into: dict) -> bool:
        coeffs = {v: k for v, k in coeffs.items() if k}
        if not coeffs:
            return c >= 0
        t, b = _tighten(coeffs, c)
        if t in into and into[t] <= b:
            return True
        into[t] = b
        neg = tuple((v, -k) for v, k in t)
        if neg in into and into[neg] + b < 0:
            return False
        return True

    for coeffs, c in ineqs:
        if not add(dict(coeffs), c, current):
            return None
    stages: list[_Stage] = []
    while current:
        budget.spend()
        occurs: dict[str, tuple[int, int]] = {}
        for t in current:
            for v, k in t:
                p, n = occurs.get(v, (0, 0))
                occurs[v] = (p + 1, n) if k > 0 else (p, n + 1)
        var = min(occurs, key=lambda v: (occurs[v][0] * occurs[v][1] - sum(occurs[v]), v))
        with_var = [(dict(t), b) for t, b in current.items() if any(w == var for w, _ in t)]
        rest = {t: b for t, b in current.items() if not any(w == var for w, _ in t)}
        pos = [(d, b) for d, b in with_var if d[var] > 0]
        neg = [(d, b) for d, b in with_var if d[var] < 0]
        exact = True
        for dp, bp in pos:
            for dn, bn in neg:
                a, m = dp[var], -dn[var]
                if a != 1 and m != 1:
                    exact = False
                combined: dict[str, int] = {}
                for w, k in dp.items():
                    combined[w] = combined.get(w, 0) + m * k
                for w, k in dn.items():
                    combined[w] = combined.get(w, 0) + a * k
                combined.pop(var, None)
                if not add(combined, m * bp + a * bn, rest):
                    return None
        if len(rest) > MAX_FM_CONSTRAINTS:
            raise _OutOfBudget()
        stages.append(_Stage(var, with_var, exact))
        current = rest
    return stages


def _candidates(lo: float, hi: float) -> Iterator[int]:
    start = 0 if lo <= 0 <= hi else (int(lo) if lo > 0 else int(hi))
    yield start
    for d in itertools.count(1):
        up, down = start + d, start - d
        up_ok, down_ok = up <= hi, down >= lo
        if not up_ok and not down_ok:
            return
        if up_ok:
            yield up
        if down_ok:
            yield down


def _search(stages: list[_Stage], idx: int, model: dict[str, int], budget: _Budget) -> Optional[bool]:
    """Backtracking integer search; False = exhausted a finite space, None = budget."""
    if idx < 0:
        return True
    st = stages[idx]
    lo: float = -math.inf
    hi: float = math.inf
    for coeffs, c in st.constraints:
        a = coeffs[st.var]
        d = c - sum(k * model.get(w, 0) for w, k in coeffs.items() if w != st.var)
        if a > 0:
            hi = min(hi, d // a)
        else:
            lo = max(lo, -(d // -a))
    if lo > hi:
        return False
    infinite = math.isinf(lo) or math.isinf(hi)
    for val in _candidates(lo, hi):
        budget.spend()
        model[st.var] = val
        r = _search(stages, idx - 1, model, budget)
        if r:
            return True
        if r is None:
            infinite = True
    model.pop(st.var, None)
    return None if infinite else False


@lru_cache(maxsize=65536)
def _check_cube(cube: Cube, budget: int) -> SatResult:
    try:
        return _solve_cube(sorted(cube), _Budget(budget))
    except _OutOfBudget:
        return SatResult(Status.UNKNOWN, reason="solver-budget")


def check_sat(p: Predicate, budget: int = DEFAULT_BUDGET) -> SatResult:
    """SAT with a model, UNSAT, or UNKNOWN when the integer search runs out of budget."""
    unknown = None
    for cube in sorted(p.cubes, key=lambda c: sorted(c)):
        r = _check_cube(cube, budget)
        if r.sat:
            return r
        if r.unknown:
            unknown = r
    return unknown or UNSAT_RESULT


def is_unsat(atoms: Iterable[Atom], budget: int = DEFAULT_BUDGET) -> bool:
    n = _normalize_cube(atoms)
    return n is None or _check_cube(n, budget).unsat


@lru_cache(maxsize=65536)
def entails(p: Predicate, q: Predicate, budget: int = DEFAULT_BUDGET) -> Optional[bool]:
    """Whether p implies q: True, False, or None when undecided."""
    if q.is_true or p.is_false or p == q:
        return True
    unknown = False
    for cube in sorted(p.cubes, key=lambda c: sorted(c)):
        r = _cube_entails(cube, q, budget)
        if r is False:
            return False
        if r is None:
            unknown = True
    return None if unknown else True


def _cube_entails(cube: Cube, q: Predicate, budget: int) -> Optional[bool]:
    if any(qc <= cube for qc in q.cubes):
        return True
    if q.is_false:
        r = _check_cube(cube, budget)
        return True if r.unsat else (False if r.sat else None)
    try:
        if q.is_conjunctive:
            (qc,) = q.cubes
            unknown = False
            for a in sorted(qc):
                if a in cube:
                    continue
                for na in negate_atom(a):
                    n = _normalize_cube(list(cube) + [na])
                    if n is None:
                        continue
                    r = _check_cube(n, budget)
                    if r.sat:
                        return False
                    if r.unknown:
                        unknown = True
            return None if unknown else True
        frontier: list[Cube] = [cube]
        statuses: dict[Cube, Status] = {}
        for qc in sorted(q.cubes, key=lambda c: sorted(c)):
            nxt: set[Cube] = set()
            for cur in frontier:
                for a in sorted(qc):
                    for na in negate_atom(a):
                        n = _normalize_cube(list(cur) + [na])
                        if n is None:
                            continue
                        r = _check_cube(n, budget)
                        if r.unsat:
                            continue
                        statuses[n] = r.status
                        nxt.add(n)
            frontier = sorted(nxt, key=lambda c: sorted(c))
            if not frontier:
                return True
        if any(statuses[c] is Status.SAT for c in frontier):
            return False
        return None
    except NegationTooLarge:
        return None


def equivalent(p: Predicate, q: Predicate, budget: int = DEFAULT_BUDGET) -> Optional[bool]:
    a = entails(p, q, budget)
    if a is False:
        return False
    b = entails(q, p, budget)
    if b is False:
        return False
    return True if (a and b) else None


# -- projection ---------------------------------------------------------------


def project(p: Predicate, x: str) -> tuple[Predicate, bool]:
    """Eliminate ``x``; returns the result and whether it is exact over the integers."""
    exact = True
    cubes = []
    for cube in p.cubes:
        c, ex = _project_cube(cube, x)
        exact = exact and ex
        if c is not None:
            cubes.append(c)
    return Predicate.of(cubes), exact


def eliminate(p: Predicate, x: str) -> Predicate:
    """Existential projection of ``x``; exact on equalities, Fourier-Motzkin otherwise."""
    return project(p, x)[0]


def _project_cube(cube: Cube, x: str) -> tuple[Optional[list], bool]:
    with_x = [a for a in cube if a.coeff(x)]
    if not with_x:
        return list(cube), True
    others = [a for a in cube if not a.coeff(x)]
    eqs = sorted((a for a in with_x if a.kind == "eq"), key=lambda a: (abs(a.coeff(x)), a))
    if eqs:
        pivot = eqs[0]
        a = pivot.coeff(x)
        rest = {v: c for v, c in pivot.terms if v != x}
        if abs(a) == 1:
            # x = (bound - rest) / a
            expr = LinExpr.of({v: -c * a for v, c in rest.items()}, pivot.bound * a)
            out = list(others)
            for atom in with_x:
                if atom is not pivot:
                    out.append(atom.substitute(x, expr))
            return out, True
        # |a| * x = sgn(a) * (bound - rest): scale every other atom by |a|
        sgn, mag = (1 if a > 0 else -1), abs(a)
        out = list(others)
        out.append(make_atom("cong", rest, pivot.bound, mag))
        for atom in with_x:
            if atom is pivot:
                continue
            k = atom.coeff(x)
            scaled = {v: c * mag for v, c in atom.terms if v != x}
            for v, c in rest.items():
                scaled[v] = scaled.get(v, 0) - k * sgn * c
            bound = atom.bound * mag - k * sgn * pivot.bound
            if atom.kind == "cong":
                out.append(make_atom("cong", scaled, bound, atom.modulus * mag))
            else:
                out.append(make_atom(atom.kind, scaled, bound))
        return out, True
    exact = True
    out = list(others)
    pos = [a for a in with_x if a.kind == "le" and a.coeff(x) > 0]
    neg = [a for a in with_x if a.kind == "le" and a.coeff(x) < 0]
    if any(a.kind == "cong" for a in with_x):
        exact = False
    for ap in pos:
        for an in neg:
            ka, kn = ap.coeff(x), -an.coeff(x)
            if ka != 1 and kn != 1:
                exact = False
            combined: dict[str, int] = {}
            for v, c in ap.terms:
                combined[v] = combined.get(v, 0) + kn * c
            for v, c in an.terms:
                combined[v] = combined.get(v, 0) + ka * c
            combined.pop(x, None)
            out.append(make_atom("le", combined, kn * ap.bound + ka * an.bound))
    return out, exact


# -- SMT-LIB2 -----------------------------------------------------------------


def _smt_term(terms: Terms) -> str:
    parts = []
    for v, c in terms:
        parts.append(v if c == 1 else f"(* {c} {v})" if c > 0 else f"(* (- {-c}) {v})")
    if not parts:
        return "0"
    return parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"


def _smt_int(k: int) -> str:
    return str(k) if k >= 0 else f"(- {-k})"


def _smt_atom(a: Atom) -> str:
    t = _smt_term(a.terms)
    if a.kind == "le":
        return f"(<= {t} {_smt_int(a.bound)})"
    if a.kind == "eq":
        return f"(= {t} {_smt_int(a.bound)})"
    return f"(= (mod {t} {a.modulus}) {a.bound})"


def to_smtlib(p: Predicate) -> str:
    """A QF_LIA script asserting ``p``; one assert per atom for conjunctive predicates."""
    lines = ["(set-logic QF_LIA)"]
    lines += [f"(declare-const {v} Int)" for v in sorted(p.variables)]
    if p.is_false:
        lines.append("(assert false)")
    elif p.is_conjunctive:
        (cube,) = p.cubes
        lines += [f"(assert {_smt_atom(a)})" for a in sorted(cube)]
    else:
        disjuncts = []
        for cube in p.sorted_cubes():
            body = " ".join(_smt_atom(a) for a in cube)
            disjuncts.append(f"(and {body})" if len(cube) > 1 else body)
        lines.append(f"(assert (or {' '.join(disjuncts)}))")
    lines += ["(check-sat)", "(get-model)"]
    return "\n".join(lines) + "\n"


@dataclass
class ExternalSolver:
    """Runs an SMT-LIB2 solver process (for instance ``z3 -in``) on emitted queries.

    Only the sat/unsat answer is read back; models stay with the internal procedure.
    """

    command: tuple[str, ...] = ("z3", "-in")
    timeout: float = 10.0
    runner: object = field(default=subprocess.run, repr=False)

    def check(self, p: Predicate) -> SatResult:
        try:
            proc = self.runner(  # type: ignore[operator]
                list(self.command), input=to_smtlib(p), capture_output=True, text=True, timeout=self.timeout
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            return SatResult(Status.UNKNOWN, reason=f"external solver: {exc}")
        first = proc.stdout.strip().splitlines()[0] if proc.stdout.strip() else ""
        if first == "unsat":
            return UNSAT_RESULT
        if first == "sat":
            return SatResult(Status.SAT)
        return SatResult(Status.UNKNOWN, reason=f"external solver answered {first!r}")
