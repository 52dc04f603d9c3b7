"""Refutation artifacts: strongest postconditions, trace analysis, Hoare checks,
and the data automata built from assertion sequences and from fixpoints."""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterable, Optional, Sequence, Union

from . import linsolve
from .automata import FloydHoareAutomaton, Transition
from .domains import Domain
from .fixpoint import Annotation
from .linsolve import FALSE, TRUE, Predicate, eq, from_bexpr
from .pathprog import PathProgram
from .semantics import Execution, execute_trace
from .syntax import Assign, Assume, Havoc, LinExpr, Seq, Statement, flatten, statement_vars

DEFAULT_HOARE_BUDGET = 5000


class DeadlineExceeded(TimeoutError):
    """The wall-clock limit of the surrounding task ran out."""


def _check_deadline(deadline: Optional[float]) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise DeadlineExceeded()


# -- strongest postcondition ---------------------------------------------------


def _prune(p: Predicate, budget: int) -> Predicate:
    """Drop cubes the solver refutes; undecided cubes stay."""
    kept = [c for c in p.cubes if not linsolve.check_sat(Predicate(frozenset([c])), budget).unsat]
    if len(kept) == len(p.cubes):
        return p
    return Predicate(frozenset(kept))


@lru_cache(maxsize=1 << 16)
def sp(phi: Predicate, s: Statement, budget: int = linsolve.DEFAULT_BUDGET) -> Predicate:
    """Strongest postcondition of ``phi`` under ``s`` (exact on rational atoms)."""
    if phi.is_false:
        return FALSE
    if isinstance(s, Seq):
        return sp(sp(phi, s.first, budget), s.second, budget)
    if isinstance(s, Assume):
        return _prune(phi & from_bexpr(s.cond), budget)
    if isinstance(s, Havoc):
        return linsolve.eliminate(phi, s.target)
    assert isinstance(s, Assign)
    x = s.target
    old = x + "'"
    renamed = phi.rename({x: old})
    link = Predicate.atom(eq(LinExpr.var(x) - s.expr.rename({x: old})))
    return _prune(linsolve.eliminate(renamed & link, old), budget)


# -- trace analysis ---------------------------------------------------------------


@dataclass(frozen=True)
class AssertionSequence:
    trace: tuple[Statement, ...]
    predicates: tuple[Predicate, ...]

    def __post_init__(self) -> None:
        if len(self.predicates) != len(self.trace) + 1:
            raise ValueError("an assertion sequence has one more predicate than the trace has statements")

    @property
    def proves_infeasible(self) -> bool:
        return self.predicates[-1].is_false

    def first_false(self) -> Optional[int]:
        for i, p in enumerate(self.predicates):
            if p.is_false:
                return i
        return None

    def __str__(self) -> str:
        parts = [f"{{{self.predicates[0]}}}"]
        for s, p in zip(self.trace, self.predicates[1:]):
            parts.append(f"  {s}")
            parts.append(f"{{{p}}}")
        return "\n".join(parts)


@dataclass(frozen=True)
class Feasible:
    trace: tuple[Statement, ...]
    execution: Execution
    havoc_values: tuple[int, ...] = ()


@dataclass(frozen=True)
class Infeasible:
    sequence: AssertionSequence

    @property
    def index(self) -> int:
        """Position of the statement after which false holds."""
        k = self.sequence.first_false()
        assert k is not None
        return k - 1


@dataclass(frozen=True)
class Unknown:
    reason: str


TraceResult = Union[Feasible, Infeasible, Unknown]


def simplify_cube(cube: Iterable[linsolve.Atom], budget: int) -> list[linsolve.Atom]:
    """Drop atoms entailed by a single other atom of the cube."""
    atoms = sorted(cube)
    kept = list(atoms)
    for a in atoms:
        others = [b for b in kept if b != a]
        if any(linsolve.entails(Predicate.atom(b), Predicate.atom(a), budget) is True for b in others):
            kept.remove(a)
    return kept


@lru_cache(maxsize=1 << 14)
def simplify(p: Predicate, budget: int = linsolve.DEFAULT_BUDGET) -> Predicate:
    if p.is_false or p.is_true:
        return p
    return Predicate.of([simplify_cube(c, budget) for c in p.cubes])


def analyze_trace(
    trace: Sequence[Statement],
    budget: int = linsolve.DEFAULT_BUDGET,
    variables: Iterable[str] = (),
) -> TraceResult:
    trace = tuple(trace)
    preds = [TRUE]
    for i, s in enumerate(trace):
        nxt = sp(preds[-1], s, budget)
        if nxt.is_false:
            preds.append(FALSE)
            preds += [FALSE] * (len(trace) - i - 1)
            simple = tuple(simplify(p, budget) for p in preds)
            return Infeasible(AssertionSequence(trace, simple))
        preds.append(nxt)
    return _witness(trace, budget, variables)


def _witness(trace: tuple[Statement, ...], budget: int, variables: Iterable[str]) -> TraceResult:
    """Solve the SSA path formula and replay its model concretely."""
    names = set(variables)
    for s in trace:
        names |= statement_vars(s)
    version = {v: f"{v}@0" for v in sorted(names)}
    havocs: list[str] = []
    counter = 0
    formula = TRUE
    for s in trace:
        for part in flatten(s):
            if isinstance(part, Assume):
                formula = formula & from_bexpr(part.cond).rename(version)
            elif isinstance(part, Assign):
                counter += 1
                new = f"{part.target}@{counter}"
                formula = formula & Predicate.atom(eq(LinExpr.var(new) - part.expr.rename(version)))
                version[part.target] = new
            else:
                assert isinstance(part, Havoc)
                counter += 1
                new = f"{part.target}@{counter}"
                havocs.append(new)
                version[part.target] = new
            formula = _prune(formula, budget)
            if formula.is_false:
                return Unknown("no-proof")
    result = linsolve.check_sat(formula, budget)
    if result.unknown:
        return Unknown(result.reason or "solver-budget")
    if result.unsat:
        # infeasible, but the projected postconditions never reached false
        return Unknown("no-proof")
    model = result.model or {}
    init = {v: model.get(f"{v}@0", 0) for v in sorted(names)}
    values = tuple(model.get(h, 0) for h in havocs)
    run = execute_trace(trace, init, values)
    if not isinstance(run, Execution):
        return Unknown("replay-failed")
    return Feasible(trace, run, values)


# -- Hoare triples ------------------------------------------------------------------


def check_hoare(
    phi: Predicate,
    s: Statement,
    psi: Predicate,
    domain: Optional[Domain] = None,
    budget: int = linsolve.DEFAULT_BUDGET,
) -> Optional[bool]:
    """Validity of {phi} s {psi}: exact by default, abstract when ``domain`` is given.

    Abstract mode falls back to exact mode when a predicate is not
    representable in the domain; it never answers None itself.
    """
    if phi.is_false or psi.is_true:
        return True
    if domain is not None:
        pre = _abstract(domain, phi)
        post = _abstract(domain, psi)
        if pre is not None and post is not None:
            return abstract_hoare(domain, pre, s, post)
    return linsolve.entails(sp(phi, s, budget), psi, budget)


def _abstract(domain: Domain, p: Predicate) -> Optional[list[Any]]:
    out = []
    for cube in p.sorted_cubes():
        a = domain.from_predicate(Predicate.cube(cube))
        if a is None:
            return None
        out.append(a)
    return out


def abstract_hoare(domain: Domain, pre: Sequence[Any], s: Statement, post: Sequence[Any]) -> bool:
    """Every pre disjunct maps under the abstract post below some post disjunct."""
    for a in pre:
        b = domain.post(a, s)
        if domain.is_bottom(b):
            continue
        if not any(domain.leq(b, c) for c in post):
            return False
    return True


# -- automata from assertion sequences ---------------------------------------------


def automaton_from_sequence(
    seq: AssertionSequence,
    alphabet: Iterable[Statement] = (),
    budget: int = linsolve.DEFAULT_BUDGET,
    max_checks: int = DEFAULT_HOARE_BUDGET,
    deadline: Optional[float] = None,
) -> FloydHoareAutomaton:
    """The linear automaton of the sequence, generalized by exact Hoare checks."""
    if not seq.proves_infeasible:
        raise ValueError("the sequence does not prove infeasibility")
    index: dict[Predicate, int] = {}
    for p in seq.predicates:
        index.setdefault(p, len(index))
    preds = list(index)
    state_of = [index[p] for p in seq.predicates]
    sigma = sorted({*alphabet, *seq.trace}, key=str)
    false_q = index[FALSE]
    trans = {
        (state_of[i], str(s), state_of[i + 1]): Transition(state_of[i], s, state_of[i + 1])
        for i, s in enumerate(seq.trace)
    }
    for s in sigma:
        trans.setdefault((false_q, str(s), false_q), Transition(false_q, s, false_q))
    # edges into a true state are free; the rest cost one entailment check each
    trues = [r for r, psi in enumerate(preds) if psi.is_true]
    targets = [r for r, psi in enumerate(preds) if not psi.is_true]
    checks = 0
    for q, phi in enumerate(preds):
        if q == false_q:
            continue
        for s in sigma:
            letter = str(s)
            for r in trues:
                trans.setdefault((q, letter, r), Transition(q, s, r))
            if checks >= max_checks:
                continue
            post: Optional[Predicate] = None
            for r in targets:
                if (q, letter, r) in trans:
                    continue
                if checks >= max_checks:
                    break
                checks += 1
                _check_deadline(deadline)
                if post is None:
                    post = sp(phi, s, budget)
                if linsolve.entails(post, preds[r], budget) is True:
                    trans[(q, letter, r)] = Transition(q, s, r)
    return FloydHoareAutomaton.build(
        range(len(preds)),
        trans.values(),
        0,
        [false_q],
        dict(enumerate(preds)),
        sigma,
    )


# -- automata from path-program fixpoints ----------------------------------------------


def automaton_from_pathprogram(
    pp: PathProgram,
    ann: Annotation,
    alphabet: Iterable[Statement] = (),
    enhance: bool = True,
    max_checks: int = DEFAULT_HOARE_BUDGET,
    deadline: Optional[float] = None,
) -> FloydHoareAutomaton:
    """One state per distinct fixpoint predicate; optionally enhanced over the alphabet."""
    dom = ann.domain
    prog = pp.automaton
    if not ann.is_bottom(pp.error):
        raise AssertionError("the path program is not proven safe")
    preds: list[Predicate] = []
    values: list[tuple[Any, ...]] = []
    state: dict[int, int] = {}
    order = [prog.initial] + [q for q in prog.locations if q != prog.initial]
    for loc in order:
        p = TRUE if loc == prog.initial else ann.predicate(loc)
        if p not in preds:
            preds.append(p)
            values.append((dom.top(),) if loc == prog.initial else tuple(ann.at(loc)))
        state[loc] = preds.index(p)
    false_q = state[pp.error]
    trans = {}
    for e in prog.edges:
        t = Transition(state[e.src], e.stmt, state[e.dst])
        trans[t.key] = t
    sigma = sorted({*alphabet, *prog.alphabet}, key=str)
    n = len(preds)
    if enhance and len(sigma) * n * n <= max_checks:
        for q in range(n):
            for s in sigma:
                _check_deadline(deadline)
                posts = [dom.post(a, s) for a in values[q]]
                for r in range(n):
                    if q == false_q and r != q:
                        continue
                    key = (q, str(s), r)
                    if key in trans:
                        continue
                    if all(dom.is_bottom(b) or any(dom.leq(b, c) for c in values[r]) for b in posts):
                        trans[key] = Transition(q, s, r)
    return FloydHoareAutomaton.build(
        range(n),
        trans.values(),
        0,
        [false_q],
        {i: (FALSE if i == false_q else p) for i, p in enumerate(preds)},
        sigma,
        abstract_edges=trans.keys(),
        domain=dom.name,
    )


# -- audit -----------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditIssue:
    transition: Transition
    result: Optional[bool]


def hoare_audit(
    a: FloydHoareAutomaton,
    domain: Optional[Domain] = None,
    budget: int = linsolve.DEFAULT_BUDGET,
) -> list[AuditIssue]:
    """Transitions that are not shown Hoare-valid (result False) or stay undecided (None).

    Abstract edges are checked in ``domain`` when one is supplied.
    """
    issues = []
    for t in a.transitions:
        phi, psi = a.predicate(t.src), a.predicate(t.dst)
        use = domain if (domain is not None and t.key in a.abstract_edges) else None
        ok = check_hoare(phi, t.stmt, psi, use, budget)
        if ok is not True:
            issues.append(AuditIssue(t, ok))
    return issues
