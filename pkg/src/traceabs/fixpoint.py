"""Worklist fixpoint engine over program automata.

Each location holds at most ``cap`` disjuncts.  Loop heads (targets of DFS
back-edges) switch from join to widening after ``widen_delay`` updates, and a
single descending pass recovers bounds lost to widening.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Iterable

from .domains import Domain
from .linsolve import FALSE, Predicate
from .program import Edge, ProgramAutomaton, back_edge_targets, reverse_postorder

Disjuncts = tuple[Any, ...]


@dataclass
class Annotation:
    domain: Domain
    values: dict[int, Disjuncts]
    cap: int
    iterations: int = 0
    narrowed: bool = False
    widening_points: frozenset[int] = field(default_factory=frozenset)

    def at(self, loc: int) -> Disjuncts:
        return self.values.get(loc, ())

    def joined(self, loc: int) -> Any:
        return self.domain.join_all(self.at(loc))

    def is_bottom(self, loc: int) -> bool:
        return all(self.domain.is_bottom(d) for d in self.at(loc))

    def predicate(self, loc: int) -> Predicate:
        out = FALSE
        for d in self.at(loc):
            out = out | self.domain.to_predicate(d)
        return out

    def covers(self, loc: int, value: Any) -> bool:
        """``value`` lies below a single disjunct at ``loc``."""
        if self.domain.is_bottom(value):
            return True
        return any(self.domain.leq(value, d) for d in self.at(loc))

    def show(self) -> str:
        return "\n".join(f"{loc}: {self.predicate(loc)}" for loc in sorted(self.values))


def _normalize(domain: Domain, values: Iterable[Any], cap: int) -> Disjuncts:
    out: list[Any] = []
    for v in values:
        if domain.is_bottom(v) or any(domain.leq(v, w) for w in out):
            continue
        out = [w for w in out if not domain.leq(w, v)]
        out.append(v)
    while len(out) > cap:
        # merge policy: join the two most recent disjuncts
        b = out.pop()
        a = out.pop()
        out.append(domain.join(a, b))
        out = list(_normalize(domain, out, len(out)))
    return tuple(out)


class _Engine:
    def __init__(self, p: ProgramAutomaton, domain: Domain, widen_delay: int, cap: int):
        self.p = p
        self.d = domain
        self.k = widen_delay
        self.cap = cap
        self.order = {q: i for i, q in enumerate(reverse_postorder(p))}
        self.heads = back_edge_targets(p)
        self.incoming: dict[int, list[Edge]] = {q: [] for q in p.locations}
        for e in p.edges:
            self.incoming[e.dst].append(e)
        self.iterations = 0

    def equation(self, x: dict[int, Disjuncts], loc: int) -> list[Any]:
        vals: list[Any] = []
        if loc == self.p.initial:
            vals.append(self.d.top())
        for e in self.incoming[loc]:
            for a in x.get(e.src, ()):
                vals.append(self.d.post(a, e.stmt))
        return vals

    def ascend(self) -> dict[int, Disjuncts]:
        d, p = self.d, self.p
        x: dict[int, Disjuncts] = {q: () for q in p.locations}
        updates = {q: 0 for q in p.locations}
        queue = [(self.order[p.initial], p.initial)]
        queued = {p.initial}
        # safety net against non-monotone merging: beyond this, widen everywhere
        limit = 50 * (len(p.edges) + 1) * max(1, len(p.variables)) * self.cap
        while queue:
            _, loc = heapq.heappop(queue)
            queued.discard(loc)
            self.iterations += 1
            new = self.equation(x, loc)
            old = x[loc]
            widen_here = loc in self.heads or self.iterations > limit
            if widen_here:
                if old and all(any(d.leq(v, w) for w in old) for v in new if not d.is_bottom(v)):
                    continue
                updates[loc] += 1
                if updates[loc] <= self.k:
                    nxt = _normalize(d, list(old) + new, self.cap)
                else:
                    j_old = d.join_all(old)
                    nxt = (d.widen(j_old, d.join(j_old, d.join_all(new))),)
                    nxt = tuple(v for v in nxt if not d.is_bottom(v))
            else:
                nxt = _normalize(d, new, self.cap)
                if nxt == old:
                    continue
            x[loc] = nxt
            for e in p.out_edges(loc):
                if e.dst not in queued:
                    queued.add(e.dst)
                    heapq.heappush(queue, (self.order[e.dst], e.dst))
        return x

    def descend(self, x: dict[int, Disjuncts], passes: int) -> dict[int, Disjuncts]:
        """Decreasing iteration from the widened post-fixpoint.

        Every location is re-evaluated from its equation; a widening point
        may shrink at most ``passes`` times, which bounds the sequence.
        """
        p = self.p
        y = dict(x)
        shrunk = {q: 0 for q in self.heads}
        queue = [(self.order[q], q) for q in p.locations]
        heapq.heapify(queue)
        queued = set(p.locations)
        while queue:
            _, loc = heapq.heappop(queue)
            queued.discard(loc)
            self.iterations += 1
            nxt = _normalize(self.d, self.equation(y, loc), self.cap)
            if nxt == y[loc]:
                continue
            if loc in shrunk:
                if shrunk[loc] >= passes:
                    continue
                shrunk[loc] += 1
            y[loc] = nxt
            for e in p.out_edges(loc):
                if e.dst not in queued:
                    queued.add(e.dst)
                    heapq.heappush(queue, (self.order[e.dst], e.dst))
        return y


def analyze(
    p: ProgramAutomaton,
    domain: Domain,
    widen_delay: int = 3,
    disjuncts: int = 1,
    narrowing: bool = True,
    narrowing_passes: int = 1,
) -> Annotation:
    if disjuncts < 1:
        raise ValueError("disjunct cap must be positive")
    if widen_delay < 0:
        raise ValueError("widening delay must be non-negative")
    eng = _Engine(p, domain, widen_delay, disjuncts)
    x = eng.ascend()
    ann = Annotation(domain, x, disjuncts, widening_points=frozenset(eng.heads))
    if narrowing and narrowing_passes > 0:
        y = eng.descend(x, narrowing_passes)
        narrowed = Annotation(domain, y, disjuncts, widening_points=ann.widening_points)
        if inductive(narrowed, p):
            ann = narrowed
            ann.narrowed = True
    ann.iterations = eng.iterations
    return ann


def inductive(ann: Annotation, p: ProgramAutomaton) -> bool:
    """Every edge maps every disjunct below a single disjunct of its target; the entry holds top."""
    d = ann.domain
    if not ann.covers(p.initial, d.top()):
        return False
    for e in p.edges:
        for a in ann.at(e.src):
            if not ann.covers(e.dst, d.post(a, e.stmt)):
                return False
    return True


def violations(ann: Annotation, p: ProgramAutomaton) -> list[tuple[Edge, Any]]:
    d = ann.domain
    return [
        (e, a) for e in p.edges for a in ann.at(e.src) if not ann.covers(e.dst, d.post(a, e.stmt))
    ]


def is_safe(ann: Annotation, p: ProgramAutomaton) -> bool:
    return all(ann.is_bottom(q) for q in p.errors)


def reanalyze(ann: Annotation, p: ProgramAutomaton) -> Annotation:
    """One round of the equations seeded with ``ann``; equal to ``ann`` at a fixpoint."""
    eng = _Engine(p, ann.domain, 0, ann.cap)
    nxt = {q: _normalize(ann.domain, eng.equation(ann.values, q), ann.cap) for q in p.locations}
    return Annotation(ann.domain, nxt, ann.cap, widening_points=ann.widening_points)
