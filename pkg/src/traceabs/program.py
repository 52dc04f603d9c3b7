"""Program automata: control-flow graphs whose accepting states are error locations."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .syntax import Statement


@dataclass(frozen=True)
class Edge:
    src: int
    stmt: Statement
    dst: int

    @property
    def key(self) -> tuple[int, str, int]:
        return (self.src, str(self.stmt), self.dst)

    def __str__(self) -> str:
        return f"{self.src} -[{self.stmt}]-> {self.dst}"


@dataclass(frozen=True)
class ProgramAutomaton:
    """A labeled graph (Loc, delta, l0) with designated error locations.

    ``variables`` is the declared variable set V, in declaration order.
    """

    locations: tuple[int, ...]
    edges: tuple[Edge, ...]
    initial: int
    errors: frozenset[int]
    variables: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        locs = set(self.locations)
        if self.initial not in locs:
            raise ValueError("initial location not in location set")
        if not self.errors <= locs:
            raise ValueError("error locations not in location set")
        for e in self.edges:
            if e.src not in locs or e.dst not in locs:
                raise ValueError(f"edge {e} has an endpoint outside the location set")

    @staticmethod
    def build(
        edges: Iterable[Edge],
        initial: int,
        errors: Iterable[int],
        variables: Iterable[str] = (),
        extra_locations: Iterable[int] = (),
    ) -> ProgramAutomaton:
        edges = tuple(sorted(set_of_edges(edges), key=lambda e: e.key))
        locs = {initial, *errors, *extra_locations}
        for e in edges:
            locs.update((e.src, e.dst))
        return ProgramAutomaton(tuple(sorted(locs)), edges, initial, frozenset(errors), tuple(variables))

    @cached_property
    def _out(self) -> dict[int, tuple[Edge, ...]]:
        out: dict[int, list[Edge]] = {q: [] for q in self.locations}
        for e in self.edges:
            out[e.src].append(e)
        return {q: tuple(es) for q, es in out.items()}

    @cached_property
    def _by_letter(self) -> dict[tuple[int, Statement], tuple[int, ...]]:
        table: dict[tuple[int, Statement], list[int]] = {}
        for e in self.edges:
            table.setdefault((e.src, e.stmt), []).append(e.dst)
        return {k: tuple(sorted(set(v))) for k, v in table.items()}

    def out_edges(self, loc: int) -> tuple[Edge, ...]:
        return self._out.get(loc, ())

    def in_edges(self, loc: int) -> list[Edge]:
        return [e for e in self.edges if e.dst == loc]

    def step(self, loc: int, stmt: Statement) -> tuple[int, ...]:
        return self._by_letter.get((loc, stmt), ())

    def is_accepting(self, loc: int) -> bool:
        return loc in self.errors

    @property
    def accepting(self) -> frozenset[int]:
        return self.errors

    @property
    def states(self) -> tuple[int, ...]:
        return self.locations

    @cached_property
    def alphabet(self) -> tuple[Statement, ...]:
        """Edge labels, sorted by canonical serialization."""
        return tuple(sorted({e.stmt for e in self.edges}, key=str))

    def reachable(self) -> set[int]:
        seen = {self.initial}
        todo = deque([self.initial])
        while todo:
            q = todo.popleft()
            for e in self.out_edges(q):
                if e.dst not in seen:
                    seen.add(e.dst)
                    todo.append(e.dst)
        return seen

    def coreachable(self) -> set[int]:
        preds: dict[int, list[int]] = {}
        for e in self.edges:
            preds.setdefault(e.dst, []).append(e.src)
        seen = set(self.errors)
        todo = deque(sorted(self.errors))
        while todo:
            q = todo.popleft()
            for p in preds.get(q, ()):
                if p not in seen:
                    seen.add(p)
                    todo.append(p)
        return seen

    def __str__(self) -> str:
        lines = [f"initial {self.initial}; errors {sorted(self.errors)}"]
        lines += [f"  {e}" for e in self.edges]
        return "\n".join(lines)


def set_of_edges(edges: Iterable[Edge]) -> list[Edge]:
    seen: dict[tuple[int, str, int], Edge] = {}
    for e in edges:
        seen.setdefault(e.key, e)
    return list(seen.values())


def cyclic_edges(p: ProgramAutomaton) -> set[tuple[int, str, int]]:
    """Keys of edges lying on some cycle (both endpoints in one SCC)."""
    scc = strongly_connected(p.locations, [(e.src, e.dst) for e in p.edges])
    return {e.key for e in p.edges if scc[e.src] == scc[e.dst]}


def strongly_connected(nodes: Iterable[int], arcs: Iterable[tuple[int, int]]) -> dict[int, int]:
    """Tarjan's algorithm, iterative; maps each node to a component id."""
    succ: dict[int, list[int]] = {}
    nodes = list(nodes)
    for n in nodes:
        succ[n] = []
    for a, b in arcs:
        succ[a].append(b)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    comp: dict[int, int] = {}
    stack: list[int] = []
    on_stack: set[int] = set()
    counter = 0
    ncomp = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, i = work[-1]
            if i < len(succ[v]):
                work[-1] = (v, i + 1)
                w = succ[v][i]
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, 0))
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
    return comp


def back_edge_targets(p: ProgramAutomaton) -> set[int]:
    """Targets of DFS back-edges from the initial location; cuts every reachable cycle."""
    heads: set[int] = set()
    state: dict[int, int] = {}  # 1 = on stack, 2 = done
    work = [(p.initial, iter(sorted(p.out_edges(p.initial), key=lambda e: e.key)))]
    state[p.initial] = 1
    while work:
        v, it = work[-1]
        e = next(it, None)
        if e is None:
            state[v] = 2
            work.pop()
            continue
        w = e.dst
        s = state.get(w)
        if s is None:
            state[w] = 1
            work.append((w, iter(sorted(p.out_edges(w), key=lambda e: e.key))))
        elif s == 1:
            heads.add(w)
    return heads


def reverse_postorder(p: ProgramAutomaton) -> list[int]:
    order: list[int] = []
    seen = {p.initial}
    work = [(p.initial, iter(sorted(p.out_edges(p.initial), key=lambda e: e.key)))]
    while work:
        v, it = work[-1]
        e = next(it, None)
        if e is None:
            order.append(v)
            work.pop()
            continue
        if e.dst not in seen:
            seen.add(e.dst)
            work.append((e.dst, iter(sorted(p.out_edges(e.dst), key=lambda e: e.key))))
    order.reverse()
    rest = [q for q in p.locations if q not in seen]
    return order + rest
