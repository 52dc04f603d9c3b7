"""Path programs induced by counterexample runs, and the cache of analyzed ones."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .automata import Run
from .program import Edge, ProgramAutomaton, cyclic_edges


@dataclass(frozen=True)
class PathProgram:
    automaton: ProgramAutomaton
    error: int

    @cached_property
    def key(self) -> str:
        edges = sorted(f"{e.src}\t{e.stmt}\t{e.dst}" for e in self.automaton.edges)
        return f"error={self.error}\n" + "\n".join(edges)

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self.automaton.edges

    @property
    def locations(self) -> tuple[int, ...]:
        return self.automaton.locations


def has_loop(run: Run, p: ProgramAutomaton) -> bool:
    """The run revisits a location, or one of its statements labels an edge on a cycle of ``p``."""
    if len(set(run.locations)) < len(run.locations):
        return True
    on_cycle = {label for _, label, _ in cyclic_edges(p)}
    return any(str(s) in on_cycle for s in run.word)


def traversed_edges(run: Run, p: ProgramAutomaton) -> list[Edge]:
    edges = []
    for q, s, r in run.triples():
        match = [e for e in p.out_edges(q) if e.dst == r and e.stmt == s]
        if not match:
            raise ValueError(f"run step {q} -[{s}]-> {r} is not an edge of the program")
        edges.append(match[0])
    return edges


def extract(run: Run, p: ProgramAutomaton, by_label: bool = False) -> PathProgram:
    """The sub-automaton of ``p`` induced by ``run``.

    By default its edges are the ones the run traverses.  With ``by_label``
    every edge of ``p`` whose label occurs in the run is kept, restricted to
    the part reachable from the initial location.
    """
    error = run.locations[-1]
    if error not in p.errors:
        raise ValueError("the run does not end in an error location")
    if by_label:
        labels = {str(s) for s in run.word}
        candidate = ProgramAutomaton.build(
            [e for e in p.edges if str(e.stmt) in labels], p.initial, [error], p.variables
        )
        keep = candidate.reachable() & candidate.coreachable()
        edges = [e for e in candidate.edges if e.src in keep and e.dst in keep]
    else:
        edges = traversed_edges(run, p)
    sub = ProgramAutomaton.build(edges, p.initial, [error], p.variables)
    return PathProgram(sub, error)


@dataclass
class PathProgramCache:
    keys: set[str] = field(default_factory=set)

    def seen_before(self, pp: PathProgram) -> bool:
        return pp.key in self.keys

    def remember(self, pp: PathProgram) -> None:
        self.keys.add(pp.key)

    def __len__(self) -> int:
        return len(self.keys)


def seen_before(cache: PathProgramCache, pp: PathProgram) -> bool:
    return cache.seen_before(pp)


def remember(cache: PathProgramCache, pp: PathProgram) -> None:
    cache.remember(pp)
