"""Floyd-Hoare automata over the statement alphabet and language inclusion."""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Protocol, Sequence, Union

from .linsolve import FALSE, TRUE, Predicate
from .program import ProgramAutomaton
from .syntax import Statement


@dataclass(frozen=True)
class Transition:
    src: int
    stmt: Statement
    dst: int

    @property
    def key(self) -> tuple[int, str, int]:
        return (self.src, str(self.stmt), self.dst)


@dataclass(frozen=True)
class FloydHoareAutomaton:
    """An NFA whose states carry predicates.

    ``abstract_edges`` marks transitions justified by an abstract post in
    ``domain`` rather than by exact entailment; the audit checks them that way.
    """

    states: tuple[int, ...]
    transitions: tuple[Transition, ...]
    initial: int
    accepting: frozenset[int]
    annotation: Mapping[int, Predicate] = field(default_factory=dict)
    alphabet: tuple[Statement, ...] = ()
    abstract_edges: frozenset[tuple[int, str, int]] = frozenset()
    domain: Optional[str] = None

    def validate(self) -> None:
        qs = set(self.states)
        if self.initial not in qs or not self.accepting <= qs:
            raise ValueError("initial and accepting states must be states")
        for t in self.transitions:
            if t.src not in qs or t.dst not in qs:
                raise ValueError(f"transition {t.key} leaves the state set")

    @staticmethod
    def build(
        states: Iterable[int],
        transitions: Iterable[Transition],
        initial: int,
        accepting: Iterable[int],
        annotation: Optional[Mapping[int, Predicate]] = None,
        alphabet: Iterable[Statement] = (),
        abstract_edges: Iterable[tuple[int, str, int]] = (),
        domain: Optional[str] = None,
    ) -> FloydHoareAutomaton:
        uniq: dict[tuple[int, str, int], Transition] = {}
        for t in transitions:
            uniq.setdefault(t.key, t)
        ts = tuple(uniq[k] for k in sorted(uniq))
        sigma = tuple(sorted({*alphabet, *(t.stmt for t in ts)}, key=str))
        out = FloydHoareAutomaton(
            tuple(sorted(set(states))),
            ts,
            initial,
            frozenset(accepting),
            dict(annotation or {}),
            sigma,
            frozenset(k for k in abstract_edges if k in uniq),
            domain,
        )
        out.validate()
        return out

    @cached_property
    def _rows(self) -> dict[str, list[tuple[int, ...]]]:
        """Per letter, the successor tuple of every state (indexed by state number)."""
        size = max(self.states, default=-1) + 1
        sets: dict[str, dict[int, set[int]]] = {}
        for t in self.transitions:
            sets.setdefault(str(t.stmt), {}).setdefault(t.src, set()).add(t.dst)
        rows = {}
        for letter, succ in sets.items():
            row: list[tuple[int, ...]] = [()] * size
            for q, dsts in succ.items():
                row[q] = tuple(sorted(dsts))
            rows[letter] = row
        return rows

    def step(self, q: int, stmt: Statement) -> tuple[int, ...]:
        return self.step_key(q, str(stmt))

    def step_key(self, q: int, letter: str) -> tuple[int, ...]:
        row = self._rows.get(letter)
        if row is None or not 0 <= q < len(row):
            return ()
        return row[q]

    def is_accepting(self, q: int) -> bool:
        return q in self.accepting

    def predicate(self, q: int) -> Predicate:
        return self.annotation.get(q, TRUE)

    def has_transition(self, src: int, stmt: Statement, dst: int) -> bool:
        return dst in self.step(src, stmt)

    def __len__(self) -> int:
        return len(self.states)

    def reachable(self) -> set[int]:
        seen = {self.initial}
        todo = deque([self.initial])
        succ: dict[int, list[int]] = {}
        for t in self.transitions:
            succ.setdefault(t.src, []).append(t.dst)
        while todo:
            q = todo.popleft()
            for r in succ.get(q, ()):
                if r not in seen:
                    seen.add(r)
                    todo.append(r)
        return seen

    def well_formed(self) -> bool:
        """Initial state annotated true and accepting states false (when annotated)."""
        if not self.annotation:
            return True
        if not self.predicate(self.initial).is_true:
            return False
        return all(self.predicate(q).is_false for q in self.accepting)


class _Acceptor(Protocol):
    initial: int

    def step(self, q: int, stmt: Statement) -> tuple[int, ...]: ...

    def is_accepting(self, q: int) -> bool: ...


@dataclass(frozen=True)
class Run:
    """Alternating locations and statements ``q0 s0 q1 ... qn``."""

    locations: tuple[int, ...]
    word: tuple[Statement, ...]

    def __post_init__(self) -> None:
        if len(self.locations) != len(self.word) + 1:
            raise ValueError("a run has one more location than statements")

    def __len__(self) -> int:
        return len(self.word)

    def triples(self) -> list[tuple[int, Statement, int]]:
        return [(self.locations[i], s, self.locations[i + 1]) for i, s in enumerate(self.word)]

    def valid_in(self, a: _Acceptor) -> bool:
        if not self.locations or self.locations[0] != a.initial:
            return False
        return all(r in a.step(q, s) for q, s, r in self.triples())


def empty_automaton(alphabet: Iterable[Statement] = ()) -> FloydHoareAutomaton:
    return FloydHoareAutomaton.build([0], [], 0, [], {0: TRUE}, alphabet)


def accepts(a: _Acceptor, word: Sequence[Statement]) -> bool:
    current = {a.initial}
    rows = a._rows if isinstance(a, FloydHoareAutomaton) else None
    for s in word:
        if rows is not None:
            row = rows.get(str(s))
            if row is None:
                return False
            nxt: set[int] = set()
            for q in current:
                nxt.update(row[q])
            current = nxt
        else:
            current = {r for q in current for r in a.step(q, s)}
        if not current:
            return False
    return any(a.is_accepting(q) for q in current)


def union(a: FloydHoareAutomaton, b: FloydHoareAutomaton) -> FloydHoareAutomaton:
    """Disjoint union under a fresh initial state that copies both initial out-transitions.

    States of ``a`` keep their numbers when they are dense, ``b`` follows, and
    the fresh initial state comes last.  Repeated unions therefore only copy
    the new operand's transitions.
    """
    if a.states != tuple(range(len(a.states))):
        a = _renumbered(a)
    n_a = len(a.states)
    n_b = len(b.states)
    fresh = n_a + n_b
    ren_b = {q: n_a + i for i, q in enumerate(b.states)}
    new_b = [Transition(ren_b[t.src], t.stmt, ren_b[t.dst]) for t in b.transitions]
    abstract = set(a.abstract_edges)
    for t_old, t_new in zip(b.transitions, new_b):
        if t_old.key in b.abstract_edges:
            abstract.add(t_new.key)
    copies = []
    for t in (*(t for t in a.transitions if t.src == a.initial), *(t for t in new_b if t.src == ren_b[b.initial])):
        c = Transition(fresh, t.stmt, t.dst)
        copies.append(c)
        if t.key in abstract:
            abstract.add(c.key)
    accepting = set(a.accepting) | {ren_b[q] for q in b.accepting}
    ann: dict[int, Predicate] = {}
    if a.annotation or b.annotation:
        ann = dict(a.annotation)
        ann.update({ren_b[q]: p for q, p in b.annotation.items()})
        ann[fresh] = TRUE
    if a.initial in a.accepting or b.initial in b.accepting:
        accepting.add(fresh)
        if ann:
            ann[fresh] = FALSE
    sigma = a.alphabet
    if any(x not in set(a.alphabet) for x in b.alphabet):
        sigma = tuple(sorted({*a.alphabet, *b.alphabet}, key=str))
    out = FloydHoareAutomaton(
        tuple(range(fresh + 1)),
        a.transitions + tuple(new_b) + tuple(copies),
        fresh,
        frozenset(accepting),
        ann,
        sigma,
        frozenset(abstract),
        a.domain or b.domain,
    )
    # extend the parent's successor rows instead of rebuilding them
    pad = [()] * (n_b + 1)
    rows = {letter: row + pad for letter, row in a._rows.items()}
    for t in (*new_b, *copies):
        letter = str(t.stmt)
        row = rows.get(letter)
        if row is None:
            row = rows[letter] = [()] * (fresh + 1)
        if t.dst not in row[t.src]:
            row[t.src] = tuple(sorted((*row[t.src], t.dst)))
    out.__dict__["_rows"] = rows
    return out


def _renumbered(a: FloydHoareAutomaton) -> FloydHoareAutomaton:
    ren = {q: i for i, q in enumerate(a.states)}
    trans = [Transition(ren[t.src], t.stmt, ren[t.dst]) for t in a.transitions]
    abstract = [
        (ren[t.src], str(t.stmt), ren[t.dst]) for t in a.transitions if t.key in a.abstract_edges
    ]
    return FloydHoareAutomaton.build(
        range(len(a.states)),
        trans,
        ren[a.initial],
        [ren[q] for q in a.accepting],
        {ren[q]: p for q, p in a.annotation.items()},
        a.alphabet,
        abstract,
        a.domain,
    )


Subset = frozenset[int]


class InclusionChecker:
    """Breadth-first search of A_P x det(A_D) for an A_P word rejected by A_D."""

    def __init__(
        self, program: ProgramAutomaton, data: FloydHoareAutomaton, deadline: Optional[float] = None
    ):
        self.p = program
        self.deadline = deadline
        self.d = data
        self._succ: dict[tuple[Subset, str], Subset] = {}
        self._letters = {e.stmt: str(e.stmt) for e in program.edges}
        # per location: out-edges sorted by label, then target
        self._out = {
            q: sorted(program.out_edges(q), key=lambda e: (self._letters[e.stmt], e.dst))
            for q in program.locations
        }
        self.explored = 0
        letters = set(self._letters.values())
        # accepting states looping on every program letter accept all continuations
        self._universal = frozenset(
            q for q in data.accepting if all(q in data.step_key(q, a) for a in letters)
        )

    def _step(self, subset: Subset, letter: str) -> Subset:
        key = (subset, letter)
        hit = self._succ.get(key)
        if hit is None:
            row = self.d._rows.get(letter)
            out: set[int] = set()
            if row is not None:
                for q in subset:
                    out.update(row[q])
            hit = frozenset(out)
            self._succ[key] = hit
        return hit

    def _rejecting(self, loc: int, subset: Subset) -> bool:
        return self.p.is_accepting(loc) and not (subset & self.d.accepting)

    def counterexample(self) -> Optional[Run]:
        start = (self.p.initial, frozenset({self.d.initial}))
        parent: dict[tuple[int, Subset], Optional[tuple[tuple[int, Subset], Statement]]] = {start: None}
        if self._rejecting(*start):
            return self._run(start, parent)
        # antichain: a node whose subset contains an earlier subset at the same
        # location cannot yield a smaller counterexample
        seen: dict[int, list[Subset]] = {start[0]: [start[1]]}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            self.explored += 1
            if self.deadline is not None and self.explored % 512 == 0 and time.monotonic() > self.deadline:
                raise TimeoutError("inclusion check exceeded the deadline")
            loc, subset = node
            for e in self._out[loc]:
                nxt_set = self._step(subset, self._letters[e.stmt])
                if nxt_set & self._universal:
                    continue
                nxt = (e.dst, nxt_set)
                if nxt in parent:
                    continue
                earlier = seen.setdefault(e.dst, [])
                if any(v <= nxt_set for v in earlier):
                    continue
                earlier.append(nxt_set)
                parent[nxt] = (node, e.stmt)
                if self._rejecting(*nxt):
                    return self._run(nxt, parent)
                queue.append(nxt)
        return None

    @staticmethod
    def _run(node, parent) -> Run:
        locs = [node[0]]
        word: list[Statement] = []
        while parent[node] is not None:
            node, stmt = parent[node]
            locs.append(node[0])
            word.append(stmt)
        return Run(tuple(reversed(locs)), tuple(reversed(word)))


def inclusion_counterexample(
    program: ProgramAutomaton, data: FloydHoareAutomaton, deadline: Optional[float] = None
) -> Optional[Run]:
    """None iff L(program) is a subset of L(data); otherwise a shortest witness run of ``program``.

    Ties between shortest words go to the lexicographically least sequence of
    statement serializations.
    """
    return InclusionChecker(program, data, deadline).counterexample()


# -- DOT -----------------------------------------------------------------------


def _esc(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _label_set(stmts: list[str], sigma: list[str]) -> str:
    if sigma and len(stmts) == len(sigma):
        return "Σ"
    missing = [s for s in sigma if s not in set(stmts)]
    if sigma and len(stmts) > len(sigma) // 2 and missing and len(missing) <= 3:
        return "Σ∖{" + ", ".join(missing) + "}"
    return "\n".join(stmts)


def to_dot(a: Union[FloydHoareAutomaton, ProgramAutomaton], name: str = "A") -> str:
    """Deterministic GraphViz rendering; predicates appear in the node labels."""
    lines = [f'digraph "{_esc(name)}" {{', "  rankdir=TB;", '  __start [shape=point, label=""];']
    if isinstance(a, ProgramAutomaton):
        states, initial = a.locations, a.initial
        triples = [(e.src, str(e.stmt), e.dst) for e in a.edges]
        sigma = [str(s) for s in a.alphabet]
        labels = {q: f"ℓ{q}" for q in states}
    else:
        states, initial = a.states, a.initial
        triples = [t.key for t in a.transitions]
        sigma = [str(s) for s in a.alphabet]
        labels = {q: f"q{q}: {a.annotation[q]}" if q in a.annotation else f"q{q}" for q in states}
    for q in states:
        shape = "doublecircle" if a.is_accepting(q) else "circle"
        lines.append(f'  n{q} [shape={shape}, label="{_esc(labels[q])}"];')
    lines.append(f"  __start -> n{initial};")
    grouped: dict[tuple[int, int], list[str]] = {}
    for src, letter, dst in triples:
        grouped.setdefault((src, dst), []).append(letter)
    for (src, dst) in sorted(grouped):
        text = _esc(_label_set(sorted(set(grouped[(src, dst)])), sigma)).replace("\n", "\\n")
        lines.append(f'  n{src} -> n{dst} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
