"""Concrete semantics: states, the successor relation, trace execution.

``oracle_feasible`` enumerates a finite box exhaustively.  It is exponential
and exists only as ground truth for tests of the symbolic machinery.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .syntax import (
    Assign,
    Assume,
    BoolExpr,
    Havoc,
    LinExpr,
    Seq,
    Statement,
    eval_bool,
    flatten,
    statement_vars,
)

State = dict[str, int]
Box = Mapping[str, tuple[int, int]]


class EnumerationLimit(Exception):
    """The box enumeration would exceed the configured cap."""


def evaluate(expr: Union[LinExpr, BoolExpr], state: Mapping[str, int]) -> Union[int, bool]:
    if isinstance(expr, LinExpr):
        return expr.evaluate(state)
    return eval_bool(expr, state)


def _dedup(states: Iterable[State]) -> list[State]:
    seen: set[tuple] = set()
    out = []
    for s in states:
        k = tuple(sorted(s.items()))
        if k not in seen:
            seen.add(k)
            out.append(s)
    return out


def step(s: Statement, state: Mapping[str, int], box: Optional[Box] = None) -> list[State]:
    """All successors of ``state`` under ``s``.

    Havoc needs a ``box`` giving the range its target may take.
    """
    if isinstance(s, Assume):
        return [dict(state)] if eval_bool(s.cond, state) else []
    if isinstance(s, Assign):
        nxt = dict(state)
        nxt[s.target] = s.expr.evaluate(state)
        return [nxt]
    if isinstance(s, Havoc):
        if box is None or s.target not in box:
            raise ValueError(f"havoc {s.target} needs a bounded box")
        lo, hi = box[s.target]
        return [{**state, s.target: v} for v in range(lo, hi + 1)]
    mids = step(s.first, state, box)
    return _dedup(t for m in mids for t in step(s.second, m, box))


@dataclass(frozen=True)
class Execution:
    trace: tuple[Statement, ...]
    states: tuple[dict, ...]

    def __post_init__(self) -> None:
        if len(self.states) != len(self.trace) + 1:
            raise ValueError("an execution has one more state than its trace has statements")


@dataclass(frozen=True)
class Infeasible:
    index: int


def _apply(s: Statement, state: State, choices: Iterator[int]) -> Optional[State]:
    cur: Optional[State] = dict(state)
    for part in flatten(s):
        if cur is None:
            return None
        if isinstance(part, Havoc):
            cur[part.target] = next(choices, 0)
        else:
            nxt = step(part, cur)
            cur = nxt[0] if nxt else None
    return cur


def execute_trace(
    trace: Sequence[Statement], init: Mapping[str, int], havoc_values: Iterable[int] = ()
) -> Union[Execution, Infeasible]:
    """Run a trace from ``init``; havocs consume ``havoc_values`` in order (0 when exhausted)."""
    choices = iter(havoc_values)
    states = [dict(init)]
    for i, s in enumerate(trace):
        nxt = _apply(s, states[-1], choices)
        if nxt is None:
            return Infeasible(i)
        states.append(nxt)
    return Execution(tuple(trace), tuple(states))


def replay(execution: Execution) -> bool:
    """Check every adjacent state pair against the successor relation."""
    for i, s in enumerate(execution.trace):
        pre, post = execution.states[i], execution.states[i + 1]
        if not _related(s, pre, post):
            return False
    return True


def _related(s: Statement, pre: Mapping[str, int], post: Mapping[str, int]) -> bool:
    parts = flatten(s)
    # havoc targets are free; re-run with the values the post state implies
    frontier = [dict(pre)]
    for k, part in enumerate(parts):
        nxt = []
        for st in frontier:
            if isinstance(part, Havoc):
                later_reads = any(part.target in statement_vars(p) for p in parts[k + 1:])
                if later_reads:
                    raise ValueError("replay of a havoc whose value is read later in the same block")
                nxt.append({**st, part.target: post[part.target]})
            else:
                nxt.extend(step(part, st))
        frontier = nxt
    return any(st == dict(post) for st in frontier)


def live_in(trace: Sequence[Statement]) -> list[str]:
    """Variables read before being written along the trace, in first-read order."""
    written: set[str] = set()
    out: list[str] = []

    def read(vs: Iterable[str]) -> None:
        for v in sorted(vs):
            if v not in written and v not in out:
                out.append(v)

    for s in trace:
        for part in flatten(s):
            if isinstance(part, Assume):
                read(statement_vars(part))
            elif isinstance(part, Assign):
                read(part.expr.variables)
                written.add(part.target)
            elif isinstance(part, Havoc):
                written.add(part.target)
    return out


def oracle_feasible(trace: Sequence[Statement], box: Box, cap: int = 2_000_000) -> bool:
    """Exhaustive search for an execution with initial and havoc values in ``box``.

    Variables missing from ``box`` use the range of ``box["*"]`` when present.
    """
    def rng(v: str) -> tuple[int, int]:
        if v in box:
            return box[v]
        if "*" in box:
            return box["*"]
        raise ValueError(f"no range for variable {v}")

    inputs = live_in(trace)
    size = 1
    for v in inputs:
        lo, hi = rng(v)
        size *= max(0, hi - lo + 1)
    if size > cap:
        raise EnumerationLimit(f"{size} initial states exceed the cap of {cap}")
    budget = [cap]
    parts = [p for s in trace for p in flatten(s)]
    ranges = [range(rng(v)[0], rng(v)[1] + 1) for v in inputs]
    for values in itertools.product(*ranges):
        if _search(parts, 0, dict(zip(inputs, values)), rng, budget):
            return True
    return False


def _search(parts: list[Statement], i: int, state: State, rng, budget: list[int]) -> bool:
    budget[0] -= 1
    if budget[0] < 0:
        raise EnumerationLimit("havoc enumeration exceeded the cap")
    if i == len(parts):
        return True
    p = parts[i]
    if isinstance(p, Havoc):
        lo, hi = rng(p.target)
        return any(_search(parts, i + 1, {**state, p.target: v}, rng, budget) for v in range(lo, hi + 1))
    if isinstance(p, Assume):
        if not eval_bool(p.cond, _total(state, p)):
            return False
        return _search(parts, i + 1, state, rng, budget)
    assert isinstance(p, Assign)
    nxt = dict(state)
    nxt[p.target] = p.expr.evaluate(_total(state, p))
    return _search(parts, i + 1, nxt, rng, budget)


def _total(state: State, s: Statement) -> State:
    # dead variables (never read before written) default to 0; they cannot matter
    missing = statement_vars(s) - state.keys()
    if not missing:
        return state
    return {**state, **{v: 0 for v in missing}}


__all__ = [
    "Execution",
    "Infeasible",
    "EnumerationLimit",
    "evaluate",
    "step",
    "execute_trace",
    "replay",
    "oracle_feasible",
    "live_in",
]
