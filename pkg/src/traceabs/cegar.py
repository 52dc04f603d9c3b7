"""The refinement loop: trace abstraction with abstract-interpretation refinement."""

from __future__ import annotations

import enum
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterator, Optional, Sequence, TextIO

from .automata import (
    FloydHoareAutomaton,
    Run,
    accepts,
    empty_automaton,
    inclusion_counterexample,
    union,
)
from .domains import DOMAINS, make_domain
from .fixpoint import analyze, is_safe
from .pathprog import PathProgramCache, extract, has_loop
from .program import ProgramAutomaton
from .refine import (
    Feasible,
    Infeasible,
    Unknown,
    analyze_trace,
    automaton_from_pathprogram,
    automaton_from_sequence,
    hoare_audit,
)
from .syntax import Statement


@dataclass(frozen=True)
class Config:
    domain: str = "comp"
    use_ai: bool = True
    enhance: bool = True
    widen_delay: int = 3
    disjuncts: int = 1
    narrowing_passes: int = 1
    max_iterations: int = 200
    timeout: float = 90.0
    solver_budget: int = 10_000
    pp_by_label: bool = False
    hoare_budget: int = 5000
    audit: bool = False

    def __post_init__(self) -> None:
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        for name in ("disjuncts", "max_iterations", "solver_budget", "hoare_budget"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.timeout <= 0 or self.widen_delay < 0 or self.narrowing_passes < 0:
            raise ValueError("limits must be positive")

    @property
    def setting(self) -> str:
        if not self.use_ai:
            return "plain"
        return self.domain + ("+enh" if self.enhance else "")


class Outcome(enum.Enum):
    SAFE = "SAFE"
    UNSAFE = "UNSAFE"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    counterexample: Optional[Feasible] = None
    reason: Optional[str] = None

    def __str__(self) -> str:
        return self.outcome.value


@dataclass
class IterationRecord:
    iter: int
    trace_len: int
    has_loop: bool
    cache_hit: bool
    ai_used: bool
    ai_safe: bool
    a_d_states: int
    refinement: str = ""
    word: tuple[str, ...] = ()
    rejected_before: bool = True
    accepted_after: bool = True
    verdict: Optional[str] = None

    def to_json(self) -> dict:
        out = asdict(self)
        out["word"] = list(self.word)
        if self.verdict is None:
            del out["verdict"]
        return out


@dataclass
class RunStats:
    total_refinements: int = 0
    ai_refinements: int = 0
    useful_ai_refinements: int = 0
    wall_time: float = 0.0
    iterations: list[IterationRecord] = field(default_factory=list)
    hoare_violations: int = 0
    hoare_undecided: int = 0

    def summary(self) -> dict:
        return {
            "total_refinements": self.total_refinements,
            "ai_refinements": self.ai_refinements,
            "useful_ai_refinements": self.useful_ai_refinements,
        }


@dataclass
class Result:
    verdict: Verdict
    stats: RunStats
    automaton: FloydHoareAutomaton

    def __iter__(self) -> Iterator:
        return iter((self.verdict, self.stats))

    def report(self) -> dict:
        out = {"verdict": self.verdict.outcome.value, **self.stats.summary()}
        out["wall_ms"] = round(self.stats.wall_time * 1000, 3)
        if self.verdict.reason:
            out["reason"] = self.verdict.reason
        if self.verdict.counterexample is not None:
            cx = self.verdict.counterexample
            out["counterexample"] = {
                "trace": [str(s) for s in cx.trace],
                "states": [dict(sorted(st.items())) for st in cx.execution.states],
            }
        out["iterations"] = [r.to_json() for r in self.stats.iterations]
        return out


Refiner = Callable[[Run, Infeasible, FloydHoareAutomaton], FloydHoareAutomaton]


def verify(
    p: ProgramAutomaton,
    config: Config = Config(),
    log: Optional[TextIO] = None,
    refiner: Optional[Refiner] = None,
) -> Result:
    """Run the loop until inclusion holds, a feasible trace appears, or a limit is hit.

    ``refiner`` replaces the whole refinement step; it exists for testing the
    progress audit.
    """
    start = time.monotonic()
    deadline = start + config.timeout
    sigma: Sequence[Statement] = p.alphabet
    a_d = empty_automaton(sigma)
    cache = PathProgramCache()
    stats = RunStats()
    domain = make_domain(config.domain, p.variables)
    verdict: Optional[Verdict] = None

    def emit(rec: IterationRecord) -> None:
        stats.iterations.append(rec)
        if log is not None:
            log.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")

    try:
        for it in range(1, config.max_iterations + 1):
            if time.monotonic() > deadline:
                raise TimeoutError()
            run = inclusion_counterexample(p, a_d, deadline)
            if run is None:
                verdict = Verdict(Outcome.SAFE)
                emit(IterationRecord(it, 0, False, False, False, False, len(a_d), verdict="SAFE"))
                break
            result = analyze_trace(run.word, config.solver_budget, p.variables)
            loop = has_loop(run, p)
            rec = IterationRecord(
                it, len(run), loop, False, False, False, len(a_d), word=tuple(str(s) for s in run.word)
            )
            if isinstance(result, Feasible):
                verdict = Verdict(Outcome.UNSAFE, counterexample=result)
                rec.verdict = "UNSAFE"
                emit(rec)
                break
            if isinstance(result, Unknown):
                verdict = Verdict(Outcome.UNKNOWN, reason=result.reason)
                rec.verdict = "UNKNOWN"
                emit(rec)
                break
            assert isinstance(result, Infeasible)
            if refiner is not None:
                new = refiner(run, result, a_d)
                rec.refinement = "custom"
            else:
                new = _refine(p, run, result, loop, config, domain, cache, stats, rec, deadline)
            if config.audit:
                for issue in hoare_audit(new, None, config.solver_budget):
                    if issue.result is False:
                        stats.hoare_violations += 1
                    else:
                        stats.hoare_undecided += 1
            rec.rejected_before = not accepts(a_d, run.word)
            a_d = union(a_d, new)
            rec.accepted_after = accepts(a_d, run.word)
            stats.total_refinements += 1
            emit(rec)
        else:
            verdict = Verdict(Outcome.UNKNOWN, reason="iteration-limit")
    except TimeoutError:
        verdict = Verdict(Outcome.UNKNOWN, reason="time-limit")
    stats.wall_time = time.monotonic() - start
    if verdict.outcome is Outcome.UNKNOWN and not (stats.iterations and stats.iterations[-1].verdict):
        emit(IterationRecord(len(stats.iterations) + 1, 0, False, False, False, False, len(a_d), verdict="UNKNOWN"))
    return Result(verdict, stats, a_d)


def _refine(
    p: ProgramAutomaton,
    run: Run,
    result: Infeasible,
    loop: bool,
    config: Config,
    domain,
    cache: PathProgramCache,
    stats: RunStats,
    rec: IterationRecord,
    deadline: float,
) -> FloydHoareAutomaton:
    def fallback() -> FloydHoareAutomaton:
        rec.refinement = "sequence"
        return automaton_from_sequence(
            result.sequence, p.alphabet, config.solver_budget, config.hoare_budget, deadline
        )

    if not (loop and config.use_ai):
        return fallback()
    pp = extract(run, p, config.pp_by_label)
    if cache.seen_before(pp):
        rec.cache_hit = True
        return fallback()
    rec.ai_used = True
    stats.ai_refinements += 1
    ann = analyze(
        pp.automaton,
        domain,
        widen_delay=config.widen_delay,
        disjuncts=config.disjuncts,
        narrowing_passes=config.narrowing_passes,
    )
    cache.remember(pp)
    if not is_safe(ann, pp.automaton):
        return fallback()
    rec.ai_safe = True
    built = automaton_from_pathprogram(pp, ann, p.alphabet, config.enhance, config.hoare_budget, deadline)
    if not accepts(built, run.word):
        return fallback()
    stats.useful_ai_refinements += 1
    rec.refinement = "ai"
    return built


def progress_audit(log: Sequence[IterationRecord]) -> bool:
    """Each counterexample was rejected before its refinement and accepted after it."""
    words = set()
    for rec in log:
        if rec.verdict is not None:
            continue
        if not (rec.rejected_before and rec.accepted_after):
            return False
        if rec.word in words:
            return False
        words.add(rec.word)
    return True
