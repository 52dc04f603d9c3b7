"""Command-line entry point: ``verify`` single files and ``bench`` corpus directories."""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .automata import to_dot
from .cegar import Config, Outcome, Result, verify
from .domains import DOMAINS
from .frontend import ParseError, compile_program, expected_verdict

EXIT_CODES = {Outcome.SAFE: 0, Outcome.UNSAFE: 1, Outcome.UNKNOWN: 2}
EXIT_ERROR = 3

DEFAULT_SETTINGS = ("plain", "interval", "interval+enh", "octagon", "octagon+enh", "comp", "comp+enh")
CSV_COLUMNS = (
    "file",
    "setting",
    "verdict",
    "expected",
    "wall_ms",
    "total_refinements",
    "ai_refinements",
    "useful_ai_refinements",
)
SERIES_QUANTITIES = ("wall_ms", "total_refinements", "ai_refinements", "useful_ai_refinements")


def all_settings() -> list[str]:
    out = ["plain"]
    for d in DOMAINS:
        out += [d, d + "+enh"]
    return out


def setting_config(setting: str, base: Config) -> Config:
    """``plain`` is trace abstraction without AI; ``D`` and ``D+enh`` pick a domain."""
    if setting == "plain":
        return replace(base, use_ai=False, enhance=False)
    domain, plus, suffix = setting.partition("+")
    if domain not in DOMAINS or (plus and suffix != "enh"):
        raise ValueError(f"unknown setting {setting!r}; choose from {', '.join(all_settings())}")
    return replace(base, domain=domain, use_ai=True, enhance=bool(plus))


# -- verify -------------------------------------------------------------------


def format_counterexample(result: Result) -> str:
    cx = result.verdict.counterexample
    assert cx is not None
    out = io.StringIO()
    states = cx.execution.states
    out.write(f"state: {_fmt_state(states[0])}\n")
    for stmt, st in zip(cx.trace, states[1:]):
        out.write(f"  {stmt}\n")
        out.write(f"state: {_fmt_state(st)}\n")
    return out.getvalue()


def _fmt_state(st: dict) -> str:
    return ", ".join(f"{k}={v}" for k, v in sorted(st.items())) or "-"


def cmd_verify(args: argparse.Namespace) -> int:
    path = Path(args.file)
    try:
        config = _config_from_args(args)
        program = compile_program(path.read_text())
    except (OSError, ParseError, ValueError) as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    log = open(args.log, "w") if args.log else None
    try:
        result = verify(program, config, log=log)
    finally:
        if log is not None:
            log.close()
    outcome = result.verdict.outcome
    print(f"{outcome.value} {args.file}")
    if outcome is Outcome.UNKNOWN and result.verdict.reason:
        print(f"reason: {result.verdict.reason}", file=sys.stderr)
    if args.stats:
        Path(args.stats).write_text(json.dumps(result.report(), indent=2, sort_keys=True) + "\n")
    if args.dot:
        out = Path(args.dot)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{path.stem}.program.dot").write_text(to_dot(program, path.stem))
        (out / f"{path.stem}.data.dot").write_text(to_dot(result.automaton, f"{path.stem} A_D"))
    if outcome is Outcome.UNSAFE:
        cex = Path(args.cex) if args.cex else path.with_name(path.name + ".cex")
        cex.write_text(format_counterexample(result))
        print(f"counterexample: {cex}", file=sys.stderr)
    return EXIT_CODES[outcome]


def _config_from_args(args: argparse.Namespace) -> Config:
    cfg = Config(
        domain=args.domain,
        use_ai=not args.no_ai,
        enhance=args.enhance,
        widen_delay=args.widen_delay,
        disjuncts=args.disjuncts,
        narrowing_passes=args.narrowing_passes,
        max_iterations=args.max_iter,
        timeout=args.timeout,
        solver_budget=args.solver_budget,
        pp_by_label=args.pp_by_label,
        audit=getattr(args, "audit", False),
    )
    return cfg


# -- bench --------------------------------------------------------------------


class Status(enum.Enum):
    SUCCESS = "Success"
    TIMEOUT = "Timeout"
    ERROR = "Error"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class SampleResult:
    file: str
    setting: str
    verdict: str
    expected: str
    wall_ms: float
    total_refinements: int
    ai_refinements: int
    useful_ai_refinements: int
    status: Status
    wrong: bool = False
    detail: str = ""
    progress_ok: bool = True
    hoare_violations: int = 0

    def row(self, with_times: bool = True) -> list[str]:
        """CSV cells; without times, counters cut off by the clock are left empty too."""
        wall = f"{self.wall_ms:.1f}" if with_times else ""
        counts = [self.total_refinements, self.ai_refinements, self.useful_ai_refinements]
        cells = [str(c) for c in counts]
        if not with_times and self.status is Status.TIMEOUT:
            cells = ["", "", ""]
        return [self.file, self.setting, self.verdict, self.expected, wall, *cells]


def run_sample(path: str, setting: str, base: Config) -> SampleResult:
    """One isolated bench task.  Never raises; failures become ``Error``."""
    from .cegar import progress_audit

    name = Path(path).name
    try:
        source = Path(path).read_text()
    except OSError as exc:
        return _error(name, setting, "", str(exc))
    expected = expected_verdict(source) or ""
    if not expected:
        return _error(name, setting, expected, "missing @expect header")
    try:
        program = compile_program(source)
        result = verify(program, setting_config(setting, base))
    except Exception as exc:  # noqa: BLE001 - a crash is a counted outcome
        return _error(name, setting, expected, f"{type(exc).__name__}: {exc}")
    v = result.verdict
    wrong = v.outcome is not Outcome.UNKNOWN and v.outcome.value != expected
    if v.outcome is Outcome.UNKNOWN:
        status = Status.TIMEOUT if v.reason == "time-limit" else Status.UNKNOWN
    else:
        status = Status.ERROR if wrong else Status.SUCCESS
    s = result.stats
    return SampleResult(
        name,
        setting,
        v.outcome.value,
        expected,
        s.wall_time * 1000,
        s.total_refinements,
        s.ai_refinements,
        s.useful_ai_refinements,
        status,
        wrong=wrong,
        detail=v.reason or "",
        progress_ok=progress_audit(s.iterations),
        hoare_violations=s.hoare_violations,
    )


def _error(name: str, setting: str, expected: str, detail: str) -> SampleResult:
    return SampleResult(name, setting, "ERROR", expected, 0.0, 0, 0, 0, Status.ERROR, detail=detail)


def _run_task(task: tuple[str, str, Config]) -> SampleResult:
    return run_sample(*task)


def run_bench(
    files: Sequence[str], settings: Sequence[str], base: Config, jobs: int = 1
) -> list[SampleResult]:
    """Results in file order, then setting order, whatever the scheduling."""
    tasks = [(f, s, base) for f in files for s in settings]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_task, tasks))
    return [_run_task(t) for t in tasks]


@dataclass
class Summary:
    counts: dict[str, dict[Status, int]]
    exclusive: dict[str, int]
    portfolio: dict[Status, int]

    def success(self, setting: str) -> int:
        return self.counts[setting][Status.SUCCESS]


def summarize(results: Sequence[SampleResult], settings: Sequence[str]) -> Summary:
    counts = {s: {st: 0 for st in Status} for s in settings}
    by_file: dict[str, dict[str, SampleResult]] = {}
    for r in results:
        counts[r.setting][r.status] += 1
        by_file.setdefault(r.file, {})[r.setting] = r
    exclusive = {s: 0 for s in settings}
    portfolio = {st: 0 for st in Status}
    for per in by_file.values():
        solved = [s for s, r in per.items() if r.status is Status.SUCCESS]
        if len(solved) == 1:
            exclusive[solved[0]] += 1
        statuses = {r.status for r in per.values()}
        for st in (Status.SUCCESS, Status.TIMEOUT, Status.UNKNOWN, Status.ERROR):
            if st in statuses:
                portfolio[st] += 1
                break
    summary = Summary(counts, exclusive, portfolio)
    best = max((summary.success(s) for s in settings), default=0)
    assert portfolio[Status.SUCCESS] >= best, "portfolio must dominate every setting"
    return summary


def format_table(summary: Summary, settings: Sequence[str]) -> str:
    header = ["setting", "Success", "Timeout", "Error", "Unknown"]
    rows = []
    for s in settings:
        c = summary.counts[s]
        ok = f"{c[Status.SUCCESS]}" + (f" ({summary.exclusive[s]})" if summary.exclusive[s] else "")
        rows.append([s, ok, str(c[Status.TIMEOUT]), str(c[Status.ERROR]), str(c[Status.UNKNOWN])])
    p = summary.portfolio
    rows.append(["Portfolio", str(p[Status.SUCCESS]), str(p[Status.TIMEOUT]), str(p[Status.ERROR]), str(p[Status.UNKNOWN])])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    fmt = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))  # noqa: E731
    lines = [fmt(header), "  ".join("-" * w for w in widths)]
    lines += [fmt(r) for r in rows[:-1]]
    lines.append("  ".join("-" * w for w in widths))
    lines.append(fmt(rows[-1]))
    return "\n".join(lines) + "\n"


def results_csv(results: Sequence[SampleResult], with_times: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        w.writerow(r.row(with_times))
    return buf.getvalue()


def series_csv(results: Sequence[SampleResult], settings: Sequence[str], with_times: bool = True) -> str:
    """Per setting and quantity, the values over solved samples in ascending order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["setting", "quantity", "rank", "value"])
    quantities = SERIES_QUANTITIES if with_times else SERIES_QUANTITIES[1:]
    for s in settings:
        solved = [r for r in results if r.setting == s and r.status is Status.SUCCESS]
        for q in quantities:
            values = sorted(getattr(r, q) for r in solved)
            for rank, v in enumerate(values, 1):
                w.writerow([s, q, rank, f"{v:.1f}" if isinstance(v, float) else v])
    return buf.getvalue()


def cmd_bench(args: argparse.Namespace) -> int:
    root = Path(args.dir)
    if not root.is_dir():
        print(f"error: {root} is not a directory", file=sys.stderr)
        return EXIT_ERROR
    files = sorted(str(p) for p in root.glob("*.imp"))
    if not files:
        print(f"error: no .imp files in {root}", file=sys.stderr)
        return EXIT_ERROR
    settings = [s.strip() for s in args.settings.split(",") if s.strip()]
    try:
        base = _config_from_args(args)
        for s in settings:
            setting_config(s, base)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    results = run_bench(files, settings, base, args.jobs)
    summary = summarize(results, settings)
    with_times = not args.no_times
    sys.stdout.write(format_table(summary, settings))
    if args.csv:
        Path(args.csv).write_text(results_csv(results, with_times))
    if args.series:
        Path(args.series).write_text(series_csv(results, settings, with_times))
    wrong = [r for r in results if r.wrong]
    for r in wrong:
        print(f"WRONG {r.file} [{r.setting}]: got {r.verdict}, expected {r.expected}", file=sys.stderr)
    for r in results:
        if r.status is Status.ERROR and not r.wrong:
            print(f"error {r.file} [{r.setting}]: {r.detail}", file=sys.stderr)
        if not r.progress_ok:
            print(f"progress audit failed: {r.file} [{r.setting}]", file=sys.stderr)
    return 1 if wrong else 0


# -- argument parsing -----------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    d = Config()
    p.add_argument("--domain", choices=sorted(DOMAINS), default=d.domain)
    p.add_argument("--enhance", action=argparse.BooleanOptionalAction, default=d.enhance,
                   help="build the enhanced data automaton (default: on)")
    p.add_argument("--no-ai", action="store_true", help="plain trace abstraction")
    p.add_argument("--widen-delay", type=int, default=d.widen_delay)
    p.add_argument("--disjuncts", type=int, default=d.disjuncts)
    p.add_argument("--narrowing-passes", type=int, default=d.narrowing_passes)
    p.add_argument("--max-iter", type=int, default=d.max_iterations)
    p.add_argument("--timeout", type=float, default=d.timeout, help="seconds per run")
    p.add_argument("--solver-budget", type=int, default=d.solver_budget)
    p.add_argument("--pp-by-label", action="store_true",
                   help="path programs keep every edge whose label occurs in the trace")
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="traceabs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="verify one program")
    v.add_argument("file")
    _add_common(v)
    v.add_argument("--stats", metavar="FILE", help="write run statistics as JSON")
    v.add_argument("--dot", metavar="DIR", help="write the program and final data automaton as DOT")
    v.add_argument("--cex", metavar="FILE", help="counterexample path (default: FILE.cex)")
    v.add_argument("--log", metavar="FILE", help="per-iteration JSON lines")
    v.add_argument("--audit", action="store_true", help="check every data automaton edge")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="run a corpus directory under several settings")
    b.add_argument("dir")
    _add_common(b)
    b.add_argument("--settings", default=",".join(DEFAULT_SETTINGS),
                   help=f"comma-separated, from: {', '.join(all_settings())}")
    b.add_argument("--csv", metavar="FILE", help="per-sample results")
    b.add_argument("--series", metavar="FILE", help="sorted per-setting series")
    b.add_argument("--no-times", action="store_true",
                   help="leave wall-clock dependent cells empty, for reproducible CSV output")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs <= 0:
        print("error: --jobs must be positive", file=sys.stderr)
        return EXIT_ERROR
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
