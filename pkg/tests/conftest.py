from __future__ import annotations

from pathlib import Path

import pytest

from traceabs.frontend import compile_program, parse_statement

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
P1_SOURCE = (CORPUS / "p1.imp").read_text()

TAU1 = ["x := 0; y := 42", "assume(x >= 100)", "assume(x != 100 || y != 42)"]
TAU2 = [
    "x := 0; y := 42",
    "assume(x < 100)",
    "x := x + 1",
    "assume(y > 0)",
    "assume(x >= 100)",
    "assume(x != 100 || y != 42)",
]


def word(texts):
    return tuple(parse_statement(t) for t in texts)


@pytest.fixture
def p1():
    return compile_program(P1_SOURCE)


def run_of(p, texts):
    """The unique run of a deterministic program automaton on a word."""
    from traceabs.automata import Run

    w = word(texts)
    locs = [p.initial]
    for s in w:
        nxt = p.step(locs[-1], s)
        assert len(nxt) == 1, (locs[-1], str(s), nxt)
        locs.append(nxt[0])
    return Run(tuple(locs), w)


# reference location names for the lowered P1 (reference -> ours)
REF = {0: 0, 1: 1, 2: 2, 3: 4, 4: 6, 6: 3, 7: 5}


@pytest.fixture
def tau2_pp(p1):
    from traceabs.pathprog import extract

    return extract(run_of(p1, TAU2), p1)


@pytest.fixture
def enhanced_p1(tau2_pp, p1):
    from traceabs.domains import make_domain
    from traceabs.fixpoint import analyze
    from traceabs.refine import automaton_from_pathprogram

    ann = analyze(tau2_pp.automaton, make_domain("interval", p1.variables))
    return automaton_from_pathprogram(tau2_pp, ann, p1.alphabet, enhance=True)


def program_words(p, max_len):
    """Every word of length <= max_len that leads ``p`` from its initial location to an error."""
    out = []

    def walk(loc, prefix):
        if loc in p.errors:
            out.append(tuple(prefix))
        if len(prefix) == max_len:
            return
        for e in p.out_edges(loc):
            walk(e.dst, prefix + [e.stmt])

    walk(p.initial, [])
    return out


# -- acceptance report ----------------------------------------------------------------

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}: {text}")
