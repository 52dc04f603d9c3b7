from __future__ import annotations

import random

import pytest

from conftest import ROOT, TAU1, TAU2, program_words, word
from oracles import nfa_accepts, words
from traceabs.automata import (
    FloydHoareAutomaton,
    Transition,
    accepts,
    empty_automaton,
    inclusion_counterexample,
    to_dot,
    union,
)
from traceabs.frontend import parse_statement
from traceabs.linsolve import TRUE
from traceabs.program import Edge, ProgramAutomaton


def linear(w, alphabet=()):
    """An automaton accepting exactly ``w``."""
    ts = [Transition(i, s, i + 1) for i, s in enumerate(w)]
    return FloydHoareAutomaton.build(range(len(w) + 1), ts, 0, [len(w)], alphabet=alphabet)


def test_accepts_program(p1):
    assert accepts(p1, word(TAU1))
    assert not accepts(p1, word(TAU1[:1]))


def test_empty_word():
    a = linear(())
    assert accepts(a, ())
    assert not accepts(empty_automaton(), ())


def test_union_language_and_size():
    w1, w2 = word(TAU1), word(TAU2)
    a, b = linear(w1), linear(w2)
    u = union(a, b)
    assert len(u) == len(a) + len(b) + 1
    assert accepts(u, w1) and accepts(u, w2)
    assert not accepts(u, w1[:2]) and not accepts(u, w2 + w1)
    e = union(a, empty_automaton())
    for n in range(5):
        for w in words(sorted(set(w1), key=str), n):
            assert accepts(e, w) == accepts(a, w)


def test_repeated_union_keeps_languages():
    pieces = [linear(word(TAU1)), linear(word(TAU2)), linear(word(TAU1[:1]))]
    u = empty_automaton()
    for piece in pieces:
        u = union(u, piece)
    rebuilt = FloydHoareAutomaton.build(u.states, u.transitions, u.initial, u.accepting, u.annotation, u.alphabet)
    for w in (TAU1, TAU2, TAU1[:1], TAU2[:3]):
        assert accepts(u, word(w)) == accepts(rebuilt, word(w)) == (w in (TAU1, TAU2, TAU1[:1]))


def test_first_counterexample_is_tau1(p1):
    run = inclusion_counterexample(p1, empty_automaton(p1.alphabet))
    assert [str(s) for s in run.word] == TAU1
    assert run.valid_in(p1)


def test_second_counterexample_is_tau2(p1):
    run = inclusion_counterexample(p1, linear(word(TAU1), p1.alphabet))
    assert [str(s) for s in run.word] == TAU2


def test_no_counterexample_when_included():
    p = ProgramAutomaton.build([Edge(0, parse_statement("x := 1"), 1)], 0, [1])
    d = linear(word(["x := 1"]))
    assert inclusion_counterexample(p, d) is None


def test_enhanced_with_tau1_covers_p1(p1, enhanced_p1):
    a_d = union(enhanced_p1, linear(word(TAU1), p1.alphabet))
    assert inclusion_counterexample(p1, a_d) is None
    ws = program_words(p1, 12)
    assert len(ws) > 3
    assert all(accepts(a_d, w) for w in ws)


# -- randomized comparison against enumeration ---------------------------------------

LETTERS = [parse_statement(t) for t in ("assume(x <= 0)", "assume(x <= 1)", "x := 2")]


def _random_pair(rng: random.Random):
    n_p, n_d = rng.randint(1, 4), rng.randint(1, 4)
    pe = [
        Edge(q, s, rng.randrange(n_p))
        for q in range(n_p)
        for s in LETTERS
        if rng.random() < 0.45
    ]
    p = ProgramAutomaton.build(pe, 0, rng.sample(range(n_p), rng.randint(1, n_p)), extra_locations=range(n_p))
    dt = [
        Transition(q, s, r)
        for q in range(n_d)
        for s in LETTERS
        for r in range(n_d)
        if rng.random() < 0.3
    ]
    d = FloydHoareAutomaton.build(range(n_d), dt, 0, rng.sample(range(n_d), rng.randint(0, n_d)), alphabet=LETTERS)
    return p, d


def _as_delta(a, states, trans):
    delta = {}
    for src, s, dst in trans:
        delta.setdefault((src, str(s)), set()).add(dst)
    return delta


def test_inclusion_against_enumeration():
    rng = random.Random(424242)
    names = sorted(str(s) for s in LETTERS)
    checked = 0
    for _ in range(200):
        p, d = _random_pair(rng)
        pd = _as_delta(p, p.locations, [(e.src, e.stmt, e.dst) for e in p.edges])
        dd = _as_delta(d, d.states, [(t.src, t.stmt, t.dst) for t in d.transitions])
        shortest = None
        for w in words(names, 8):
            if nfa_accepts(p.initial, p.errors, pd, w) and not nfa_accepts(d.initial, d.accepting, dd, w):
                shortest = w
                break
        run = inclusion_counterexample(p, d)
        if run is None:
            assert shortest is None
            continue
        got = tuple(str(s) for s in run.word)
        assert run.valid_in(p) and run.locations[-1] in p.errors
        assert not accepts(d, run.word)
        if shortest is not None:
            assert len(got) == len(shortest)
            assert got == shortest, (got, shortest)
            checked += 1
        else:
            assert len(got) > 8
    assert checked > 50


# -- DOT -------------------------------------------------------------------------------


def test_dot_empty():
    text = to_dot(empty_automaton(), "A")
    assert text.count("shape=circle") == 1 and "->" in text


def test_dot_enhanced_regression(enhanced_p1):
    text = to_dot(enhanced_p1, "E")
    assert text == (ROOT / "tests" / "data" / "enhanced_p1.dot").read_text()
    nodes = [l for l in text.splitlines() if "[shape=" in l]
    assert len(nodes) == 7
    assert sum("doublecircle" in l for l in nodes) == 1
    assert any("doublecircle" in l and "false" in l for l in nodes)


def test_dot_program_deterministic(p1):
    assert to_dot(p1, "P1") == to_dot(p1, "P1")
    assert to_dot(p1, "P1").count("doublecircle") == 1


def test_union_is_disjunction_on_random_words():
    rng = random.Random(7)
    names = {str(s): s for s in LETTERS}
    for _ in range(100):
        _, a = _random_pair(rng)
        _, b = _random_pair(rng)
        u = union(a, b)
        for _ in range(20):
            w = tuple(names[rng.choice(sorted(names))] for _ in range(rng.randint(0, 6)))
            assert accepts(u, w) == (accepts(a, w) or accepts(b, w))
