from __future__ import annotations

import itertools

import pytest

from conftest import REF, TAU1, TAU2, word
from traceabs.automata import accepts
from traceabs.domains import make_domain
from traceabs.fixpoint import analyze
from traceabs.frontend import parse_bexpr, parse_statement
from traceabs.linsolve import FALSE, TRUE, Predicate, entails, equivalent, from_bexpr
from traceabs.refine import (
    AssertionSequence,
    Feasible,
    Infeasible,
    automaton_from_pathprogram,
    automaton_from_sequence,
    analyze_trace,
    check_hoare,
    hoare_audit,
    sp,
)
from traceabs.semantics import oracle_feasible, replay


def P(text: str) -> Predicate:
    return from_bexpr(parse_bexpr(text))


def S(text: str):
    return parse_statement(text)


def test_sp_examples():
    assert equivalent(sp(TRUE, S("x := 0; y := 42")), P("x == 0 && y == 42"))
    assert equivalent(sp(P("x == 0 && y == 42"), S("x := x + 1")), P("x == 1 && y == 42"))
    assert sp(P("x == 1 && y == 42"), S("assume(x >= 100)")).is_false
    assert equivalent(sp(P("x >= 3"), S("havoc x")), TRUE)


def test_tau1_proof_sequence():
    r = analyze_trace(word(TAU1))
    assert isinstance(r, Infeasible)
    preds = r.sequence.predicates
    assert preds[0].is_true
    assert equivalent(preds[1], P("x == 0 && y == 42"))
    assert preds[2].is_false and preds[3].is_false
    assert r.index == 1
    # the weaker sequence from the text is valid as well
    weak = [TRUE, P("x == 0"), FALSE, FALSE]
    for i, s in enumerate(word(TAU1)):
        assert check_hoare(weak[i], s, weak[i + 1]) is True


def test_tau2_proof_sequence():
    r = analyze_trace(word(TAU2))
    assert isinstance(r, Infeasible)
    assert r.index == 4
    assert equivalent(r.sequence.predicates[3], P("x == 1 && y == 42"))


@pytest.mark.parametrize("texts", [TAU1, TAU2])
def test_sequences_are_hoare_valid(texts):
    seq = analyze_trace(word(texts)).sequence
    for i, s in enumerate(seq.trace):
        assert check_hoare(seq.predicates[i], s, seq.predicates[i + 1]) is True


def test_feasible_trace_has_witness():
    r = analyze_trace(word(["havoc x", "assume(x == 7)"]))
    assert isinstance(r, Feasible)
    assert r.execution.states[-1]["x"] == 7
    assert replay(r.execution)


def test_feasible_through_loop_body():
    texts = ["x := 0", "assume(x < 3)", "x := x + 1", "assume(x < 3)", "x := x + 1", "assume(x == 2)"]
    r = analyze_trace(word(texts))
    assert isinstance(r, Feasible) and r.execution.states[-1]["x"] == 2


def test_check_hoare_abstract():
    d = make_domain("interval", ("x", "y"))
    inv = P("x >= 0 && x <= 100 && y == 42")
    assert check_hoare(inv, S("y := 42"), inv, d) is True
    assert check_hoare(inv, S("x := x + 1"), inv, d) is False
    assert check_hoare(FALSE, S("x := x + 1"), FALSE) is True


def test_sequence_automaton_generalizes(p1):
    seq = analyze_trace(word(TAU1)).sequence
    a = automaton_from_sequence(seq, p1.alphabet)
    assert accepts(a, word(TAU1))
    sigma = list(p1.alphabet)
    for s in sigma:
        assert accepts(a, word(TAU1[:2]) + (s,))
    # every accepted word up to length 4 is infeasible
    box = {"*": (-3, 3), "x": (-3, 103), "y": (-3, 45)}
    for n in range(5):
        for w in itertools.product(sigma, repeat=n):
            if accepts(a, w):
                assert not oracle_feasible(w, box), [str(s) for s in w]
    assert not hoare_audit(a)


def test_single_contradiction_two_states():
    seq = analyze_trace(word(["assume(false)"])).sequence
    a = automaton_from_sequence(seq, word(["x := 1", "assume(false)"]))
    assert len(a) == 2
    false_q = next(iter(a.accepting))
    assert {str(t.stmt) for t in a.transitions if t.src == t.dst == false_q} == {"x := 1", "assume(false)"}


def test_equal_predicates_share_a_state():
    seq = AssertionSequence(word(["assume(x > 0)", "y := y", "assume(x < 0)"]),
                            (TRUE, P("x >= 1"), P("x >= 1"), FALSE))
    a = automaton_from_sequence(seq)
    assert len(a) == 3


def _tau2_ann(tau2_pp):
    return analyze(tau2_pp.automaton, make_domain("interval", tau2_pp.automaton.variables))


def test_unenhanced_automaton_mirrors_path_program(tau2_pp, p1):
    a = automaton_from_pathprogram(tau2_pp, _tau2_ann(tau2_pp), p1.alphabet, enhance=False)
    assert len(a) == 6
    assert len(a.transitions) == len(tau2_pp.edges)
    assert a.predicate(a.initial).is_true
    assert not hoare_audit(a)


def test_enhanced_automaton_self_loops(tau2_pp, p1):
    ann = _tau2_ann(tau2_pp)
    a = automaton_from_pathprogram(tau2_pp, ann, p1.alphabet, enhance=True)
    sigma = list(p1.alphabet)
    state = {}
    for ref_loc in (0, 1, 2, 3, 6, 7):
        loc = REF[ref_loc]
        p = TRUE if ref_loc == 0 else (FALSE if ref_loc == 7 else ann.predicate(loc))
        state[ref_loc] = next(q for q in a.states if a.predicate(q) == p)
    inc = S("x := x + 1")
    for s in sigma:
        assert a.has_transition(state[0], s, state[0])
        assert a.has_transition(state[7], s, state[7])
        for ref_loc in (1, 2):
            assert a.has_transition(state[ref_loc], s, state[ref_loc]) == (s != inc), (ref_loc, str(s))
    assert not a.has_transition(state[1], inc, state[1])
    assert not hoare_audit(a)
    assert not hoare_audit(a, make_domain("interval", p1.variables))


def test_shared_predicates_merge():
    from traceabs.pathprog import PathProgram
    from traceabs.program import Edge, ProgramAutomaton

    edges = [Edge(0, S("x := 5"), 1), Edge(1, S("y := y + 1"), 2), Edge(2, S("assume(x != 5)"), 3)]
    pp = PathProgram(ProgramAutomaton.build(edges, 0, [3], ("x", "y")), 3)
    ann = analyze(pp.automaton, make_domain("interval", ("x", "y")))
    assert ann.predicate(1) == ann.predicate(2)
    a = automaton_from_pathprogram(pp, ann, enhance=False)
    assert len(a) == len(pp.locations) - 1
