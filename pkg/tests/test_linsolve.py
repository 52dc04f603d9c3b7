from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import VARS, box_predicate, grid, pred_mask, random_predicate
from traceabs.frontend import parse_bexpr
from traceabs.linsolve import (
    FALSE,
    TRUE,
    ExternalSolver,
    Predicate,
    check_sat,
    eliminate,
    entails,
    equivalent,
    from_bexpr,
    make_atom,
    project,
    to_smtlib,
)
from traceabs.syntax import eval_bool


def P(text: str) -> Predicate:
    return from_bexpr(parse_bexpr(text))


def test_contradiction_unsat():
    assert check_sat(P("x == 0 && x >= 100")).unsat


def test_sat_model():
    r = check_sat(P("x >= 1 && x <= 99"))
    assert r.sat and 1 <= r.model["x"] <= 99


def test_integer_parity_unsat():
    # 2x = 1 normalizes to false before the solver sees it
    assert make_atom("eq", {"x": 2}, 1) is False
    assert check_sat(Predicate.cube([make_atom("eq", {"x": 2, "y": -2}, 1)])).unsat


def test_rational_sat_integer_unsat():
    # 1 <= 3x <= 2 has rational but no integer solutions
    p = Predicate.cube([make_atom("le", {"x": 3}, 2), make_atom("le", {"x": -3}, -1)])
    assert check_sat(p).unsat


def test_entails_examples():
    assert entails(P("x == 0 && y == 42"), P("y == 42")) is True
    assert entails(P("x >= 0 && x <= 100 && y == 42"), P("x <= 100")) is True
    assert entails(P("x <= 100"), P("x <= 99")) is False
    assert entails(P("x <= 3"), FALSE) is False
    assert entails(P("x <= 3 && x >= 4"), FALSE) is True
    assert entails(P("x >= 5"), P("x >= 7 || x <= 6")) is True


def test_eliminate_examples():
    p = Predicate.cube([make_atom("eq", {"x'": 1}, 0), make_atom("eq", {"x": 1, "x'": -1}, 1)])
    assert equivalent(eliminate(p, "x'"), P("x == 1"))
    assert equivalent(eliminate(P("x <= y && y <= 10"), "y"), P("x <= 10"))


def test_eliminate_through_congruence():
    # exists k. x = 2k  is  x even
    p = Predicate.cube([make_atom("eq", {"x": 1, "k": -2}, 0)])
    q, exact = project(p, "k")
    assert exact
    assert equivalent(q, Predicate.cube([make_atom("cong", {"x": 1}, 0, 2)]))


def test_smtlib_shape():
    text = to_smtlib(P("x >= 1 && 2*x + y <= 7"))
    assert text.startswith("(set-logic QF_LIA)")
    assert "(declare-const x Int)" in text and "(check-sat)" in text


def test_external_solver_parses_answers():
    class Proc:
        def __init__(self, out):
            self.stdout = out

    s = ExternalSolver(runner=lambda *a, **k: Proc("unsat\n"))
    assert s.check(P("x >= 1")).unsat
    s = ExternalSolver(runner=lambda *a, **k: Proc("sat\n(model)\n"))
    assert s.check(P("x >= 1")).sat
    missing = ExternalSolver(command=("definitely-not-a-solver-binary",))
    assert missing.check(P("x >= 1")).unknown


LO, HI = -50, 50


def test_check_sat_against_enumeration():
    """500 random predicates over at most three variables, checked on the box."""
    rng = random.Random(20240611)
    grids = {n: grid(VARS[:n], LO, HI) for n in (1, 2, 3)}
    disagreements = []
    unknown = 0
    for i in range(500):
        n = rng.choice([1, 2, 2, 3])
        variables = VARS[:n]
        p = random_predicate(rng, variables)
        boxed = p & box_predicate(variables, LO, HI)
        r = check_sat(boxed)
        truth = bool(pred_mask(p, grids[n]).any())
        if r.unknown:
            unknown += 1
            continue
        if r.sat != truth:
            disagreements.append((i, str(p), r.status))
        if r.sat:
            model = {v: r.model.get(v, 0) for v in variables}
            assert boxed.holds(model), (str(p), model)
    assert not disagreements
    assert unknown <= 25


def test_entails_against_enumeration():
    rng = random.Random(77)
    g = grid(VARS[:2], -20, 20)
    box = box_predicate(VARS[:2], -20, 20)
    for _ in range(150):
        p = random_predicate(rng, VARS[:2]) & box
        q = random_predicate(rng, VARS[:2], max_cubes=2, max_atoms=2)
        verdict = entails(p, q)
        if verdict is None:
            continue
        truth = not (pred_mask(p, g) & ~pred_mask(q, g)).any()
        assert verdict == truth, (str(p), str(q))


def test_projection_against_enumeration():
    rng = random.Random(5)
    g3 = grid(VARS, -10, 10)
    checked = 0
    for _ in range(60):
        p = random_predicate(rng, VARS, max_cubes=1) & box_predicate(VARS, -10, 10)
        q, exact = project(p, "z")
        if not exact:
            continue
        models = pred_mask(p, g3).reshape(21, 21, 21).any(axis=2).ravel()
        g2 = grid(VARS[:2], -10, 10)
        assert np.array_equal(pred_mask(q, g2), models), (str(p), str(q))
        checked += 1
    assert checked >= 30


@settings(max_examples=60, deadline=None)
@given(st.integers(-30, 30), st.integers(-30, 30), st.integers(1, 6))
def test_from_bexpr_agrees_with_evaluation(x, y, k):
    b = parse_bexpr(f"(x != {k} || y < x) && !(x + y >= {2 * k})")
    assert from_bexpr(b).holds({"x": x, "y": y}) == eval_bool(b, {"x": x, "y": y})


def test_true_false_constants():
    assert TRUE.is_true and FALSE.is_false
    assert (TRUE & FALSE).is_false
    assert (TRUE | FALSE).is_true
