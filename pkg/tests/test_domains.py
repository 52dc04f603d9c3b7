from __future__ import annotations

import random
import zlib

import pytest

from traceabs.domains import DOMAINS, make_domain
from traceabs.domains.congruence import cong_join, cong_leq, cong_meet
from traceabs.frontend import parse_bexpr, parse_statement
from traceabs.linsolve import Predicate, entails, equivalent, from_bexpr, make_atom
from traceabs.semantics import step
from traceabs.syntax import Assign, Assume, Havoc, LinExpr, seq

XY = ("x", "y")


def P(text: str) -> Predicate:
    return from_bexpr(parse_bexpr(text))


def val(d, text: str):
    v = d.from_predicate(P(text))
    assert v is not None, text
    return v


def test_bottom_below_everything():
    for name in DOMAINS:
        d = make_domain(name, XY)
        assert d.leq(d.bottom(), d.top())
        assert d.leq(d.bottom(), d.bottom())
        assert d.is_bottom(d.join(d.bottom(), d.bottom()))


def test_interval_order_and_join():
    d = make_domain("interval", XY)
    assert d.leq(val(d, "x >= 0 && x <= 99"), val(d, "x >= 0 && x <= 100"))
    j = d.join(val(d, "x == 0"), val(d, "x >= 2 && x <= 3"))
    assert d.equal(j, val(d, "x >= 0 && x <= 3"))
    a = val(d, "x >= 4")
    assert d.equal(d.join(a, d.bottom()), a)


def test_interval_widening():
    d = make_domain("interval", XY)
    w = d.widen(val(d, "x == 0"), val(d, "x >= 0 && x <= 1"))
    assert d.equal(w, val(d, "x >= 0"))
    a = val(d, "x >= 0 && x <= 5 && y == 2")
    assert d.equal(d.widen(a, a), a)


def test_congruence_lattice():
    assert cong_leq((4, 0), (2, 0))
    assert not cong_leq((2, 0), (4, 0))
    # residues 0 and 2 modulo 4 together are exactly the even numbers
    assert cong_join((4, 0), (4, 2)) == (2, 0)
    assert cong_meet((2, 1), (3, 0)) == (6, 3)
    assert cong_meet((2, 0), (2, 1)) is None


def test_congruence_join_is_least_by_enumeration():
    # smallest (m, r) covering the union of two residue classes, found by search
    for (m1, r1), (m2, r2) in [((4, 0), (4, 2)), ((6, 1), (4, 3)), ((0, 3), (0, 9)), ((5, 2), (0, 7))]:
        members = {v for v in range(-60, 61) if (m1 and (v - r1) % m1 == 0) or (not m1 and v == r1)}
        members |= {v for v in range(-60, 61) if (m2 and (v - r2) % m2 == 0) or (not m2 and v == r2)}
        best = max(m for m in range(1, 61) if len({v % m for v in members}) == 1)
        m, r = cong_join((m1, r1), (m2, r2))
        assert m == best and all((v - r) % m == 0 for v in members)


def test_octagon_widening_drops_unstable_bound():
    d = make_domain("octagon", XY)
    w = d.widen(val(d, "x - y <= 0"), val(d, "x - y <= 1"))
    assert entails(d.to_predicate(w), P("x - y <= 1")) is False
    assert d.to_predicate(w).is_true


def test_interval_posts():
    d = make_domain("interval", XY)
    a = d.post(d.top(), parse_statement("x := 0; y := 42"))
    assert d.equal(a, val(d, "x == 0 && y == 42"))
    b = d.post(val(d, "x >= 0 && x <= 100 && y == 42"), parse_statement("assume(x < 100)"))
    assert d.equal(b, val(d, "x >= 0 && x <= 99 && y == 42"))


def test_octagon_assign_shift():
    d = make_domain("octagon", XY)
    a = d.post(val(d, "x - y <= 0"), parse_statement("x := x + 1"))
    assert equivalent(d.to_predicate(a), P("x - y <= 1"))
    # cross-check on concrete states
    rng = random.Random(3)
    for _ in range(200):
        x, y = rng.randint(-30, 30), rng.randint(-30, 30)
        if x <= y:
            assert d.contains(a, {"x": x + 1, "y": y})


@pytest.mark.parametrize("stmt,post", [("x := y + 2", "x - y == 2"), ("x := 0 - y + 2", "x + y == 2")])
def test_octagon_assign_from_other_variable(stmt, post):
    d = make_domain("octagon", XY)
    a = d.post(val(d, "y >= 0 && y <= 5"), parse_statement(stmt))
    assert entails(d.to_predicate(a), P(post)) is True
    for y in range(0, 6):
        x = y + 2 if "0 - y" not in stmt else 2 - y
        assert d.contains(a, {"x": x, "y": y})


def test_to_predicate():
    d = make_domain("interval", XY)
    assert d.to_predicate(d.bottom()).is_false
    p = d.to_predicate(val(d, "x >= 0 && x <= 100 && y == 42"))
    assert equivalent(p, P("x >= 0 && x <= 100 && y == 42"))
    c = make_domain("congruence", XY)
    odd = c.guard(c.top(), [make_atom("cong", {"x": 1}, 1, 2)])
    assert str(c.to_predicate(odd)) == "x mod 2 == 1"


def test_comp_reduction_tightens_to_residue():
    d = make_domain("comp", ("x",))
    a = d.guard(d.top(), [make_atom("cong", {"x": 1}, 0, 2)])
    a = d.post(a, parse_statement("assume(x >= 100 && x <= 101)"))
    assert equivalent(d.to_predicate(a), P("x == 100"))


def test_octagon_relational_guard():
    d = make_domain("octagon", XY)
    a = d.post(d.top(), parse_statement("assume(x == y)"))
    a = d.post(a, parse_statement("x := x + 1; y := y + 1"))
    assert entails(d.to_predicate(a), P("x == y")) is True


# -- soundness fuzzing ------------------------------------------------------------

VARS3 = ("x", "y", "z")
HAVOC_BOX = (-6, 6)


def _random_expr(rng: random.Random) -> LinExpr:
    coeffs = {v: rng.choice([-2, -1, 0, 1, 1, 2]) for v in rng.sample(VARS3, rng.randint(0, 2))}
    return LinExpr.of(coeffs, rng.randint(-5, 5))


def _random_cmp(rng: random.Random) -> str:
    coeffs = [(rng.choice([-2, -1, 1, 1, 2, 3]), v) for v in rng.sample(VARS3, rng.randint(1, 2))]
    lhs = " + ".join(f"{c}*{v}" for c, v in coeffs)
    return f"{lhs} {rng.choice(['<=', '<', '>=', '>', '==', '!='])} {rng.randint(-8, 8)}"


def _random_statement(rng: random.Random):
    kind = rng.choices(["assume", "assign", "havoc", "seq"], weights=[4, 4, 1, 2])[0]
    if kind == "assume":
        text = _random_cmp(rng)
        if rng.random() < 0.3:
            text = f"{text} {rng.choice(['&&', '||'])} {_random_cmp(rng)}"
        return Assume(parse_bexpr(text))
    if kind == "assign":
        return Assign(rng.choice(VARS3), _random_expr(rng))
    if kind == "havoc":
        return Havoc(rng.choice(VARS3))
    return seq([_random_statement(rng), _random_statement(rng)])


def _point(d, state):
    return d.guard(d.top(), [make_atom("eq", {v: 1}, state[v]) for v in VARS3])


def _random_abstract(d, rng: random.Random):
    """An abstract value together with concrete states it must contain."""
    pts = [{v: rng.randint(-10, 10) for v in VARS3} for _ in range(rng.randint(1, 4))]
    a = d.bottom()
    for p in pts:
        a = d.join(a, _point(d, p))
    if rng.random() < 0.4:
        extra = {v: rng.randint(-12, 12) for v in VARS3}
        a = d.widen(a, d.join(a, _point(d, extra)))
        pts.append(extra)
    for _ in range(rng.randint(0, 2)):
        s = _random_statement(rng)
        a = d.post(a, s)
        pts = [q for p in pts for q in step(s, p, {v: HAVOC_BOX for v in VARS3})][:6]
    return a, pts


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_abstract_post_soundness(name):
    """1000 random (state, statement) probes; every concrete successor stays in gamma."""
    d = make_domain(name, VARS3)
    rng = random.Random(zlib.crc32(name.encode()))
    violations = []
    probes = 0
    while probes < 1000:
        a, pts = _random_abstract(d, rng)
        assert all(d.contains(a, p) for p in pts), (name, d.show(a), pts)
        if not pts:
            continue
        s = _random_statement(rng)
        post = d.post(a, s)
        pred = d.to_predicate(post)
        for p in pts:
            for q in step(s, p, {v: HAVOC_BOX for v in VARS3}):
                if not d.contains(post, q) or not pred.holds(q):
                    violations.append((d.show(a), str(s), p, q))
        probes += 1
    assert not violations, violations[:3]


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_join_and_widen_are_upper_bounds(name):
    d = make_domain(name, VARS3)
    rng = random.Random(99)
    for _ in range(150):
        a, _ = _random_abstract(d, rng)
        b, _ = _random_abstract(d, rng)
        j = d.join(a, b)
        assert d.leq(a, j) and d.leq(b, j)
        w = d.widen(a, j)
        assert d.leq(j, w)
