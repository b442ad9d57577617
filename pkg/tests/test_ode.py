import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from gamemu.experiments import EXPONENTIAL, HARMONIC, random_field
from gamemu.ode import (
    NoWitnessFound, OutsideBox, PassedToDepth, Poly, PolyParseError, PolyVectorField,
    ReachQuery, RejectedAtLevel0, TrajectoryEscape, ddf, emit_g_formula, lie_derivative,
    load_query, parse_poly, refine_reach, rk4_integrate, sup_norm_bound, taylor_check,
    taylor_cond, trajectory_midpoints,
)

seeds = st.integers(0, 2**32 - 1)
ONE = PolyVectorField.parse(["x"], ["1"])
PI_LO, PI_HI = Fraction(314159, 100000), Fraction(314160, 100000)


# -- polynomials


def test_parse_and_canonical_form():
    assert parse_poly("x*y + y*x - 2*x*y") == Poly()
    assert parse_poly("(x + 1)^2") == parse_poly("x^2 + 2*x + 1")
    assert parse_poly("x/2").terms == ((( ("x", 1),), Fraction(1, 2)),)


def test_parse_rejects_non_polynomials():
    for bad in ("x^-1", "1/x", "sin(x)", "x^y"):
        with pytest.raises(PolyParseError):
            parse_poly(bad)


def test_lie_derivative_examples():
    assert lie_derivative(parse_poly("x^2"), EXPONENTIAL) == parse_poly("2*x^2")
    assert lie_derivative(parse_poly("x1^2 + x2^2"), HARMONIC) == Poly()
    assert lie_derivative(parse_poly("x"), ONE) == parse_poly("1")


def _rand_poly(rng, xs):
    return Poly({tuple((v, rng.randint(0, 2)) for v in xs): rng.randint(-3, 3) for _ in range(3)})


@given(seeds)
def test_lie_derivative_linear_and_leibniz(seed):
    rng = random.Random(seed)
    F = random_field(rng, 2)
    a, b = _rand_poly(rng, F.vars), _rand_poly(rng, F.vars)
    L = lambda p: lie_derivative(p, F)
    assert L(a + b) == L(a) + L(b)
    assert L(a * b) == L(a) * b + a * L(b)


def test_ddf_examples():
    assert ddf(EXPONENTIAL) == (parse_poly("x"),)
    assert ddf(HARMONIC) == (parse_poly("-x1"), parse_poly("-x2"))
    assert ddf(ONE) == (Poly(),)


def test_sup_norm_bound_examples():
    assert sup_norm_bound((parse_poly("x"),), 3) == 3
    assert sup_norm_bound(ddf(HARMONIC), 2) == 2
    assert sup_norm_bound((Poly(),), 5) == 0


@given(seeds)
def test_sup_norm_bound_is_conservative(seed):
    rng = random.Random(seed)
    F = random_field(rng, 2)
    P = ddf(F)
    K = rng.choice([Fraction(1, 2), 1, 2])
    bound = float(sup_norm_bound(P, K))
    grid = [-float(K) + 2 * float(K) * i / 99 for i in range(100)]
    worst = max(max(abs(float(c({"x1": u, "x2": v}))) for c in P) for u in grid for v in grid)
    assert worst <= bound + 1e-12


# -- Taylor condition


def test_taylor_cond_constant_field_is_exact():
    t = Fraction(3, 4)
    assert taylor_cond((0,), (t,), t, ONE, 2)
    assert not taylor_cond((0,), (t + Fraction(1, 10),), t, ONE, 2)
    chk = taylor_check((0,), (t,), t, ONE, 2)
    assert chk.exact and chk.lhs == 0 and chk.bound == 0


def test_taylor_cond_harmonic_quarter_turn():
    chk = taylor_check((1, 0), (0, -1), math.pi / 2, HARMONIC, 2)
    assert chk.ok
    assert chk.lhs == pytest.approx(1.0)
    # the bound is (t^2 / 2) * 2 with t = pi / 2, bracketed by rational bounds on pi
    assert float((PI_LO / 2) ** 2) <= chk.bound <= float((PI_HI / 2) ** 2)


def test_taylor_cond_harmonic_far_target():
    with pytest.raises(OutsideBox):
        taylor_cond((1, 0), (3, 3), math.pi / 2, HARMONIC, 2)
    chk = taylor_check((1, 0), (1.9, 1.9), math.pi / 2, HARMONIC, 2)
    assert not chk.ok
    assert chk.lhs == pytest.approx(1.9 + math.pi / 2)


# -- integration


def test_rk4_examples():
    assert rk4_integrate(ONE, (0,), 1, 10) == pytest.approx((1.0,), abs=1e-15)
    assert abs(rk4_integrate(EXPONENTIAL, (1,), 1, 1000)[0] - math.e) < 1e-9
    x = rk4_integrate(HARMONIC, (1, 0), 2 * math.pi, 10000)
    assert abs(x[0] - 1) < 1e-6 and abs(x[1]) < 1e-6


def test_rk4_reports_escape():
    with pytest.raises(TrajectoryEscape):
        rk4_integrate(EXPONENTIAL, (1,), 2, 100, K=3)


def test_rk4_needs_steps():
    with pytest.raises(ValueError):
        rk4_integrate(ONE, (0,), 1, 0)


def test_midpoint_tree_keys():
    tree = trajectory_midpoints(HARMONIC, (1, 0), math.pi / 2, 3)
    assert sorted(tree) == [Fraction(k, 8) for k in range(9)]
    assert tree[Fraction(1, 2)] == pytest.approx((math.cos(math.pi / 4), -math.sin(math.pi / 4)), abs=1e-9)


# -- refinement


def test_refine_examples():
    q = ReachQuery((1, 0), (0, -1), math.pi / 2, 2, depth=6)
    v = refine_reach(q, HARMONIC)
    assert isinstance(v, PassedToDepth) and v.depth == 6
    assert isinstance(refine_reach(ReachQuery((1,), (2.718281828,), 1, 3, depth=4), EXPONENTIAL), PassedToDepth)
    far = refine_reach(ReachQuery((1, 0), (1.9, 1.9), math.pi / 2, 2, depth=6), HARMONIC)
    assert isinstance(far, RejectedAtLevel0)


def test_budget_is_reported():
    q = ReachQuery((1, 0), (0.2, -0.9), math.pi / 2, 2, depth=8, budget=50, strategy="grid",
                   grid_points=5)
    v = refine_reach(q, HARMONIC)
    assert isinstance(v, NoWitnessFound) and v.budget_exceeded


@pytest.mark.parametrize("strategy", ["integrator", "rk4", "grid"])
def test_constant_field_accepts_exactly_the_line(strategy):
    x, t = Fraction(1, 3), Fraction(5, 7)
    for depth in range(5):
        q = ReachQuery((x,), (x + t,), t, 2, depth=depth, strategy=strategy)
        assert isinstance(refine_reach(q, ONE), PassedToDepth)
        off = ReachQuery((x,), (x + t + Fraction(1, 10**9),), t, 2, depth=depth, strategy=strategy)
        assert isinstance(refine_reach(off, ONE), RejectedAtLevel0)


def _on_trajectory(seed):
    rng = random.Random(seed)
    while True:
        F = random_field(rng, rng.randint(1, 2))
        x0 = tuple(rng.uniform(-0.5, 0.5) for _ in range(F.dim))
        t = rng.uniform(0.1, 0.5)
        try:
            tree = trajectory_midpoints(F, x0, t, 4, K=3)
        except (TrajectoryEscape, OverflowError):
            continue
        return F, x0, t, tree


@given(seeds)
def test_depth_monotone_with_fixed_tree(seed):
    F, x0, t, tree = _on_trajectory(seed)
    rng = random.Random(seed)
    y = tuple(v + rng.uniform(-0.02, 0.02) for v in tree[Fraction(1)])
    results = [refine_reach(ReachQuery(x0, y, t, 3, depth=m, strategy="grid", grid_points=1), F,
                            tree).ok for m in range(5)]
    assert all(b <= a for a, b in zip(results, results[1:]))


@given(seeds)
def test_split_consistency_on_trajectories(seed):
    F, x0, t, tree = _on_trajectory(seed)
    d = 3
    u, y = tree[Fraction(1, 2)], tree[Fraction(1)]
    left = {k * 2: v for k, v in tree.items() if k <= Fraction(1, 2)}
    right = {(k - Fraction(1, 2)) * 2: v for k, v in tree.items() if k >= Fraction(1, 2)}
    q = lambda a, b, s, m: ReachQuery(a, b, s, 3, depth=m, strategy="grid", grid_points=1)
    if refine_reach(q(x0, u, t / 2, d), F, left).ok and refine_reach(q(u, y, t / 2, d), F, right).ok:
        assert refine_reach(q(x0, y, t, d + 1), F, tree).ok


# -- formulas and files


def test_emit_constant_field():
    G = emit_g_formula(ONE, 2)["G"]
    assert G == "2*(y1 - x - t*(1)) <= 0 & -2*(y1 - x - t*(1)) <= 0"


def test_emit_exponential_bound_term():
    G = emit_g_formula(EXPONENTIAL, 3)["G"]
    assert G.startswith("exists z1 .") and "t^2*(z1)" in G and "-3 <= z1 & z1 <= 3" in G


def test_emit_game_loop_body():
    game = emit_g_formula(HARMONIC, 2)["game"]
    assert "(t := t/2; (u1 := *; u2 := *)^d; ((x1 := u1; x2 := u2) ++ (y1 := u1; y2 := u2)))*" in game


def test_load_query_accepts_pi_expressions():
    F, q = load_query({"vars": ["x1", "x2"], "field": ["x2", "-1*x1"], "x0": [1, 0],
                       "y": [0, -1], "t": "pi/2", "K": 2, "depth": 6,
                       "grid": {"radius": 0.05, "points": 5}})
    assert F == HARMONIC and q.t == pytest.approx(math.pi / 2) and q.grid_points == 5
