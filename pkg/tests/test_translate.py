import json
import random

import pytest
from hypothesis import given, strategies as st

from gamemu import gen
from gamemu.gen import SIG_FUN, SIG_LFP, SIG_SMALL
from gamemu.semantics import Evaluator, default_support, enumerate_structures
from gamemu.syntax import (
    FALSE, Atomic, Dia, Loop, Mu, Not, Or, Var, forall, parse, show, walk, Eq, Implies, And, neq,
)
from gamemu.translate import (
    NameCollision, PreconditionError, PropReduction, Unsupported, eval_lfp, fixvar_names,
    flatten, g1, g_combined, g_combined_parts, lfp_to_mu, mu_to_lfp, parikh_f,
    prop_interpretation, sabotage_gadget, sharpen,
)

seeds = st.integers(0, 2**32 - 1)
P = parse
SMALL = list(enumerate_structures(SIG_SMALL, 2, 1))


def M(s):
    return parse(s, "mu-formula")


def equal_everywhere(a, b, structures=SMALL):
    sup = default_support(a, b)
    for N in structures:
        ev = Evaluator(N, sup)
        if ev.formula(a) != ev.formula(b):
            return False
    return True


# -- flatten / sharpen


def test_flatten_example():
    r = flatten(P("R(x) & <a(x:y)> R(x)"))
    assert show(r.formula) == "p1 & <A1> p1"
    assert r.table == {"p1": P("R(x)"), "A1": Atomic("a", ("x",), (Var("y"),))}
    assert json.loads(r.dumps()) == {"formula": "p1 & <A1> p1",
                                     "table": {"A1": "a(x:y)", "p1": "R(x)"}}


def test_flatten_distinguishes_parameter_order():
    r = flatten(P("<a(x:y)> <a(y:x)> true"))
    assert len([k for k in r.table if k.startswith("A")]) == 2


def test_sharpen_missing_symbol():
    r = flatten(P("R(x) & R(y)"))
    broken = PropReduction(r.formula, {"p1": r.table["p1"]})
    with pytest.raises(PreconditionError):
        sharpen(broken)


@given(seeds)
def test_sharpen_inverts_flatten(seed):
    rng = random.Random(seed)
    phi = gen.rand_gl(rng, SIG_FUN, ["x", "y"], 4, 3) if seed % 2 else gen.rand_mu(rng, SIG_FUN, ["x", "y"], 5)
    r = flatten(phi)
    assert sharpen(r) == phi
    assert len(set(r.table.values())) == len(r.table)


@given(seeds)
def test_propositional_abstraction_preserves_denotation(seed):
    rng = random.Random(seed)
    phi = gen.rand_gl(rng, SIG_FUN, ["x", "y"], 3, 2)
    N = gen.rand_structure(rng, SIG_FUN, 2, 2)
    sup = default_support(phi)
    ev = Evaluator(N, sup)
    props, games = prop_interpretation(ev, flatten(phi).table)
    assert Evaluator(N, sup, props=props, pgames=games).formula(flatten(phi).formula) == ev.formula(phi)


# -- F


def test_parikh_f_examples():
    assert parikh_f(P("<a(x:x)*> R(x)")) == M("mu X . (R(x) | <a(x:x)> X)")
    assert parikh_f(P("<?R(y)> R(x)")) == P("R(y) & R(x)")
    assert parikh_f(P("<a(x:x)^d> R(x)")) == Not(parikh_f(P("<a(x:x)> !R(x)")))


def test_parikh_f_nested_loops_alternate_names():
    out = parikh_f(P("<(a(x:x)*; a(y:y))*> R(x)"))
    assert fixvar_names(out) == {"X", "Y"}
    assert equal_everywhere(P("<(a(x:x)*; a(y:y))*> R(x)"), out)


@given(seeds)
def test_parikh_f_sound_and_two_variables(seed):
    rng = random.Random(seed)
    phi = gen.rand_gl(rng, SIG_SMALL, ["x", "y"], 2, 4, 0)
    out = parikh_f(phi)
    assert fixvar_names(out) <= {"X", "Y"}
    assert equal_everywhere(phi, out)


# -- G1


def test_g1_examples():
    assert g1(M("X")) == FALSE
    assert g1(M("mu X . (R(x) | <x := *> X)")) == Or(P("R(x)"), Dia(Atomic("*", ("x",), ()), FALSE))
    assert g1(P("R(x) & x = y")) == P("R(x) & x = y")


@given(seeds)
def test_g1_sound_on_singletons(seed):
    rng = random.Random(seed)
    phi = gen.rand_mu(rng, SIG_SMALL, ["x", "y"], 5, ("X", "Y"), 0)
    singles = list(enumerate_structures(SIG_SMALL, 1, 2))
    assert equal_everywhere(phi, g1(phi), singles)


# -- sabotage gadget


def test_gadget_shape():
    a = Atomic("a", ("x",), (Var("x"),))
    gad = sabotage_gadget(a, "ctop", "cbot")
    assert (gad.s, gad.d) == ("s_a", "d_a")
    expect = P("(?s_a = cbot; a(x:x)) ++ (?s_a = ctop; ((?d_a = ctop; (?false)^d) ++ (?d_a = cbot; ?false)))", "game")
    assert gad.guarded == expect
    assert gad.init == P("s_a := cbot", "game")
    assert gad.angel_sab == P("s_a := ctop; d_a := ctop", "game")
    assert gad.demon_sab == P("s_a := ctop; d_a := cbot", "game")


def test_gadget_name_collision():
    with pytest.raises(NameCollision):
        sabotage_gadget(Atomic("a", ("s_a",), ()), "ctop", "cbot")


def test_gadget_cases_on_two_elements():
    a = Atomic("a", ("x",), (Var("x"),))
    gad = sabotage_gadget(a, "ctop", "cbot")
    sup = ("x", gad.s, gad.d, "ctop", "cbot")
    rng = random.Random(3)
    for N in enumerate_structures(SIG_SMALL, 2, 1, min_domain=2):
        ev = Evaluator(N, sup)
        distinct = ev.formula(P("ctop != cbot"))
        plain = ev.formula(P("s_a = cbot")) & distinct
        angel = ev.formula(P("s_a = ctop & d_a = ctop")) & distinct
        demon = ev.formula(P("s_a = ctop & d_a = cbot")) & distinct
        for S in (0, ev.full, rng.getrandbits(ev.count)):
            got = ev.game(gad.guarded, S)
            assert got & plain == ev.game(a, S) & plain
            assert got & angel == angel
            assert got & demon == 0


# -- combined G


def test_g_combined_fixpoint_free():
    phi = P("R(x)")
    one = forall("x", forall("y", Eq(Var("x"), Var("y"))))
    two = forall("ctop", forall("cbot", Implies(neq(Var("ctop"), Var("cbot")), phi)))
    assert g_combined(phi) == And(Implies(one, phi), two)


def test_g_combined_game_shaped():
    phi = M("mu X . (R(x) | <a(x:x)> X)")
    parts = g_combined_parts(phi)
    assert Dia(Loop(Atomic("a", ("x",), (Var("x"),))), P("R(x)")) in set(walk(parts.g2_branch))
    assert equal_everywhere(phi, parts.formula)


def test_g_combined_rejects_alternation():
    with pytest.raises(Unsupported) as e:
        g_combined(M("mu X . nu Y . ((R(x) & <a(x:x)> X) | <a(x:x)> Y)"))
    assert e.value.subformula is not None


def test_g_combined_needs_closed_input():
    with pytest.raises(PreconditionError):
        g_combined(M("R(x) | X"))


def test_g_combined_avoids_user_names():
    phi = P("ctop = x")
    parts = g_combined_parts(phi)
    assert parts.ctop != "ctop"
    assert equal_everywhere(phi, parts.formula)


@given(seeds)
def test_g_combined_sound_on_fragment(seed):
    rng = random.Random(seed)
    phi = gen.rand_mu_game_shaped(rng, SIG_SMALL, ["x", "y"], 2, 0)
    assert equal_everywhere(phi, g_combined(phi))


# -- LFP


def test_mu_to_lfp_example():
    got = mu_to_lfp(M("mu X . (R(x) | <x := *> X)"), ("x",))
    assert show(got) == "[lfp R_X, x . R(x) | exists x . R_X(x)](x)"


def test_lfp_to_mu_on_first_order():
    assert lfp_to_mu(P("R(x) & x = y", "lfp")) == P("R(x) & x = y")


def test_mu_to_lfp_precondition():
    with pytest.raises(PreconditionError):
        mu_to_lfp(M("mu X . (R(y) | <x := *> X)"), ("x",))


@given(seeds)
def test_lfp_roundtrip(seed):
    rng = random.Random(seed)
    phi = gen.rand_mu(rng, SIG_LFP, ["x", "y"], 4, ("X", "Y"), 0)
    lf = mu_to_lfp(phi, ("x", "y"))
    back = lfp_to_mu(lf)
    structures = list(enumerate_structures(SIG_LFP, 2, 1))
    assert equal_everywhere(phi, back, structures)
    for N in structures[::7]:
        sup = default_support(phi, back, extra=("x", "y"))
        assert eval_lfp(N, lf, sup) == Evaluator(N, sup).formula(phi)
