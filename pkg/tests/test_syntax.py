import random

import pytest
from hypothesis import given, strategies as st

from gamemu import gen
from gamemu.gen import SIG_FUN, SIG_SMALL
from gamemu.syntax import (
    FALSE, And, Atomic, Dia, Dual, Eq, FixVar, Mu, Not, Or, PositivityError, Rel, Var, ArityError,
    ParseError, SignatureError, GameSignature, bound_vars, free_vars, fresh, must_bound_vars,
    occurs_positively, parse, rename_bound, show, substitute_fixvar, substitute_var, walk,
)

seeds = st.integers(0, 2**32 - 1)
P = parse


def G(s):
    return parse(s, "game")


def M(s):
    return parse(s, "mu-formula")


def T(s):
    return parse(s, "term")


# -- parsing


def test_quantifier_sugar():
    assert P("<x := *> R(x)") == Dia(Atomic("*", ("x",), ()), Rel("R", (Var("x"),)))


def test_or_elaborates_to_not_and():
    phi = M("mu X . (R(x) | < *(x:) > X)")
    body = Not(And(Not(Rel("R", (Var("x"),))), Not(Dia(Atomic("*", ("x",), ()), FixVar("X")))))
    assert phi == Mu("X", body)


def test_positivity_error():
    with pytest.raises(PositivityError):
        M("mu X . !X")


def test_nu_is_dual_mu():
    assert M("nu X . X") == Not(Mu("X", Not(Not(FixVar("X")))))


def test_syntax_errors_carry_positions():
    with pytest.raises(ParseError) as e:
        P("R(x) & & R(y)")
    assert e.value.pos is not None


def test_arity_mismatch():
    with pytest.raises(ArityError):
        P("R(x) & R(x, y)")


def test_box_is_dual_diamond():
    assert P("[a(x:y)] R(x)") == Dia(Dual(Atomic("a", ("x",), (Var("y"),))), Rel("R", (Var("x"),)))


def test_precedence_of_game_operators():
    assert show(G("a(x:x) ; b(y:) ++ c(z:)")) == "a(x:x); b(y:) ++ c(z:)"
    assert G("a(x:x)*^d") == G("(a(x:x)*)^d")


def test_star_in_structure_signature_is_rejected():
    with pytest.raises(SignatureError):
        GameSignature.of({}, {}, {"*": (2, 0)})


def test_names_unique_across_namespaces():
    with pytest.raises(SignatureError):
        GameSignature.of({"f": 1}, {"f": 1}, {})


# -- free and bound variables


def test_free_vars_examples():
    assert free_vars(P("<*(x:)> x = y")) == {"y"}
    assert free_vars(M("mu X . (R(x) | <*(x:)> X)")) == {"x"}
    assert free_vars(P("R(x) & <a(x:y)> R(x)")) == {"x", "y"}


def test_bound_var_examples():
    assert must_bound_vars(G("a(x:y) ++ b(z:)")) == set()
    assert must_bound_vars(G("a(x:y) ; b(z:)")) == {"x", "z"}
    assert bound_vars(G("a(x:y)*")) == {"x"}
    assert must_bound_vars(G("a(x:y)*")) == set()


def test_free_fixpoint_variable_is_free():
    assert free_vars(M("<a(x:y)> X")) == {"y", "X"}


@given(seeds)
def test_mbv_within_bv(seed):
    rng = random.Random(seed)
    g = gen.rand_game(rng, SIG_FUN, ["x", "y", "z"], 3, 2)
    assert must_bound_vars(g) <= bound_vars(g)


# -- substitution


def test_substitution_examples():
    assert substitute_var(P("<a(x:x)> R(x)"), "x", T("c")) == P("<a(x:c)> R(x)")
    assert substitute_var(P("<a(y:y)> R(x)"), "x", T("y")) == P("<x := y; a(y:y)> R(x)")
    assert substitute_var(M("X"), "x", T("f(y)"), "mu") == M("<x := f(y)> X")


def test_assignment_encoding_uses_fresh_copy_only_when_needed():
    assert G("x := f(y)") == G("x := *; ?x = f(y)")
    x1 = fresh("x", {"x", "y"})
    assert G("x := f(x)") == G(f"{x1} := *; ?{x1} = f(x); x := *; ?x = {x1}")


def test_fresh_uses_smallest_suffix():
    assert fresh("x", {"x", "x1", "x3"}) == "x2"


def test_substitute_fixvar_examples():
    rho = P("R(y)")
    assert substitute_fixvar(M("X"), "X", rho) == rho
    mu = M("mu X . (R(x) | <a(x:x)> X)")
    assert substitute_fixvar(mu, "X", rho) == mu
    assert substitute_fixvar(M("<a(x:c)> X"), "X", rho) == Dia(Atomic("a", ("x",), (T("c"),)), rho)


@given(seeds)
def test_substitution_identity(seed):
    rng = random.Random(seed)
    phi = gen.rand_gl(rng, SIG_FUN, ["x", "y"], 3, 2) if seed % 2 else gen.rand_mu(rng, SIG_FUN, ["x", "y"], 4)
    assert substitute_var(phi, "x", Var("x")) == phi


# -- renaming


def test_rename_bound_examples():
    assert rename_bound(G("a(x:x); ?R(x)"), {"x"}) == G("a(x1:x); ?R(x1)")
    assert rename_bound(P("R(x)"), {"x"}) == P("R(x)")
    assert rename_bound(M("mu X . <*(x:)> X"), {"x"}) == M("mu X . <*(x1:)> X")


@given(seeds, st.sampled_from(["x", "y"]))
def test_rename_bound_avoids(seed, v):
    rng = random.Random(seed)
    g = gen.rand_game(rng, SIG_SMALL, ["x", "y", "z"], 3, 2)
    assert v not in bound_vars(rename_bound(g, {v}))


# -- printer/parser round trip


@given(seeds)
def test_roundtrip_gl(seed):
    rng = random.Random(seed)
    phi = gen.rand_gl(rng, SIG_FUN, ["x", "y"], 4, 3, 2)
    assert P(show(phi), sig=SIG_FUN) == phi


@given(seeds)
def test_roundtrip_mu(seed):
    rng = random.Random(seed)
    phi = gen.rand_mu(rng, SIG_FUN, ["x", "y"], 5, ("X", "Y"), 2)
    assert parse(show(phi), "mu-formula", SIG_FUN) == phi


@given(seeds)
def test_roundtrip_game(seed):
    rng = random.Random(seed)
    g = gen.rand_game(rng, SIG_FUN, ["x", "y"], 4, 2, 1)
    assert parse(show(g), "game", SIG_FUN) == g


# -- positivity


def _polarities(phi, X):
    """Brute-force walk returning the set of parities at which X occurs free."""
    out = set()

    def go(n, neg, bound):
        if isinstance(n, FixVar):
            if n.name == X and not bound:
                out.add(neg)
        elif isinstance(n, Not):
            go(n.arg, not neg, bound)
        elif isinstance(n, And):
            go(n.left, neg, bound)
            go(n.right, neg, bound)
        elif isinstance(n, Dia):
            go(n.body, neg, bound)
        elif isinstance(n, Mu):
            go(n.body, neg, bound or n.var == X)

    go(phi, False, False)
    return out


def _rand_unchecked(rng, d):
    if d == 0 or rng.random() < 0.2:
        return rng.choice([FixVar("X"), FixVar("Y"), Rel("R", (Var("x"),))])
    r = rng.random()
    if r < 0.3:
        return Not(_rand_unchecked(rng, d - 1))
    if r < 0.55:
        return And(_rand_unchecked(rng, d - 1), _rand_unchecked(rng, d - 1))
    if r < 0.8:
        return Dia(Atomic("a", ("x",), (Var("x"),)), _rand_unchecked(rng, d - 1))
    return Mu(rng.choice("XY"), _rand_unchecked(rng, d - 1))


@given(seeds)
def test_positivity_agrees_with_polarity_walk(seed):
    rng = random.Random(seed)
    phi = _rand_unchecked(rng, 5)
    assert occurs_positively(phi, "X") == (True not in _polarities(phi, "X"))


@given(seeds)
def test_generated_mu_formulas_are_positive(seed):
    rng = random.Random(seed)
    phi = gen.rand_mu(rng, SIG_SMALL, ["x", "y"], 5)
    for n in walk(phi):
        if isinstance(n, Mu):
            assert occurs_positively(n.body, n.var)
    # the printed text parses again, so the parser's positivity check agrees too
    assert M(show(phi)) == phi


def test_false_is_not_true():
    assert P("false") == FALSE
    assert P("true | false") == Or(P("true"), FALSE)
