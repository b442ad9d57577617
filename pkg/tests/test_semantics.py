import itertools
import random

import pytest
from hypothesis import given, strategies as st

from gamemu import gen
from gamemu.gen import SIG_FUN, SIG_SMALL
from gamemu.semantics import (
    Evaluator, StateSet, Structure, StructureExplosion, SupportError, count_structures,
    enumerate_structures, eval_game, eval_gl, eval_mu, eval_term, lfp, semantically_equal,
    valid,
)
from gamemu.syntax import Dual, GameSignature, Loop, parse

seeds = st.integers(0, 2**32 - 1)
P = parse


def M(s):
    return parse(s, "mu-formula")


def G(s):
    return parse(s, "game")


R1 = Structure.from_json({"domain": 2, "relations": {"R": [[1]]}})
SUCC = Structure.from_json({
    "domain": 2,
    "functions": {"f": [[0, 1], [1, 0]], "c": [[0]]},
    "relations": {"R": [[1]]},
    "actions": {"a": {"arity": [1, 1], "map": [
        {"params": [0], "generators": [[[1]]]},
        {"params": [1], "generators": [[[0]]]},
    ]}},
})


def states(support, domain, pred):
    bits = 0
    for i, w in enumerate(itertools.product(range(domain), repeat=len(support))):
        if pred(dict(zip(support, w))):
            bits |= 1 << i
    return StateSet(tuple(support), domain, bits)


# -- terms


def test_eval_term_examples():
    ident = Structure.from_json({"domain": 2, "functions": {"f": [[0, 0], [1, 1]], "c": [[0]]}})
    assert eval_term(ident, {"x": 1}, P("f(x)", "term")) == 1
    assert eval_term(ident, {}, P("c", "term", ident.signature)) == 0
    assert eval_term(SUCC, {"x": 0}, P("f(f(x))", "term")) == 0


def test_eval_term_unbound():
    with pytest.raises(SupportError):
        eval_term(SUCC, {}, P("f(x)", "term"))


# -- games and formulas


def test_quantifier_reaches_any_singleton_goal():
    S = states(("x",), 2, lambda w: w["x"] == 1)
    assert eval_game(R1, G("x := *"), S).is_all()


def test_false_test_is_empty():
    S = states(("x",), 2, lambda w: True)
    assert eval_game(R1, G("?false"), S).is_empty()


def test_successor_loop_reaches_everything():
    S = states(("x",), 2, lambda w: w["x"] == 1)
    assert eval_game(SUCC, G("a(x:x)*"), S).is_all()


def test_support_violation():
    S = states(("y",), 2, lambda w: True)
    with pytest.raises(SupportError):
        eval_game(R1, G("x := *"), S)


def test_eval_mu_examples():
    assert eval_mu(R1, {}, M("mu X . (R(x) | <x := *> X)")).is_all()
    assert eval_mu(R1, {}, M("mu X . X"), ("x",)).is_empty()
    assert eval_mu(R1, {}, M("nu X . X"), ("x",)).is_all()


def test_lfp_examples():
    assert lfp(lambda Z: 0b101, 0) == 0b101
    assert lfp(lambda Z: Z, 0) == 0
    ev = Evaluator(SUCC, ("x",))
    S = 0b10
    assert lfp(lambda Z: S | ev.game(G("a(x:x)"), Z), 0) == ev.full


def test_semantically_equal_examples():
    for N in enumerate_structures(SIG_SMALL, 2):
        assert semantically_equal(N, P("<?R(y)> R(x)"), P("R(y) & R(x)"))
        assert semantically_equal(N, P("<a(x:y)^d> R(x)"), P("!<a(x:y)> !R(x)"))
    assert not semantically_equal(R1, P("<x := *> R(x)"), P("R(x)"))


def test_deterministic_assignment_fast_path_matches_encoding():
    rng = random.Random(5)
    for _ in range(40):
        N = gen.rand_structure(rng, SIG_FUN, 2, 2)
        phi = P("<x := f(x); y := f(c)> (R(x) & <a(x:y)> x = y)", sig=SIG_FUN)
        sup = ("x", "x1", "y")
        fast = Evaluator(N, sup, fast_assign=True).formula(phi)
        slow = Evaluator(N, sup, fast_assign=False).formula(phi)
        assert fast == slow


@given(seeds)
def test_fast_path_random(seed):
    rng = random.Random(seed)
    phi = gen.rand_gl(rng, SIG_FUN, ["x", "y"], 3, 2, 2)
    N = gen.rand_structure(rng, SIG_FUN, 2, 2)
    from gamemu.semantics import default_support
    sup = default_support(phi)
    assert Evaluator(N, sup, True).formula(phi) == Evaluator(N, sup, False).formula(phi)


# -- properties of game denotations


def _setup(seed):
    rng = random.Random(seed)
    N = gen.rand_structure(rng, SIG_FUN, rng.randint(1, 3), 2)
    ev = Evaluator(N, ("x", "y"))
    g = gen.rand_game(rng, SIG_FUN, ["x", "y"], 3, 1)
    return rng, ev, g


@given(seeds)
def test_monotone(seed):
    rng, ev, g = _setup(seed)
    S = rng.getrandbits(ev.count)
    T = S | rng.getrandbits(ev.count)
    assert ev.game(g, S) & ~ev.game(g, T) == 0


@given(seeds)
def test_dual_involution(seed):
    rng, ev, g = _setup(seed)
    S = rng.getrandbits(ev.count)
    assert ev.game(Dual(Dual(g)), S) == ev.game(g, S)


@given(seeds)
def test_loop_is_a_fixpoint(seed):
    rng, ev, g = _setup(seed)
    S = rng.getrandbits(ev.count)
    star = ev.game(Loop(g), S)
    assert star == S | ev.game(g, star)


def test_loop_least_prefixpoint_exhaustive():
    rng = random.Random(11)
    for _ in range(5):
        N = gen.rand_structure(rng, SIG_SMALL, 2, 2)
        ev = Evaluator(N, ("x", "y", "z"))
        assert ev.count == 8
        g = gen.rand_game(rng, SIG_SMALL, ["x", "y", "z"], 2, 1, 0)
        S = rng.getrandbits(8)
        star = ev.game(Loop(g), S)
        for Z in range(256):
            if (S | ev.game(g, Z)) & ~Z == 0:
                assert star & ~Z == 0


# -- enumeration


def test_enumeration_examples():
    one_rel = GameSignature.of({}, {"R": 1}, {})
    assert len(list(enumerate_structures(one_rel, 1))) == 2
    assert len(list(enumerate_structures(GameSignature.of(), 2))) == 2


@pytest.mark.parametrize("domain,gens", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_enumeration_matches_closed_form(domain, gens):
    sig = GameSignature.of({}, {}, {"b": (1, 0)})
    got = list(enumerate_structures(sig, domain, gens, min_domain=domain))
    assert len(got) == count_structures(sig, domain, gens)
    assert len(set(map(lambda N: repr(N.to_json()), got))) == len(got)


def test_enumeration_count_small_sig():
    got = sum(1 for _ in enumerate_structures(SIG_SMALL, 2, 2))
    assert got == count_structures(SIG_SMALL, 1, 2) + count_structures(SIG_SMALL, 2, 2)


def test_explosion_guard():
    with pytest.raises(StructureExplosion):
        list(enumerate_structures(SIG_FUN, 3, 2, cap=1000))


def test_structure_json_roundtrip():
    assert Structure.from_json(SUCC.to_json()) == SUCC


def test_star_not_allowed_in_file():
    with pytest.raises(ValueError):
        Structure.from_json({"domain": 1, "actions": {"*": {"arity": [1, 0], "map": []}}})


def test_omitted_parameters_mean_no_move():
    N = Structure.from_json({"domain": 2, "actions": {"a": {"arity": [1, 1], "map": [
        {"params": [0], "generators": [[[0], [1]]]}]}}})
    phi = P("<a(x:y)> true")
    got = eval_gl(N, phi, ("x", "y"))
    assert {w["y"] for w in got.assignments()} == {0}


def test_valid():
    assert valid(R1, P("R(x) | !R(x)"))
    assert not valid(R1, P("R(x)"))
