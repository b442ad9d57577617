"""Seeded random terms, formulas, games and structures for property checks."""

from __future__ import annotations

import itertools
import os
import random

from .semantics import Structure
from .syntax import (
    FALSE, STAR, TRUE, And, App, Atomic, Choice, Dia, Dual, Eq, FixVar, GameSignature,
    Loop, Mu, Not, Or, Rel, Seq, Test, Var,
)

# one unary relation and one (1,1) action: the axiom-sweep signature
SIG_SMALL = GameSignature.of({}, {"R": 1}, {"a": (1, 1)})
# adds a unary function and a constant for substitution experiments
SIG_FUN = GameSignature.of({"f": 1, "c": 0}, {"R": 1}, {"a": (1, 1)})
# the quantifier-only signature of least fixpoint logic
SIG_LFP = GameSignature.of({}, {"R": 1, "E": 2}, {})


def seed_from_env(default: int = 20240611) -> int:
    return int(os.environ.get("GAMEMU_SEED", default))


def rng_for(*parts) -> random.Random:
    return random.Random(":".join(str(p) for p in (seed_from_env(),) + parts))


def rand_term(rng, sig, vs, depth=1):
    funs = [(n, a) for n, a in sig.functions]
    if depth <= 0 or not funs or rng.random() < 0.6:
        consts = [n for n, a in funs if a == 0]
        if consts and rng.random() < 0.2:
            return App(rng.choice(consts))
        return Var(rng.choice(vs))
    n, a = rng.choice(funs)
    return App(n, tuple(rand_term(rng, sig, vs, depth - 1) for _ in range(a)))


def rand_atom(rng, sig, vs, term_depth=1):
    rels = list(sig.relations)
    r = rng.random()
    if r < 0.08:
        return TRUE if rng.random() < 0.5 else FALSE
    if r < 0.35 or not rels:
        return Eq(rand_term(rng, sig, vs, term_depth), rand_term(rng, sig, vs, term_depth))
    n, a = rng.choice(rels)
    return Rel(n, tuple(rand_term(rng, sig, vs, term_depth) for _ in range(a)))


def rand_atomic_game(rng, sig, vs, term_depth=1, allow=None):
    acts = [(n, ar) for n, ar in sig.actions if ar[0] <= len(vs)]
    if allow is not None:
        acts = [(n, ar) for n, ar in acts if n in allow]
    n, (k, l) = rng.choice(acts)
    bound = tuple(rng.sample(list(vs), k))
    params = tuple(rand_term(rng, sig, vs, term_depth) for _ in range(l))
    return Atomic(n, bound, params)


def rand_gl(rng, sig, vs, depth=3, game_depth=2, term_depth=1):
    """Random FOGL formula (core connectives only)."""
    if depth <= 0:
        return rand_atom(rng, sig, vs, term_depth)
    r = rng.random()
    if r < 0.2:
        return rand_atom(rng, sig, vs, term_depth)
    if r < 0.35:
        return Not(rand_gl(rng, sig, vs, depth - 1, game_depth, term_depth))
    if r < 0.55:
        return And(rand_gl(rng, sig, vs, depth - 1, game_depth, term_depth),
                   rand_gl(rng, sig, vs, depth - 1, game_depth, term_depth))
    return Dia(rand_game(rng, sig, vs, game_depth, depth - 1, term_depth),
               rand_gl(rng, sig, vs, depth - 1, game_depth, term_depth))


def rand_game(rng, sig, vs, depth=2, fdepth=1, term_depth=1):
    if depth <= 0:
        if rng.random() < 0.2:
            return Test(rand_gl(rng, sig, vs, min(fdepth, 1), 0, term_depth))
        return rand_atomic_game(rng, sig, vs, term_depth)
    r = rng.random()
    sub = lambda: rand_game(rng, sig, vs, depth - 1, fdepth, term_depth)
    if r < 0.15:
        return rand_atomic_game(rng, sig, vs, term_depth)
    if r < 0.25:
        return Test(rand_gl(rng, sig, vs, min(fdepth, 1), 0, term_depth))
    if r < 0.45:
        return Choice(sub(), sub())
    if r < 0.65:
        return Seq(sub(), sub())
    if r < 0.82:
        return Loop(sub())
    return Dual(sub())


def rand_mu(rng, sig, vs, depth=3, fixvars=("X", "Y"), term_depth=1, closed=True,
            free_fix=(), allow_actions=None):
    """Random FOLmu formula satisfying the positivity condition.

    `free_fix` lists fixpoint variables that may occur free (positively).
    """

    def go(d, scope, neg):
        # scope: name -> parity of negations since its binder
        usable = [X for X, p in scope.items() if p == neg]
        r = rng.random()
        if d <= 0 or r < 0.15:
            if usable and rng.random() < 0.5:
                return FixVar(rng.choice(usable))
            return rand_atom(rng, sig, vs, term_depth)
        if r < 0.3:
            return Not(go(d - 1, scope, not neg))
        if r < 0.5:
            return And(go(d - 1, scope, neg), go(d - 1, scope, neg))
        if r < 0.78:
            g = rand_atomic_game(rng, sig, vs, term_depth, allow_actions)
            return Dia(g, go(d - 1, scope, neg))
        X = rng.choice(list(fixvars))
        inner = dict(scope)
        inner[X] = neg
        return Mu(X, go(d - 1, inner, neg))

    scope = {} if closed else {X: False for X in free_fix}
    out = go(depth, scope, False)
    return out


def rand_mu_game_shaped(rng, sig, vs, depth=2, term_depth=1):
    """Formulas built from the game-shaped fixpoint mu X.(psi | <alpha>X)."""

    def fo(d):
        if d <= 0 or rng.random() < 0.3:
            return rand_atom(rng, sig, vs, term_depth)
        r = rng.random()
        if r < 0.3:
            return Not(fo(d - 1))
        if r < 0.55:
            return And(fo(d - 1), fo(d - 1))
        if r < 0.75:
            return Dia(rand_atomic_game(rng, sig, vs, term_depth), fo(d - 1))
        return shaped(d - 1)

    def step(X, d):
        g = rand_atomic_game(rng, sig, vs, term_depth)
        r = rng.random()
        if r < 0.5 or d <= 0:
            return Dia(g, FixVar(X))
        if r < 0.7:
            return And(fo(0), Dia(g, FixVar(X)))
        if r < 0.85:
            return Dia(g, Dia(rand_atomic_game(rng, sig, vs, term_depth), FixVar(X)))
        return Not(Dia(g, Not(FixVar(X))))

    def shaped(d):
        X = rng.choice(["X", "Y"])
        psi = fo(d)
        body = Or(psi, step(X, d))
        if rng.random() < 0.3:
            body = Or(body, step(X, d))
        return Mu(X, body)

    return fo(depth) if rng.random() < 0.2 else shaped(depth)


def rand_structure(rng, sig, n, max_generators=2) -> Structure:
    funcs = []
    for name, ar in sig.functions:
        funcs.append((name, ar, tuple(rng.randrange(n) for _ in range(n ** ar))))
    rels = []
    for name, ar in sig.relations:
        tuples = list(itertools.product(range(n), repeat=ar))
        rels.append((name, ar, frozenset(t for t in tuples if rng.random() < 0.5)))
    acts = []
    for name, (k, l) in sig.actions:
        if name == STAR:
            continue
        ktuples = list(itertools.product(range(n), repeat=k))
        fam = []
        for p in itertools.product(range(n), repeat=l):
            gens = set()
            for _ in range(rng.randint(0, max_generators)):
                gens.add(frozenset(t for t in ktuples if rng.random() < 0.5))
            if gens:
                fam.append((p, tuple(sorted(gens, key=sorted))))
        acts.append((name, (k, l), tuple(fam)))
    return Structure(n, tuple(funcs), tuple(rels), tuple(acts))




def _binding_game(rng, sig, bind, read, depth):
    """Random game whose atomic games bind only variables in `bind`."""
    def atomic():
        acts = [(n, ar) for n, ar in sig.actions if ar[0] <= len(bind)]
        n, (k, l) = rng.choice(acts)
        return Atomic(n, tuple(rng.sample(list(bind), k)),
                      tuple(rand_term(rng, sig, read, 0) for _ in range(l)))

    def go(d):
        r = rng.random()
        if d <= 0 or r < 0.25:
            return atomic() if rng.random() < 0.8 else Test(rand_atom(rng, sig, read, 0))
        if r < 0.45:
            return Choice(go(d - 1), go(d - 1))
        if r < 0.65:
            return Seq(go(d - 1), go(d - 1))
        if r < 0.85:
            return Loop(go(d - 1))
        return Dual(go(d - 1))

    return go(depth)


def rand_hyp_proof(rng, sig=SIG_SMALL, steps=5, bind=("y",), free=("x",), read=("x", "y")):
    """A random proof from a hypothesis over `free` whose games bind only `bind`.

    Every step keeps the hypothesis in play, so monotonicity and diamond
    induction are applied to hypothesis-dependent lines.
    """
    from .proof import ProofBuilder
    from .syntax import Implies

    def small(d=1):
        if d <= 0 or rng.random() < 0.5:
            return rand_atom(rng, sig, list(read), 0)
        r = rng.random()
        if r < 0.3:
            return Not(small(d - 1))
        if r < 0.6:
            return And(small(d - 1), small(d - 1))
        return Dia(_binding_game(rng, sig, bind, list(read), 1), small(d - 1))

    rho = rand_atom(rng, sig, list(free), 0)
    if rng.random() < 0.5:
        rho = And(rho, Not(rand_atom(rng, sig, list(free), 0)))
    b = ProofBuilder(rho)
    pool = [b.hyp()]
    last = pool[0]
    for _ in range(steps):
        P = rng.choice(pool)
        fP = b.f(P)
        r = rng.random()
        if r < 0.2:
            last = b.chain([P], Or(fP, small()))
        elif r < 0.45:
            g = _binding_game(rng, sig, bind, list(read), 0)
            while not isinstance(g, Atomic):
                g = _binding_game(rng, sig, bind, list(read), 0)
            last = b.mon(b.chain([P], Implies(small(), fP)), g)
        elif r < 0.7:
            alpha = _binding_game(rng, sig, bind, list(read), 1)
            phi = small()
            last = b.diaind(b.chain([P], Implies(Or(phi, Dia(alpha, fP)), fP)))
        elif r < 0.85:
            Q = rng.choice(pool)
            last = b.chain([P, Q], And(fP, b.f(Q)))
        else:
            alpha = _binding_game(rng, sig, bind, list(read), 1)
            ax = b.ax_loop(alpha, small())
            last = b.chain([P, ax], And(fP, b.f(ax)))
        pool.append(last)
    # finish on a line that uses the hypothesis
    last = b.chain([pool[0], last], And(b.f(pool[0]), b.f(last)))
    return b.build()
