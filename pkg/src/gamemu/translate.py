"""Translations between FOGL, FOLmu and least fixpoint logic."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .semantics import Structure, default_support, lfp
from .syntax import (
    FALSE, STAR, TRUE, And, App, Atomic, Choice, Dia, Dual, Eq, Exists, FixVar, Implies,
    LfpApp, Loop, Mu, Not, Or, PGame, Prop, Rel, Seq, Test, Var, Verum, all_names,
    as_or, assign_game, conj, disj, forall, free_vars, fresh, individual, is_fixvar_name,
    neq, occurs_positively, show, term_vars, vec_assign_mu, walk,
)


class Unsupported(ValueError):
    """Raised when a formula lies outside the fragment a translation handles."""

    def __init__(self, subformula, why: str = ""):
        self.subformula = subformula
        msg = f"unsupported subformula {show(subformula)}"
        super().__init__(msg + (f" ({why})" if why else ""))


class PreconditionError(ValueError):
    def __init__(self, symbol, why: str):
        self.symbol = symbol
        super().__init__(f"{symbol}: {why}")


class NameCollision(ValueError):
    pass


# ---------------------------------------------------------------- flatten / sharpen


@dataclass(frozen=True)
class PropReduction:
    formula: object
    table: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"formula": show(self.formula), "table": {k: show(v) for k, v in self.table.items()}}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


_ATOMS = (Verum, Eq, Rel)


def flatten(phi) -> PropReduction:
    """Replace each distinct atomic formula by p_i and atomic game by A_i.

    `true` is a logical constant and is left alone.
    """
    syms: dict = {}
    table: dict = {}

    def sym(node, prefix):
        if node not in syms:
            name = f"{prefix}{sum(1 for k in table if k.startswith(prefix)) + 1}"
            syms[node] = name
            table[name] = node
        return syms[node]

    def go(n):
        if isinstance(n, Verum) or isinstance(n, FixVar):
            return n
        if isinstance(n, (Eq, Rel)):
            return Prop(sym(n, "p"))
        if isinstance(n, Not):
            return Not(go(n.arg))
        if isinstance(n, And):
            return And(go(n.left), go(n.right))
        if isinstance(n, Dia):
            return Dia(go(n.game), go(n.body))
        if isinstance(n, Mu):
            return Mu(n.var, go(n.body))
        if isinstance(n, Atomic):
            return PGame(sym(n, "A"))
        if isinstance(n, Test):
            return Test(go(n.cond))
        if isinstance(n, Choice):
            return Choice(go(n.left), go(n.right))
        if isinstance(n, Seq):
            return Seq(go(n.left), go(n.right))
        if isinstance(n, Loop):
            return Loop(go(n.body))
        if isinstance(n, Dual):
            return Dual(go(n.body))
        raise TypeError(f"cannot flatten {n!r}")

    return PropReduction(go(phi), table)


def sharpen(r: PropReduction):
    table = r.table

    def look(name):
        try:
            return table[name]
        except KeyError:
            raise PreconditionError(name, "symbol is missing from the table") from None

    def go(n):
        if isinstance(n, Prop):
            return look(n.name)
        if isinstance(n, PGame):
            return look(n.name)
        if isinstance(n, (Verum, FixVar, Eq, Rel, Atomic)):
            return n
        if isinstance(n, Not):
            return Not(go(n.arg))
        if isinstance(n, And):
            return And(go(n.left), go(n.right))
        if isinstance(n, Dia):
            return Dia(go(n.game), go(n.body))
        if isinstance(n, Mu):
            return Mu(n.var, go(n.body))
        if isinstance(n, Test):
            return Test(go(n.cond))
        if isinstance(n, Choice):
            return Choice(go(n.left), go(n.right))
        if isinstance(n, Seq):
            return Seq(go(n.left), go(n.right))
        if isinstance(n, Loop):
            return Loop(go(n.body))
        if isinstance(n, Dual):
            return Dual(go(n.body))
        raise TypeError(f"cannot sharpen {n!r}")

    return go(r.formula)


def prop_interpretation(ev, table: dict):
    """Props and game symbols of the structure induced by `table` on an Evaluator."""
    props, games = {}, {}
    for name, node in table.items():
        if isinstance(node, Atomic):
            games[name] = (lambda g: lambda S: ev.game(g, S))(node)
        else:
            props[name] = ev.formula(node)
    return props, games


# ---------------------------------------------------------------- F: games to fixpoints

FIX_NAMES = ("X", "Y")


def _f(phi):
    """Propositional clauses; loops at even depth bind X and at odd depth Y."""
    if isinstance(phi, (Verum, Prop, Eq, Rel, FixVar)):
        return phi
    if isinstance(phi, Not):
        return Not(_f(phi.arg))
    if isinstance(phi, And):
        return And(_f(phi.left), _f(phi.right))
    if isinstance(phi, Dia):
        return _fdia(phi.game, _f(phi.body), 0)
    raise TypeError(f"not a game-logic formula: {phi!r}")


def _fdia(g, p, depth):
    # p is an already translated continuation; depth counts enclosing loops
    if isinstance(g, (PGame, Atomic)):
        return Dia(g, p)
    if isinstance(g, Test):
        return And(_f(g.cond), p)
    if isinstance(g, Choice):
        return Or(_fdia(g.left, p, depth), _fdia(g.right, p, depth))
    if isinstance(g, Seq):
        return _fdia(g.left, _fdia(g.right, p, depth), depth)
    if isinstance(g, Dual):
        return Not(_fdia(g.body, Not(p), depth))
    if isinstance(g, Loop):
        X = FIX_NAMES[depth % 2]
        return Mu(X, Or(p, _fdia(g.body, FixVar(X), depth + 1)))
    raise TypeError(f"not a game: {g!r}")


def parikh_f(phi):
    """FOGL formula to an equivalent FOLmu formula, through the propositional core."""
    r = flatten(phi)
    return sharpen(PropReduction(_f(r.formula), r.table))


def fixvar_names(phi) -> set:
    return {n.var for n in walk(phi) if isinstance(n, Mu)} | {
        n.name for n in walk(phi) if isinstance(n, FixVar)}


# ---------------------------------------------------------------- G1: singleton domains


def g1(phi):
    if isinstance(phi, FixVar):
        return FALSE
    if isinstance(phi, Mu):
        return g1(phi.body)
    if isinstance(phi, Not):
        return Not(g1(phi.arg))
    if isinstance(phi, And):
        return And(g1(phi.left), g1(phi.right))
    if isinstance(phi, Dia):
        return Dia(phi.game, g1(phi.body))
    if isinstance(phi, (Verum, Eq, Rel, Prop)):
        return phi
    raise TypeError(f"not a fixpoint formula: {phi!r}")


# ---------------------------------------------------------------- sabotage gadget


@dataclass(frozen=True)
class SabotageGadget:
    s: str
    d: str
    angel_sab: object
    demon_sab: object
    guarded: object
    init: object


def _symbol_name(a) -> str:
    if isinstance(a, PGame):
        return a.name
    if isinstance(a, Atomic):
        return "star" if a.action == STAR else a.action
    raise TypeError(f"not an atomic game: {a!r}")


def sabotage_gadget(a, ctop: str = "ctop", cbot: str = "cbot", avoid=()) -> SabotageGadget:
    """State-variable encoding that lets a player sabotage the game `a`."""
    base = _symbol_name(a)
    s, d = f"s_{base}", f"d_{base}"
    taken = set(avoid) | set(all_names(a))
    for v in (s, d):
        if v in taken or v in (ctop, cbot):
            raise NameCollision(f"gadget variable {v} already occurs in the formula")
    used = taken | {s, d, ctop, cbot}
    T, B = Var(ctop), Var(cbot)
    S_, D_ = Var(s), Var(d)
    angel = Seq(assign_game(s, T, used), assign_game(d, T, used))
    demon = Seq(assign_game(s, T, used), assign_game(d, B, used))
    guarded = Choice(
        Seq(Test(Eq(S_, B)), a),
        Seq(Test(Eq(S_, T)),
            Choice(Seq(Test(Eq(D_, T)), Dual(Test(FALSE))),
                   Seq(Test(Eq(D_, B)), Test(FALSE)))),
    )
    return SabotageGadget(s, d, angel, demon, guarded, assign_game(s, B, used))


# ---------------------------------------------------------------- G: the combined translation


def _dual(g):
    return g.body if isinstance(g, Dual) else Dual(g)


_SKIP = Test(TRUE)


def _seq(a, b):
    if b == _SKIP:
        return a
    if a == _SKIP:
        return b
    return Seq(a, b)


def _pick(name, used):
    return name if name not in used else fresh(name, used)


def _disjuncts(f) -> list:
    m = as_or(f)
    if m is None:
        return [f]
    return _disjuncts(m[0]) + _disjuncts(m[1])


def _split(body, X):
    ds = _disjuncts(body)
    exits = [d for d in ds if X not in free_vars(d)]
    steps = [d for d in ds if X in free_vars(d)]
    return exits, steps


def _choice(games):
    out = games[-1]
    for g in reversed(games[:-1]):
        out = Choice(g, out)
    return out


def g2(phi):
    """Fragment inverse of F on |D| >= 2: game-shaped fixpoints become loops."""
    if isinstance(phi, (Verum, Eq, Rel)):
        return phi
    if isinstance(phi, FixVar):
        raise Unsupported(phi, "free fixpoint variable outside a game-shaped position")
    if isinstance(phi, Not):
        return Not(g2(phi.arg))
    if isinstance(phi, And):
        return And(g2(phi.left), g2(phi.right))
    if isinstance(phi, Dia):
        return Dia(phi.game, g2(phi.body))
    if isinstance(phi, Mu):
        X = phi.var
        exits, steps = _split(phi.body, X)
        psi = disj(exits) if exits else FALSE
        if not steps:
            return g2(psi)
        gamma = _choice([_as_game(s, X, False, phi) for s in steps])
        return Dia(Loop(gamma), g2(psi))
    raise Unsupported(phi)


def _as_game(chi, X, neg, whole):
    """A game beta with chi equivalent to <beta>X (or <beta>!X when neg)."""
    if isinstance(chi, FixVar) and chi.name == X and not neg:
        return Test(TRUE)
    if isinstance(chi, Not):
        if isinstance(chi.arg, FixVar) and chi.arg.name == X and neg:
            return Test(TRUE)
        return _dual(_as_game(chi.arg, X, not neg, whole))
    if isinstance(chi, Dia) and isinstance(chi.game, Atomic):
        return _seq(chi.game, _as_game(chi.body, X, neg, whole))
    if isinstance(chi, And):
        lx, rx = X in free_vars(chi.left), X in free_vars(chi.right)
        if not lx:
            return _seq(Test(g2(chi.left)), _as_game(chi.right, X, neg, whole))
        if not rx:
            return _seq(Test(g2(chi.right)), _as_game(chi.left, X, neg, whole))
        # both players' branches: Demon chooses
        return _dual(Choice(_dual(_as_game(chi.left, X, neg, whole)),
                            _dual(_as_game(chi.right, X, neg, whole))))
    if isinstance(chi, Mu) and chi.var != X and X in free_vars(chi):
        Y = chi.var
        exits, steps = _split(chi.body, Y)
        if any(X in free_vars(s) for s in steps):
            raise Unsupported(chi, f"{X} and {Y} interleave")
        delta = _as_game(disj(exits), X, neg, whole) if exits else None
        if delta is None:
            raise Unsupported(chi)
        if not steps:
            return delta
        gamma = _choice([_as_game(s, Y, False, whole) for s in steps])
        return _seq(Loop(gamma), delta)
    raise Unsupported(chi, f"not game-shaped in {X}")


@dataclass(frozen=True)
class Combined:
    formula: object
    g1_branch: object
    g2_branch: object
    ctop: str
    cbot: str


def g_combined_parts(phi) -> Combined:
    bad = free_vars(phi) - individual(free_vars(phi))
    if bad:
        raise PreconditionError(sorted(bad)[0], "fixpoint variable occurs free")
    used = set(all_names(phi))
    ctop = _pick("ctop", used)
    cbot = _pick("cbot", used | {ctop})
    x = _pick("x", {ctop, cbot})
    y = _pick("y", {ctop, cbot, x})
    one = forall(x, forall(y, Eq(Var(x), Var(y))))
    b1 = g1(phi)
    b2 = g2(phi)
    out = And(Implies(one, b1), forall(ctop, forall(cbot, Implies(neq(Var(ctop), Var(cbot)), b2))))
    return Combined(out, b1, b2, ctop, cbot)


def g_combined(phi):
    """FOLmu formula to FOGL: G1 on singletons, the loop inverse elsewhere."""
    return g_combined_parts(phi).formula


# ---------------------------------------------------------------- least fixpoint logic


def mu_to_lfp(phi, vs):
    """[lfp R_X, vs . phi'](vs) for each mu X; <*(x:)> becomes exists x."""
    vs = tuple(vs)
    extra = individual(all_names(phi)) - set(vs) - _relation_and_fn_names(phi)
    if extra:
        raise PreconditionError(sorted(extra)[0], "variable not among the listed variables")
    used = set(all_names(phi))
    args = tuple(Var(v) for v in vs)

    def go(n, scope):
        if isinstance(n, FixVar):
            if n.name not in scope:
                raise PreconditionError(n.name, "free fixpoint variable")
            return Rel(scope[n.name], args)
        if isinstance(n, (Verum, Eq, Rel)):
            return n
        if isinstance(n, Not):
            return Not(go(n.arg, scope))
        if isinstance(n, And):
            return And(go(n.left, scope), go(n.right, scope))
        if isinstance(n, Dia):
            g = n.game
            if not (isinstance(g, Atomic) and g.action == STAR):
                raise PreconditionError(show(g), "only the quantifier action is allowed")
            return Exists(g.bound[0], go(n.body, scope))
        if isinstance(n, Mu):
            R = fresh(f"R_{n.var}", used) if f"R_{n.var}" in used else f"R_{n.var}"
            used.add(R)
            return LfpApp(R, vs, go(n.body, {**scope, n.var: R}), args)
        raise PreconditionError(show(n), "not a fixpoint-logic formula")

    return go(phi, {})


def _relation_and_fn_names(n) -> set:
    out = set()
    for m in walk(n):
        if isinstance(m, Rel):
            out.add(m.name)
        elif isinstance(m, App):
            out.add(m.fn)
        elif isinstance(m, LfpApp):
            out.add(m.rel)
        elif isinstance(m, Atomic):
            out.add(m.action)
    return out


def _lfp_rel_names(n) -> list:
    return [m.rel for m in walk(n) if isinstance(m, LfpApp)]


def _lfp_bound_inside(n) -> set:
    out = set()
    for m in walk(n):
        if isinstance(m, Exists):
            out.add(m.var)
        elif isinstance(m, LfpApp):
            out |= set(m.vars)
    return out


def _lfp_free(n) -> set:
    """Free individual variables and free relation names of an LFP formula."""
    if isinstance(n, Var):
        return {n.name}
    if isinstance(n, App):
        return set().union(*[_lfp_free(a) for a in n.args]) if n.args else set()
    if isinstance(n, Verum):
        return set()
    if isinstance(n, Eq):
        return _lfp_free(n.left) | _lfp_free(n.right)
    if isinstance(n, Rel):
        return {n.name}.union(*[_lfp_free(a) for a in n.args])
    if isinstance(n, Not):
        return _lfp_free(n.arg)
    if isinstance(n, And):
        return _lfp_free(n.left) | _lfp_free(n.right)
    if isinstance(n, Exists):
        return _lfp_free(n.body) - {n.var}
    if isinstance(n, LfpApp):
        inner = _lfp_free(n.body) - set(n.vars) - {n.rel}
        return inner.union(*[_lfp_free(a) for a in n.args])
    raise TypeError(f"not an LFP formula: {n!r}")


def _lfp_positive(n, R) -> bool:
    def go(m, neg):
        if isinstance(m, Rel):
            return not (m.name == R and neg)
        if isinstance(m, Not):
            return go(m.arg, not neg)
        if isinstance(m, And):
            return go(m.left, neg) and go(m.right, neg)
        if isinstance(m, Exists):
            return go(m.body, neg)
        if isinstance(m, LfpApp):
            return m.rel == R or go(m.body, neg)
        return True

    return go(n, False)


def lfp_to_mu(psi):
    """LFP formula to FOLmu: R(args) inside its binder becomes <vars := args> X_R."""
    rels = _lfp_rel_names(psi)
    dup = [r for r in set(rels) if rels.count(r) > 1]
    if dup:
        raise PreconditionError(sorted(dup)[0], "fixpoint relation bound more than once")
    used = set(all_names(psi))
    fixname = {}
    for R in rels:
        base = R[2:] if R.startswith("R_") and is_fixvar_name(R[2:]) else f"X_{R}"
        name = base if base not in used and base not in fixname.values() else fresh(base, used)
        used.add(name)
        fixname[R] = name

    def go(n, scope):
        if isinstance(n, Rel) and n.name in scope:
            xs = scope[n.name]
            pairs = [(x, t) for x, t in zip(xs, n.args) if t != Var(x)]
            target = FixVar(fixname[n.name])
            if not pairs:
                return target
            return vec_assign_mu([x for x, _ in pairs], [t for _, t in pairs], target, used)
        if isinstance(n, (Verum, Eq, Rel)):
            return n
        if isinstance(n, Not):
            return Not(go(n.arg, scope))
        if isinstance(n, And):
            return And(go(n.left, scope), go(n.right, scope))
        if isinstance(n, Exists):
            return Dia(Atomic(STAR, (n.var,), ()), go(n.body, scope))
        if isinstance(n, LfpApp):
            R = n.rel
            if not _lfp_positive(n.body, R):
                raise PreconditionError(R, "occurs negatively in its own definition")
            params = _lfp_free(n.body) - set(n.vars) - {R} - _relation_and_fn_names(n.body)
            clobbered = params & _lfp_bound_inside(n.body)
            if clobbered:
                raise PreconditionError(R, f"parameter {sorted(clobbered)[0]} is rebound "
                                           "inside the definition")
            body = Mu(fixname[R], go(n.body, {**scope, R: tuple(n.vars)}))
            pairs = [(x, t) for x, t in zip(n.vars, n.args) if t != Var(x)]
            if not pairs:
                return body
            return vec_assign_mu([x for x, _ in pairs], [t for _, t in pairs], body, used)
        raise PreconditionError(show(n), "not an LFP formula")

    return go(psi, {})


def _lfp_term(N: Structure, omega, t):
    if isinstance(t, Var):
        return omega[t.name]
    return N.apply(t.fn, tuple(_lfp_term(N, omega, a) for a in t.args))


class LfpEvaluator:
    """Per-assignment evaluator for least fixpoint logic on a finite structure."""

    def __init__(self, N: Structure):
        self.N = N
        self._memo: dict = {}

    def holds(self, n, omega: dict, rels: dict | None = None) -> bool:
        return self._holds(n, omega, rels or {})

    def _holds(self, n, omega, rels) -> bool:
        N = self.N
        if isinstance(n, Verum):
            return True
        if isinstance(n, Eq):
            return _lfp_term(N, omega, n.left) == _lfp_term(N, omega, n.right)
        if isinstance(n, Rel):
            args = tuple(_lfp_term(N, omega, a) for a in n.args)
            if n.name in rels:
                return args in rels[n.name]
            return N.holds(n.name, args)
        if isinstance(n, Not):
            return not self._holds(n.arg, omega, rels)
        if isinstance(n, And):
            return self._holds(n.left, omega, rels) and self._holds(n.right, omega, rels)
        if isinstance(n, Exists):
            return any(self._holds(n.body, {**omega, n.var: u}, rels) for u in range(N.domain))
        if isinstance(n, LfpApp):
            return tuple(_lfp_term(N, omega, a) for a in n.args) in self.relation(n, omega, rels)
        raise TypeError(f"not an LFP formula: {n!r}")

    def relation(self, n: LfpApp, omega, rels) -> frozenset:
        free = sorted(_lfp_free(n.body) - set(n.vars) - {n.rel})
        key = (n, tuple((v, omega[v]) for v in free if v in omega),
               tuple((r, rels[r]) for r in free if r in rels))
        if key in self._memo:
            return self._memo[key]
        tuples = list(itertools.product(range(self.N.domain), repeat=len(n.vars)))

        def step(A):
            inner = {**rels, n.rel: A}
            return frozenset(u for u in tuples
                             if self._holds(n.body, {**omega, **dict(zip(n.vars, u))}, inner))

        out = lfp(step, frozenset())
        self._memo[key] = out
        return out


def eval_lfp(N: Structure, psi, support=None) -> int:
    """Bitmask of satisfying assignments, in the state order of the semantics module."""
    support = tuple(sorted(individual(_lfp_free(psi)) - _relation_and_fn_names(psi))) \
        if support is None else tuple(support)
    ev = LfpEvaluator(N)
    bits = 0
    for s, vals in enumerate(itertools.product(range(N.domain), repeat=len(support))):
        if ev.holds(psi, dict(zip(support, vals))):
            bits |= 1 << s
    return bits


__all__ = [
    "Unsupported", "PreconditionError", "NameCollision", "PropReduction", "flatten", "sharpen",
    "prop_interpretation", "parikh_f", "fixvar_names", "g1", "SabotageGadget",
    "sabotage_gadget", "g2", "Combined", "g_combined_parts", "g_combined", "mu_to_lfp",
    "lfp_to_mu", "LfpEvaluator", "eval_lfp", "default_support", "conj", "occurs_positively",
    "term_vars",
]
