"""Property experiments with brute-force oracles, shared by tests, scripts and selftest.

Each experiment returns an ExpResult; `failures` holds printable counterexamples.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from . import gen
from .gen import SIG_FUN, SIG_LFP, SIG_SMALL
from .ode import (
    PolyVectorField, Poly, ReachQuery, RejectedAtLevel0, PassedToDepth, TrajectoryEscape,
    refine_reach, rk4_integrate, taylor_check,
)
from .proof import (
    ProofBuilder, check_axiom_instance, check_proof, deduction_transform, derive_schema,
    exists_rule_proof, mutate, mutation_sites,
)
from .semantics import (
    Evaluator, StateSet, default_support, enumerate_structures, eval_term,
)
from .syntax import (
    FALSE, And, Atomic, Choice, Dia, Dual, Eq, FixVar, Iff, Implies, Loop, Mu, Not, Or,
    PGame, Seq, Test, Var, bound_vars, free_vars, individual, quant, show, substitute_fixvar,
    substitute_var, term_vars,
)
from .translate import (
    Unsupported, eval_lfp, fixvar_names, flatten, g1, g_combined, lfp_to_mu, mu_to_lfp,
    parikh_f, prop_interpretation, sabotage_gadget, sharpen,
)

VARS = ("x", "y")


@dataclass
class ExpResult:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)
    elapsed: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures and self.checked > 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f", {len(self.failures)} failing" if self.failures else ""
        return f"{status} {self.name}: {self.checked} checks{extra} in {self.elapsed:.1f}s"


def _timed(fn):
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.elapsed = time.perf_counter() - t0
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _full(ev: Evaluator) -> int:
    return ev.full


def _chunks(items, n):
    k = max(1, math.ceil(len(items) / n))
    return [items[i:i + k] for i in range(0, len(items), k)]


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, jobs))


# ---------------------------------------------------------------- 1. axiom soundness

GL_SCHEMAS = ("exists", "C", "nonempty", "dual", "test", "composition", "choice", "loop")
MU_SCHEMAS = ("mu",)


def axiom_instance(rng, schema: str, sig=SIG_SMALL, vs=VARS):
    """A random instance of the named schema; it also passes check_axiom_instance."""
    vs = list(vs)
    fo = lambda: gen.rand_gl(rng, sig, vs, 2, 1, 0)
    game = lambda: gen.rand_game(rng, sig, vs, 2, 1, 0)
    if schema == "exists":
        phi, x = fo(), rng.choice(vs)
        theta = gen.rand_term(rng, sig, vs, 1)
        return Implies(substitute_var(phi, x, theta, "gl"), Dia(quant(x), phi))
    if schema == "C":
        return _c_instance(rng, sig, vs)
    if schema == "nonempty":
        return Not(Dia(quant(rng.choice(vs)), FALSE))
    if schema == "dual":
        a, phi = game(), fo()
        return Iff(Dia(Dual(a), phi), Not(Dia(a, Not(phi))))
    if schema == "test":
        q, phi = fo(), fo()
        return Iff(Dia(Test(q), phi), And(q, phi))
    if schema == "composition":
        a, b, phi = game(), game(), fo()
        return Iff(Dia(Seq(a, b), phi), Dia(a, Dia(b, phi)))
    if schema == "choice":
        a, b, phi = game(), game(), fo()
        return Iff(Dia(Choice(a, b), phi), Or(Dia(a, phi), Dia(b, phi)))
    if schema == "loop":
        a, phi = game(), fo()
        star = Dia(Loop(a), phi)
        return Implies(Or(phi, Dia(a, star)), star)
    if schema == "mu":
        body = gen.rand_mu(rng, sig, vs, 3, ("X", "Y"), 0, closed=False, free_fix=("X",))
        mu = Mu("X", body)
        return Implies(substitute_fixvar(body, "X", mu), mu)
    raise ValueError(schema)



def _c_instance(rng, sig, vs):
    g = gen.rand_atomic_game(rng, sig, list(vs), 0)
    rest = [v for v in vs if v not in g.bound]
    psi = gen.rand_gl(rng, sig, rest, 2, 1, 0) if rest else gen.rand_atom(rng, sig, ["x"], 0)
    if free_vars(psi) & set(g.bound):
        psi = Not(FALSE)
    phi = gen.rand_gl(rng, sig, list(vs), 2, 1, 0)
    return Implies(And(psi, Dia(g, phi)), Dia(g, And(psi, phi)))


def make_instances(schema: str, n: int, seed) -> list:
    rng = random.Random(f"{seed}:axiom:{schema}")
    out = []
    while len(out) < n:
        f = axiom_instance(rng, schema)
        calc = "mu" if schema in MU_SCHEMAS else "gl"
        # a capturing mu unfolding is not an instance; draw again
        if check_axiom_instance(schema, f, calc):
            out.append(f)
    return out


def _valid_everywhere(job):
    formulas, structures = job
    bad = []
    for f in formulas:
        sup = default_support(f)
        for N in structures:
            ev = Evaluator(N, sup)
            if ev.formula(f) != ev.full:
                bad.append((show(f), N.to_json()))
                break
    return bad


@_timed
def axiom_soundness(n: int = 200, max_domain: int = 2, max_generators: int = 2,
                    seed=None, workers: int = 1, schemas=GL_SCHEMAS + MU_SCHEMAS) -> ExpResult:
    seed = gen.seed_from_env() if seed is None else seed
    structures = list(enumerate_structures(SIG_SMALL, max_domain, max_generators))
    res = ExpResult("axiom soundness sweep", detail={"structures": len(structures)})
    for schema in schemas:
        inst = make_instances(schema, n, seed)
        jobs = [(c, structures) for c in _chunks(inst, workers)]
        for bad in _map(_valid_everywhere, jobs, workers):
            res.failures += [(schema,) + b for b in bad]
        res.checked += len(inst)
    return res


# ---------------------------------------------------------------- 2. substitution lemmas


def _states(N, support):
    return itertools.product(range(N.domain), repeat=len(support))


@_timed
def substitution_lemma(n: int = 500, logic: str = "gl", seed=None, structures_per=6) -> ExpResult:
    """[[phi[x->theta]]] = {w : w[x -> [[theta]]w] in [[phi]]}, checked state by state."""
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:subst:{logic}")
    res = ExpResult(f"substitution lemma ({logic})")
    vs = list(VARS)
    for _ in range(n):
        if logic == "gl":
            phi = gen.rand_gl(rng, SIG_FUN, vs, 3, 2, 1)
        else:
            phi = gen.rand_mu(rng, SIG_FUN, vs, 4, ("X", "Y"), 1)
        x = rng.choice(vs)
        theta = gen.rand_term(rng, SIG_FUN, vs, 2)
        sub = substitute_var(phi, x, theta, logic)
        support = default_support(phi, sub, extra=(x,) + tuple(sorted(term_vars(theta))))
        for _ in range(structures_per):
            N = gen.rand_structure(rng, SIG_FUN, rng.randint(1, 3), 2)
            if N.domain ** len(support) > 4096:
                N = gen.rand_structure(rng, SIG_FUN, 2, 2)
            ev = Evaluator(N, support)
            lhs = ev.formula(sub)
            base = ev.formula(phi)
            pos = support.index(x)
            rhs = 0
            for s, w in enumerate(_states(N, support)):
                v = eval_term(N, dict(zip(support, w)), theta)
                w2 = w[:pos] + (v,) + w[pos + 1:]
                s2 = sum(c * N.domain ** (len(w) - 1 - i) for i, c in enumerate(w2))
                if base >> s2 & 1:
                    rhs |= 1 << s
            res.checked += 1
            if lhs != rhs:
                res.failures.append((show(phi), x, show(theta), show(sub)))
                break
    return res


@_timed
def fixpoint_substitution_law(n: int = 200, seed=None, structures_per=6) -> ExpResult:
    """[[phi[X->rho]]]_I = [[phi]]_{I[X -> [[rho]]_I]}."""
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:fixsubst")
    res = ExpResult("fixpoint substitution law")
    vs = list(VARS)
    for _ in range(n):
        phi = gen.rand_mu(rng, SIG_SMALL, vs, 4, ("X", "Y"), 0, closed=False, free_fix=("X",))
        rho = gen.rand_mu(rng, SIG_SMALL, vs, 3, ("Y",), 0)
        # rho is closed in fixpoint variables, so no binder in phi can capture it
        sub = substitute_fixvar(phi, "X", rho)
        support = default_support(phi, rho, sub)
        for _ in range(structures_per):
            N = gen.rand_structure(rng, SIG_SMALL, rng.randint(1, 2), 2)
            ev = Evaluator(N, support)
            r = ev.formula(rho)
            res.checked += 1
            if ev.formula(sub) != ev.formula(phi, {"X": r}):
                res.failures.append((show(phi), show(rho)))
                break
    return res


# ---------------------------------------------------------------- 3. coincidence, bound effect


def _index(N, support, w):
    return sum(c * N.domain ** (len(w) - 1 - i) for i, c in enumerate(w))


@_timed
def coincidence(n: int = 500, seed=None) -> ExpResult:
    """States agreeing on FV(phi) agree on phi; games agree on FV-closed goals."""
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:coincidence")
    res = ExpResult("coincidence lemmas")
    vs = ["x", "y", "z"]
    for i in range(n):
        N = gen.rand_structure(rng, SIG_FUN, 2, 2)
        support = tuple(vs)
        ev = Evaluator(N, support)
        states = list(_states(N, support))
        if i % 2 == 0:
            phi = gen.rand_gl(rng, SIG_FUN, vs, 3, 2, 1)
            keep = [support.index(v) for v in sorted(individual(free_vars(phi)))]
            bits = ev.formula(phi)
            what = show(phi)
        else:
            alpha = gen.rand_game(rng, SIG_FUN, vs, 2, 1, 1)
            V = individual(free_vars(alpha)) | {rng.choice(vs)}
            keep = [support.index(v) for v in sorted(V)]
            raw = rng.getrandbits(len(states))
            # V-cylinder closure of a random goal
            proj = {tuple(w[j] for j in keep) for s, w in enumerate(states) if raw >> s & 1}
            S = sum(1 << s for s, w in enumerate(states) if tuple(w[j] for j in keep) in proj)
            bits = ev.game(alpha, S)
            what = show(alpha)
        classes: dict = {}
        ok = True
        for s, w in enumerate(states):
            key = tuple(w[j] for j in keep)
            val = bits >> s & 1
            if classes.setdefault(key, val) != val:
                ok = False
        res.checked += 1
        if not ok:
            res.failures.append(what)
    return res


@_timed
def bound_effect(n: int = 500, seed=None) -> ExpResult:
    """w in [[alpha]](S) iff w in [[alpha]](S restricted to states agreeing with w off BV)."""
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:bound")
    res = ExpResult("bound effect lemma")
    vs = ["x", "y", "z"]
    for _ in range(n):
        N = gen.rand_structure(rng, SIG_FUN, 2, 2)
        support = tuple(vs)
        ev = Evaluator(N, support)
        states = list(_states(N, support))
        alpha = gen.rand_game(rng, SIG_FUN, vs, 2, 1, 1)
        outside = [support.index(v) for v in vs if v not in bound_vars(alpha)]
        S = rng.getrandbits(len(states))
        full = ev.game(alpha, S)
        ok = True
        for s, w in enumerate(states):
            key = tuple(w[j] for j in outside)
            Sw = sum(1 << t for t, u in enumerate(states)
                     if S >> t & 1 and tuple(u[j] for j in outside) == key)
            if (ev.game(alpha, Sw) >> s & 1) != (full >> s & 1):
                ok = False
                break
        res.checked += 1
        if not ok:
            res.failures.append(show(alpha))
    return res


# ---------------------------------------------------------------- 4. least fixpoints


@_timed
def loop_minimality(n: int = 100, seed=None) -> ExpResult:
    """[[alpha*]](S) equals the intersection of all pre-fixpoints, over 8 states."""
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:lfp")
    res = ExpResult("loop is the least pre-fixpoint")
    vs = ["x", "y", "z"]
    for _ in range(n):
        N = gen.rand_structure(rng, SIG_SMALL, 2, 2)
        ev = Evaluator(N, tuple(vs))
        alpha = gen.rand_game(rng, SIG_SMALL, vs, 2, 1, 0)
        S = rng.getrandbits(ev.count)
        meet = ev.full
        monotone = True
        image = {Z: ev.game(alpha, Z) for Z in range(1 << ev.count)}
        for Z in range(1 << ev.count):
            if (S | image[Z]) & ~Z == 0:
                meet &= Z
        for Z in range(0, 1 << ev.count, 7):
            for W in (Z | (1 << k) for k in range(ev.count)):
                if image[Z] & ~image[W]:
                    monotone = False
        res.checked += 1
        if ev.game(Loop(alpha), S) != meet or not monotone:
            res.failures.append(show(alpha))
    return res


# ---------------------------------------------------------------- 5-9. translations


def _equal_on(job):
    pairs, structures = job
    bad = []
    for a, b in pairs:
        sup = default_support(a, b)
        for N in structures:
            ev = Evaluator(N, sup)
            if ev.formula(a) != ev.formula(b):
                bad.append((show(a), show(b)))
                break
    return bad


@_timed
def translation_f(n: int = 100, max_domain: int = 2, max_generators: int = 1, seed=None,
                  workers: int = 1, game_depth: int = 4) -> ExpResult:
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:F")
    structures = list(enumerate_structures(SIG_SMALL, max_domain, max_generators))
    res = ExpResult("translation F", detail={"structures": len(structures), "max_fixvars": 0})
    pairs = []
    for _ in range(n):
        phi = gen.rand_gl(rng, SIG_SMALL, list(VARS), 2, game_depth, 0)
        m = parikh_f(phi)
        k = len(fixvar_names(m))
        res.detail["max_fixvars"] = max(res.detail["max_fixvars"], k)
        if k > 2:
            res.failures.append(("more than two fixpoint variables", show(m)))
        pairs.append((phi, m))
    for bad in _map(_equal_on, [(c, structures) for c in _chunks(pairs, workers)], workers):
        res.failures += bad
    res.checked = len(pairs)
    return res


@_timed
def translation_g1(n: int = 100, seed=None) -> ExpResult:
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:G1")
    structures = list(enumerate_structures(SIG_SMALL, 1, 2, min_domain=1))
    res = ExpResult("translation G1 on singletons", detail={"structures": len(structures)})
    pairs = [(phi, g1(phi)) for phi in
             (gen.rand_mu(rng, SIG_SMALL, list(VARS), 5, ("X", "Y"), 0) for _ in range(n))]
    res.failures += _equal_on((pairs, structures))
    res.checked = len(pairs)
    return res


@_timed
def sabotage(max_generators: int = 2, goals: int = 48, seed=None) -> ExpResult:
    """The three cases of the gadget on every |D| = 2 structure."""
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:sabotage")
    a = Atomic("a", ("x",), (Var("x"),))
    gad = sabotage_gadget(a, "ctop", "cbot", avoid={"x"})
    support = ("x", gad.s, gad.d, "ctop", "cbot")
    structures = list(enumerate_structures(SIG_SMALL, 2, max_generators, min_domain=2))
    res = ExpResult("sabotage gadget", detail={"structures": len(structures)})
    s, d = gad.s, gad.d
    for N in structures:
        ev = Evaluator(N, support)
        cond = lambda f: ev.formula(f)
        distinct = cond(Not(Eq(Var("ctop"), Var("cbot"))))
        # the gadget presupposes ctop != cbot; otherwise s = cbot also enables the sabotage branch
        plain = cond(Eq(Var(s), Var("cbot"))) & distinct
        angel = cond(And(Eq(Var(s), Var("ctop")), Eq(Var(d), Var("ctop")))) & distinct
        demon = cond(And(Eq(Var(s), Var("ctop")), Eq(Var(d), Var("cbot")))) & distinct
        targets = [0, ev.full] + [rng.getrandbits(ev.count) for _ in range(goals)]
        for S in targets:
            g = ev.game(gad.guarded, S)
            res.checked += 1
            if g & plain != ev.game(a, S) & plain:
                res.failures.append(("unsabotaged", N.to_json(), S))
            if g & angel != angel:
                res.failures.append(("angel", N.to_json(), S))
            if g & demon != 0:
                res.failures.append(("demon", N.to_json(), S))
        # the set-up games reach the advertised sabotage states
        after_angel = ev.game(gad.angel_sab, angel | (ev.full ^ distinct))
        after_demon = ev.game(gad.demon_sab, demon | (ev.full ^ distinct))
        after_init = ev.game(gad.init, plain | (ev.full ^ distinct))
        if after_angel != ev.full or after_demon != ev.full or after_init != ev.full:
            res.failures.append(("set-up games", N.to_json()))
    return res


@_timed
def translation_g(n: int = 50, max_domain: int = 2, max_generators: int = 1, seed=None,
                  workers: int = 1) -> ExpResult:
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:G")
    structures = list(enumerate_structures(SIG_SMALL, max_domain, max_generators))
    res = ExpResult("combined translation G on the game-shaped fragment",
                    detail={"structures": len(structures)})
    pairs = []
    for _ in range(n):
        phi = gen.rand_mu_game_shaped(rng, SIG_SMALL, list(VARS), 2, 0)
        try:
            pairs.append((phi, g_combined(phi)))
        except Unsupported as e:
            res.failures.append(("unsupported", show(phi), str(e)))
    for bad in _map(_equal_on, [(c, structures) for c in _chunks(pairs, workers)], workers):
        res.failures += bad
    res.checked = len(pairs)
    return res


@_timed
def lfp_roundtrip(n: int = 50, max_domain: int = 2, seed=None) -> ExpResult:
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:LFP")
    structures = list(enumerate_structures(SIG_LFP, max_domain, 1))
    res = ExpResult("LFP round trip", detail={"structures": len(structures)})
    support = tuple(VARS)
    for _ in range(n):
        phi = gen.rand_mu(rng, SIG_LFP, list(VARS), 5, ("X", "Y"), 0)
        lf = mu_to_lfp(phi, support)
        back = lfp_to_mu(lf)
        sup = default_support(phi, back, extra=support)
        for N in structures:
            ev = Evaluator(N, sup)
            want = ev.formula(phi)
            direct = eval_lfp(N, lf, sup)
            if ev.formula(back) != want or direct != want:
                res.failures.append((show(phi), show(lf), show(back)))
                break
        res.checked += 1
    return res


@_timed
def flatten_roundtrip(n: int = 500, seed=None) -> ExpResult:
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:flat")
    res = ExpResult("flatten/sharpen")
    for i in range(n):
        phi = (gen.rand_gl(rng, SIG_FUN, list(VARS), 4, 3, 1) if i % 2 == 0
               else gen.rand_mu(rng, SIG_FUN, list(VARS), 5))
        r = flatten(phi)
        res.checked += 1
        inverse = {v: k for k, v in r.table.items()}
        if sharpen(r) != phi or len(inverse) != len(r.table):
            res.failures.append(show(phi))
            continue
        N = gen.rand_structure(rng, SIG_FUN, 2, 2)
        sup = default_support(phi)
        ev = Evaluator(N, sup)
        props, games = prop_interpretation(ev, r.table)
        pev = Evaluator(N, sup, props=props, pgames=games)
        if pev.formula(r.formula) != ev.formula(phi):
            res.failures.append(("abstraction", show(phi)))
    return res


# ---------------------------------------------------------------- 10. proofs


def shipped_proofs() -> dict:
    """The named derivations shipped with the package, freshly built."""
    from .syntax import parse
    P = lambda s, k="gl-formula": parse(s, k)
    out = {}
    out["exists_rule"] = (exists_rule_proof("x", P("R(x) & x = y"), P("R(y)")), "gl")
    out["cplus_choice"] = (derive_schema("Cplus", P("a(x:y) ++ b(z:)", "game"), P("R(x)"),
                                         P("R(w)")), "gl")
    out["cplus_loop"] = (derive_schema("Cplus", P("(a(x:y); ?R(x))*", "game"), P("R(x)"),
                                       P("R(w)")), "gl")
    out["cplus_dual"] = (derive_schema("Cplus", P("(a(x:x)^d; b(z:))*", "game"), P("R(x)"),
                                       P("w = w")), "gl")
    out["mc"] = (derive_schema("Mc", P("a(x:y); (b(z:) ++ ?R(w))", "game"), P("R(x)"), P("R(y)"),
                               P("R(w)")), "gl")
    out["ic"] = (derive_schema("Ic", P("a(x:y)^d ++ b(z:)", "game"), P("R(x)"), P("R(y)"),
                               P("R(w)")), "gl")
    b = ProofBuilder(P("R(w)", "mu-formula"), "mu")
    h = b.hyp()
    t = b.chain([h], Implies(P("R(x)", "mu-formula"), P("R(w)", "mu-formula")))
    b.mon(t, Atomic("a", ("x",), (Var("w"),)))
    out["mu_mon_under_hypothesis"] = (deduction_transform(b.build(), "mu"), "mu")
    return out


@_timed
def proof_checks(n_random: int = 100, seed=None, mutation_cap: int | None = None) -> ExpResult:
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:proofs")
    res = ExpResult("proof checker")
    accepted = []
    for name, (p, calc) in shipped_proofs().items():
        v = check_proof(p, calc)
        res.checked += 1
        if not v:
            res.failures.append((name, str(v)))
        else:
            accepted.append((name, p, calc))
    for i in range(n_random):
        p = gen.rand_hyp_proof(rng, SIG_SMALL, steps=5)
        d = deduction_transform(p)
        v = check_proof(d)
        res.checked += 1
        if not v or d.conclusion != Implies(p.hypothesis, p.conclusion):
            res.failures.append((f"deduction {i}", str(v)))
        elif i < 10:
            accepted.append((f"deduction {i}", d, "gl"))
    mutants = rejected = 0
    for name, p, calc in accepted:
        sites = mutation_sites(p)
        rng.shuffle(sites)
        if mutation_cap is not None:
            sites = sites[: max(1, mutation_cap // len(accepted))]
        for site in sites:
            q = mutate(p, site)
            mutants += 1
            if check_proof(q, calc, goal=p.conclusion):
                res.failures.append((name, "mutation accepted", site))
            else:
                rejected += 1
    res.detail.update(mutants=mutants, rejected=rejected)
    res.checked += mutants
    return res


# ---------------------------------------------------------------- 11-13. ODE


def random_field(rng, dim: int, degree: int = 2) -> PolyVectorField:
    xs = [f"x{i + 1}" for i in range(dim)]
    monos = [m for m in itertools.product(range(degree + 1), repeat=dim) if sum(m) <= degree]
    comps = []
    for _ in xs:
        terms = {tuple((v, e) for v, e in zip(xs, m)): rng.randint(-2, 2) for m in monos
                 if rng.random() < 0.6}
        comps.append(Poly(terms))
    return PolyVectorField(tuple(xs), tuple(comps))


@_timed
def ode_necessity(n: int = 100, samples: int = 10, seed=None, eps: float = 1e-7) -> ExpResult:
    """Tuples on integrated trajectories satisfy the Taylor bound."""
    seed = gen.seed_from_env() if seed is None else seed
    rng = random.Random(f"{seed}:ode")
    res = ExpResult("Taylor necessity on trajectories")
    K = 3
    made = 0
    while made < n:
        F = random_field(rng, rng.randint(1, 2))
        x0 = tuple(rng.uniform(-1, 1) for _ in range(F.dim))
        T = rng.uniform(0.05, 0.6)
        grid = 400
        try:
            path = [x0]
            for _ in range(grid):
                path.append(rk4_integrate(F, path[-1], T / grid, 8, K))
        except (TrajectoryEscape, OverflowError):
            continue
        made += 1
        for _ in range(samples):
            i, j = sorted(rng.sample(range(grid + 1), 2))
            chk = taylor_check(path[i], path[j], (j - i) * T / grid, F, K, eps)
            res.checked += 1
            if not chk.ok:
                res.failures.append((str(F.components), path[i], path[j], chk.lhs, chk.bound))
    return res


HARMONIC = PolyVectorField.parse(["x1", "x2"], ["x2", "-1*x1"])
EXPONENTIAL = PolyVectorField.parse(["x"], ["x"])


@_timed
def ode_positive() -> ExpResult:
    res = ExpResult("ODE positive cases")
    v1 = refine_reach(ReachQuery((1, 0), (0, -1), math.pi / 2, 2, depth=6), HARMONIC)
    v2 = refine_reach(ReachQuery((1,), (2.718281828,), 1, 3, depth=4), EXPONENTIAL)
    res.detail.update(harmonic=str(v1), exponential=str(v2))
    res.checked = 2
    for name, v, want in (("harmonic", v1, 6), ("exponential", v2, 4)):
        if not (isinstance(v, PassedToDepth) and v.depth == want):
            res.failures.append((name, str(v)))
    return res


@_timed
def ode_rejection() -> ExpResult:
    """Level-0 rejection, with the numbers re-derived from rational bounds on pi."""
    res = ExpResult("ODE certified rejection")
    v = refine_reach(ReachQuery((1, 0), (Fraction(19, 10), Fraction(19, 10)), math.pi / 2, 2,
                                depth=6), HARMONIC)
    lo, hi = Fraction(314159, 100000), Fraction(314160, 100000)
    t_lo, t_hi = lo / 2, hi / 2
    # |y - x - t F(x)| = max(0.9, 1.9 + t) and the bound is t^2/2 * 2
    lhs_lo = max(Fraction(9, 10), Fraction(19, 10) + t_lo)
    bound_hi = t_hi * t_hi
    res.detail.update(verdict=str(v), lhs=float(getattr(v, "lhs", float("nan"))),
                      bound=float(getattr(v, "bound", float("nan"))),
                      lhs_lower=float(lhs_lo), bound_upper=float(bound_hi))
    res.checked = 2
    if not isinstance(v, RejectedAtLevel0):
        res.failures.append(("verdict", str(v)))
    if not lhs_lo > bound_hi:
        res.failures.append(("interval arithmetic", float(lhs_lo), float(bound_hi)))
    return res
