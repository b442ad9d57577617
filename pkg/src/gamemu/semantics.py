"""Model checking over finite first-order neighbourhood structures.

States are assignments of domain elements to a finite, ordered support of
variables. A set of states is a bitmask over the n**len(support) states in
mixed-radix order: the first support variable is the most significant digit.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

from .syntax import (
    STAR, And, App, Atomic, Choice, Dia, Dual, Eq, Exists, FixVar, GameSignature,
    LfpApp, Loop, Mu, Not, PGame, Prop, Rel, Seq, Test, Var, Verum, bound_vars,
    all_names, free_vars, individual, is_game, term_vars, walk,
)


class SupportError(ValueError):
    pass


class StructureExplosion(RuntimeError):
    pass


# ---------------------------------------------------------------- structures


@dataclass(frozen=True)
class Structure:
    """Finite domain {0..n-1} with tables for every non-logical symbol.

    functions: name -> (arity, values) where values[i] is the image of the
        i-th argument tuple in mixed-radix order.
    relations: name -> (arity, frozenset of tuples).
    actions: name -> ((k, l), families) where families maps each parameter
        tuple to a tuple of generator sets (frozensets of k-tuples). A missing
        parameter tuple is the empty family. `*` is implicit.
    """

    domain: int
    functions: tuple = ()
    relations: tuple = ()
    actions: tuple = ()
    _f: dict = field(default=None, compare=False, repr=False, hash=False)
    _r: dict = field(default=None, compare=False, repr=False, hash=False)
    _a: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.domain < 1:
            raise ValueError("the domain must be non-empty")
        f = {n: (a, tuple(v)) for n, a, v in self.functions}
        r = {n: (a, frozenset(map(tuple, s))) for n, a, s in self.relations}
        a = {}
        for n, ar, fam in self.actions:
            if n == STAR:
                raise ValueError("* is built in and cannot be redefined")
            a[n] = (tuple(ar), {tuple(p): tuple(frozenset(map(tuple, g)) for g in gens)
                                for p, gens in fam})
        for n, (ar, vals) in f.items():
            if len(vals) != self.domain ** ar or any(not 0 <= v < self.domain for v in vals):
                raise ValueError(f"function table for {n} is not total on the domain")
        object.__setattr__(self, "_f", f)
        object.__setattr__(self, "_r", r)
        object.__setattr__(self, "_a", a)

    @property
    def signature(self) -> GameSignature:
        return GameSignature.of({n: a for n, (a, _) in self._f.items()},
                                {n: a for n, (a, _) in self._r.items()},
                                {n: ar for n, (ar, _) in self._a.items()})

    def apply(self, fn: str, args: tuple) -> int:
        try:
            ar, vals = self._f[fn]
        except KeyError:
            raise SupportError(f"no interpretation for function {fn}") from None
        idx = 0
        for a in args:
            idx = idx * self.domain + a
        return vals[idx]

    def holds(self, rel: str, args: tuple) -> bool:
        try:
            return tuple(args) in self._r[rel][1]
        except KeyError:
            raise SupportError(f"no interpretation for relation {rel}") from None

    def generators(self, action: str, params: tuple) -> tuple:
        """Generator sets for the neighbourhood of `params` (k-tuples)."""
        if action == STAR:
            return tuple(frozenset({(u,)}) for u in range(self.domain))
        try:
            _, fam = self._a[action]
        except KeyError:
            raise SupportError(f"no interpretation for action {action}") from None
        return fam.get(tuple(params), ())

    def action_arity(self, action: str) -> tuple:
        if action == STAR:
            return (1, 0)
        return self._a[action][0]

    # -- json
    def to_json(self) -> dict:
        n = self.domain
        out = {"domain": n, "functions": {}, "relations": {}, "actions": {}}
        for name, (ar, vals) in self._f.items():
            out["functions"][name] = [list(t) + [v] for t, v in
                                      zip(itertools.product(range(n), repeat=ar), vals)]
        for name, (ar, s) in self._r.items():
            out["relations"][name] = sorted(list(t) for t in s)
        for name, ((k, l), fam) in self._a.items():
            out["actions"][name] = {
                "arity": [k, l],
                "map": [{"params": list(p), "generators": [sorted(list(u) for u in g) for g in gens]}
                        for p, gens in sorted(fam.items())],
            }
        return out

    @classmethod
    def from_json(cls, data) -> "Structure":
        """Read the structure file format.

        Function tables list rows [arg1, ..., argk, value]; a row of length 1
        is read as the value table in mixed-radix order when every row has
        length 1.
        """
        if isinstance(data, str):
            data = json.loads(data)
        n = int(data["domain"])
        funcs = []
        for name, rows in (data.get("functions") or {}).items():
            if isinstance(rows, dict):
                ar, vals = int(rows["arity"]), tuple(rows["table"])
                funcs.append((name, ar, vals))
                continue
            rows = [list(r) for r in rows]
            widths = {len(r) for r in rows}
            if widths == {1}:
                vals = [r[0] for r in rows]
                ar = round(math.log(len(vals), n)) if n > 1 and len(vals) > 1 else (0 if len(vals) == 1 else 1)
                if n ** ar != len(vals):
                    raise ValueError(f"function table for {name} has the wrong length")
                funcs.append((name, ar, tuple(vals)))
                continue
            if len(widths) != 1:
                raise ValueError(f"function table for {name} mixes row widths")
            ar = widths.pop() - 1
            table = {tuple(r[:-1]): r[-1] for r in rows}
            vals = []
            for t in itertools.product(range(n), repeat=ar):
                if t not in table:
                    raise ValueError(f"function {name} undefined at {t}")
                vals.append(table[t])
            funcs.append((name, ar, tuple(vals)))
        rels = []
        for name, rows in (data.get("relations") or {}).items():
            given = None
            if isinstance(rows, dict):
                given, rows = int(rows["arity"]), rows.get("tuples", [])
            rows = [tuple(r) for r in rows]
            ar = given if given is not None else (len(rows[0]) if rows else 1)
            if any(len(r) != ar for r in rows):
                raise ValueError(f"relation {name} mixes arities")
            rels.append((name, ar, frozenset(rows)))
        acts = []
        for name, spec in (data.get("actions") or {}).items():
            if name == STAR:
                raise ValueError("* must not appear in a structure file")
            k, l = spec["arity"]
            fam = []
            for entry in spec.get("map", []):
                p = tuple(entry["params"])
                if len(p) != l:
                    raise ValueError(f"action {name} expects {l} parameters")
                gens = []
                for g in entry["generators"]:
                    g = frozenset(tuple(u) for u in g)
                    if any(len(u) != k for u in g):
                        raise ValueError(f"action {name} generators must hold {k}-tuples")
                    gens.append(g)
                fam.append((p, tuple(gens)))
            acts.append((name, (k, l), tuple(fam)))
        return cls(n, tuple(funcs), tuple(rels), tuple(acts))


# ---------------------------------------------------------------- state sets


@dataclass(frozen=True)
class StateSet:
    support: tuple
    domain: int
    bits: int

    @property
    def count(self) -> int:
        return self.domain ** len(self.support)

    @property
    def full(self) -> int:
        return (1 << self.count) - 1

    def is_all(self) -> bool:
        return self.bits == self.full

    def is_empty(self) -> bool:
        return self.bits == 0

    def __contains__(self, omega: Mapping) -> bool:
        idx = 0
        for v in self.support:
            idx = idx * self.domain + omega[v]
        return bool(self.bits >> idx & 1)

    def assignments(self) -> Iterator[dict]:
        for idx, vals in enumerate(itertools.product(range(self.domain), repeat=len(self.support))):
            if self.bits >> idx & 1:
                yield dict(zip(self.support, vals))

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def _check(self, other):
        if other.support != self.support or other.domain != self.domain:
            raise SupportError("state sets over different supports")

    def __or__(self, other):
        self._check(other)
        return StateSet(self.support, self.domain, self.bits | other.bits)

    def __and__(self, other):
        self._check(other)
        return StateSet(self.support, self.domain, self.bits & other.bits)

    def complement(self):
        return StateSet(self.support, self.domain, self.full ^ self.bits)

    def issubset(self, other) -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0


def lfp(step: Callable, bottom):
    """Least fixpoint of a monotone `step`, iterating from `bottom`."""
    z = bottom
    while True:
        nz = step(z)
        if nz == z:
            return z
        z = nz


# ---------------------------------------------------------------- evaluator


class Evaluator:
    """Denotations over a fixed structure and support.

    `props` and `pgames` interpret propositional symbols (as bitmasks) and
    propositional game symbols (as functions on bitmasks).
    """

    def __init__(self, N: Structure, support, fast_assign: bool = True,
                 props: Mapping | None = None, pgames: Mapping | None = None):
        self.N = N
        self.support = tuple(support)
        if len(set(self.support)) != len(self.support):
            raise SupportError("support variables must be distinct")
        self.n = N.domain
        self.k = len(self.support)
        self.count = self.n ** self.k
        if self.count > 1 << 20:
            raise SupportError(f"state space of {self.count} states is too large")
        self.full = (1 << self.count) - 1
        self.pos = {v: i for i, v in enumerate(self.support)}
        self.weight = [self.n ** (self.k - 1 - i) for i in range(self.k)]
        self.columns = [tuple((s // w) % self.n for s in range(self.count)) for w in self.weight]
        self.fast_assign = fast_assign
        self.props = dict(props or {})
        self.pgames = dict(pgames or {})
        self._terms: dict = {}
        self._atoms: dict = {}
        self._moves: dict = {}
        self._assign: dict = {}

    # -- terms
    def term_values(self, t) -> tuple:
        try:
            return self._terms[t]
        except KeyError:
            pass
        if isinstance(t, Var):
            if t.name not in self.pos:
                raise SupportError(f"variable {t.name} is outside the support {self.support}")
            out = self.columns[self.pos[t.name]]
        else:
            cols = [self.term_values(a) for a in t.args]
            if not cols:
                c = self.N.apply(t.fn, ())
                out = (c,) * self.count
            else:
                out = tuple(self.N.apply(t.fn, args) for args in zip(*cols))
        self._terms[t] = out
        return out

    def _mask(self, flags) -> int:
        bits = 0
        for s, ok in enumerate(flags):
            if ok:
                bits |= 1 << s
        return bits

    # -- formulas
    def formula(self, f, env: Mapping | None = None) -> int:
        return self._formula(f, env or {})

    def _formula(self, f, env) -> int:
        if isinstance(f, Verum):
            return self.full
        if isinstance(f, Not):
            return self.full ^ self._formula(f.arg, env)
        if isinstance(f, And):
            left = self._formula(f.left, env)
            if not left:
                return 0
            return left & self._formula(f.right, env)
        if isinstance(f, (Eq, Rel)):
            try:
                return self._atoms[f]
            except KeyError:
                pass
            if isinstance(f, Eq):
                a, b = self.term_values(f.left), self.term_values(f.right)
                out = self._mask(x == y for x, y in zip(a, b))
            else:
                cols = [self.term_values(t) for t in f.args]
                if cols:
                    out = self._mask(self.N.holds(f.name, args) for args in zip(*cols))
                else:
                    out = self.full if self.N.holds(f.name, ()) else 0
            self._atoms[f] = out
            return out
        if isinstance(f, Dia):
            if self.fast_assign:
                m = _assign_formula(f)
                if m is not None:
                    x, theta, body = m
                    return self.pre_assign((x,), (theta,), self._formula(body, env))
            return self._game(f.game, self._formula(f.body, env), env)
        if isinstance(f, FixVar):
            try:
                z = env[f.name]
            except KeyError:
                raise SupportError(f"unbound fixpoint variable {f.name}") from None
            return z.bits if isinstance(z, StateSet) else z
        if isinstance(f, Mu):
            X, body = f.var, f.body
            return lfp(lambda z: self._formula(body, {**env, X: z}), 0)
        if isinstance(f, Prop):
            try:
                return self.props[f.name]
            except KeyError:
                raise SupportError(f"uninterpreted proposition {f.name}") from None
        raise TypeError(f"cannot evaluate {f!r}")

    # -- games
    def game(self, g, S: int, env: Mapping | None = None) -> int:
        return self._game(g, S, env or {})

    def _game(self, g, S: int, env) -> int:
        if isinstance(g, Seq):
            if self.fast_assign:
                m = _assign_game(g)
                if m is not None:
                    x, theta, rest = m
                    after = S if rest is None else self._game(rest, S, env)
                    return self.pre_assign((x,), (theta,), after)
            return self._game(g.left, self._game(g.right, S, env), env)
        if isinstance(g, Atomic):
            return self.atomic(g, S)
        if isinstance(g, Test):
            return self._formula(g.cond, env) & S
        if isinstance(g, Choice):
            return self._game(g.left, S, env) | self._game(g.right, S, env)
        if isinstance(g, Dual):
            return self.full ^ self._game(g.body, self.full ^ S, env)
        if isinstance(g, Loop):
            body = g.body
            return lfp(lambda z: S | self._game(body, z, env), 0)
        if isinstance(g, PGame):
            try:
                return self.pgames[g.name](S)
            except KeyError:
                raise SupportError(f"uninterpreted game symbol {g.name}") from None
        raise TypeError(f"cannot evaluate game {g!r}")

    def moves(self, g: Atomic) -> list:
        """Per state, the goal masks spanned by each generator."""
        try:
            return self._moves[g]
        except KeyError:
            pass
        k, l = self.N.action_arity(g.action)
        if (len(g.bound), len(g.params)) != (k, l):
            raise SupportError(f"action {g.action} used with the wrong arity")
        for x in g.bound:
            if x not in self.pos:
                raise SupportError(f"bound variable {x} is outside the support {self.support}")
        params = [self.term_values(p) for p in g.params]
        xs = [self.pos[x] for x in g.bound]
        ws = [self.weight[i] for i in xs]
        out = []
        for s in range(self.count):
            p = tuple(col[s] for col in params)
            base = s - sum(w * self.columns[i][s] for i, w in zip(xs, ws))
            masks = []
            for gen in self.N.generators(g.action, p):
                m = 0
                for u in gen:
                    m |= 1 << (base + sum(w * ui for w, ui in zip(ws, u)))
                masks.append(m)
            out.append(masks)
        self._moves[g] = out
        return out

    def atomic(self, g: Atomic, S: int) -> int:
        miss = ~S
        bits = 0
        for s, masks in enumerate(self.moves(g)):
            for m in masks:
                if not m & miss:
                    bits |= 1 << s
                    break
        return bits

    def pre_assign(self, xs, thetas, S: int) -> int:
        """{w : w[xs -> thetas(w)] in S}, the simultaneous assignment."""
        key = (tuple(xs), tuple(thetas))
        target = self._assign.get(key)
        if target is None:
            for x in xs:
                if x not in self.pos:
                    raise SupportError(f"assigned variable {x} is outside the support")
            cols = [self.term_values(t) for t in thetas]
            idx = [self.pos[x] for x in xs]
            target = []
            for s in range(self.count):
                t = s
                for i, col in zip(idx, cols):
                    t += self.weight[i] * (col[s] - self.columns[i][s])
                target.append(t)
            self._assign[key] = target
        bits = 0
        for s, t in enumerate(target):
            if S >> t & 1:
                bits |= 1 << s
        return bits

    def stateset(self, bits: int) -> StateSet:
        return StateSet(self.support, self.n, bits)


def _assign_formula(f):
    """Match <x:=*>(x = theta & body) with x not in theta."""
    g, b = f.game, f.body
    if (isinstance(g, Atomic) and g.action == STAR and isinstance(b, And)
            and isinstance(b.left, Eq) and b.left.left == Var(g.bound[0])
            and g.bound[0] not in term_vars(b.left.right)):
        return g.bound[0], b.left.right, b.right
    return None


def _assign_game(g):
    """Match x:=*; ?x=theta (optionally followed by a rest game)."""
    head, tail = g.left, g.right
    if not (isinstance(head, Atomic) and head.action == STAR):
        return None
    x = head.bound[0]
    if isinstance(tail, Test):
        test, rest = tail, None
    elif isinstance(tail, Seq) and isinstance(tail.left, Test):
        test, rest = tail.left, tail.right
    else:
        return None
    c = test.cond
    if isinstance(c, Eq) and c.left == Var(x) and x not in term_vars(c.right):
        return x, c.right, rest
    return None


# ---------------------------------------------------------------- public API


def _symbol_names(n) -> set:
    return {m.rel for m in walk(n) if isinstance(m, LfpApp)}


def default_support(*nodes, extra=()) -> tuple:
    """Every individual variable occurring in the inputs plus extras, sorted."""
    names = set(extra)
    for n in nodes:
        if n is None:
            continue
        # variables bound inside tests are neither free nor bound but still need columns
        names |= individual(all_names(n)) - _symbol_names(n)
    return tuple(sorted(names))


def eval_term(N: Structure, omega: Mapping, theta) -> int:
    if isinstance(theta, Var):
        try:
            return omega[theta.name]
        except KeyError:
            raise SupportError(f"unbound variable {theta.name}") from None
    return N.apply(theta.fn, tuple(eval_term(N, omega, a) for a in theta.args))


def _interp(I, support, n) -> dict:
    env = {}
    for X, z in (I or {}).items():
        if isinstance(z, StateSet):
            if z.support != tuple(support) or z.domain != n:
                raise SupportError(f"interpretation of {X} has a different support")
            env[X] = z.bits
        else:
            env[X] = int(z)
    return env


def eval_gl(N: Structure, phi, support=None, fast_assign=True) -> StateSet:
    support = default_support(phi) if support is None else tuple(support)
    ev = Evaluator(N, support, fast_assign)
    return ev.stateset(ev.formula(phi))


def eval_game(N: Structure, alpha, S: StateSet, fast_assign=True, I=None) -> StateSet:
    ev = Evaluator(N, S.support, fast_assign)
    if S.domain != N.domain:
        raise SupportError("state set over a different domain")
    needed = individual(all_names(alpha))
    if not needed <= set(S.support):
        raise SupportError(f"support misses {sorted(needed - set(S.support))}")
    return ev.stateset(ev.game(alpha, S.bits, _interp(I, S.support, N.domain)))


def eval_mu(N: Structure, I, phi, support=None, fast_assign=True) -> StateSet:
    support = default_support(phi) if support is None else tuple(support)
    ev = Evaluator(N, support, fast_assign)
    return ev.stateset(ev.formula(phi, _interp(I, support, N.domain)))


def evaluate(N: Structure, node, support=None, I=None, fast_assign=True) -> StateSet:
    """Denotation of any formula (FOGL or FOLmu)."""
    support = default_support(node) if support is None else tuple(support)
    ev = Evaluator(N, support, fast_assign)
    return ev.stateset(ev.formula(node, _interp(I, support, N.domain)))


def semantically_equal(N: Structure, a, b, support=None, I=None) -> bool:
    support = default_support(a, b) if support is None else tuple(support)
    ev = Evaluator(N, support)
    env = _interp(I, support, N.domain)
    return ev.formula(a, env) == ev.formula(b, env)


def valid(N: Structure, phi, support=None, I=None) -> bool:
    return evaluate(N, phi, support, I).is_all()


# ---------------------------------------------------------------- enumeration


def _subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from (frozenset(c) for c in itertools.combinations(items, r))


def count_structures(sig: GameSignature, domain: int, max_generators: int) -> int:
    """Closed-form number of structures with exactly `domain` elements."""
    n = domain
    total = 1
    for _, ar in sig.functions:
        total *= n ** (n ** ar)
    for _, ar in sig.relations:
        total *= 2 ** (n ** ar)
    for name, (k, l) in sig.actions:
        if name == STAR:
            continue
        subsets = 2 ** (n ** k)
        per_tuple = sum(math.comb(subsets, j) for j in range(min(max_generators, subsets) + 1))
        total *= per_tuple ** (n ** l)
    return total


def enumerate_structures(sig: GameSignature, max_domain: int, max_generators: int = 1,
                         cap: int = 200_000, min_domain: int = 1) -> Iterator[Structure]:
    """Every structure with min_domain <= |D| <= max_domain, in a fixed order.

    Each parameter tuple of an action gets a set of at most `max_generators`
    distinct generator sets.
    """
    if max_domain < 1:
        raise ValueError("max_domain must be at least 1")
    total = sum(count_structures(sig, n, max_generators) for n in range(min_domain, max_domain + 1))
    if total > cap:
        raise StructureExplosion(f"{total} structures exceed the cap of {cap}")
    for n in range(min_domain, max_domain + 1):
        choices = []
        for name, ar in sig.functions:
            tables = itertools.product(range(n), repeat=n ** ar)
            choices.append([("f", name, ar, t) for t in tables])
        for name, ar in sig.relations:
            tuples = list(itertools.product(range(n), repeat=ar))
            choices.append([("r", name, ar, s) for s in _subsets(tuples)])
        for name, (k, l) in sig.actions:
            if name == STAR:
                continue
            gens = list(_subsets(itertools.product(range(n), repeat=k)))
            fams = [tuple(c) for j in range(min(max_generators, len(gens)) + 1)
                    for c in itertools.combinations(gens, j)]
            params = list(itertools.product(range(n), repeat=l))
            maps = [tuple((p, fam) for p, fam in zip(params, pick) if fam)
                    for pick in itertools.product(fams, repeat=len(params))]
            choices.append([("a", name, (k, l), m) for m in maps])
        for pick in itertools.product(*choices):
            funcs = tuple((nm, ar, t) for kind, nm, ar, t in pick if kind == "f")
            rels = tuple((nm, ar, s) for kind, nm, ar, s in pick if kind == "r")
            acts = tuple((nm, ar, m) for kind, nm, ar, m in pick if kind == "a")
            yield Structure(n, funcs, rels, acts)


def load_structure(path) -> Structure:
    with open(path) as fh:
        return Structure.from_json(json.load(fh))
