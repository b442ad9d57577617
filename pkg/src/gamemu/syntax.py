"""Terms, formulas and games of first-order game logic and the first-order
modal mu-calculus, with parsing, printing, variable analysis and
capture-avoiding substitution.

One AST serves both logics. Derived connectives are expanded by the parser,
so everything downstream only sees the core constructors:

    formulas  Verum | Eq | Rel | Not | And | Dia | FixVar | Mu   (+ Prop)
    games     Atomic | Test | Choice | Seq | Loop | Dual         (+ PGame)

`Prop` and `PGame` are propositional symbols produced by flattening. `Exists`
and `LfpApp` belong to least fixpoint logic and are used by the LFP bridge.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from typing import Iterable, Iterator, Union

STAR = "*"


def _node(cls):
    """Frozen dataclass whose structural hash is computed once."""
    cls = dataclass(frozen=True)(cls)
    base_hash = cls.__hash__
    names = tuple(f.name for f in fields(cls))

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = base_hash(self)
            object.__setattr__(self, "_h", h)
        return h

    def __reduce__(self):
        return (cls, tuple(getattr(self, n) for n in names))

    cls.__hash__ = __hash__
    cls.__reduce__ = __reduce__
    return cls


# ---------------------------------------------------------------- terms


@_node
class Var:
    name: str


@_node
class App:
    fn: str
    args: tuple = ()


Term = Union[Var, App]

# ---------------------------------------------------------------- formulas


@_node
class Verum:
    pass


@_node
class Eq:
    left: Term
    right: Term


@_node
class Rel:
    name: str
    args: tuple = ()


@_node
class Prop:
    name: str


@_node
class Not:
    arg: object


@_node
class And:
    left: object
    right: object


@_node
class Dia:
    game: object
    body: object


@_node
class FixVar:
    name: str


@_node
class Mu:
    var: str
    body: object


# least fixpoint logic only
@_node
class Exists:
    var: str
    body: object


@_node
class LfpApp:
    rel: str
    vars: tuple
    body: object
    args: tuple


# ---------------------------------------------------------------- games


@_node
class Atomic:
    action: str
    bound: tuple
    params: tuple = ()


@_node
class PGame:
    name: str


@_node
class Test:
    cond: object


@_node
class Choice:
    left: object
    right: object


@_node
class Seq:
    left: object
    right: object


@_node
class Loop:
    body: object


@_node
class Dual:
    body: object


TERMS = (Var, App)
GAMES = (Atomic, PGame, Test, Choice, Seq, Loop, Dual)
FORMULAS = (Verum, Eq, Rel, Prop, Not, And, Dia, FixVar, Mu, Exists, LfpApp)

TRUE = Verum()
FALSE = Not(TRUE)


def is_game(node) -> bool:
    return isinstance(node, GAMES)


def is_term(node) -> bool:
    return isinstance(node, TERMS)


# ---------------------------------------------------------------- sugar


def Or(a, b):
    return Not(And(Not(a), Not(b)))


def Implies(a, b):
    return Not(And(a, Not(b)))


def Iff(a, b):
    return And(Implies(a, b), Implies(b, a))


def neq(a, b):
    return Not(Eq(a, b))


def conj(items):
    items = list(items)
    if not items:
        return TRUE
    out = items[0]
    for it in items[1:]:
        out = And(out, it)
    return out


def disj(items):
    items = list(items)
    if not items:
        return FALSE
    out = items[0]
    for it in items[1:]:
        out = Or(out, it)
    return out


def quant(x: str) -> Atomic:
    """The quantifier game x := *."""
    return Atomic(STAR, (x,), ())


def exists(x: str, body):
    return Dia(quant(x), body)


def forall(x: str, body):
    return Not(Dia(quant(x), Not(body)))


def seq(*games):
    games = [g for g in games if g is not None]
    out = games[-1]
    for g in reversed(games[:-1]):
        out = Seq(g, out)
    return out


def as_or(f):
    if isinstance(f, Not) and isinstance(f.arg, And):
        a, b = f.arg.left, f.arg.right
        if isinstance(a, Not) and isinstance(b, Not):
            return a.arg, b.arg
    return None


def as_implies(f):
    if isinstance(f, Not) and isinstance(f.arg, And) and isinstance(f.arg.right, Not):
        return f.arg.left, f.arg.right.arg
    return None


def as_iff(f):
    if isinstance(f, And):
        l, r = as_implies(f.left), as_implies(f.right)
        if l and r and l[0] == r[1] and l[1] == r[0]:
            return l
    return None


# ---------------------------------------------------------------- names


def is_fixvar_name(name: str) -> bool:
    return name[:1].isupper()


def fresh(base: str, used) -> str:
    """Base name plus the smallest numeric suffix not in `used`."""
    stem = base.rstrip("0123456789") or base
    i = 1
    while f"{stem}{i}" in used:
        i += 1
    return f"{stem}{i}"


def term_vars(t) -> frozenset:
    if isinstance(t, Var):
        return frozenset((t.name,))
    out = frozenset()
    for a in t.args:
        out |= term_vars(a)
    return out


def terms_vars(ts) -> frozenset:
    out = frozenset()
    for t in ts:
        out |= term_vars(t)
    return out


def all_names(node) -> set:
    """Every variable or fixpoint name occurring anywhere, free or bound."""
    out: set = set()
    for n in walk(node):
        if isinstance(n, Var):
            out.add(n.name)
        elif isinstance(n, Atomic):
            out.update(n.bound)
        elif isinstance(n, (FixVar,)):
            out.add(n.name)
        elif isinstance(n, Mu):
            out.add(n.var)
        elif isinstance(n, Exists):
            out.add(n.var)
        elif isinstance(n, LfpApp):
            out.update(n.vars)
            out.add(n.rel)
    return out


def walk(node) -> Iterator:
    """Pre-order traversal over every sub-node, terms included."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, (Var, Verum, Prop, FixVar, PGame)):
            continue
        if isinstance(n, App):
            stack.extend(reversed(n.args))
        elif isinstance(n, Eq):
            stack.extend((n.right, n.left))
        elif isinstance(n, Rel):
            stack.extend(reversed(n.args))
        elif isinstance(n, (Not,)):
            stack.append(n.arg)
        elif isinstance(n, (And, Choice, Seq)):
            stack.extend((n.right, n.left))
        elif isinstance(n, Dia):
            stack.extend((n.body, n.game))
        elif isinstance(n, (Mu, Exists, Loop, Dual)):
            stack.append(n.body)
        elif isinstance(n, Test):
            stack.append(n.cond)
        elif isinstance(n, Atomic):
            stack.extend(reversed(n.params))
        elif isinstance(n, LfpApp):
            stack.extend(reversed(n.args))
            stack.append(n.body)


def size(node) -> int:
    return sum(1 for _ in walk(node))


def has_fixpoints(node) -> bool:
    return any(isinstance(n, (Mu, FixVar)) for n in walk(node))


def is_mu_formula(node) -> bool:
    """True when every modality is over an atomic game (FOLmu shape)."""
    for n in walk(node):
        if isinstance(n, Dia) and not isinstance(n.game, (Atomic, PGame)):
            return False
        if isinstance(n, (Test, Choice, Seq, Loop, Dual)):
            return False
    return True


# ---------------------------------------------------------------- variables

_fv_cache: dict = {}
_mbv_cache: dict = {}
_bv_cache: dict = {}


def _cached(cache, key, fn):
    try:
        return cache[key]
    except KeyError:
        pass
    if len(cache) > 200_000:
        cache.clear()
    v = fn(key)
    cache[key] = v
    return v


def free_vars(node) -> frozenset:
    """Free individual variables and free fixpoint variables."""
    if isinstance(node, TERMS):
        return term_vars(node)
    return _cached(_fv_cache, node, _free_vars)


def _free_vars(n) -> frozenset:
    if isinstance(n, (Verum, Prop, PGame)):
        return frozenset()
    if isinstance(n, Eq):
        return term_vars(n.left) | term_vars(n.right)
    if isinstance(n, Rel):
        return terms_vars(n.args)
    if isinstance(n, Not):
        return free_vars(n.arg)
    if isinstance(n, (And, Choice)):
        return free_vars(n.left) | free_vars(n.right)
    if isinstance(n, Dia):
        return free_vars(n.game) | (free_vars(n.body) - must_bound_vars(n.game))
    if isinstance(n, FixVar):
        return frozenset((n.name,))
    if isinstance(n, Mu):
        return free_vars(n.body) - {n.var}
    if isinstance(n, Exists):
        return free_vars(n.body) - {n.var}
    if isinstance(n, LfpApp):
        inner = free_vars(n.body) - set(n.vars) - {n.rel}
        return inner | terms_vars(n.args)
    if isinstance(n, Atomic):
        return terms_vars(n.params)
    if isinstance(n, Test):
        return free_vars(n.cond)
    if isinstance(n, Seq):
        return free_vars(n.left) | (free_vars(n.right) - must_bound_vars(n.left))
    if isinstance(n, (Loop, Dual)):
        return free_vars(n.body)
    raise TypeError(f"not a syntax node: {n!r}")


def must_bound_vars(g) -> frozenset:
    return _cached(_mbv_cache, g, _mbv)


def _mbv(g) -> frozenset:
    if isinstance(g, Atomic):
        return frozenset(g.bound)
    if isinstance(g, Dual):
        return must_bound_vars(g.body)
    if isinstance(g, (Test, Loop, PGame)):
        return frozenset()
    if isinstance(g, Choice):
        return must_bound_vars(g.left) & must_bound_vars(g.right)
    if isinstance(g, Seq):
        return must_bound_vars(g.left) | must_bound_vars(g.right)
    raise TypeError(f"not a game: {g!r}")


def bound_vars(node) -> frozenset:
    if isinstance(node, TERMS):
        return frozenset()
    return _cached(_bv_cache, node, _bv)


def _bv(n) -> frozenset:
    if isinstance(n, Atomic):
        return frozenset(n.bound)
    if isinstance(n, (Test, PGame, Verum, Eq, Rel, Prop, FixVar)):
        return frozenset()
    if isinstance(n, (Choice, Seq, And)):
        return bound_vars(n.left) | bound_vars(n.right)
    if isinstance(n, (Loop, Dual, Mu)):
        return bound_vars(n.body)
    if isinstance(n, Not):
        return bound_vars(n.arg)
    if isinstance(n, Dia):
        return bound_vars(n.game) | bound_vars(n.body)
    if isinstance(n, Exists):
        return bound_vars(n.body) | {n.var}
    if isinstance(n, LfpApp):
        return bound_vars(n.body) | set(n.vars)
    raise TypeError(f"not a syntax node: {n!r}")


def individual(names: Iterable[str]) -> frozenset:
    return frozenset(v for v in names if not is_fixvar_name(v))


# ---------------------------------------------------------------- positivity


def occurs_positively(phi, X: str) -> bool:
    """Every free occurrence of X sits under an even number of negations."""

    def go(n, neg):
        if isinstance(n, FixVar):
            return n.name != X or not neg
        if isinstance(n, Not):
            return go(n.arg, not neg)
        if isinstance(n, And):
            return go(n.left, neg) and go(n.right, neg)
        if isinstance(n, Dia):
            return go(n.body, neg)
        if isinstance(n, Mu):
            return n.var == X or go(n.body, neg)
        return True

    return go(phi, False)


# ---------------------------------------------------------------- assignment encodings


def assign_game(x: str, theta, used) -> object:
    """x := theta as a game: x:=*; ?x=theta, through a fresh copy if x occurs in theta."""
    theta_vars = term_vars(theta)
    if x not in theta_vars:
        return Seq(quant(x), Test(Eq(Var(x), theta)))
    y = fresh(x, set(used) | theta_vars | {x})
    return seq(quant(y), Test(Eq(Var(y), theta)), quant(x), Test(Eq(Var(x), Var(y))))


def assign_mu(x: str, theta, body, used) -> object:
    """<x := theta> body in FOLmu form: <x:=*>(x=theta & body)."""
    theta_vars = term_vars(theta)
    if x not in theta_vars:
        return Dia(quant(x), And(Eq(Var(x), theta), body))
    y = fresh(x, set(used) | theta_vars | {x})
    return Dia(quant(y), And(Eq(Var(y), theta), Dia(quant(x), And(Eq(Var(x), Var(y)), body))))


def _vector_fresh(xs, used):
    used = set(used)
    ys = []
    for x in xs:
        y = fresh(x, used)
        used.add(y)
        ys.append(y)
    return ys, used


def vec_assign_game(xs, thetas, used) -> object:
    """Simultaneous assignment x1..xl := t1..tl through fresh y's."""
    xs, thetas = list(xs), list(thetas)
    if len(xs) != len(thetas):
        raise ValueError("vectorial assignment needs equally many variables and terms")
    if len(xs) == 1:
        return assign_game(xs[0], thetas[0], used)
    used = set(used) | set(xs) | terms_vars(thetas)
    ys, used = _vector_fresh(xs, used)
    parts = [assign_game(y, t, used) for y, t in zip(ys, thetas)]
    parts += [assign_game(x, Var(y), used) for x, y in zip(xs, ys)]
    return seq(*parts)


def vec_assign_mu(xs, thetas, body, used) -> object:
    xs, thetas = list(xs), list(thetas)
    if len(xs) != len(thetas):
        raise ValueError("vectorial assignment needs equally many variables and terms")
    if len(xs) == 1:
        return assign_mu(xs[0], thetas[0], body, used)
    used = set(used) | set(xs) | terms_vars(thetas)
    ys, used = _vector_fresh(xs, used)
    out = body
    for x, y in reversed(list(zip(xs, ys))):
        out = assign_mu(x, Var(y), out, used)
    for y, t in reversed(list(zip(ys, thetas))):
        out = assign_mu(y, t, out, used)
    return out


# ---------------------------------------------------------------- substitution


def subst_term(t, x: str, theta):
    if isinstance(t, Var):
        return theta if t.name == x else t
    if not t.args:
        return t
    return App(t.fn, tuple(subst_term(a, x, theta) for a in t.args))


def substitute_var(node, x: str, theta, kind: str | None = None, used=None):
    """node[x |-> theta] by the case split that never captures.

    `kind` selects the table for modalities whose substitution must go
    through an assignment: "gl" inserts the assignment game x:=theta in front,
    "mu" wraps the FOLmu assignment formula around the modality. By default
    formulas with fixpoints use "mu" and everything else "gl".
    """
    if isinstance(theta, Var) and theta.name == x:
        return node
    if is_term(node):
        return subst_term(node, x, theta)
    if kind is None:
        kind = "mu" if has_fixpoints(node) else "gl"
    if used is None:
        used = all_names(node) | term_vars(theta) | {x}
    return _Subst(x, theta, kind, used).run(node)


class _Subst:
    def __init__(self, x, theta, kind, used):
        self.x, self.theta, self.kind, self.used = x, theta, kind, used
        self.theta_fv = term_vars(theta)
        self.memo: dict = {}

    def run(self, n):
        try:
            return self.memo[n]
        except KeyError:
            pass
        out = self._run(n)
        self.memo[n] = out
        return out

    def noclash(self, g) -> bool:
        bv = bound_vars(g)
        return not (self.theta_fv & bv) and self.x not in bv

    def assign_prefix_formula(self, body):
        return assign_mu(self.x, self.theta, body, self.used)

    def assign_game(self):
        return assign_game(self.x, self.theta, self.used)

    def _run(self, n):
        x, theta = self.x, self.theta
        if isinstance(n, (Verum, Prop, PGame)):
            return n
        if isinstance(n, Eq):
            return Eq(subst_term(n.left, x, theta), subst_term(n.right, x, theta))
        if isinstance(n, Rel):
            return Rel(n.name, tuple(subst_term(a, x, theta) for a in n.args))
        if isinstance(n, Not):
            return Not(self.run(n.arg))
        if isinstance(n, And):
            return And(self.run(n.left), self.run(n.right))
        if isinstance(n, Dia):
            g = n.game
            if x in must_bound_vars(g):
                return Dia(self.run(g), n.body)
            if self.noclash(g):
                return Dia(self.run(g), self.run(n.body))
            if self.kind == "mu" and isinstance(g, (Atomic, PGame)):
                return self.assign_prefix_formula(n)
            return Dia(Seq(self.assign_game(), g), n.body)
        if isinstance(n, FixVar):
            return self.assign_prefix_formula(n)
        if isinstance(n, Mu):
            return self.assign_prefix_formula(n)
        if isinstance(n, Atomic):
            return Atomic(n.action, n.bound, tuple(subst_term(p, x, theta) for p in n.params))
        if isinstance(n, Test):
            return Test(self.run(n.cond))
        if isinstance(n, Choice):
            return Choice(self.run(n.left), self.run(n.right))
        if isinstance(n, Dual):
            return Dual(self.run(n.body))
        if isinstance(n, Seq):
            if x in must_bound_vars(n.left):
                return Seq(self.run(n.left), n.right)
            if self.noclash(n.left):
                return Seq(self.run(n.left), self.run(n.right))
            return Seq(self.assign_game(), n)
        if isinstance(n, Loop):
            if self.noclash(n.body):
                return Loop(self.run(n.body))
            return Seq(self.assign_game(), n)
        raise TypeError(f"cannot substitute into {n!r}")


def substitute_fixvar(phi, X: str, rho):
    """phi[X |-> rho]; a binder of X shadows and stops the substitution."""
    memo: dict = {}

    def go(n):
        if n in memo:
            return memo[n]
        if isinstance(n, FixVar):
            out = rho if n.name == X else n
        elif isinstance(n, Mu):
            out = n if n.var == X else Mu(n.var, go(n.body))
        elif isinstance(n, Not):
            out = Not(go(n.arg))
        elif isinstance(n, And):
            out = And(go(n.left), go(n.right))
        elif isinstance(n, Dia):
            out = Dia(n.game, go(n.body))
        else:
            out = n
        memo[n] = out
        return out

    return go(phi)


def rename_vars(node, mapping: dict):
    """Rename individual variables everywhere, binders included."""
    if not mapping:
        return node

    def t(term):
        if isinstance(term, Var):
            return Var(mapping.get(term.name, term.name))
        return App(term.fn, tuple(t(a) for a in term.args))

    def go(n):
        if isinstance(n, TERMS):
            return t(n)
        if isinstance(n, (Verum, Prop, PGame, FixVar)):
            return n
        if isinstance(n, Eq):
            return Eq(t(n.left), t(n.right))
        if isinstance(n, Rel):
            return Rel(n.name, tuple(t(a) for a in n.args))
        if isinstance(n, Not):
            return Not(go(n.arg))
        if isinstance(n, And):
            return And(go(n.left), go(n.right))
        if isinstance(n, Dia):
            return Dia(go(n.game), go(n.body))
        if isinstance(n, Mu):
            return Mu(n.var, go(n.body))
        if isinstance(n, Exists):
            return Exists(mapping.get(n.var, n.var), go(n.body))
        if isinstance(n, LfpApp):
            return LfpApp(n.rel, tuple(mapping.get(v, v) for v in n.vars), go(n.body),
                          tuple(t(a) for a in n.args))
        if isinstance(n, Atomic):
            return Atomic(n.action, tuple(mapping.get(v, v) for v in n.bound),
                          tuple(t(p) for p in n.params))
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
        raise TypeError(f"cannot rename in {n!r}")

    return go(node)


def rename_bound(node, avoid):
    """Alpha-variant of `node` whose bound variables avoid `avoid`.

    Formulas: every clashing variable b is renamed to a fresh b' throughout,
    and when b was free its value is copied in first (b' := b). The result
    denotes the same set of states.

    Games: a leading atomic game that binds b is rebound to b' and the rest
    of the game reads b' (the pattern a(x:x);alpha ~ a(y:x);alpha[x->y]);
    other clashes use the copy-in prefix. Games agree on goals that do not
    depend on the renamed variables.
    """
    avoid = frozenset(avoid)
    clash = individual(bound_vars(node)) & avoid
    if not clash:
        return node
    used = set(all_names(node)) | set(avoid)
    mapping = {}
    for b in sorted(clash):
        b2 = fresh(b, used)
        used.add(b2)
        mapping[b] = b2

    if is_game(node):
        if isinstance(node, Seq) and isinstance(node.left, Atomic):
            lead = node.left
            local = {b: mapping[b] for b in lead.bound if b in mapping}
            if local:
                head = Atomic(lead.action, tuple(local.get(v, v) for v in lead.bound), lead.params)
                rest = rename_vars(node.right, local)
                return Seq(head, rename_bound(rest, avoid))
        if isinstance(node, Atomic):
            return Atomic(node.action, tuple(mapping.get(v, v) for v in node.bound), node.params)
        body = rename_vars(node, mapping)
        copies = [b for b in sorted(mapping) if b in free_vars(node)]
        if not copies:
            return body
        return seq(*[assign_game(mapping[b], Var(b), used) for b in copies], body)

    body = rename_vars(node, mapping)
    copies = [b for b in sorted(mapping) if b in free_vars(node)]
    if not copies:
        return body
    if is_mu_formula(node):
        for b in reversed(copies):
            body = assign_mu(mapping[b], Var(b), body, used)
        return body
    return Dia(seq(*[assign_game(mapping[b], Var(b), used) for b in copies]), body)


# ---------------------------------------------------------------- signature


class SignatureError(ValueError):
    pass


@dataclass(frozen=True)
class GameSignature:
    """Function, relation and action symbols with their arities.

    Actions carry (k, l): k bound variables, l parameters. The quantifier
    action `*` with arity (1, 0) is always present.
    """

    functions: tuple = ()
    relations: tuple = ()
    actions: tuple = ()

    def __post_init__(self):
        acts = tuple((n, tuple(a)) for n, a in self.actions)
        if all(n != STAR for n, _ in acts):
            acts = ((STAR, (1, 0)),) + acts
        object.__setattr__(self, "functions", tuple((n, int(a)) for n, a in self.functions))
        object.__setattr__(self, "relations", tuple((n, int(a)) for n, a in self.relations))
        object.__setattr__(self, "actions", acts)
        names = [n for n, _ in self.functions] + [n for n, _ in self.relations] + [n for n, _ in acts]
        if len(names) != len(set(names)):
            raise SignatureError(f"symbol names must be unique: {names}")
        if dict(acts)[STAR] != (1, 0):
            raise SignatureError("the quantifier action * must have arity (1, 0)")
        for n, a in list(self.functions) + list(self.relations):
            if a < 0:
                raise SignatureError(f"negative arity for {n}")
        for n, (k, l) in acts:
            if k < 0 or l < 0:
                raise SignatureError(f"negative arity for {n}")

    @classmethod
    def of(cls, functions=None, relations=None, actions=None) -> "GameSignature":
        return cls(tuple((functions or {}).items()), tuple((relations or {}).items()),
                   tuple((actions or {}).items()))

    @property
    def fun(self) -> dict:
        return dict(self.functions)

    @property
    def rel(self) -> dict:
        return dict(self.relations)

    @property
    def act(self) -> dict:
        return dict(self.actions)

    def merge(self, other: "GameSignature") -> "GameSignature":
        f, r, a = self.fun, self.rel, self.act
        for src, dst in ((other.fun, f), (other.rel, r), (other.act, a)):
            for n, ar in src.items():
                if n in dst and dst[n] != ar:
                    raise SignatureError(f"conflicting arity for {n}")
                dst[n] = ar
        return GameSignature.of(f, r, a)


# ---------------------------------------------------------------- printing

_ident = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def show(node) -> str:
    """Canonical text; parse(show(t)) == t for elaborated trees."""
    if is_term(node):
        return _show_term(node)
    if is_game(node):
        return _show_game(node, 0)
    return _show_formula(node, 0)


def _show_term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.fn
    return f"{t.fn}({','.join(_show_term(a) for a in t.args)})"


def _paren(s, inner, outer):
    return f"({s})" if inner < outer else s


def _show_formula(f, prec) -> str:
    if isinstance(f, Verum):
        return "true"
    if isinstance(f, Eq):
        return f"{_show_term(f.left)} = {_show_term(f.right)}"
    if isinstance(f, Rel):
        if not f.args:
            return f.name
        return f"{f.name}({','.join(_show_term(a) for a in f.args)})"
    if isinstance(f, (Prop, FixVar)):
        return f.name
    if isinstance(f, Not):
        if isinstance(f.arg, Verum):
            return "false"
        if isinstance(f.arg, Eq):
            return f"{_show_term(f.arg.left)} != {_show_term(f.arg.right)}"
        o = as_or(f)
        if o:
            s = f"{_show_formula(o[0], 2)} | {_show_formula(o[1], 3)}"
            return _paren(s, 2, prec)
        i = as_implies(f)
        if i:
            s = f"{_show_formula(i[0], 2)} -> {_show_formula(i[1], 1)}"
            return _paren(s, 1, prec)
        return "!" + _show_formula(f.arg, 4)
    if isinstance(f, And):
        e = as_iff(f)
        if e:
            s = f"{_show_formula(e[0], 1)} <-> {_show_formula(e[1], 1)}"
            return _paren(s, 0, prec)
        s = f"{_show_formula(f.left, 3)} & {_show_formula(f.right, 4)}"
        return _paren(s, 3, prec)
    if isinstance(f, Dia):
        return f"<{_show_game(f.game, 0)}> {_show_formula(f.body, 4)}"
    if isinstance(f, Mu):
        return f"mu {f.var} . {_show_formula(f.body, 4)}"
    if isinstance(f, Exists):
        return f"exists {f.var} . {_show_formula(f.body, 4)}"
    if isinstance(f, LfpApp):
        head = ", ".join((f.rel,) + tuple(f.vars))
        args = ",".join(_show_term(a) for a in f.args)
        return f"[lfp {head} . {_show_formula(f.body, 0)}]({args})"
    raise TypeError(f"not a formula: {f!r}")


def _show_game(g, prec) -> str:
    if isinstance(g, Atomic):
        return f"{g.action}({','.join(g.bound)}:{','.join(_show_term(p) for p in g.params)})"
    if isinstance(g, PGame):
        return g.name
    if isinstance(g, Test):
        return "?" + _show_formula(g.cond, 4)
    if isinstance(g, Choice):
        return _paren(f"{_show_game(g.left, 1)} ++ {_show_game(g.right, 0)}", 0, prec)
    if isinstance(g, Seq):
        return _paren(f"{_show_game(g.left, 2)}; {_show_game(g.right, 1)}", 1, prec)
    if isinstance(g, Loop):
        return _show_game(g.body, 2) + "*"
    if isinstance(g, Dual):
        return _show_game(g.body, 2) + "^d"
    raise TypeError(f"not a game: {g!r}")


# ---------------------------------------------------------------- parsing


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int | None = None):
        self.pos = pos
        super().__init__(msg if pos is None else f"{msg} at position {pos}")


class ArityError(ParseError):
    pass


class UnknownSymbol(ParseError):
    pass


class PositivityError(ParseError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<sym><->|->|!=|:=|\+\+|\^d|[<>()\[\],:;*?!&|=.])|(?P<id>[A-Za-z_][A-Za-z0-9_]*))"
)
_KEYWORDS = {"true", "false", "mu", "nu", "exists", "forall", "lfp"}
KINDS = ("gl-formula", "game", "mu-formula", "term", "lfp")


def tokenize(text: str):
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:pos + 1]!r}", pos)
        start = m.start("sym") if m.group("sym") else m.start("id")
        if m.group("sym"):
            out.append(("sym", m.group("sym"), start))
        else:
            out.append(("id", m.group("id"), start))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, kind: str, sig: GameSignature | None):
        if kind not in KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        self.toks = tokenize(text)
        self.i = 0
        self.kind = kind
        self.logic = {"mu-formula": "mu", "lfp": "lfp"}.get(kind, "gl")
        self.sig = sig
        if sig is None:
            self.fun, self.rel, self.act = {}, {}, {STAR: (1, 0)}
        else:
            self.fun, self.rel, self.act = sig.fun, sig.rel, sig.act
        self.used = {v for k, v, _ in self.toks if k == "id"}
        self.fix_scope: list = []
        self.lfp_scope: list = []

    # -- token helpers
    def peek(self, off=0):
        return self.toks[min(self.i + off, len(self.toks) - 1)]

    def at(self, value, off=0) -> bool:
        k, v, _ = self.peek(off)
        return k == "sym" and v == value

    def at_kw(self, word) -> bool:
        k, v, _ = self.peek()
        return k == "id" and v == word

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        k, v, p = self.next()
        if k != "sym" or v != value:
            raise ParseError(f"expected {value!r}, found {v or 'end of input'!r}", p)

    def ident(self, what="identifier"):
        k, v, p = self.next()
        if k != "id" or v in _KEYWORDS:
            raise ParseError(f"expected {what}, found {v or 'end of input'!r}", p)
        return v, p

    def fresh_name(self, base):
        name = fresh(base, self.used)
        self.used.add(name)
        return name

    # -- symbol tables
    def _arity(self, table, name, arity, pos, what):
        if name in table:
            if table[name] != arity:
                raise ArityError(f"{what} {name} expects arity {table[name]}, got {arity}", pos)
            return
        if self.sig is not None:
            raise UnknownSymbol(f"unknown {what} {name}", pos)
        others = [t for t in (self.fun, self.rel, self.act) if t is not table]
        if any(name in t for t in others):
            raise ParseError(f"{name} used as {what} and as another kind of symbol", pos)
        table[name] = arity

    def inferred_signature(self) -> GameSignature:
        return GameSignature.of(self.fun, self.rel, self.act)

    # -- entry
    def parse(self):
        if self.kind == "term":
            out = self.term()
        elif self.kind == "game":
            out = self.game()
        else:
            out = self.formula()
        k, v, p = self.peek()
        if k != "eof":
            raise ParseError(f"unexpected trailing input {v!r}", p)
        return out

    # -- terms
    def term(self):
        name, pos = self.ident("term")
        if self.at("("):
            self.next()
            args = [] if self.at(")") else self.term_list()
            self.expect(")")
            self._arity(self.fun, name, len(args), pos, "function")
            return App(name, tuple(args))
        if name in self.fun:
            if self.fun[name] != 0:
                raise ArityError(f"function {name} expects arguments", pos)
            return App(name, ())
        if is_fixvar_name(name) and self.sig is not None:
            raise ParseError(f"individual variables are lowercase: {name}", pos)
        return Var(name)

    def term_list(self):
        out = [self.term()]
        while self.at(","):
            self.next()
            out.append(self.term())
        return out

    # -- formulas
    def formula(self):
        left = self.implication()
        if self.at("<->"):
            self.next()
            right = self.implication()
            return Iff(left, right)
        return left

    def implication(self):
        left = self.disjunction()
        if self.at("->"):
            self.next()
            return Implies(left, self.implication())
        return left

    def disjunction(self):
        left = self.conjunction()
        while self.at("|"):
            self.next()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self):
        left = self.unary()
        while self.at("&"):
            self.next()
            left = And(left, self.unary())
        return left

    def var_list(self):
        names = [self.ident("variable")[0]]
        while self.at(","):
            self.next()
            names.append(self.ident("variable")[0])
        return names

    def unary(self):
        k, v, p = self.peek()
        if self.at("!"):
            self.next()
            return Not(self.unary())
        if self.at("("):
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        if self.at("<"):
            self.next()
            if self.logic == "lfp":
                raise ParseError("modalities are not part of least fixpoint logic", p)
            return self.modality(box=False)
        if self.at("["):
            if self.logic == "lfp":
                return self.lfp_app()
            self.next()
            return self.modality(box=True)
        if k == "id" and v in ("mu", "nu"):
            return self.fixpoint(v)
        if k == "id" and v in ("exists", "forall"):
            self.next()
            xs = self.var_list()
            self.expect(".")
            body = self.unary()
            for x in reversed(xs):
                if self.logic == "lfp":
                    body = Exists(x, body) if v == "exists" else Not(Exists(x, Not(body)))
                else:
                    body = exists(x, body) if v == "exists" else forall(x, body)
            return body
        if k == "id" and v == "true":
            self.next()
            return TRUE
        if k == "id" and v == "false":
            self.next()
            return FALSE
        return self.atom()

    def atom(self):
        k, name, pos = self.peek()
        if k != "id" or name in _KEYWORDS:
            raise ParseError(f"expected formula, found {name or 'end of input'!r}", pos)
        # a term followed by = or != is an equation; otherwise a predicate
        if self.at("=", 1) or self.at("!=", 1) or (self.at("(", 1) and self._call_then_eq()):
            left = self.term()
            op = self.next()[1]
            right = self.term()
            return Eq(left, right) if op == "=" else Not(Eq(left, right))
        self.next()
        if self.at("("):
            self.next()
            args = [] if self.at(")") else self.term_list()
            self.expect(")")
            if any(name == r for r, _ in self.lfp_scope):
                ar = dict(self.lfp_scope)[name]
                if ar != len(args):
                    raise ArityError(f"fixpoint relation {name} expects arity {ar}", pos)
                return Rel(name, tuple(args))
            self._arity(self.rel, name, len(args), pos, "relation")
            return Rel(name, tuple(args))
        if name in self.fix_scope:
            return FixVar(name)
        if any(name == r for r, _ in self.lfp_scope):
            return Rel(name, ())
        if name in self.rel or (self.sig is None and (self.logic != "mu" or not is_fixvar_name(name))):
            self._arity(self.rel, name, 0, pos, "relation")
            return Rel(name, ())
        if is_fixvar_name(name):
            if self.logic != "mu":
                raise ParseError(f"fixpoint variable {name} outside a mu-formula", pos)
            return FixVar(name)
        raise UnknownSymbol(f"unknown relation {name}", pos)

    def _call_then_eq(self) -> bool:
        depth, j = 0, self.i + 1
        while j < len(self.toks):
            k, v, _ = self.toks[j]
            if k == "sym" and v == "(":
                depth += 1
            elif k == "sym" and v == ")":
                depth -= 1
                if depth == 0:
                    nk, nv, _ = self.toks[j + 1]
                    return nk == "sym" and nv in ("=", "!=")
            elif k == "eof":
                return False
            j += 1
        return False

    def fixpoint(self, which):
        _, _, p = self.next()
        if self.logic != "mu":
            raise ParseError(f"{which} is only available in mu-formulas", p)
        X, xp = self.ident("fixpoint variable")
        if not is_fixvar_name(X):
            raise ParseError(f"fixpoint variables are uppercase: {X}", xp)
        self.expect(".")
        self.fix_scope.append(X)
        try:
            body = self.unary()
        finally:
            self.fix_scope.pop()
        if not occurs_positively(body, X):
            raise PositivityError(f"{X} occurs negatively in the body of {which} {X}", p)
        if which == "mu":
            return Mu(X, body)
        return Not(Mu(X, Not(substitute_fixvar(body, X, Not(FixVar(X))))))

    def modality(self, box: bool):
        close = "]" if box else ">"
        if self.logic == "mu":
            head = self.mu_modal_game()
            self.expect(close)
            body = self.unary()
            if box:
                return Not(self.apply_mu_modal(head, Not(body)))
            return self.apply_mu_modal(head, body)
        g = self.game()
        self.expect(close)
        body = self.unary()
        return Dia(Dual(g) if box else g, body)

    # -- games
    def game(self):
        left = self.sequence()
        if self.at("++"):
            self.next()
            return Choice(left, self.game())
        return left

    def sequence(self):
        left = self.postfix()
        if self.at(";"):
            self.next()
            return Seq(left, self.sequence())
        return left

    def postfix(self):
        g = self.primary()
        while True:
            if self.at("*"):
                self.next()
                g = Loop(g)
            elif self.at("^d"):
                self.next()
                g = Dual(g)
            else:
                return g

    def primary(self):
        k, v, p = self.peek()
        if self.at("("):
            self.next()
            g = self.game()
            self.expect(")")
            return g
        if self.at("?"):
            self.next()
            return Test(self.unary())
        if self.at("*"):
            return self.atomic_game()
        if k == "id":
            if self.at("(", 1):
                return self.atomic_game()
            xs, ts = self.assignment()
            if ts is None:
                return seq(*[quant(x) for x in xs])
            return vec_assign_game(xs, ts, self.used)
        raise ParseError(f"expected game, found {v or 'end of input'!r}", p)

    def atomic_game(self):
        k, name, pos = self.next()
        self.expect("(")
        bound = [] if self.at(":") else self.var_list()
        self.expect(":")
        params = [] if self.at(")") else self.term_list()
        self.expect(")")
        if len(set(bound)) != len(bound):
            raise ParseError(f"bound variables of {name} must be distinct", pos)
        self._arity(self.act, name, (len(bound), len(params)), pos, "action")
        return Atomic(name, tuple(bound), tuple(params))

    def assignment(self):
        xs = self.var_list()
        self.expect(":=")
        if self.at("*"):
            self.next()
            return xs, None
        ts = self.term_list()
        if len(ts) != len(xs):
            raise ParseError("assignment needs as many terms as variables", self.peek()[2])
        if len(set(xs)) != len(xs):
            raise ParseError("assigned variables must be distinct", self.peek()[2])
        return xs, ts

    def mu_modal_game(self):
        """Inside <..> of a mu-formula only atomic games and assignments are allowed."""
        k, v, p = self.peek()
        if self.at("("):
            self.next()
            head = self.mu_modal_game()
            self.expect(")")
            return head
        if self.at("*") or (k == "id" and self.at("(", 1)):
            g = self.atomic_game()
        elif k == "id":
            g = self.assignment()
        else:
            raise ParseError(f"expected atomic game, found {v!r}", p)
        if self.at("*") or self.at("^d") or self.at(";") or self.at("++"):
            raise ParseError("mu-formulas only allow atomic games in modalities", self.peek()[2])
        return g

    def apply_mu_modal(self, head, body):
        if isinstance(head, Atomic):
            return Dia(head, body)
        xs, ts = head
        if ts is None:
            for x in reversed(xs):
                body = exists(x, body)
            return body
        return vec_assign_mu(xs, ts, body, self.used)

    # -- least fixpoint logic
    def lfp_app(self):
        _, _, p = self.next()
        if not self.at_kw("lfp"):
            raise ParseError("expected lfp", self.peek()[2])
        self.next()
        R, _ = self.ident("relation")
        xs = []
        while self.at(","):
            self.next()
            xs.append(self.ident("variable")[0])
        self.expect(".")
        self.lfp_scope.append((R, len(xs)))
        try:
            body = self.formula()
        finally:
            self.lfp_scope.pop()
        self.expect("]")
        self.expect("(")
        args = [] if self.at(")") else self.term_list()
        self.expect(")")
        if len(args) != len(xs):
            raise ArityError(f"lfp {R} binds {len(xs)} variables but gets {len(args)} arguments", p)
        return LfpApp(R, tuple(xs), body, tuple(args))


def parse(text: str, kind: str = "gl-formula", sig: GameSignature | None = None):
    """Parse and elaborate `text`. Without `sig` the signature is inferred."""
    return _Parser(text, kind, sig).parse()


def parse_with_signature(text: str, kind: str = "gl-formula", sig: GameSignature | None = None):
    """Like parse, also returning the (inferred or given) signature."""
    p = _Parser(text, kind, sig)
    out = p.parse()
    return out, (sig if sig is not None else p.inferred_signature())


def signature_of(*nodes) -> GameSignature:
    """Smallest signature covering the symbols used in `nodes`."""
    fun, rel, act = {}, {}, {STAR: (1, 0)}
    bound_rel: set = set()
    for node in nodes:
        for n in walk(node):
            if isinstance(n, LfpApp):
                bound_rel.add(n.rel)
    for node in nodes:
        for n in walk(node):
            if isinstance(n, App):
                fun[n.fn] = len(n.args)
            elif isinstance(n, Rel) and n.name not in bound_rel:
                rel[n.name] = len(n.args)
            elif isinstance(n, Atomic):
                act[n.action] = (len(n.bound), len(n.params))
    return GameSignature.of(fun, rel, act)
