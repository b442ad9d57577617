"""ODE reachability as a greatest fixpoint over Taylor-bounded segments.

Points live in the box K-bar = {u : |u|_inf <= K}. Inputs given as ints or
Fractions are checked exactly; any float switches to floating point with an
additive slack `eps` on the bound.
"""

from __future__ import annotations

import ast
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

# ---------------------------------------------------------------- polynomials


class PolyParseError(ValueError):
    pass


def _mono_mul(a: tuple, b: tuple) -> tuple:
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _exact(c):
    return c if isinstance(c, Fraction) else Fraction(c)


class Poly:
    """Sparse polynomial with Fraction coefficients; monomials are sorted (var, exp) tuples."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        acc: dict = {}
        for mono, c in (terms.items() if isinstance(terms, dict) else (terms or ())):
            mono = tuple(sorted((v, e) for v, e in mono if e))
            acc[mono] = acc.get(mono, Fraction(0)) + _exact(c)
        self.terms = tuple(sorted((m, c) for m, c in acc.items() if c != 0))

    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(): c})

    @classmethod
    def var(cls, name: str) -> "Poly":
        return cls({((name, 1),): 1})

    @classmethod
    def parse(cls, text: str) -> "Poly":
        return parse_poly(text)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __add__(self, other):
        other = _lift(other)
        return Poly(list(self.terms) + list(other.terms))

    __radd__ = __add__

    def __neg__(self):
        return Poly([(m, -c) for m, c in self.terms])

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        other = _lift(other)
        out: dict = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers need a natural exponent")
        out = Poly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def variables(self) -> set:
        return {v for m, _ in self.terms for v, _ in m}

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m, _ in self.terms), default=0)

    def diff(self, x: str) -> "Poly":
        out = []
        for m, c in self.terms:
            d = dict(m)
            e = d.get(x, 0)
            if e:
                d[x] = e - 1
                out.append((tuple(d.items()), c * e))
        return Poly(out)

    def __call__(self, point: dict):
        """Evaluate; exact when every coordinate is rational."""
        use_float = any(isinstance(v, float) for v in point.values())
        total = 0.0 if use_float else Fraction(0)
        for m, c in self.terms:
            term = float(c) if use_float else c
            for v, e in m:
                term = term * point[v] ** e
            total += term
        return total

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        return show_poly(self)


def _lift(p) -> Poly:
    if isinstance(p, Poly):
        return p
    if isinstance(p, (int, Fraction)):
        return Poly.const(p)
    raise TypeError(f"cannot use {p!r} as a polynomial")


def _show_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"({c.numerator}/{c.denominator})"


def show_poly(p: Poly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for m, c in p.terms:
        factors = [v if e == 1 else f"{v}^{e}" for v, e in m]
        if not factors:
            parts.append(_show_coeff(c))
        elif c == 1:
            parts.append("*".join(factors))
        elif c == -1:
            parts.append("-" + "*".join(factors))
        else:
            parts.append("*".join([_show_coeff(c)] + factors))
    return " + ".join(parts).replace("+ -", "- ")


def parse_poly(text: str) -> Poly:
    """Parse +, -, *, ^ (or **), parentheses, numerals and variable names."""
    src = text.replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as e:
        raise PolyParseError(f"cannot parse polynomial {text!r}: {e.msg}") from None

    def go(n):
        if isinstance(n, ast.Expression):
            return go(n.body)
        if isinstance(n, ast.Constant) and isinstance(n.value, (int, float)) \
                and not isinstance(n.value, bool):
            v = n.value
            return Poly.const(Fraction(v) if isinstance(v, int) else Fraction(str(v)))
        if isinstance(n, ast.Name):
            return Poly.var(n.id)
        if isinstance(n, ast.UnaryOp) and isinstance(n.op, (ast.USub, ast.UAdd)):
            inner = go(n.operand)
            return -inner if isinstance(n.op, ast.USub) else inner
        if isinstance(n, ast.BinOp):
            if isinstance(n.op, ast.Add):
                return go(n.left) + go(n.right)
            if isinstance(n.op, ast.Sub):
                return go(n.left) - go(n.right)
            if isinstance(n.op, ast.Mult):
                return go(n.left) * go(n.right)
            if isinstance(n.op, ast.Div):
                den = go(n.right)
                if den.variables() or den.is_zero():
                    raise PolyParseError("division only by nonzero constants")
                return go(n.left) * Poly.const(1 / den.terms[0][1])
            if isinstance(n.op, ast.Pow):
                e = go(n.right)
                if e.variables() or (e.terms and (e.terms[0][1].denominator != 1
                                                  or e.terms[0][1] < 0)):
                    raise PolyParseError("exponents must be natural numbers")
                return go(n.left) ** (int(e.terms[0][1]) if e.terms else 0)
        raise PolyParseError(f"unsupported syntax in polynomial {text!r}")

    return go(tree)


@dataclass(frozen=True)
class PolyVectorField:
    vars: tuple
    components: tuple

    def __post_init__(self):
        if len(self.vars) != len(self.components):
            raise ValueError("one component per variable")
        extra = set().union(*[c.variables() for c in self.components]) - set(self.vars)
        if extra:
            raise ValueError(f"components mention {sorted(extra)} outside the field variables")

    @classmethod
    def parse(cls, vars, components) -> "PolyVectorField":
        return cls(tuple(vars), tuple(c if isinstance(c, Poly) else parse_poly(str(c))
                                      for c in components))

    @property
    def dim(self) -> int:
        return len(self.vars)

    def __call__(self, x):
        point = dict(zip(self.vars, x))
        return tuple(c(point) for c in self.components)


def lie_derivative(delta: Poly, F: PolyVectorField) -> Poly:
    """sum_i d(delta)/dx_i * F_i."""
    if not delta.variables() <= set(F.vars):
        raise ValueError("delta mentions variables outside the field")
    out = Poly()
    for x, theta in zip(F.vars, F.components):
        out = out + delta.diff(x) * theta
    return out


def ddf(F: PolyVectorField) -> tuple:
    """The second derivative field (DF)F, componentwise Lie derivatives."""
    return tuple(lie_derivative(c, F) for c in F.components)


def sup_norm_bound(P, K) -> Fraction:
    """max_i sum |coeff| K^deg over the monomials of P_i: a bound on |P|_inf over the box."""
    K = _exact(K)
    if K <= 0:
        raise ValueError("K must be positive")
    return max((sum((abs(c) * K ** sum(e for _, e in m) for m, c in p.terms), Fraction(0))
                for p in P), default=Fraction(0))


# ---------------------------------------------------------------- the set G


class OutsideBox(ValueError):
    pass


def _is_exact(*vals) -> bool:
    def ok(v):
        if isinstance(v, (tuple, list)):
            return all(ok(u) for u in v)
        return isinstance(v, Rational) and not isinstance(v, bool)
    return all(ok(v) for v in vals)


def inf_norm(v) -> object:
    return max((abs(u) for u in v), default=0)


@dataclass(frozen=True)
class TaylorCheck:
    ok: bool
    lhs: object
    bound: object
    exact: bool


def taylor_check(x, y, t, F: PolyVectorField, K, eps: float = 1e-9,
                 norm_bound=None) -> TaylorCheck:
    """|y - x - t F(x)|_inf against (t^2/2) * sup_norm_bound((DF)F, K)."""
    if len(x) != F.dim or len(y) != F.dim:
        raise ValueError("points must match the field dimension")
    if t < 0:
        raise ValueError("time must be nonnegative")
    for name, p in (("x", x), ("y", y)):
        if inf_norm(p) > K:
            raise OutsideBox(f"{name} = {tuple(p)} lies outside the box of radius {K}")
    N = sup_norm_bound(ddf(F), K) if norm_bound is None else norm_bound
    exact = _is_exact(x, y, t)
    if exact:
        t = _exact(t)
        fx = F(tuple(_exact(u) for u in x))
        lhs = inf_norm([_exact(yi) - _exact(xi) - t * fi for xi, yi, fi in zip(x, y, fx)])
        bound = t * t / 2 * N
        return TaylorCheck(lhs <= bound, lhs, bound, True)
    xf = tuple(float(u) for u in x)
    fx = F(xf)
    t = float(t)
    lhs = inf_norm([float(yi) - xi - t * fi for xi, yi, fi in zip(xf, y, fx)])
    bound = t * t / 2 * float(N)
    return TaylorCheck(lhs <= bound + eps, lhs, bound, False)


def taylor_cond(x, y, t, F: PolyVectorField, K, eps: float = 1e-9) -> bool:
    return taylor_check(x, y, t, F, K, eps).ok


# ---------------------------------------------------------------- integration


class TrajectoryEscape(ValueError):
    pass


def rk4_integrate(F: PolyVectorField, x0, t, steps: int = 1000, K=None):
    """Classical fourth-order Runge-Kutta in floating point."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    h = float(t) / steps
    x = tuple(float(u) for u in x0)
    for _ in range(steps):
        k1 = F(x)
        k2 = F(tuple(a + h / 2 * b for a, b in zip(x, k1)))
        k3 = F(tuple(a + h / 2 * b for a, b in zip(x, k2)))
        k4 = F(tuple(a + h * b for a, b in zip(x, k3)))
        x = tuple(a + h / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(x, k1, k2, k3, k4))
        if K is not None and inf_norm(x) > float(K):
            raise TrajectoryEscape(f"trajectory reaches {x}, outside the box of radius {K}")
    return x


def trajectory_midpoints(F: PolyVectorField, x0, t, depth: int, steps_per_leaf: int = 64,
                         K=None) -> dict:
    """States at every dyadic time t*k/2^depth, keyed by the Fraction k/2^depth."""
    leaves = 1 << depth
    out = {Fraction(0): tuple(float(u) for u in x0)}
    x = out[Fraction(0)]
    dt = float(t) / leaves
    for k in range(1, leaves + 1):
        x = rk4_integrate(F, x, dt, steps_per_leaf, K)
        out[Fraction(k, leaves)] = x
    return out


# ---------------------------------------------------------------- refinement


@dataclass(frozen=True)
class ReachQuery:
    x0: tuple
    y: tuple
    t: object
    K: object
    depth: int = 0
    grid_radius: float = 0.05
    grid_points: int = 3
    eps: float = 1e-9
    strategy: str = "integrator"   # or "rk4" (per-segment) or "grid"
    steps: int = 64
    budget: int = 200_000


@dataclass(frozen=True)
class PassedToDepth:
    depth: int
    lhs: object = None
    bound: object = None
    nodes: int = 0
    ok = True

    def __str__(self):
        return f"PassedToDepth({self.depth})"


@dataclass(frozen=True)
class RejectedAtLevel0:
    lhs: object
    bound: object
    ok = False

    def __str__(self):
        return "RejectedAtLevel0"


@dataclass(frozen=True)
class NoWitnessFound:
    depth: int
    budget_exceeded: bool = False
    nodes: int = 0
    ok = False

    def __str__(self):
        flag = ", budget" if self.budget_exceeded else ""
        return f"NoWitnessFound({self.depth}{flag})"


class _Budget(Exception):
    pass


def _to_mode(u, exact):
    return tuple(Fraction(v) for v in u) if exact else tuple(float(v) for v in u)


def refine_reach(q: ReachQuery, F: PolyVectorField, midpoints: dict | None = None):
    """Membership of (x0, y, t) in the depth-m approximant of the reachability fixpoint."""
    K = q.K
    for name, p in (("x0", q.x0), ("y", q.y)):
        if inf_norm(p) > K:
            raise OutsideBox(f"{name} lies outside the box of radius {K}")
    if q.depth < 0:
        raise ValueError("depth must be nonnegative")
    exact = _is_exact(q.x0, q.y, q.t, q.K)
    N = sup_norm_bound(ddf(F), K)
    top = taylor_check(q.x0, q.y, q.t, F, K, q.eps, N)
    if not top.ok:
        return RejectedAtLevel0(top.lhs, top.bound)
    if midpoints is None and q.strategy == "integrator" and q.depth > 0:
        midpoints = trajectory_midpoints(F, q.x0, q.t, q.depth, q.steps)
    midpoints = midpoints or {}
    Kf = float(K)
    nodes = [0]
    memo: dict = {}

    def candidates(x, y, t, lo, span):
        """(point, aligned) pairs; aligned points come from the dyadic tree."""
        out = []

        def push(c, aligned):
            if all(math.isfinite(v) for v in c) and inf_norm(c) <= Kf:
                c = _to_mode(c, exact)
                if all(c != o for o, _ in out):
                    out.append((c, aligned))

        mid = lo + span / 2 if lo is not None else None
        tree = midpoints.get(mid) if mid is not None else None
        if tree is not None:
            push(tree, True)
        base = tree
        if q.strategy != "grid":
            try:
                primary = rk4_integrate(F, x, float(t) / 2, max(1, q.steps // 4))
                push(primary, False)
                base = primary if base is None else base
            except OverflowError:
                pass
        # the chord midpoint, exact in rational mode; the only witness when the bound is 0
        chord = tuple((a + b) / 2 for a, b in zip(x, y))
        push(chord, False)
        if base is None:
            base = tuple(float(c) for c in chord)
        if q.grid_points > 1 and q.grid_radius > 0:
            r, n = q.grid_radius, q.grid_points
            offs = [-r + 2 * r * i / (n - 1) for i in range(n)]
            for d in itertools.product(offs, repeat=F.dim):
                push(tuple(float(b) + o for b, o in zip(base, d)), False)
        return out

    def passes(x, y, t, d, lo, span) -> bool:
        key = (x, y, t, d, lo, span)
        if key in memo:
            return memo[key]
        nodes[0] += 1
        if nodes[0] > q.budget:
            raise _Budget
        ok = taylor_check(x, y, t, F, K, q.eps, N).ok
        if ok and d > 0:
            half = t / 2
            ok = False
            for u, aligned in candidates(x, y, t, lo, span):
                if aligned:
                    ls, rs = (lo, span / 2), (lo + span / 2, span / 2)
                else:
                    ls = rs = (None, None)
                if passes(x, u, half, d - 1, *ls) and passes(u, y, half, d - 1, *rs):
                    ok = True
                    break
        memo[key] = ok
        return ok

    x0 = _to_mode(q.x0, exact)
    y = _to_mode(q.y, exact)
    t = _exact(q.t) if exact else float(q.t)
    try:
        for d in range(1, q.depth + 1):
            if not passes(x0, y, t, d, Fraction(0), Fraction(1)):
                return NoWitnessFound(d, False, nodes[0])
    except _Budget:
        return NoWitnessFound(d, True, nodes[0])
    return PassedToDepth(q.depth, top.lhs, top.bound, nodes[0])


# ---------------------------------------------------------------- emitted formulas


def _sub(p: Poly, mapping: dict) -> Poly:
    out = Poly()
    for m, c in p.terms:
        term = Poly.const(c)
        for v, e in m:
            term = term * (Poly.var(mapping.get(v, v)) ** e)
        out = out + term
    return out


def emit_g_formula(F: PolyVectorField, K) -> dict:
    """Text of the Taylor-bound formula, the fixpoint form and the game form.

    The bound uses the exact supremum over the box: some z in the box and
    some component j with 2|y_i - x_i - t*theta_i| <= t^2 |w_j(z)| for all i.
    """
    xs = list(F.vars)
    ys = [f"y{i + 1}" if f"y{i + 1}" not in xs else f"y_{v}" for i, v in enumerate(xs)]
    zs = [f"z{i + 1}" if f"z{i + 1}" not in xs else f"z_{v}" for i, v in enumerate(xs)]
    us = [f"u{i + 1}" if f"u{i + 1}" not in xs else f"u_{v}" for i, v in enumerate(xs)]
    w = [_sub(p, dict(zip(xs, zs))) for p in ddf(F)]
    diffs = [f"2*({y} - {x} - t*({show_poly(th)}))" for x, y, th in zip(xs, ys, F.components)]
    Ktxt = str(K)
    if all(p.is_zero() for p in w):
        g = " & ".join(f"{d} <= 0 & -{d} <= 0" for d in diffs)
    else:
        box = " & ".join(f"-{Ktxt} <= {z} & {z} <= {Ktxt}" for z in zs)
        alts = []
        for p in w:
            b = f"t^2*({show_poly(p)})"
            for lo, hi in ((f"-{b}", b), (b, f"-{b}")):
                alts.append("(" + " & ".join(f"{lo} <= {d} & {d} <= {hi}" for d in diffs) + ")")
        g = f"exists {', '.join(zs)} . ({box} & ({' | '.join(alts)}))"
    inbox = " & ".join(f"-{Ktxt} <= {v} & {v} <= {Ktxt}" for v in us)
    half_y = "".join(f"<{y} := {u}>" for y, u in zip(ys, us))
    half_x = "".join(f"<{x} := {u}>" for x, u in zip(xs, us))
    mu = (f"nu Z . (G & exists {', '.join(us)} . ({inbox} & "
          f"{half_y}<t := t/2> Z & {half_x}<t := t/2> Z))")
    pick = "; ".join(f"{u} := *" for u in us)
    to_x = "; ".join(f"{x} := {u}" for x, u in zip(xs, us))
    to_y = "; ".join(f"{y} := {u}" for y, u in zip(ys, us))
    game = f"[(t := t/2; ({pick})^d; (({to_x}) ++ ({to_y})))*] G"
    return {"G": g, "mu": mu, "game": game}


# ---------------------------------------------------------------- query files


def _number(v):
    if isinstance(v, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        s = v.strip()
        try:
            return Fraction(s)
        except ValueError:
            pass
        tree = ast.parse(s, mode="eval")

        def go(n):
            if isinstance(n, ast.Expression):
                return go(n.body)
            if isinstance(n, ast.Constant) and isinstance(n.value, (int, float)):
                return n.value
            if isinstance(n, ast.Name) and n.id == "pi":
                return math.pi
            if isinstance(n, ast.UnaryOp) and isinstance(n.op, ast.USub):
                return -go(n.operand)
            if isinstance(n, ast.BinOp) and isinstance(n.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)):
                a, b = go(n.left), go(n.right)
                return {ast.Add: a + b, ast.Sub: a - b, ast.Mult: a * b,
                        ast.Div: a / b if b else math.inf}[type(n.op)]
            raise ValueError(f"cannot read number {v!r}")

        return go(tree)
    raise ValueError(f"cannot read number {v!r}")


def load_query(data: dict):
    """(field, query) from the reach JSON format."""
    F = PolyVectorField.parse(data["vars"], data["field"])
    grid = data.get("grid", {})
    q = ReachQuery(
        x0=tuple(_number(v) for v in data["x0"]),
        y=tuple(_number(v) for v in data["y"]),
        t=_number(data["t"]),
        K=_number(data["K"]),
        depth=int(data.get("depth", 0)),
        grid_radius=float(grid.get("radius", 0.05)),
        grid_points=int(grid.get("points", 3)),
        eps=float(data.get("eps", 1e-9)),
        strategy=data.get("strategy", "integrator"),
        steps=int(data.get("steps", 64)),
        budget=int(data.get("budget", 200_000)),
    )
    return F, q


def load_query_file(path):
    with open(path) as fh:
        return load_query(json.load(fh))


def verdict_json(v) -> dict:
    def num(x):
        if x is None:
            return None
        return float(x)
    out = {"verdict": type(v).__name__, "text": str(v)}
    if isinstance(v, PassedToDepth):
        out.update(depth=v.depth, lhs=num(v.lhs), bound=num(v.bound), nodes=v.nodes)
    elif isinstance(v, RejectedAtLevel0):
        out.update(lhs=num(v.lhs), bound=num(v.bound))
    else:
        out.update(depth=v.depth, budget_exceeded=v.budget_exceeded, nodes=v.nodes)
    return out
