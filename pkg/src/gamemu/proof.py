"""Hilbert-style proof checking for FOGL and FOLmu, derived rules and the deduction theorem."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace

from .syntax import (
    FALSE, STAR, And, App, Atomic, Choice, Dia, Dual, Eq, FixVar, Iff, Implies, Loop, Mu,
    Not, Or, PGame, Prop, Rel, Seq, Test, Var, Verum, all_names, as_iff, as_implies, as_or,
    bound_vars, free_vars, fresh, has_fixpoints, individual, is_mu_formula, occurs_positively,
    parse, quant, rename_vars, show, substitute_fixvar, substitute_var, walk,
)


class UnknownSchema(ValueError):
    pass


class SideConditionError(ValueError):
    pass


class UnsupportedStep(ValueError):
    pass


# ---------------------------------------------------------------- proof objects


@dataclass(frozen=True)
class Just:
    kind: str
    name: str = ""
    premises: tuple = ()
    bindings: tuple = ()

    def __str__(self):
        if self.kind == "axiom":
            return f"axiom {self.name}"
        if self.premises:
            return f"{self.kind} {' '.join(str(p + 1) for p in self.premises)}"
        return self.kind


@dataclass(frozen=True)
class Line:
    formula: object
    just: Just


@dataclass
class Proof:
    lines: list = field(default_factory=list)
    hypothesis: object = None
    goal: object = None

    @property
    def conclusion(self):
        return self.lines[-1].formula if self.lines else None

    def __len__(self):
        return len(self.lines)

    def render(self) -> str:
        out = []
        if self.hypothesis is not None:
            out.append(f"hypothesis: {show(self.hypothesis)}")
        for i, ln in enumerate(self.lines, 1):
            out.append(f"{i:4d}. {show(ln.formula)}    [{ln.just}]")
        return "\n".join(out)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    line: int | None = None  # 1-based
    reason: str = ""

    def __bool__(self):
        return self.accepted

    def __str__(self):
        return "Accepted" if self.accepted else f"Rejected(line {self.line}: {self.reason})"


ACCEPTED = Verdict(True)

# ---------------------------------------------------------------- tautologies

_TT_WIDTH = 16


def _atom_masks(n: int):
    full = (1 << (1 << n)) - 1
    out = []
    for i in range(n):
        period = 1 << (i + 1)
        block = ((1 << (1 << i)) - 1) << (1 << i)
        out.append(block * (full // ((1 << period) - 1)))
    return out, full


def prop_atoms(f) -> list:
    """Maximal non-boolean subformulas in first-occurrence order."""
    seen: dict = {}
    stack = [f]
    while stack:
        n = stack.pop()
        if isinstance(n, Verum):
            continue
        if isinstance(n, Not):
            stack.append(n.arg)
        elif isinstance(n, And):
            stack.extend((n.right, n.left))
        elif n not in seen:
            seen[n] = len(seen)
    return list(seen)


def is_tautology(f) -> bool:
    """Truth-table check, bit-parallel over up to 2^16 rows at a time."""
    atoms = prop_atoms(f)
    n = len(atoms)
    w = min(n, _TT_WIDTH)
    masks, full = _atom_masks(w)
    for rest in range(1 << (n - w)):
        val = {a: masks[i] for i, a in enumerate(atoms[:w])}
        for j, a in enumerate(atoms[w:]):
            val[a] = full if rest >> j & 1 else 0
        memo: dict = {}

        def ev(m):
            if isinstance(m, Verum):
                return full
            if m in val:
                return val[m]
            if m in memo:
                return memo[m]
            if isinstance(m, Not):
                r = full ^ ev(m.arg)
            else:
                r = ev(m.left) & ev(m.right)
            memo[m] = r
            return r

        if ev(f) != full:
            return False
    return True


# ---------------------------------------------------------------- equality axioms


def _conj_list(f, n):
    """Split a left-nested conjunction into exactly n parts."""
    if n == 1:
        return [f]
    if not isinstance(f, And):
        return None
    head = _conj_list(f.left, n - 1)
    return None if head is None else head + [f.right]


def check_eq_axiom(f) -> bool:
    if isinstance(f, Eq):
        return f.left == f.right
    m = as_implies(f)
    if m is None:
        return False
    a, b = m
    if isinstance(a, Eq) and isinstance(b, Eq):
        if a.left == b.right and a.right == b.left:
            return True
    if isinstance(a, And) and isinstance(a.left, Eq) and isinstance(a.right, Eq) \
            and isinstance(b, Eq):
        s, t, u = a.left.left, a.left.right, a.right.right
        if a.right.left == t and b.left == s and b.right == u:
            return True
    if isinstance(b, Eq) and isinstance(b.left, App) and isinstance(b.right, App):
        l, r = b.left, b.right
        if l.fn == r.fn and len(l.args) == len(r.args) and l.args:
            eqs = _conj_list(a, len(l.args))
            if eqs and all(e == Eq(s, t) for e, s, t in zip(eqs, l.args, r.args)):
                return True
    if isinstance(b, Rel) and isinstance(a, And) and isinstance(a.right, Rel):
        l, r = a.right, b
        if l.name == r.name and len(l.args) == len(r.args) and l.args:
            eqs = _conj_list(a.left, len(l.args))
            if eqs and all(e == Eq(s, t) for e, s, t in zip(eqs, l.args, r.args)):
                return True
    return False


# ---------------------------------------------------------------- axiom schemas

GL_AXIOMS = {"exists", "C", "nonempty", "dual", "test", "composition", "choice", "loop"}
MU_AXIOMS = {"exists", "C", "nonempty", "mu"}
RULE_FORMS = {"diaind", "muind"}

ALIASES = {
    "existential quantifier axiom": "exists", "universality axiom": "C",
    "duality axiom": "dual", "test axiom": "test", "composition axiom": "composition",
    "choice axiom": "choice", "loop axiom": "loop", "fixpoint axiom": "mu",
    "diamond induction axiom": "diaind", "fixpoint induction rule": "muind",
    "context axiom": "C", "universality": "C", "nonempty domain": "nonempty",
}


def canonical_name(name: str) -> str:
    n = ALIASES.get(name, ALIASES.get(name.lower(), name))
    if n not in GL_AXIOMS | MU_AXIOMS | RULE_FORMS:
        raise UnknownSchema(f"unknown schema {name!r}")
    return n


def _is_star(g, x=None) -> bool:
    return isinstance(g, Atomic) and g.action == STAR and (x is None or g.bound == (x,))


def _subterms(node) -> list:
    return [n for n in walk(node) if isinstance(n, (Var, App))]


def _captures(phi, rho) -> set:
    """Fixpoint variables free in rho that a binder inside phi would capture."""
    free = free_vars(rho) - individual(free_vars(rho))
    return free & {n.var for n in walk(phi) if isinstance(n, Mu)}


def axiom_reason(name: str, f, calculus: str | None = None, bindings=None) -> str | None:
    """None when f is an instance of the schema, otherwise why not."""
    name = canonical_name(name)
    b = dict(bindings or ())
    if name in RULE_FORMS:
        m = as_implies(f)
        if m is None:
            return "rule form expects premise -> conclusion"
        return _rule_reason(name, m[1], m[0])
    if name == "exists":
        m = as_implies(f)
        if m is None or not isinstance(m[1], Dia) or not _is_star(m[1].game):
            return "expected phi[x->theta] -> <x:=*>phi"
        lhs, (x,), phi = m[0], m[1].game.bound, m[1].body
        kinds = ("mu",) if calculus == "mu" else ("gl",) if calculus == "gl" else ("gl", "mu")
        if "theta" in b:
            cands = [b["theta"]]
        else:
            cands = [Var(x)] + list(dict.fromkeys(_subterms(lhs)))
        for theta in cands:
            for kind in kinds:
                if substitute_var(phi, x, theta, kind) == lhs:
                    return None
        return "antecedent is not the recomputed substitution instance"
    if name == "nonempty":
        if isinstance(f, Not) and isinstance(f.arg, Dia) and _is_star(f.arg.game) \
                and f.arg.body == FALSE:
            return None
        return "expected !<x:=*>false"
    if name == "C":
        m = as_implies(f)
        if m is None or not isinstance(m[0], And) or not isinstance(m[0].right, Dia):
            return "expected (psi & <a>phi) -> <a>(psi & phi)"
        psi, dia = m[0].left, m[0].right
        g = dia.game
        if not isinstance(g, (Atomic, PGame)):
            return "universality axiom needs an atomic game"
        if m[1] != Dia(g, And(psi, dia.body)):
            return "conclusion does not match <a>(psi & phi)"
        clash = free_vars(psi) & bound_vars(g)
        if clash:
            return f"side condition: psi mentions bound {sorted(clash)}"
        fix = free_vars(psi) - individual(free_vars(psi))
        if fix:
            return f"side condition: psi has free fixpoint variables {sorted(fix)}"
        return None
    if name in ("dual", "test", "composition", "choice"):
        m = as_iff(f)
        if m is None or not isinstance(m[0], Dia):
            return "expected <alpha>phi <-> ..."
        g, phi = m[0].game, m[0].body
        if name == "dual" and isinstance(g, Dual):
            want = Not(Dia(g.body, Not(phi)))
        elif name == "test" and isinstance(g, Test):
            want = And(g.cond, phi)
        elif name == "composition" and isinstance(g, Seq):
            want = Dia(g.left, Dia(g.right, phi))
        elif name == "choice" and isinstance(g, Choice):
            want = Or(Dia(g.left, phi), Dia(g.right, phi))
        else:
            return f"game is not of the {name} shape"
        return None if m[1] == want else f"right-hand side is not the {name} unfolding"
    if name == "loop":
        m = as_implies(f)
        if m is None or not isinstance(m[1], Dia) or not isinstance(m[1].game, Loop):
            return "expected (phi | <alpha><alpha*>phi) -> <alpha*>phi"
        g, phi = m[1].game, m[1].body
        return None if m[0] == Or(phi, Dia(g.body, m[1])) else "antecedent mismatch"
    if name == "mu":
        m = as_implies(f)
        if m is None or not isinstance(m[1], Mu):
            return "expected phi[X->muX.phi] -> muX.phi"
        mu = m[1]
        if _captures(mu.body, mu):
            return "unfolding would capture a fixpoint variable"
        return None if m[0] == substitute_fixvar(mu.body, mu.var, mu) else "unfolding mismatch"
    raise UnknownSchema(name)


def check_axiom_instance(name: str, f, calculus: str | None = None, bindings=None) -> bool:
    return axiom_reason(name, f, calculus, bindings) is None


def _rule_reason(kind, f, premise) -> str | None:
    m = as_implies(f)
    if kind == "mon":
        if m is None or not (isinstance(m[0], Dia) and isinstance(m[1], Dia)):
            return "expected <a>phi -> <a>psi"
        if m[0].game != m[1].game:
            return "different games on the two sides"
        if not isinstance(m[0].game, (Atomic, PGame)):
            return "monotonicity rule needs an atomic game"
        return None if premise == Implies(m[0].body, m[1].body) else "premise is not phi -> psi"
    if kind == "diaind":
        if m is None or not isinstance(m[0], Dia) or not isinstance(m[0].game, Loop):
            return "expected <alpha*>phi -> psi"
        alpha, phi, psi = m[0].game.body, m[0].body, m[1]
        want = Implies(Or(phi, Dia(alpha, psi)), psi)
        return None if premise == want else "premise is not (phi | <alpha>psi) -> psi"
    if kind == "muind":
        if m is None or not isinstance(m[0], Mu):
            return "expected muX.phi -> psi"
        mu, psi = m[0], m[1]
        if not occurs_positively(mu.body, mu.var):
            return f"{mu.var} occurs negatively"
        if _captures(mu.body, psi):
            return "substitution would capture a fixpoint variable"
        want = Implies(substitute_fixvar(mu.body, mu.var, psi), psi)
        return None if premise == want else "premise is not phi[X->psi] -> psi"
    raise UnknownSchema(kind)


# ---------------------------------------------------------------- checking


def _calculus(c: str) -> str:
    c = c.lower()
    if c in ("gl", "fogl"):
        return "gl"
    if c in ("mu", "folmu"):
        return "mu"
    raise ValueError(f"unknown calculus {c!r}")


def _shape_reason(f, calculus) -> str | None:
    if calculus == "gl":
        if has_fixpoints(f):
            return "fixpoints are not part of the FOGL calculus"
    elif not is_mu_formula(f):
        return "FOLmu proofs allow only atomic-game modalities"
    return None


def line_reason(p: Proof, i: int, calculus: str) -> str | None:
    ln = p.lines[i]
    f, j = ln.formula, ln.just
    bad = _shape_reason(f, calculus)
    if bad:
        return bad
    for k in j.premises:
        if not isinstance(k, int) or k < 0:
            return f"unknown premise {k}"
        if k >= i:
            return "forward reference"
    need = {"hyp": 0, "taut": 0, "eq": 0, "axiom": 0, "mp": 2, "mon": 1, "diaind": 1,
            "muind": 1}
    if j.kind not in need:
        return f"unknown justification {j.kind!r}"
    if len(j.premises) != need[j.kind]:
        return f"{j.kind} expects {need[j.kind]} premise(s)"
    prem = [p.lines[k].formula for k in j.premises]
    if j.kind == "hyp":
        if p.hypothesis is None:
            return "proof has no hypothesis"
        return None if f == p.hypothesis else "line differs from the hypothesis"
    if j.kind == "taut":
        return None if is_tautology(f) else "not a propositional tautology"
    if j.kind == "eq":
        return None if check_eq_axiom(f) else "not an equality axiom"
    if j.kind == "axiom":
        try:
            name = canonical_name(j.name)
        except UnknownSchema as e:
            return str(e)
        allowed = GL_AXIOMS if calculus == "gl" else MU_AXIOMS
        if name not in allowed:
            return f"axiom {name} is not part of this calculus"
        return axiom_reason(name, f, calculus, j.bindings)
    if j.kind == "mp":
        return None if prem[1] == Implies(prem[0], f) else "second premise is not first -> line"
    if j.kind == "diaind" and calculus != "gl":
        return "diamond induction belongs to the FOGL calculus"
    if j.kind == "muind" and calculus != "mu":
        return "fixpoint induction belongs to the FOLmu calculus"
    return _rule_reason(j.kind, f, prem[0])


def check_proof(p: Proof, calculus: str = "gl", goal=None) -> Verdict:
    calculus = _calculus(calculus)
    if not p.lines:
        return Verdict(False, 0, "empty proof")
    for i in range(len(p.lines)):
        why = line_reason(p, i, calculus)
        if why is not None:
            return Verdict(False, i + 1, why)
    goal = p.goal if goal is None else goal
    if goal is not None and p.conclusion != goal:
        return Verdict(False, len(p.lines), "conclusion differs from the claimed goal")
    return ACCEPTED


# ---------------------------------------------------------------- building proofs


class ProofBuilder:
    """Appends lines, reusing any formula already proven."""

    def __init__(self, hypothesis=None, calculus: str = "gl"):
        self.lines: list = []
        self.index: dict = {}
        self.hypothesis = hypothesis
        self.calculus = _calculus(calculus)

    def add(self, f, just: Just) -> int:
        if f in self.index:
            return self.index[f]
        self.lines.append(Line(f, just))
        self.index[f] = len(self.lines) - 1
        return self.index[f]

    def f(self, i):
        return self.lines[i].formula

    def hyp(self) -> int:
        return self.add(self.hypothesis, Just("hyp"))

    def taut(self, f) -> int:
        return self.add(f, Just("taut"))

    def axiom(self, name, f, **bindings) -> int:
        return self.add(f, Just("axiom", name, bindings=tuple(sorted(bindings.items()))))

    def mp(self, a: int, b: int) -> int:
        m = as_implies(self.f(b))
        assert m is not None and m[0] == self.f(a), "modus ponens on mismatched lines"
        return self.add(m[1], Just("mp", premises=(a, b)))

    def mon(self, k: int, game) -> int:
        phi, psi = as_implies(self.f(k))
        return self.add(Implies(Dia(game, phi), Dia(game, psi)), Just("mon", premises=(k,)))

    def diaind(self, k: int) -> int:
        (ante, psi) = as_implies(self.f(k))
        phi, dia = as_or(ante)
        return self.add(Implies(Dia(Loop(dia.game), phi), psi), Just("diaind", premises=(k,)))

    def chain(self, prems, goal) -> int:
        """goal from the premise lines by one tautology and repeated modus ponens."""
        imp = goal
        for k in reversed(prems):
            imp = Implies(self.f(k), imp)
        cur = self.taut(imp)
        for k in prems:
            cur = self.mp(k, cur)
        return cur

    # schema instances
    def ax_test(self, cond, phi):
        return self.axiom("test", Iff(Dia(Test(cond), phi), And(cond, phi)))

    def ax_choice(self, a, b, phi):
        return self.axiom("choice", Iff(Dia(Choice(a, b), phi), Or(Dia(a, phi), Dia(b, phi))))

    def ax_comp(self, a, b, phi):
        return self.axiom("composition", Iff(Dia(Seq(a, b), phi), Dia(a, Dia(b, phi))))

    def ax_dual(self, a, phi):
        return self.axiom("dual", Iff(Dia(Dual(a), phi), Not(Dia(a, Not(phi)))))

    def ax_loop(self, a, phi):
        star = Dia(Loop(a), phi)
        return self.axiom("loop", Implies(Or(phi, Dia(a, star)), star))

    def ax_c(self, g, psi, phi):
        return self.axiom("C", Implies(And(psi, Dia(g, phi)), Dia(g, And(psi, phi))))

    # derived rules
    def mono(self, k: int, g) -> int:
        """From line k: A -> B derive <g>A -> <g>B for any game g."""
        A, B = as_implies(self.f(k))
        goal = Implies(Dia(g, A), Dia(g, B))
        if isinstance(g, (Atomic, PGame)):
            return self.mon(k, g)
        if isinstance(g, Test):
            return self.chain([k, self.ax_test(g.cond, A), self.ax_test(g.cond, B)], goal)
        if isinstance(g, Choice):
            return self.chain([self.mono(k, g.left), self.mono(k, g.right),
                               self.ax_choice(g.left, g.right, A),
                               self.ax_choice(g.left, g.right, B)], goal)
        if isinstance(g, Seq):
            inner = self.mono(k, g.right)
            outer = self.mono(inner, g.left)
            return self.chain([outer, self.ax_comp(g.left, g.right, A),
                               self.ax_comp(g.left, g.right, B)], goal)
        if isinstance(g, Dual):
            contra = self.chain([k], Implies(Not(B), Not(A)))
            m = self.mono(contra, g.body)
            return self.chain([m, self.ax_dual(g.body, A), self.ax_dual(g.body, B)], goal)
        if isinstance(g, Loop):
            ax = self.ax_loop(g.body, B)
            pre = self.chain([k, ax], Implies(Or(A, Dia(g.body, Dia(g, B))), Dia(g, B)))
            return self.diaind(pre)
        raise TypeError(f"not a game: {g!r}")

    def cplus(self, g, psi, phi) -> int:
        """(psi & <g>phi) -> <g>(psi & phi), by induction on g."""
        goal = Implies(And(psi, Dia(g, phi)), Dia(g, And(psi, phi)))
        if isinstance(g, (Atomic, PGame)):
            return self.ax_c(g, psi, phi)
        if isinstance(g, Test):
            return self.chain([self.ax_test(g.cond, phi), self.ax_test(g.cond, And(psi, phi))],
                              goal)
        if isinstance(g, Choice):
            a, b = g.left, g.right
            return self.chain([self.ax_choice(a, b, phi), self.ax_choice(a, b, And(psi, phi)),
                               self.cplus(a, psi, phi), self.cplus(b, psi, phi)], goal)
        if isinstance(g, Seq):
            a, b = g.left, g.right
            i1 = self.cplus(a, psi, Dia(b, phi))
            i2 = self.cplus(b, psi, phi)
            m = self.mono(i2, a)
            return self.chain([i1, m, self.ax_comp(a, b, phi), self.ax_comp(a, b, And(psi, phi))],
                              goal)
        if isinstance(g, Dual):
            a = g.body
            i = self.cplus(a, psi, Not(And(psi, phi)))
            t = self.taut(Implies(And(psi, Not(And(psi, phi))), Not(phi)))
            m = self.mono(t, a)
            return self.chain([self.ax_dual(a, phi), self.ax_dual(a, And(psi, phi)), i, m], goal)
        if isinstance(g, Loop):
            a = g.body
            T = Dia(g, And(psi, phi))
            Q = Or(Not(psi), T)
            ax = self.ax_loop(a, And(psi, phi))
            i = self.cplus(a, psi, Q)
            m = self.mono(self.taut(Implies(And(psi, Q), T)), a)
            pre = self.chain([ax, i, m], Implies(Or(phi, Dia(a, Q)), Q))
            return self.chain([self.diaind(pre)], goal)
        raise TypeError(f"not a game: {g!r}")

    def mc(self, g, rho, phi, psi, k: int) -> int:
        """From line k: rho -> (phi -> psi) derive rho -> (<g>phi -> <g>psi)."""
        t = self.chain([k], Implies(And(rho, phi), psi))
        m = self.mono(t, g)
        c = self.cplus(g, rho, phi)
        return self.chain([m, c], Implies(rho, Implies(Dia(g, phi), Dia(g, psi))))

    def ic(self, g, rho, phi, psi, k: int) -> int:
        """From line k: rho -> ((phi | <g>psi) -> psi) derive rho -> (<g*>phi -> psi)."""
        beta = Seq(Test(rho), g)
        T = Dia(Loop(beta), And(rho, phi))
        Q = Or(Not(rho), T)
        # part A: rho & <g*>phi -> T
        ax = self.ax_loop(beta, And(rho, phi))
        c1 = self.ax_comp(Test(rho), g, T)
        t1 = self.ax_test(rho, Dia(g, T))
        cp = self.cplus(g, rho, Q)
        m = self.mono(self.taut(Implies(And(rho, Q), T)), g)
        pre = self.chain([ax, c1, t1, cp, m], Implies(Or(phi, Dia(g, Q)), Q))
        d1 = self.diaind(pre)
        # part B: T -> psi
        c2 = self.ax_comp(Test(rho), g, psi)
        t2 = self.ax_test(rho, Dia(g, psi))
        pre2 = self.chain([k, c2, t2], Implies(Or(And(rho, phi), Dia(beta, psi)), psi))
        d2 = self.diaind(pre2)
        return self.chain([d1, d2], Implies(rho, Implies(Dia(Loop(g), phi), psi)))

    def build(self, prune: bool = True) -> Proof:
        p = Proof(list(self.lines), self.hypothesis)
        return prune_proof(p) if prune else p


def prune_proof(p: Proof, keep: int | None = None) -> Proof:
    """Drop lines the final line does not depend on, renumbering premises."""
    if not p.lines:
        return p
    last = len(p.lines) - 1 if keep is None else keep
    need = set()
    stack = [last]
    while stack:
        i = stack.pop()
        if i in need:
            continue
        need.add(i)
        stack.extend(p.lines[i].just.premises)
    order = sorted(need)
    new = {old: k for k, old in enumerate(order)}
    lines = [Line(p.lines[i].formula,
                  replace(p.lines[i].just, premises=tuple(new[q] for q in p.lines[i].just.premises)))
             for i in order]
    return Proof(lines, p.hypothesis, p.goal)


# ---------------------------------------------------------------- derived schemas


def _individual_fv(f) -> frozenset:
    return individual(free_vars(f))


def derive_schema(name: str, alpha, phi, psi=None, rho=None, calculus: str = "gl") -> Proof:
    """Proofs of the extended universality axiom and the strong rules.

    Cplus: (psi & <alpha>phi) -> <alpha>(psi & phi).
    Mc:    hypothesis rho -> (phi -> psi), conclusion rho -> (<alpha>phi -> <alpha>psi).
    Ic:    hypothesis rho -> ((phi | <alpha>psi) -> psi), conclusion rho -> (<alpha*>phi -> psi).
    """
    key = name.lower()
    bv = bound_vars(alpha)
    if key == "cplus":
        clash = free_vars(psi) & bv
        if clash:
            raise SideConditionError(f"psi mentions variables {sorted(clash)} bound by the game")
        b = ProofBuilder(calculus=calculus)
        b.cplus(alpha, psi, phi)
        return b.build()
    if key not in ("mc", "ic"):
        raise UnknownSchema(f"unknown derived schema {name!r}")
    clash = free_vars(rho) & bv
    if clash:
        raise SideConditionError(f"rho mentions variables {sorted(clash)} bound by the game")
    if key == "mc":
        hyp = Implies(rho, Implies(phi, psi))
        b = ProofBuilder(hyp, calculus)
        b.mc(alpha, rho, phi, psi, b.hyp())
    else:
        hyp = Implies(rho, Implies(Or(phi, Dia(alpha, psi)), psi))
        b = ProofBuilder(hyp, calculus)
        b.ic(alpha, rho, phi, psi, b.hyp())
    return b.build()


def exists_rule_proof(x: str, psi, phi, calculus: str = "gl") -> Proof:
    """From psi -> phi with x not free in phi derive <x:=*>psi -> phi."""
    if x in free_vars(phi):
        raise SideConditionError(f"{x} is free in the conclusion")
    b = ProofBuilder(Implies(psi, phi), calculus)
    h = b.hyp()
    g = quant(x)
    c = b.ax_c(g, Not(phi), psi)
    t = b.chain([h], Implies(And(Not(phi), psi), FALSE))
    m = b.mon(t, g)
    n = b.axiom("nonempty", Not(Dia(g, FALSE)))
    b.chain([c, m, n], Implies(Dia(g, psi), phi))
    return b.build()


# ---------------------------------------------------------------- deduction theorem


def deduction_transform(p: Proof, calculus: str = "gl") -> Proof:
    """Turn a proof of psi from hypothesis rho into a proof of rho -> psi."""
    rho = p.hypothesis
    if rho is None:
        raise ValueError("proof has no hypothesis")
    fv = free_vars(rho)
    for i, ln in enumerate(p.lines):
        clash = fv & bound_vars(ln.formula)
        if clash:
            raise SideConditionError(f"line {i + 1} binds {sorted(clash)}, free in the hypothesis")
    b = ProofBuilder(calculus=calculus)
    dep = []
    for ln in p.lines:
        dep.append(ln.just.kind == "hyp" or any(dep[k] for k in ln.just.premises))
    copied: dict = {}
    weak: dict = {}

    def copy(i):
        if i not in copied:
            ln = p.lines[i]
            prem = tuple(copy(k) for k in ln.just.premises)
            copied[i] = b.add(ln.formula, replace(ln.just, premises=prem))
        return copied[i]

    def under(i):
        """Line of the new proof proving rho -> (line i)."""
        if i in weak:
            return weak[i]
        ln = p.lines[i]
        f, j = ln.formula, ln.just
        target = Implies(rho, f)
        if j.kind == "hyp":
            out = b.taut(target)
        elif not dep[i]:
            out = b.chain([copy(i)], target)
        elif j.kind == "mp":
            out = b.chain([under(j.premises[0]), under(j.premises[1])], target)
        elif j.kind == "mon":
            (pa, pb) = as_implies(p.lines[j.premises[0]].formula)
            out = b.mc(as_implies(f)[0].game, rho, pa, pb, under(j.premises[0]))
        elif j.kind == "diaind":
            ante, psi = as_implies(f)
            out = b.ic(ante.game.body, rho, ante.body, psi, under(j.premises[0]))
        else:
            raise UnsupportedStep(f"line {i + 1}: {j.kind} under a hypothesis is not supported")
        weak[i] = out
        return out

    last = under(len(p.lines) - 1)
    return prune_proof(Proof(b.lines, None), last)


def discharge(rho_proof: Proof, transformed: Proof) -> Proof:
    """Concatenate a proof of rho with a proof of rho -> psi and finish by MP."""
    lines = list(rho_proof.lines)
    off = len(lines)
    for ln in transformed.lines:
        lines.append(Line(ln.formula, replace(ln.just, premises=tuple(k + off for k in ln.just.premises))))
    a, bidx = off - 1, len(lines) - 1
    psi = as_implies(transformed.conclusion)[1]
    lines.append(Line(psi, Just("mp", premises=(a, bidx))))
    return Proof(lines, None)


# ---------------------------------------------------------------- mutations

MUTATIONS = ("swap", "rename", "flip")


def _variables(f) -> list:
    return sorted(v for v in individual(all_names(f)))


def _flip(f, k: int):
    """Replace the k-th conjunction (pre-order) by a disjunction."""
    count = [0]

    def go(n):
        if isinstance(n, And):
            if count[0] == k:
                count[0] += 1
                return Or(n.left, n.right)
            count[0] += 1
            return And(go(n.left), go(n.right))
        if isinstance(n, Not):
            return Not(go(n.arg))
        if isinstance(n, Dia):
            return Dia(n.game, go(n.body))
        if isinstance(n, Mu):
            return Mu(n.var, go(n.body))
        return n

    return go(f)


def mutation_sites(p: Proof) -> list:
    """Every (kind, line, detail) single-line corruption in the mutation set."""
    sites = []
    for i, ln in enumerate(p.lines):
        j = ln.just
        if j.kind == "mp" and j.premises[0] != j.premises[1]:
            sites.append(("swap", i, None))
        for v in _variables(ln.formula):
            sites.append(("rename", i, v))
        ands = sum(1 for n in _walk_formula(ln.formula) if isinstance(n, And))
        for k in range(ands):
            sites.append(("flip", i, k))
    return sites


def _walk_formula(f):
    stack = [f]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Not):
            stack.append(n.arg)
        elif isinstance(n, And):
            stack.extend((n.right, n.left))
        elif isinstance(n, (Dia, Mu)):
            stack.append(n.body)


def mutate(p: Proof, site) -> Proof:
    kind, i, detail = site
    lines = list(p.lines)
    ln = lines[i]
    if kind == "swap":
        a, b = ln.just.premises
        lines[i] = Line(ln.formula, replace(ln.just, premises=(b, a)))
    elif kind == "rename":
        new = fresh(detail, all_names(ln.formula))
        lines[i] = Line(rename_vars(ln.formula, {detail: new}), ln.just)
    elif kind == "flip":
        lines[i] = Line(_flip(ln.formula, detail), ln.just)
    else:
        raise ValueError(kind)
    return Proof(lines, p.hypothesis, p.goal)


def random_mutations(p: Proof, rng: random.Random, count: int) -> list:
    sites = mutation_sites(p)
    rng.shuffle(sites)
    return sites[:count]


# ---------------------------------------------------------------- JSON lines

_KIND_ALIASES = {"hypothesis": "hyp", "tautology": "taut", "eqaxiom": "eq", "equality": "eq",
                 "mon": "mon", "monotonicity": "mon", "mp": "mp", "diaind": "diaind",
                 "muind": "muind", "axiom": "axiom", "hyp": "hyp", "taut": "taut", "eq": "eq"}


def proof_to_jsonl(p: Proof) -> str:
    out = []
    if p.hypothesis is not None or p.goal is not None:
        head = {}
        if p.hypothesis is not None:
            head["hypothesis"] = show(p.hypothesis)
        if p.goal is not None:
            head["goal"] = show(p.goal)
        out.append(json.dumps(head))
    for i, ln in enumerate(p.lines, 1):
        j = ln.just
        just: dict = {"kind": j.kind}
        if j.kind == "axiom":
            just["name"] = j.name
            if j.bindings:
                just["bindings"] = {k: show(v) for k, v in j.bindings}
        if j.kind == "mp":
            just["from"] = [k + 1 for k in j.premises]
        elif j.premises:
            just["from"] = j.premises[0] + 1
        out.append(json.dumps({"id": i, "formula": show(ln.formula), "just": just}))
    return "\n".join(out) + "\n"


class ProofFormatError(ValueError):
    pass


def proof_from_jsonl(text: str, calculus: str = "gl") -> Proof:
    """Parse a proof file; premise ids are resolved to line positions.

    A reference to an id that has not appeared yet becomes a forward index so
    the checker reports it.
    """
    kind = "gl-formula" if _calculus(calculus) == "gl" else "mu-formula"
    rows = [json.loads(s) for s in text.splitlines() if s.strip()]
    hyp = goal = None
    body = []
    for r in rows:
        if "formula" not in r:
            if "hypothesis" in r:
                hyp = parse(r["hypothesis"], kind)
            if "goal" in r:
                goal = parse(r["goal"], kind)
            continue
        body.append(r)
    ids = {}
    for pos, r in enumerate(body):
        rid = r.get("id", pos + 1)
        if rid in ids:
            raise ProofFormatError(f"duplicate line id {rid}")
        ids[rid] = pos
    lines = []
    for pos, r in enumerate(body):
        j = r.get("just", {})
        k = _KIND_ALIASES.get(str(j.get("kind", "")).lower())
        if k is None:
            raise ProofFormatError(f"line {r.get('id')}: unknown justification {j.get('kind')!r}")
        src = j.get("from", [])
        src = src if isinstance(src, list) else [src]
        prem = []
        for s in src:
            if s not in ids:
                raise ProofFormatError(f"line {r.get('id')}: reference to unknown line {s}")
            prem.append(ids[s])
        bindings = tuple(sorted((name, parse(v, "term")) for name, v in
                                (j.get("bindings") or {}).items()))
        lines.append(Line(parse(r["formula"], kind),
                          Just(k, j.get("name", ""), tuple(prem), bindings)))
    return Proof(lines, hyp, goal)


__all__ = [
    "UnknownSchema", "SideConditionError", "UnsupportedStep", "Just", "Line", "Proof",
    "Verdict", "is_tautology", "prop_atoms", "check_eq_axiom", "canonical_name",
    "axiom_reason", "check_axiom_instance", "check_proof", "line_reason", "ProofBuilder",
    "prune_proof", "derive_schema", "exists_rule_proof", "deduction_transform", "discharge",
    "MUTATIONS", "mutation_sites", "mutate", "random_mutations", "proof_to_jsonl",
    "proof_from_jsonl", "ProofFormatError", "GL_AXIOMS", "MU_AXIOMS",
]
