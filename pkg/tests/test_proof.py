import itertools
import random
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from gamemu import gen
from gamemu.experiments import shipped_proofs
from gamemu.gen import SIG_SMALL
from gamemu.proof import (
    Just, Line, Proof, ProofBuilder, ProofFormatError, SideConditionError, UnknownSchema,
    check_axiom_instance, check_eq_axiom, check_proof, deduction_transform, derive_schema,
    discharge, exists_rule_proof, is_tautology, mutate, mutation_sites, proof_from_jsonl,
    proof_to_jsonl, prop_atoms,
)
from gamemu.semantics import Evaluator, default_support, enumerate_structures
from gamemu.syntax import (
    And, Atomic, Dia, Implies, Not, Or, Var, bound_vars, free_vars, parse, signature_of,
)

seeds = st.integers(0, 2**32 - 1)
P = parse
PROOFS = Path(__file__).resolve().parent.parent / "proofs"


def G(s):
    return parse(s, "game")


def M(s):
    return parse(s, "mu-formula")


# -- schemas


def test_test_axiom_instance():
    assert check_axiom_instance("test", P("<?R(x)> y = x <-> R(x) & y = x"))


def test_universality_side_condition():
    assert check_axiom_instance("C", P("R(y) & <a(x:z)> R(x) -> <a(x:z)> (R(y) & R(x))"))
    assert not check_axiom_instance("C", P("R(x) & <a(x:z)> R(x) -> <a(x:z)> (R(x) & R(x))"))


def test_fixpoint_axiom_direction():
    mu = M("mu X . (R(x) | <a(x:x)> X)")
    unfold = M("R(x) | <a(x:x)> mu X . (R(x) | <a(x:x)> X)")
    assert check_axiom_instance("mu", Implies(unfold, mu), "mu")
    assert not check_axiom_instance("mu", Implies(mu, unfold), "mu")


def test_verbatim_schema_titles():
    assert check_axiom_instance("test axiom", P("<?R(x)> y = x <-> R(x) & y = x"))


def test_unknown_schema():
    with pytest.raises(UnknownSchema):
        check_axiom_instance("frobnicate", P("true"))


def test_exists_axiom_recomputes_substitution():
    assert check_axiom_instance("exists", P("R(y) -> <x := *> R(x)"))
    assert not check_axiom_instance("exists", P("R(y) -> <x := *> R(z)"))


# -- tautologies and equality


def _brute_taut(f):
    atoms = prop_atoms(f)

    def ev(n, val):
        from gamemu.syntax import Verum
        if isinstance(n, Verum):
            return True
        if n in val:
            return val[n]
        if isinstance(n, Not):
            return not ev(n.arg, val)
        return ev(n.left, val) and ev(n.right, val)

    return all(ev(f, dict(zip(atoms, bits)))
               for bits in itertools.product((False, True), repeat=len(atoms)))


@given(seeds)
def test_tautology_checker_against_truth_tables(seed):
    rng = random.Random(seed)
    atoms = [P("R(x)"), P("R(y)"), P("x = y"), P("<a(x:y)> R(x)")]

    def rnd(d):
        if d == 0 or rng.random() < 0.25:
            return rng.choice(atoms)
        return rng.choice([lambda: Not(rnd(d - 1)), lambda: And(rnd(d - 1), rnd(d - 1)),
                           lambda: Or(rnd(d - 1), rnd(d - 1)),
                           lambda: Implies(rnd(d - 1), rnd(d - 1))])()

    f = rnd(4)
    assert is_tautology(f) == _brute_taut(f)


def test_many_atom_tautology():
    atoms = [P(f"x{i} = y") for i in range(20)]
    f = atoms[0]
    for a in atoms[1:]:
        f = Or(f, a)
    assert is_tautology(Or(f, Not(atoms[-1])))
    assert not is_tautology(f)


def test_eq_axioms():
    assert check_eq_axiom(P("x = x"))
    assert check_eq_axiom(P("x = y -> y = x"))
    assert check_eq_axiom(P("x = y & y = z -> x = z"))
    assert check_eq_axiom(P("x = y -> f(x) = f(y)"))
    assert check_eq_axiom(P("x = y & R(x) -> R(y)"))
    assert not check_eq_axiom(P("x = y -> R(y)"))


# -- checking


def test_exists_rule_derivation():
    p = exists_rule_proof("x", P("R(x) & x = y"), P("R(y)"))
    assert check_proof(p)
    assert p.conclusion == P("<x := *> (R(x) & x = y) -> R(y)")


def test_violated_side_condition_is_rejected_at_its_line():
    p = exists_rule_proof("x", P("R(x) & x = y"), P("R(y)"))
    k = next(i for i, ln in enumerate(p.lines) if ln.just.name == "C")
    bad = P("R(x) & <x := *> R(x) -> <x := *> (R(x) & R(x))")
    lines = list(p.lines)
    lines[k] = Line(bad, lines[k].just)
    v = check_proof(Proof(lines, p.hypothesis))
    assert not v and v.line == k + 1 and "side condition" in v.reason


def test_forward_reference():
    lines = [Line(P("R(x) -> R(x)"), Just("mp", premises=(1, 2))),
             Line(P("R(x)"), Just("taut")), Line(P("R(x) -> (R(x) -> R(x))"), Just("taut"))]
    v = check_proof(Proof(lines))
    assert not v and v.line == 1 and v.reason == "forward reference"


def test_goal_mismatch():
    p = exists_rule_proof("x", P("R(x) & x = y"), P("R(y)"))
    assert not check_proof(p, goal=P("R(y)"))


def test_calculus_restrictions():
    b = ProofBuilder()
    b.taut(P("<a(x:x)*> R(x) | !<a(x:x)*> R(x)"))
    assert check_proof(b.build(), "gl")
    assert not check_proof(b.build(), "mu")


# -- derived schemas


def test_derive_cplus_examples():
    assert check_proof(derive_schema("Cplus", G("a(x:y) ++ b(z:)"), P("R(x)"), P("R(w)")))
    loop = derive_schema("Cplus", G("(a(x:y); ?R(x))*"), P("R(x)"), P("R(w)"))
    assert check_proof(loop)
    assert any(ln.just.kind == "diaind" for ln in loop.lines)


def test_mc_side_condition():
    with pytest.raises(SideConditionError):
        derive_schema("Mc", G("a(x:y)"), P("R(x)"), P("R(y)"), P("R(x)"))


def _disjoint_formula(rng, avoid):
    vs = [v for v in ("x", "y", "w") if v not in avoid] or ["w"]
    return gen.rand_gl(rng, SIG_SMALL, vs, 2, 1, 0)


@given(seeds, st.sampled_from(["Cplus", "Mc", "Ic"]))
def test_derived_schemas_check(seed, name):
    rng = random.Random(seed)
    alpha = gen.rand_game(rng, SIG_SMALL, ["x", "y"], 2, 1, 0)
    bv = bound_vars(alpha)
    phi = gen.rand_gl(rng, SIG_SMALL, ["x", "y"], 2, 1, 0)
    other = _disjoint_formula(rng, bv)
    psi = gen.rand_gl(rng, SIG_SMALL, ["x", "y"], 2, 1, 0)
    if name == "Cplus":
        p = derive_schema(name, alpha, phi, other)
    else:
        p = derive_schema(name, alpha, phi, psi, other)
    assert check_proof(p), p.render()


# -- deduction theorem


def test_deduction_of_hypothesis_alone():
    b = ProofBuilder(P("R(x)"))
    b.hyp()
    out = deduction_transform(b.build())
    assert check_proof(out) and out.conclusion == P("R(x) -> R(x)")


def test_deduction_through_monotonicity():
    rho = P("R(x)")
    b = ProofBuilder(rho)
    h = b.hyp()
    t = b.chain([h], Implies(P("R(y)"), rho))
    b.mon(t, Atomic("a", ("y",), (Var("x"),)))
    out = deduction_transform(b.build())
    assert check_proof(out)
    assert out.conclusion == Implies(rho, P("<a(y:x)> R(y) -> <a(y:x)> R(x)"))


def test_deduction_rejects_bound_clash():
    b = ProofBuilder(P("R(y)"))
    h = b.hyp()
    t = b.chain([h], Implies(P("R(x)"), P("R(y)")))
    b.mon(t, Atomic("a", ("y",), (Var("x"),)))
    with pytest.raises(SideConditionError) as e:
        deduction_transform(b.build())
    assert "y" in str(e.value)


@given(seeds)
def test_deduction_on_random_hypothesis_proofs(seed):
    p = gen.rand_hyp_proof(random.Random(seed), SIG_SMALL, steps=5)
    assert check_proof(p)
    out = deduction_transform(p)
    assert check_proof(out)
    assert out.conclusion == Implies(p.hypothesis, p.conclusion)


def test_discharge_recovers_conclusion():
    rho = P("R(x) | !R(x)")
    b = ProofBuilder(rho)
    h = b.hyp()
    t = b.chain([h], Implies(P("R(y)"), rho))
    m = b.mon(t, Atomic("a", ("y",), (Var("x"),)))
    p = b.build()
    rb = ProofBuilder()
    rb.taut(rho)
    whole = discharge(rb.build(), deduction_transform(p))
    assert check_proof(whole) and whole.conclusion == p.conclusion


# -- mutations


def test_all_mutations_of_shipped_derivation_rejected():
    p = exists_rule_proof("x", P("R(x) & x = y"), P("R(y)"))
    sites = mutation_sites(p)
    assert {s[0] for s in sites} == {"swap", "rename", "flip"}
    for site in sites:
        assert not check_proof(mutate(p, site), goal=p.conclusion), site


# -- files


def test_jsonl_roundtrip():
    p = exists_rule_proof("x", P("R(x) & x = y"), P("R(y)"))
    q = proof_from_jsonl(proof_to_jsonl(p))
    assert q.lines == p.lines and q.hypothesis == p.hypothesis


def test_jsonl_unknown_reference():
    text = '{"id": 1, "formula": "R(x)", "just": {"kind": "mp", "from": [7, 8]}}\n'
    with pytest.raises(ProofFormatError):
        proof_from_jsonl(text)


def test_shipped_files_are_current_and_accepted():
    for name, (p, calc) in shipped_proofs().items():
        path = PROOFS / f"{name}.{calc}.jsonl"
        assert path.read_text() == proof_to_jsonl(p)
        assert check_proof(proof_from_jsonl(path.read_text(), calc), calc)


def test_accepted_lines_are_valid():
    for name, (p, calc) in shipped_proofs().items():
        if p.hypothesis is not None:
            continue
        sig = signature_of(*[ln.formula for ln in p.lines])
        structures = list(enumerate_structures(sig, 2, 1))
        for ln in p.lines:
            sup = default_support(ln.formula)
            for N in structures:
                ev = Evaluator(N, sup)
                assert ev.formula(ln.formula) == ev.full, (name, ln)
