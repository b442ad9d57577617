"""Acceptance criteria 1-14, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
`python3 tests/test_acceptance.py`.
"""

import time

import pytest

from gamemu import experiments as E

LINES: list = []


def report(num, title, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} [{num:>2}] {title}" + (f": {detail}" if detail else "")
    LINES.append(line)
    print(line)
    return ok


def _summary(results, extra=""):
    parts = [f"{r.name} {r.checked} checks, {len(r.failures)} failing" for r in results]
    return "; ".join(parts) + (f"; {extra}" if extra else "")


def test_01_axiom_soundness():
    r = E.axiom_soundness(200, max_domain=2, max_generators=2)
    ok = r.passed and r.checked == 200 * 9 and r.elapsed < 300
    assert report(1, "axiom soundness sweep", ok,
                  f"{r.checked} instances x {r.detail['structures']} structures, "
                  f"{len(r.failures)} failing, {r.elapsed:.0f}s (< 300s)"), r.failures[:3]


def test_02_substitution_lemmas():
    rs = [E.substitution_lemma(500, "gl"), E.substitution_lemma(500, "mu"),
          E.fixpoint_substitution_law(200)]
    assert report(2, "substitution lemmas", all(r.passed for r in rs), _summary(rs)), \
        [r.failures[:3] for r in rs]


def test_03_coincidence_and_bound_effect():
    rs = [E.coincidence(500), E.bound_effect(500)]
    assert report(3, "coincidence and bound effect", all(r.passed for r in rs), _summary(rs)), \
        [r.failures[:3] for r in rs]


def test_04_least_fixpoint_minimality():
    r = E.loop_minimality(100)
    assert report(4, "loop denotation is the least pre-fixpoint", r.passed, _summary([r])), \
        r.failures[:3]


def test_05_translation_f():
    r = E.translation_f(100, game_depth=4)
    ok = r.passed and r.detail["max_fixvars"] <= 2
    assert report(5, "translation F soundness", ok,
                  _summary([r], f"max fixpoint variables {r.detail['max_fixvars']}")), r.failures[:3]


def test_06_translation_g1():
    r = E.translation_g1(100)
    assert report(6, "translation G1 on singletons", r.passed, _summary([r])), r.failures[:3]


def test_07_sabotage_gadget():
    r = E.sabotage()
    assert report(7, "sabotage gadget cases on |D| = 2", r.passed,
                  _summary([r], f"{r.detail['structures']} structures")), r.failures[:3]


def test_08_g_combined():
    r = E.translation_g(50)
    assert report(8, "combined translation on the game-shaped fragment", r.passed,
                  _summary([r])), r.failures[:3]


def test_09_lfp_roundtrip():
    r = E.lfp_roundtrip(50)
    assert report(9, "LFP round trip", r.passed, _summary([r])), r.failures[:3]


def test_10_proof_checker():
    r = E.proof_checks(100)
    ok = r.passed and r.detail["rejected"] == r.detail["mutants"] and r.elapsed < 120
    assert report(10, "proof checker", ok,
                  f"{r.detail['rejected']}/{r.detail['mutants']} mutants rejected, "
                  f"{len(r.failures)} failing, {r.elapsed:.0f}s (< 120s)"), r.failures[:3]


def test_11_taylor_necessity():
    r = E.ode_necessity(100, eps=1e-7)
    assert report(11, "Taylor necessity on trajectories", r.passed, _summary([r])), r.failures[:3]


def test_12_ode_positive():
    t0 = time.perf_counter()
    r = E.ode_positive()
    elapsed = time.perf_counter() - t0
    ok = r.passed and elapsed < 10
    assert report(12, "ODE positive cases", ok,
                  f"harmonic {r.detail['harmonic']}, exponential {r.detail['exponential']}, "
                  f"{elapsed:.2f}s (< 10s)"), r.failures


def test_13_ode_rejection():
    r = E.ode_rejection()
    d = r.detail
    assert report(13, "ODE certified rejection", r.passed,
                  f"{d['verdict']}, lhs {d['lhs']:.4f} >= {d['lhs_lower']:.6f} > "
                  f"{d['bound_upper']:.6f} >= bound {d['bound']:.4f}"), r.failures


@pytest.mark.xfail(strict=True, reason="declared not reproducible at desk scale")
def test_14_out_of_scope():
    report(14, "general mu-to-game translation, relative completeness, proof-theoretic "
               "round trip", False, "not reproducible at desk scale; criteria 5-9 cover the "
                                    "semantic side")
    assert False


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            try:
                fn()
            except AssertionError:
                pass
