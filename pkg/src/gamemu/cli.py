"""gamemu command line: check, translate, prove, reach, equiv, selftest.

Exit codes: 0 true/accepted, 1 false/rejected/inconclusive, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .ode import (
    NoWitnessFound, OutsideBox, PassedToDepth, PolyParseError, RejectedAtLevel0,
    TrajectoryEscape, emit_g_formula, load_query_file, refine_reach, verdict_json,
)
from .proof import ProofFormatError, check_proof, proof_from_jsonl
from .semantics import (
    Evaluator, StructureExplosion, SupportError, default_support, enumerate_structures,
    load_structure,
)
from .syntax import ParseError, SignatureError, parse, show, signature_of
from .translate import (
    NameCollision, PreconditionError, Unsupported, flatten, g1, g_combined, lfp_to_mu,
    mu_to_lfp, parikh_f,
)

SCHEMA_PATH = Path(__file__).with_name("report.schema.json")


class UsageError(Exception):
    pass


INPUT_ERRORS = (UsageError, ParseError, SignatureError, SupportError, StructureExplosion,
                ProofFormatError, PolyParseError, OutsideBox, TrajectoryEscape, Unsupported,
                PreconditionError, NameCollision, OSError, ValueError, KeyError)


def _text(arg: str) -> str:
    if arg.startswith("@"):
        return Path(arg[1:]).read_text().strip()
    return arg


def _parse_any(text: str, kind: str, sig=None):
    kinds = {"gl": ("gl-formula",), "mu": ("mu-formula",), "lfp": ("lfp",),
             "auto": ("gl-formula", "mu-formula")}[kind]
    err = None
    for k in kinds:
        try:
            return parse(text, k, sig), k
        except ParseError as e:
            err = err or e
    raise err


# ---------------------------------------------------------------- verbs


def cmd_check(a) -> tuple[int, dict]:
    N = load_structure(a.struct)
    phi, kind = _parse_any(_text(a.formula), a.kind)
    support = default_support(phi)
    ev = Evaluator(N, support)
    den = ev.stateset(ev.formula(phi))
    rows = [dict(w) for w in den.assignments()]
    ok = den.is_all()
    return (0 if ok else 1), {
        "formula": show(phi), "kind": kind, "support": list(support),
        "satisfying": rows, "states": den.count, "valid": ok,
    }


_DIRS = {
    "f": ("gl", parikh_f),
    "g1": ("mu", g1),
    "g": ("mu", g_combined),
    "lfp2mu": ("lfp", lfp_to_mu),
}


def cmd_translate(a) -> tuple[int, dict]:
    text = _text(a.formula)
    if a.dir == "flat":
        phi, _ = _parse_any(text, "auto")
        r = flatten(phi)
        return 0, {"input": show(phi), "output": show(r.formula), "table": r.to_json()["table"]}
    if a.dir == "mu2lfp":
        phi, _ = _parse_any(text, "mu")
        vs = a.vars.split(",") if a.vars else default_support(phi)
        out = mu_to_lfp(phi, vs)
    else:
        kind, fn = _DIRS[a.dir]
        phi, _ = _parse_any(text, kind)
        out = fn(phi)
    return 0, {"input": show(phi), "output": show(out)}


def cmd_prove(a) -> tuple[int, dict]:
    text = Path(a.proof).read_text()
    p = proof_from_jsonl(text, a.calculus)
    goal = _parse_any(_text(a.goal), a.calculus)[0] if a.goal else p.goal
    v = check_proof(p, a.calculus, goal=goal)
    rep = {"verdict": str(v), "accepted": v.accepted, "lines": len(p)}
    if not v.accepted:
        rep.update(line=v.line, reason=v.reason)
    return (0 if v.accepted else 1), rep


def cmd_reach(a) -> tuple[int, dict]:
    F, q = load_query_file(a.query)
    if a.depth is not None:
        q = type(q)(**{**q.__dict__, "depth": a.depth})
    v = refine_reach(q, F)
    rep = verdict_json(v)
    if a.emit:
        rep["formulas"] = emit_g_formula(F, q.K)
    return (0 if isinstance(v, PassedToDepth) else 1), rep


def _equiv_chunk(job):
    a, b, structures = job
    sup = default_support(a, b)
    for N in structures:
        ev = Evaluator(N, sup)
        if ev.formula(a) != ev.formula(b):
            return N.to_json()
    return None


def workers_default() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity")
               else os.cpu_count() or 1)


def cmd_equiv(a) -> tuple[int, dict]:
    x, _ = _parse_any(_text(a.formula1), a.kind)
    y, _ = _parse_any(_text(a.formula2), a.kind)
    sig = signature_of(x, y)
    structures = list(enumerate_structures(sig, a.max_domain, a.max_generators))
    w = a.workers or workers_default()
    k = max(1, -(-len(structures) // w))
    jobs = [(x, y, structures[i:i + k]) for i in range(0, len(structures), k)]
    if w > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(w) as pool:
            found = list(pool.map(_equiv_chunk, jobs))
    else:
        found = [_equiv_chunk(j) for j in jobs]
    cex = next((c for c in found if c is not None), None)
    rep = {"left": show(x), "right": show(y), "structures": len(structures),
           "max_domain": a.max_domain, "max_generators": a.max_generators,
           "equivalent": cex is None}
    if cex is not None:
        rep["counterexample"] = cex
    return (0 if cex is None else 1), rep


def cmd_selftest(a) -> tuple[int, dict]:
    from . import experiments as E

    s = a.scale
    n = lambda k: max(1, int(k * s))
    w = a.workers or workers_default()
    runs = [
        lambda: E.axiom_soundness(n(200), workers=w),
        lambda: E.substitution_lemma(n(500), "gl"),
        lambda: E.substitution_lemma(n(500), "mu"),
        lambda: E.fixpoint_substitution_law(n(200)),
        lambda: E.coincidence(n(500)),
        lambda: E.bound_effect(n(500)),
        lambda: E.loop_minimality(n(100)),
        lambda: E.translation_f(n(100), workers=w),
        lambda: E.translation_g1(n(100)),
        lambda: E.sabotage(),
        lambda: E.translation_g(n(50), workers=w),
        lambda: E.lfp_roundtrip(n(50)),
        lambda: E.flatten_roundtrip(n(500)),
        lambda: E.proof_checks(n(100)),
        lambda: E.ode_necessity(n(100)),
        E.ode_positive,
        E.ode_rejection,
    ]
    results = []
    for run in runs:
        r = run()
        if not a.json:
            print(r.line(), flush=True)
        results.append({"name": r.name, "passed": r.passed, "checked": r.checked,
                        "failures": [str(f) for f in r.failures[:5]]})
    ok = all(r["passed"] for r in results)
    return (0 if ok else 1), {"suites": results, "passed": ok}


# ---------------------------------------------------------------- plumbing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gamemu", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--timing", action="store_true", help="include wall-clock time")
    sub = p.add_subparsers(dest="verb", required=True)

    c = sub.add_parser("check", parents=[common], help="denotation and validity in a structure")
    c.add_argument("struct")
    c.add_argument("formula", help="formula text or @file")
    c.add_argument("--kind", choices=("gl", "mu", "auto"), default="auto")
    c.set_defaults(fn=cmd_check)

    t = sub.add_parser("translate", parents=[common], help="syntactic translations")
    t.add_argument("formula")
    t.add_argument("--dir", required=True, choices=("f", "g1", "g", "mu2lfp", "lfp2mu", "flat"))
    t.add_argument("--vars", help="comma-separated variable list for mu2lfp")
    t.set_defaults(fn=cmd_translate)

    r = sub.add_parser("prove", parents=[common], help="check a JSONL proof")
    r.add_argument("proof")
    r.add_argument("--calculus", choices=("gl", "mu"), default="gl")
    r.add_argument("--goal", help="required conclusion (text or @file)")
    r.set_defaults(fn=cmd_prove)

    q = sub.add_parser("reach", parents=[common], help="ODE reachability refinement")
    q.add_argument("query")
    q.add_argument("--depth", type=int)
    q.add_argument("--emit", action="store_true", help="also print the G, mu and game formulas")
    q.set_defaults(fn=cmd_reach)

    e = sub.add_parser("equiv", parents=[common], help="brute-force semantic equality")
    e.add_argument("formula1")
    e.add_argument("formula2")
    e.add_argument("--kind", choices=("gl", "mu", "auto"), default="auto")
    e.add_argument("--max-domain", type=int, default=2)
    e.add_argument("--max-generators", type=int, default=1)
    e.add_argument("--workers", type=int, default=0, help="0 means available parallelism")
    e.set_defaults(fn=cmd_equiv)

    s = sub.add_parser("selftest", parents=[common], help="run the property suites")
    s.add_argument("--scale", type=float, default=1.0, help="multiplier on sample counts")
    s.add_argument("--workers", type=int, default=0)
    s.set_defaults(fn=cmd_selftest)
    return p


def _render(verb: str, rep: dict) -> str:
    if verb == "check":
        rows = ["{" + ", ".join(f"{k}={v}" for k, v in w.items()) + "}" for w in rep["satisfying"]]
        return "\n".join([f"denotation ({len(rows)}/{rep['states']} states):", *rows,
                          "valid" if rep["valid"] else "not valid"])
    if verb == "translate":
        out = rep["output"]
        if "table" in rep:
            out += "\n" + "\n".join(f"{k} = {v}" for k, v in rep["table"].items())
        return out
    if verb == "prove":
        return rep["verdict"]
    if verb == "reach":
        lines = [rep["text"]]
        if rep.get("lhs") is not None:
            lines.append(f"level 0: |y - x - tF(x)| = {rep['lhs']:.6g}, bound = {rep['bound']:.6g}")
        for k, v in rep.get("formulas", {}).items():
            lines.append(f"{k}: {v}")
        return "\n".join(lines)
    if verb == "equiv":
        head = "equivalent" if rep["equivalent"] else "not equivalent"
        tail = f" on {rep['structures']} structures (|D| <= {rep['max_domain']})"
        if "counterexample" in rep:
            tail += "\ncounterexample: " + json.dumps(rep["counterexample"], sort_keys=True)
        return head + tail
    if verb == "selftest":
        return "selftest " + ("passed" if rep["passed"] else "FAILED")
    return json.dumps(rep)


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    t0 = time.perf_counter()
    try:
        code, rep = a.fn(a)
    except INPUT_ERRORS as e:
        code, rep = 2, {"error": f"{type(e).__name__}: {e}"}
    report = {"verb": a.verb, "exit_code": code, "result": rep}
    if a.timing:
        report["elapsed"] = round(time.perf_counter() - t0, 6)
    if a.json:
        print(json.dumps(report, sort_keys=True, default=str), file=out)
    elif code == 2:
        print(rep["error"], file=sys.stderr)
    else:
        print(_render(a.verb, rep), file=out)
        if a.timing:
            print(f"elapsed {report['elapsed']:.3f}s", file=out)
    return code


def main() -> None:
    sys.exit(run())
