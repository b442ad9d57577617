"""Run the property experiments and write a JSON summary.

    python3 scripts/run_experiments.py                  # everything, full size
    python3 scripts/run_experiments.py --scale 0.1 translation_f sabotage
"""

import argparse
import inspect
import json
import sys

from gamemu import experiments as E

SIZED = {
    "axiom_soundness": 200, "substitution_lemma": 500, "fixpoint_substitution_law": 200,
    "coincidence": 500, "bound_effect": 500, "loop_minimality": 100, "translation_f": 100,
    "translation_g1": 100, "translation_g": 50, "lfp_roundtrip": 50, "flatten_roundtrip": 500,
    "proof_checks": 100, "ode_necessity": 100,
}
FIXED = ("sabotage", "ode_positive", "ode_rejection")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("names", nargs="*", help=f"subset of {sorted(SIZED) + list(FIXED)}")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write the JSON summary here")
    a = p.parse_args(argv)
    names = a.names or list(SIZED) + list(FIXED)
    rows = []
    for name in names:
        fn = getattr(E, name)
        kwargs = {}
        if "seed" in inspect.signature(fn).parameters and a.seed is not None:
            kwargs["seed"] = a.seed
        args = (max(1, int(SIZED[name] * a.scale)),) if name in SIZED else ()
        r = fn(*args, **kwargs)
        print(r.line(), flush=True)
        rows.append({"name": r.name, "passed": r.passed, "checked": r.checked,
                     "elapsed": round(r.elapsed, 3), "detail": r.detail,
                     "failures": [str(f) for f in r.failures[:10]]})
    if a.out:
        with open(a.out, "w") as fh:
            json.dump(rows, fh, indent=2, default=str)
    return 0 if all(r["passed"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
