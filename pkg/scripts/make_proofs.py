"""Regenerate the JSONL derivations under proofs/ from the proof builders."""

from pathlib import Path

from gamemu.experiments import shipped_proofs
from gamemu.proof import check_proof, proof_to_jsonl

OUT = Path(__file__).resolve().parent.parent / "proofs"


def main():
    OUT.mkdir(exist_ok=True)
    for name, (p, calc) in shipped_proofs().items():
        v = check_proof(p, calc)
        path = OUT / f"{name}.{calc}.jsonl"
        path.write_text(proof_to_jsonl(p))
        print(f"{path.name}: {len(p)} lines, {v}")


if __name__ == "__main__":
    main()
