"""Check the entry-mass identity and monotonicity on seeded random diagrams.

    python scripts/random_corpus.py --cases 500
"""
import argparse
import random
import sys
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from oracles import random_case  # noqa: E402

from bratteli.extension import analyze  # noqa: E402


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    kinds = Counter()
    bad = 0
    for i in range(args.cases):
        spec, sel, mu, D = random_case(random.Random(args.seed + i))
        rep = analyze(spec, sel, mu, D - 1, window=2, extension_depth=D)
        kinds[rep.verdict.kind.value] += 1
        if rep.u5 != rep.d or any(a > b for a, b in zip(rep.S, rep.S[1:])):
            bad += 1
            print(f"case {args.seed + i}: identity or monotonicity failed")
    print(f"{args.cases} cases, {bad} failures; verdicts: {dict(sorted(kinds.items()))}")
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
