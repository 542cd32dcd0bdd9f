"""Monte Carlo tower frequencies against exact tower masses.

    python scripts/sampler_check.py --count 100000 --depth 10 --seed 1
"""
import argparse
import time

from bratteli.diagram import DiagramSpec
from bratteli.measure import pf_eigendata, stationary_measure
from bratteli.sampler import SamplerConfig, compare, sample


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=100_000)
    ap.add_argument("--depth", type=int, default=10)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    F = [[2, 0], [1, 3]]
    spec = DiagramSpec.stationary(F)
    mu = stationary_measure(spec, pf_eigendata(F))
    t0 = time.perf_counter()
    stats = sample(SamplerConfig(spec, mu, args.depth, args.count, args.seed))
    elapsed = time.perf_counter() - t0
    rows = compare(stats, mu, spec)
    print(f"{args.count} paths to depth {args.depth} in {elapsed:.2f}s (seed {args.seed})")
    print(f"{'n':>3} {'v':>2} {'exact':>12} {'freq':>10} {'z':>7}")
    for d in rows:
        mark = "  <-- |z| > 4" if d.flagged else ""
        print(f"{d.level:>3} {d.vertex + 1:>2} {float(d.exact):>12.8f} {float(d.frequency):>10.5f} {d.z:>7.2f}{mark}")
    print(f"max |z| = {max(abs(d.z) for d in rows):.2f}; flagged {sum(d.flagged for d in rows)}")


if __name__ == "__main__":
    main()
