"""Print the sequences and verdicts of the two bundled stationary examples.

    python scripts/reproduce_examples.py --depth 40
"""
import argparse
from dataclasses import dataclass

from bratteli.diagram import DiagramSpec, VertexSelection, restrict
from bratteli.extension import analyze
from bratteli.measure import pf_eigendata, stationary_measure
from bratteli.report import decimal_str, fraction_str


@dataclass
class Case:
    name: str
    matrix: list
    selection: tuple = (1, 2)


CASES = [
    Case("infinite-extension", [[3, 0, 0], [1, 2, 0], [0, 1, 3]]),
    Case("finite-extension", [[2, 0, 0], [1, 2, 0], [0, 1, 3]]),
]


def run(case: Case, depth: int, show: int) -> None:
    spec = DiagramSpec.stationary(case.matrix)
    sel = VertexSelection.stationary(case.selection)
    sub = restrict(spec, sel)
    mu = stationary_measure(sub, pf_eigendata(sub.matrices[0]))
    rep = analyze(spec, sel, mu, depth)
    v = rep.verdict
    print(f"== {case.name}: F = {case.matrix}, W = {[w + 1 for w in case.selection]}")
    print(f"   verdict {v.kind.value} ({v.rule}); total = {fraction_str(v.total) if v.total is not None else 'inf'}")
    print(f"   {'n':>3} {'S_n':>14} {'u_n':>14} {'t3_n':>14} {'s4_n':>8}")
    for n in range(1, min(show, depth) + 1):
        i = n - 1
        print(f"   {n:>3} {decimal_str(rep.S[i], 10):>14} {decimal_str(rep.u5[i], 10):>14} "
              f"{decimal_str(rep.t3[i], 10):>14} {fraction_str(rep.s4[i]):>8}")
    print(f"   sum t3 = {decimal_str(sum(rep.t3), 12)}   sum s4 = {decimal_str(sum(rep.s4), 6)}")
    if v.total is not None:
        print(f"   gap to total at n = {depth}: {decimal_str(v.total - rep.S[-1], 4)}")
    rho = rep.ratios.rho[-1]
    print(f"   rho_{depth} in [{decimal_str(rho.lo, 4)}, {decimal_str(rho.hi, 4) if rho.hi is not None else 'inf'}]")
    print()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=40)
    ap.add_argument("--show", type=int, default=8, help="rows of the table to print")
    args = ap.parse_args()
    for case in CASES:
        run(case, args.depth, args.show)


if __name__ == "__main__":
    main()
