"""Lookahead vs optimal ex-post revenue (and top-2 restricted optimum) over all
uniform supports of size <= K on a small value grid.  Report only.

    python3 scripts/lookahead_ratios.py --players 3 --max-support 4
"""
import argparse
import itertools
import math

from rigidity.core import JointDistribution
from rigidity.mech import expost_revenue, lookahead
from rigidity.verify import brute_force_expost_opt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--players", type=int, default=3)
    ap.add_argument("--max-support", type=int, default=4)
    ap.add_argument("--grid", default="1,2,3")
    args = ap.parse_args()
    grid = [int(x) for x in args.grid.split(",")]
    inst = list(itertools.product(grid, repeat=args.players))
    worst1 = worst2 = None
    arg1 = None
    count = 0
    for k in range(1, args.max_support + 1):
        for sup in itertools.combinations(inst, k):
            d = JointDistribution.uniform(sup)
            opt = brute_force_expost_opt(d)[1]
            r1 = expost_revenue(lookahead(d), d) / opt
            r2 = brute_force_expost_opt(d, topk=2)[1] / opt
            count += 1
            if worst1 is None or r1 < worst1:
                worst1, arg1 = r1, sup
            worst2 = r2 if worst2 is None else min(worst2, r2)
    target = math.sqrt(math.e) / (math.sqrt(math.e) + 1)
    print(f"{count} supports")
    print(f"worst lookahead / opt = {worst1} ({float(worst1):.4f}) at {arg1}")
    print(f"worst top-2 / opt     = {worst2} ({float(worst2):.4f}); asymptotic constant {target:.4f}")


if __name__ == "__main__":
    main()
