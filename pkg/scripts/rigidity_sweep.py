"""Rigidity checks on the k-excluded sets used by the acceptance suite, plus
the singleton-active-set control.  Writes one JSON report per set.

    python3 scripts/rigidity_sweep.py --out results/
"""
import argparse
import json
import os
from fractions import Fraction

from rigidity.divisible import MDivisibleSet, gen_k_excluded
from rigidity.embed import build_distribution
from rigidity.verify import rigidity_check

SETS = {
    "kex_4_1_1": (lambda: gen_k_excluded(4, 1, 1, Fraction(1, 10)), "full"),
    "kex_5_1_4": (lambda: gen_k_excluded(5, 1, 4, Fraction(1, 10)), "sampled"),
    "singleton_3_2": (lambda: MDivisibleSet.make(3, 2, [[1, 3, 2], [Fraction(1, 4), 5, 6]],
                                                 [[0], [1]], {(0, 0): 2, (1, 1): 7}), "full"),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--count", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="*")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for name, (make, mode) in SETS.items():
        if args.only and name not in args.only:
            continue
        emb = build_distribution(make())
        rep = rigidity_check(emb, mode=mode, count=args.count, seed=args.seed)
        with open(os.path.join(args.out, f"{name}.json"), "w") as fh:
            json.dump(rep.to_dict(), fh, indent=1, sort_keys=True)
        print(f"{name:14s} mode={rep.mode:7s} ok={rep.ok!s:5s} c_S={float(rep.c_S):.4f} "
              f"max R/REV_ref={float(rep.max_ratio):.4f} "
              f"max(R - formula)={float(rep.maxima.get('formula', 0)):.4f} "
              f"({rep.runtime:.0f}s)")
        for row in rep.failures()[:5]:
            print(f"    FAIL {row.name}: x={float(row.x):.3f} "
                  f"ratio={float(row.revenue / row.ref_revenue):.4f} "
                  f"bound={float(row.bound):.4f} formula excess={float(row.formula_excess):.4f}")


if __name__ == "__main__":
    main()
