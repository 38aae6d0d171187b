"""Corrupted-reference revenue curves: revenue / REV_ref against agreement x,
next to min{c_S + x, 1}.  Prints a table and optionally writes CSV.

    python3 scripts/corruption_curves.py --csv results/curves.csv
"""
import argparse
import csv
from fractions import Fraction

from rigidity.divisible import gen_geometric, gen_k_excluded, gen_random_high_values
from rigidity.embed import build_distribution
from rigidity.verify import corruption_curve

FRACTIONS = [Fraction(k, 8) for k in range(9)]


def sets(seed):
    yield "kex_4_1_1", gen_k_excluded(4, 1, 1, Fraction(1, 10))
    yield "kex_5_1_4", gen_k_excluded(5, 1, 4, Fraction(1, 10))
    yield "rhv_5_3", gen_random_high_values(5, 3, seed)
    yield "geo_4_2", gen_geometric(4, 2, seed)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv")
    args = ap.parse_args()
    rows = []
    for name, s in sets(args.seed):
        emb = build_distribution(s)
        omega = emb.constants.omega
        print(f"{name}  c_S={float(emb.params.c_S):.4f}  |S|={s.size}")
        for f, x, ratio, bound in corruption_curve(emb, FRACTIONS, args.seed):
            flag = "" if ratio <= bound + omega else "  <-- above bound + omega"
            print(f"   f={float(f):.3f}  x={float(x):.3f}  ratio={float(ratio):.4f}  "
                  f"bound={float(bound):.4f}{flag}")
            rows.append([name, str(f), str(x), float(ratio), float(bound)])
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["set", "fraction", "x", "revenue_ratio", "bound"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
