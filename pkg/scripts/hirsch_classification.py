"""Leaf types of the Hirsch foliation over rational base points, and sample pants trees."""

import argparse
from collections import Counter
from pathlib import Path

from horoflow.hirsch import AngleParam, classification_csv, classify_all, handle_crossings, pants_tree


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--qmax", type=int, default=64)
    ap.add_argument("--depth", type=int, default=8)
    ap.add_argument("--out", default="results/hirsch")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = classify_all(args.qmax)
    (out / "leaves.csv").write_text(classification_csv(rows))
    counts = Counter(d.kind.value for _, d in rows)
    print(f"{len(rows)} reduced angles with q <= {args.qmax}: {dict(counts)}")
    periods = Counter(d.period for _, d in rows if d.preperiod == 0)
    print("periods of periodic angles:", dict(sorted(periods.items())))

    for theta in ("0", "1/3", "1/7", "1/2", "1/6"):
        tree = pants_tree(AngleParam.of(theta), args.depth, 1.0)
        spine = tree.spine()
        handles = handle_crossings(tree, spine) if spine else []
        print(f"theta {theta:>4}: {len(tree)} pants, spine length {len(spine)}, handles at depths {handles}")
        (out / f"tree_{theta.replace('/', '_')}.txt").write_text(tree.edge_list())


if __name__ == "__main__":
    main()
