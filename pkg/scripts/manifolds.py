"""Stable and unstable arcs around an orbit with a3 = a4 = 0.05, written as CSV."""

import argparse
from pathlib import Path

from common import CASES, aep
from sailorbits.cli import MANIFOLD_FILES
from sailorbits.lindstedt import build
from sailorbits.trajectory import manifold_family

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--case", default="a80_g0", choices=list(CASES))
    parser.add_argument("--eps", type=float, default=1e-4)
    parser.add_argument("--order", type=int, default=7)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(exist_ok=True)
    sol = build(aep(*CASES[args.case]), args.order)
    for tag, arc in manifold_family(sol, 0.05, 0.05, args.eps).items():
        path = out / f"manifold_{args.case}_{MANIFOLD_FILES[tag]}.csv"
        arc.write_csv(path)
        print(f"{tag}: {len(arc)} samples -> {path}")
