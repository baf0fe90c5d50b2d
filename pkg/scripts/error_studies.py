"""Error maps over (a3, a4) for the reference attitudes, written to results/.

The default is the full 100x100 mesh; use --n for a coarser one. Each grid
is followed by its pattern report.
"""

import argparse
import time
from pathlib import Path

from common import CASES, aep
from sailorbits.lindstedt import SeriesSolution, build
from sailorbits.validation import MeshSpec, default_jobs, error_study, pattern_report

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--order", type=int, default=7)
    parser.add_argument("--jobs", type=int, default=default_jobs())
    parser.add_argument("--cases", nargs="+", default=list(CASES))
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(exist_ok=True)
    for name in args.cases:
        series_file = out / f"series_{name}_N{args.order}.json"
        if series_file.exists():
            sol = SeriesSolution.load(series_file)
        else:
            sol = build(aep(*CASES[name]), args.order)
            sol.save(series_file)
        start = time.perf_counter()
        grid = error_study(sol, MeshSpec(args.n, args.n), jobs=args.jobs)
        elapsed = time.perf_counter() - start
        stem = out / f"grid_{name}_N{args.order}_{args.n}x{args.n}"
        grid.write(stem.with_suffix(".csv"), stem.with_suffix(".json"))
        print(f"{name}: {elapsed:.0f} s with {args.jobs} jobs -> {stem}.csv")
        print(f"  {pattern_report(grid)}")
