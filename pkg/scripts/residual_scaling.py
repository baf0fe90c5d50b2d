"""Half-arc error against amplitude for orders 3, 5 and 7 on each reference attitude."""

import argparse

from common import CASES, aep
from sailorbits.lindstedt import build
from sailorbits.validation import half_arc_error, loglog_slope

EPS = (1e-3, 3e-3, 1e-2)

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--orders", type=int, nargs="+", default=[3, 5, 7])
    args = parser.parse_args()
    for name, (alpha, gamma) in CASES.items():
        point = aep(alpha, gamma)
        for order in args.orders:
            sol = build(point, order)
            errs = [half_arc_error(sol, e, e) for e in EPS]
            slope = loglog_slope(EPS, errs)
            print(f"{name} N={order}: " + " ".join(f"{e:.3e}" for e in errs) + f"  slope {slope:.2f} (gate {order - 1})")
