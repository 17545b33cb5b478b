"""Decay margin log|u0(x,t)| + 1/(2t^2) of the truncated Tikhonov series.

    python3 scripts/tikhonov_margins.py [--K 40] [--x 1,1.5,2] [--t 0.05,0.06,0.1,0.2]

Negative margins mean |u0| < exp(-1/(2t^2)) at that point. Values are exact
rational sums of the phi-derivative polynomials, so cancellation is not an issue.
"""

from __future__ import annotations

import argparse
from fractions import Fraction

from flatseries.tikhonov import TruncatedU0, u0_eval


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K", type=int, default=40)
    ap.add_argument("--sigma", type=int, default=1)
    ap.add_argument("--x", default="1,3/2,2")
    ap.add_argument("--t", default="1/20,29/500,3/50,1/10,1/5")
    args = ap.parse_args()
    u = TruncatedU0(args.K, args.sigma)
    xs = [Fraction(v) for v in args.x.split(",")]
    ts = [Fraction(v) for v in args.t.split(",")]
    print("t," + ",".join(f"x={float(x):g}" for x in xs))
    for t in ts:
        vals = []
        for x in xs:
            v = u0_eval(u, x, t)
            vals.append("-inf" if v.sign == 0 else f"{v.logmag + 1 / (2 * float(t) ** 2):.6g}")
        print(f"{float(t):g}," + ",".join(vals))


if __name__ == "__main__":
    main()
