"""Run the twelve acceptance checks and print one line per criterion.

    python3 scripts/run_acceptance.py [--seed 7] [--out acceptance_out] [--no-determinism]

Exits 0 when every criterion passes and 1 otherwise.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from flatseries.acceptance import run_all


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=Path, default=Path("acceptance_out"))
    ap.add_argument("--no-determinism", action="store_true", help="skip the byte-for-byte rerun")
    args = ap.parse_args()
    checks = run_all(args.out, args.seed, determinism=not args.no_determinism)
    for c in checks:
        print(f"{c.line()}  ({c.seconds:.1f}s)")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} criteria passed; artifacts in {args.out}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
