#!/usr/bin/env python3
"""Multi-currency portfolio experiment.

Runs the six-swap EUR/USD/GBP portfolio (and optionally the stressed
variant) with the generic approximation and the Monte Carlo benchmark,
then a small set of standard sensitivities. Artifacts land in --out.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from wwrfva.cli import main as cli_main  # noqa: E402

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "..", "fixtures")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/portfolio")
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--stressed", action="store_true",
                    help="use the high-volatility parameter variant")
    ap.add_argument("--sensi", action="store_true",
                    help="also run parallel IR/credit sensitivities")
    args = ap.parse_args()
    cfg = os.path.join(FIXTURES, "portfolio_stressed.cfg" if args.stressed
                       else "portfolio.cfg")
    rc = cli_main(["fva", "--config", cfg, "--paths", str(args.paths),
                   "--benchmark", "--out", args.out])
    if rc or not args.sensi:
        return rc
    bumps = []
    for ccy in ("EUR", "USD", "GBP"):
        bumps += ["--bump", f"ir_parallel:{ccy}"]
    for ent in ("I", "C"):
        bumps += ["--bump", f"credit_parallel:{ent}"]
    return cli_main(["sensi", "--config", cfg, "--paths", str(args.paths),
                     "--out", args.out, *bumps])


if __name__ == "__main__":
    sys.exit(main())
