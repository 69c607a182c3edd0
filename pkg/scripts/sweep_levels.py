"""Tabulate local-minimum and mountain-pass levels against the coupling mu.

    python scripts/sweep_levels.py [--a 1.0] [--p 4.0] [--q 2.2] [--steps 6]

Prints one CSV row per mu on a halving ladder, ending at mu = 0, and the
continuation ratios of consecutive profile and multiplier gaps.
"""

import argparse
import csv
import sys

from norm_soliton import NormSolitonError, ProblemParams, classify_regime, ground_state_local_min, mountain_pass
from norm_soliton.solvers import continuation_mu_to_zero


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--p", type=float, default=4.0)
    ap.add_argument("--q", type=float, default=2.2)
    ap.add_argument("--steps", type=int, default=6)
    args = ap.parse_args(argv)
    prm = ProblemParams(args.a, args.mu, args.p, args.q)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["mu", "regime", "m_a", "c_a", "lambda_mountain"])
    for k in range(args.steps):
        cur = prm.replace(mu=prm.mu / 2**k)
        try:
            m = ground_state_local_min(cur).level
        except NormSolitonError as ex:
            m = type(ex).__name__
        mp = mountain_pass(cur, certify=False)
        out.writerow([cur.mu, classify_regime(cur).tag, m, mp.level, mp.lam])
    res = continuation_mu_to_zero(prm, args.steps)
    print(f"# profile gap ratios: {[round(r, 6) for r in res.ratios]}")
    print(f"# multiplier gap ratios: {[round(r, 6) for r in res.lambda_ratios]}")
    print(f"# mu = 0 level: {res.limit.level!r}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
