"""False-alarm rate on i.i.d. Gaussian streams (no change) at several levels."""

import argparse
import json
import math

from mmdew.bench import level_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--length", type=int, default=1024)
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.01, 0.05, 0.1])
    ap.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    ap.add_argument("--dim", type=int, default=2)
    args = ap.parse_args()
    for alpha in args.alpha:
        rate = level_study(args.trials, args.length, alpha, args.mode, args.dim)
        bound = alpha + 3 * math.sqrt(alpha * (1 - alpha) / args.trials)
        print(json.dumps({"alpha": alpha, "mode": args.mode, "false_alarm_rate": rate, "bound": bound}))


if __name__ == "__main__":
    main()
