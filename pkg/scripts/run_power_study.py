"""Detection quality on Gaussian mean-shift streams across shift sizes and modes."""

import argparse
import json

import numpy as np

from mmdew import DetectorConfig, TestConfig
from mmdew.bench import aggregate, run_trials, synth_gaussian_shift


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--segment-length", type=int, default=512)
    ap.add_argument("--segments", type=int, default=2)
    ap.add_argument("--shifts", type=float, nargs="+", default=[0.5, 1.0, 2.0, 3.0])
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--beta", type=float, nargs="+", default=[1.0, 0.5, 0.25])
    ap.add_argument("--window-sizes", choices=("terms", "logical"), default="terms")
    args = ap.parse_args()

    for mode in ("sampled", "exact"):
        cfg = DetectorConfig(TestConfig(args.alpha, window_sizes=args.window_sizes), mode=mode)
        for shift in args.shifts:
            segs = [(np.full(2, shift * (k % 2)), args.segment_length) for k in range(args.segments)]
            res = run_trials(lambda s: synth_gaussian_shift(segs, s), cfg, range(args.seeds), args.beta)
            for beta in args.beta:
                agg = aggregate(res, beta)
                print(json.dumps({"mode": mode, "shift": shift, **agg}))


if __name__ == "__main__":
    main()
