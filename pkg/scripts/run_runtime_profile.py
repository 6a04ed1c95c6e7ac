"""Per-insert time against stream length, with log^2 and linear least-squares fits."""

import argparse
import json

from mmdew import DetectorConfig
from mmdew.bench import runtime_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-max", type=int, default=1_000_000)
    ap.add_argument("--mode", choices=("exact", "sampled"), default="sampled")
    ap.add_argument("--gamma", type=float, default=0.2)
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--reducer", choices=("min", "median"), default="min")
    args = ap.parse_args()

    prof = runtime_profile(DetectorConfig(gamma=args.gamma, mode=args.mode), args.t_max, dim=args.dim,
                           reducer=args.reducer)
    for t, s in zip(prof.t, prof.seconds):
        print(json.dumps({"t": int(t), "us_per_insert": round(float(s) * 1e6, 2)}))
    print(json.dumps({
        "ratio_last_first": float(prof.seconds[-1] / prof.seconds[0]),
        "mse_log2_squared": prof.mse_log2,
        "mse_linear": prof.mse_linear,
        "rejections": prof.events,
    }))


if __name__ == "__main__":
    main()
