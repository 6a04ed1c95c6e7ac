"""Command-line front end: ``mmdew detect | bench | profile``.

``detect`` reads one observation per line (comma- or whitespace-separated
numbers) from a file or stdin and writes one JSON object per detected change
as soon as it is found::

    {"t": 1042, "offset": 17, "mmd": 0.61, "threshold": 0.52}
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import bench
from .detector import Detector, DetectorConfig
from .kernel import DimensionError
from .sigtest import TestConfig


class InputError(Exception):
    pass


def parse_row(line: str, lineno: int, fmt: str) -> list[float] | None:
    text = line.strip()
    if not text:
        return None
    fields = text.split(",") if fmt == "csv" else text.split()
    out = []
    for col, f in enumerate(fields, start=1):
        try:
            v = float(f)
        except ValueError:
            raise InputError(f"line {lineno}, column {col}: not a number: {f.strip()!r}") from None
        if not np.isfinite(v):
            raise InputError(f"line {lineno}, column {col}: non-finite value {f.strip()!r}")
        out.append(v)
    return out


def _gamma(text: str) -> float | None:
    if text == "auto":
        return None
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("gamma must be positive or 'auto'")
    return v


def _config(args) -> DetectorConfig:
    return DetectorConfig(
        test=TestConfig(alpha=args.alpha, correction=args.correction, window_sizes=args.window_sizes),
        gamma=args.gamma,
        mode=args.mode,
        warmup_size=args.warmup,
        seed=args.seed,
    )


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.01, help="test level (default 0.01)")
    p.add_argument("--gamma", type=_gamma, default=None, metavar="auto|VALUE",
                   help="Gaussian kernel bandwidth; 'auto' uses the median heuristic on the warmup (default)")
    p.add_argument("--warmup", type=int, default=100, help="warmup observations for --gamma auto (default 100)")
    p.add_argument("--mode", choices=("exact", "sampled"), default="sampled")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--correction", choices=("bonferroni_splits", "bonferroni_stream", "none"),
                   default="bonferroni_splits")
    p.add_argument("--window-sizes", choices=("terms", "logical"), default="terms",
                   help="window sizes entering the threshold (default: from term counts)")


def cmd_detect(args, out) -> int:
    if args.restore:
        with open(args.restore) as fh:
            det = Detector.from_dict(json.load(fh))
    else:
        det = Detector(_config(args))
    src = open(args.input) if args.input not in (None, "-") else sys.stdin

    def emit(events):
        for ev in events:
            out.write(json.dumps(ev.to_json_dict()) + "\n")
            out.flush()

    try:
        dim = det.dim
        for lineno, line in enumerate(src, start=1):
            row = parse_row(line, lineno, args.format)
            if row is None:
                continue
            if dim is None:
                dim = len(row)
            elif len(row) != dim:
                raise InputError(f"line {lineno}: dimension changed from {dim} to {len(row)}")
            emit(det.process(row))
        emit(det.finish())
    except (InputError, DimensionError) as exc:
        print(f"mmdew detect: {exc}", file=sys.stderr)
        return 2
    finally:
        if src is not sys.stdin:
            src.close()
    if args.snapshot:
        with open(args.snapshot, "w") as fh:
            json.dump(det.to_dict(), fh)
    return 0


def cmd_bench(args, out) -> int:
    config = _config(args)
    seeds = range(args.seed, args.seed + args.trials)
    if args.input:
        if not args.label_col:
            print("mmdew bench: --label-col is required with --input", file=sys.stderr)
            return 2
        delim = "," if args.format == "csv" else "\t"
        try:
            X, y = bench.load_labeled_csv(args.input, args.label_col, delim)
        except (KeyError, ValueError) as exc:
            print(f"mmdew bench: {exc.args[0] if exc.args else exc}", file=sys.stderr)
            return 2

        def make(seed):
            return bench.make_class_ordered(X, y, seed, name=args.input)
    else:
        shift = np.full(args.dim, args.shift)
        segs = [(shift * (k % 2), args.segment_length) for k in range(args.segments)]

        def make(seed):
            return bench.synth_gaussian_shift(segs, seed)

    results = bench.run_trials(make, config, seeds, args.beta, args.detector)
    for r in results:
        for rec in r.records():
            out.write(json.dumps(rec) + "\n")
    for beta in args.beta:
        out.write(json.dumps({"aggregate": bench.aggregate(results, beta)}) + "\n")
    out.flush()
    return 0


def cmd_profile(args, out) -> int:
    if args.gamma is None:
        print("mmdew profile: needs a fixed --gamma", file=sys.stderr)
        return 2
    prof = bench.runtime_profile(_config(args), args.t_max, window=args.window, dim=args.dim, seed=args.seed)
    for t, s in zip(prof.t, prof.seconds):
        out.write(json.dumps({"t": int(t), "seconds_per_insert": float(s)}) + "\n")
    out.write(json.dumps({
        "fit": {"log2_squared": {"coef": list(prof.coef_log2), "mse": prof.mse_log2},
                "linear": {"coef": list(prof.coef_linear), "mse": prof.mse_linear}},
        "ratio_last_first": float(prof.seconds[-1] / prof.seconds[0]),
        "rejections": prof.events,
    }) + "\n")
    out.flush()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmdew", description="Online change detection with MMD on exponential windows.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="stream observations, print change events as JSON lines")
    _add_detector_flags(p)
    p.add_argument("--input", default=None, help="input file (default: stdin)")
    p.add_argument("--format", choices=("csv", "tsv"), default="csv",
                   help="csv: comma-separated; tsv: tab/whitespace-separated")
    p.add_argument("--snapshot", help="write detector state here at end of stream")
    p.add_argument("--restore", help="resume from a snapshot (its configuration wins over flags)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="seeded trials on labeled or synthetic streams")
    _add_detector_flags(p)
    p.add_argument("--input", help="labeled data with a header row")
    p.add_argument("--format", choices=("csv", "tsv"), default="csv")
    p.add_argument("--label-col", help="name of the label column in --input")
    p.add_argument("--beta", type=float, nargs="+", default=[1.0])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--detector", choices=sorted(bench.DETECTORS), default="mmdew")
    p.add_argument("--segments", type=int, default=2, help="synthetic: number of segments")
    p.add_argument("--segment-length", type=int, default=512)
    p.add_argument("--shift", type=float, default=3.0, help="synthetic: mean shift per coordinate")
    p.add_argument("--dim", type=int, default=2)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("profile", help="per-insert runtime against stream length")
    _add_detector_flags(p)
    p.add_argument("--t-max", type=int, default=100_000)
    p.add_argument("--window", type=int, default=8192)
    p.add_argument("--dim", type=int, default=2)
    p.set_defaults(func=cmd_profile, mode="sampled")
    return parser


def main(argv=None, out=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    return args.func(args, out or sys.stdout)


if __name__ == "__main__":
    sys.exit(main())
