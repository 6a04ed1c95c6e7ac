"""Evaluation harness: labeled streams, detection metrics, Monte-Carlo studies and runtime profiles."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .detector import ChangeEvent, Detector, DetectorConfig


@dataclass
class LabeledStream:
    observations: np.ndarray
    true_changes: list[int]
    name: str = "stream"

    def __post_init__(self):
        self.observations = np.asarray(self.observations, dtype=np.float64)
        if self.observations.ndim == 1:
            self.observations = self.observations[:, None]
        N = len(self.observations)
        prev = 1
        for c in self.true_changes:
            if not (prev < c <= N):
                raise ValueError(f"change points must be strictly increasing within (1, {N}], got {self.true_changes}")
            prev = c

    def __len__(self):
        return len(self.observations)


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    mtd: float  # nan when no change was followed by a detection
    pcd: float
    delta_T: int
    tp: int
    fp: int
    fn: int
    precision_defined: bool = True
    mtd_count: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isnan(d["mtd"]):
            d["mtd"] = None
        return d


def _detection_times(events) -> list[int]:
    return [e.detected_at if isinstance(e, ChangeEvent) else int(e) for e in events]


def score(events, stream: LabeledStream | Sequence[int], delta_T: int) -> EvalReport:
    """Precision, recall, F1, mean time to detection and percentage of changes detected.

    A detection at time ``d`` is a true positive when some change ``c`` with
    ``d - delta_T <= c <= d`` has not been matched yet (the most recent such
    change is taken); every change is matched at most once.
    """
    if delta_T < 1:
        raise ValueError("delta_T must be >= 1")
    changes = list(stream.true_changes if isinstance(stream, LabeledStream) else stream)
    dets = _detection_times(events)
    if any(b < a for a, b in zip(dets, dets[1:])):
        raise ValueError("events must be sorted by detection time")

    matched = [False] * len(changes)
    tp = fp = 0
    for d in dets:
        hit = None
        for k in range(len(changes) - 1, -1, -1):
            c = changes[k]
            if c > d:
                continue
            if d - c > delta_T:
                break
            if not matched[k]:
                hit = k
                break
        if hit is None:
            fp += 1
        else:
            matched[hit] = True
            tp += 1
    fn = len(changes) - tp

    precision_defined = tp + fp > 0
    precision = tp / (tp + fp) if precision_defined else 0.0
    recall = tp / (tp + fn) if changes else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0

    delays = []
    for c in changes:
        nxt = next((d for d in dets if d >= c), None)
        if nxt is not None:
            delays.append(nxt - c)
    mtd = float(np.mean(delays)) if delays else float("nan")
    pcd = 100.0 * len(dets) / len(changes) if changes else 0.0
    return EvalReport(precision, recall, f1, mtd, pcd, delta_T, tp, fp, fn, precision_defined, len(delays))


def delta_from_beta(stream_length: int, num_changes: int, beta: float) -> int:
    """Matching window ``beta * N / (n + 1)``, rounded half up, at least 1."""
    if num_changes < 0 or beta <= 0:
        raise ValueError("need num_changes >= 0 and beta > 0")
    return max(1, int(math.floor(beta * stream_length / (num_changes + 1) + 0.5)))


def minmax_scale(X: np.ndarray) -> np.ndarray:
    """Per-column min-max scaling to [0, 1]; constant columns map to 0."""
    X = np.asarray(X, dtype=np.float64)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    out = np.zeros_like(X)
    ok = span > 0
    out[:, ok] = (X[:, ok] - lo[ok]) / span[ok]
    return out


def make_class_ordered(features, labels, permutation_seed: int, name: str = "class-ordered") -> LabeledStream:
    """Group rows by class in a seeded random class order; changes sit at class boundaries."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    if len(labels) != len(X):
        raise ValueError("labels must be parallel to feature rows")
    if len(X) == 0:
        raise ValueError("empty data set")
    classes = np.unique(labels)
    order = np.random.default_rng(permutation_seed).permutation(len(classes))
    idx = []
    changes = []
    for k in order:
        rows = np.flatnonzero(labels == classes[k])
        if idx:
            changes.append(len(idx) + 1)
        idx.extend(rows.tolist())
    return LabeledStream(minmax_scale(X[idx]), changes, name)


def synth_gaussian_shift(segments, seed: int, name: str = "gaussian-shift") -> LabeledStream:
    """Concatenated unit-covariance Gaussian segments given as ``(mean, count)`` pairs."""
    if not segments:
        raise ValueError("need at least one segment")
    rng = np.random.default_rng(seed)
    parts = []
    changes = []
    total = 0
    dim = None
    for mean, count in segments:
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        if dim is None:
            dim = mean.size
        elif mean.size != dim:
            raise ValueError("segments must share one dimension")
        if total:
            changes.append(total + 1)
        parts.append(rng.standard_normal((count, dim)) + mean)
        total += count
    return LabeledStream(np.vstack(parts), changes, name)


def load_labeled_csv(path, label_col: str, delimiter: str = ",") -> tuple[np.ndarray, np.ndarray]:
    """Read a delimited file with a header row; returns ``(features, labels)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if label_col not in header:
            raise KeyError(f"{path}: no label column {label_col!r} in header {header}")
        li = header.index(label_col)
        feats, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            labels.append(row[li].strip())
            try:
                feats.append([float(c) for i, c in enumerate(row) if i != li])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return np.asarray(feats, dtype=np.float64), np.asarray(labels)


# detectors the harness knows; each maps (stream, config) -> event times
def _run_mmdew(stream: LabeledStream, config: DetectorConfig) -> list[int]:
    return [e.detected_at for e in Detector(config).run(stream.observations)]


def _run_perfect(stream: LabeledStream, config: DetectorConfig) -> list[int]:
    return list(stream.true_changes)


def _run_never(stream: LabeledStream, config: DetectorConfig) -> list[int]:
    return []


DETECTORS: dict[str, Callable[[LabeledStream, DetectorConfig], list[int]]] = {
    "mmdew": _run_mmdew,
    "perfect": _run_perfect,
    "never": _run_never,
}


@dataclass
class TrialResult:
    trial: int
    seed: int
    stream: str
    detections: list[int]
    reports: dict = field(default_factory=dict)  # beta -> EvalReport

    def records(self) -> list[dict]:
        out = []
        for beta, rep in self.reports.items():
            rec = {"trial": self.trial, "seed": self.seed, "stream": self.stream, "beta": beta}
            rec.update(rep.to_dict())
            rec["detections"] = self.detections
            out.append(rec)
        return out


def run_trials(
    make_stream: Callable[[int], LabeledStream],
    config: DetectorConfig,
    seeds: Iterable[int],
    betas: Sequence[float] = (1.0,),
    detector: str = "mmdew",
) -> list[TrialResult]:
    """One trial per seed: build the stream, run the detector (seeded alike), score at each beta."""
    run = DETECTORS[detector]
    results = []
    for i, seed in enumerate(seeds):
        stream = make_stream(seed)
        cfg = DetectorConfig(config.test, config.gamma, config.mode, config.warmup_size, seed, config.family)
        dets = run(stream, cfg)
        res = TrialResult(i, seed, stream.name, dets)
        for beta in betas:
            dt = delta_from_beta(len(stream), len(stream.true_changes), beta)
            res.reports[beta] = score(dets, stream, dt)
        results.append(res)
    return results


def aggregate(results: Sequence[TrialResult], beta: float) -> dict:
    """Mean and standard deviation of every metric over trials at one beta."""
    reps = [r.reports[beta] for r in results]
    out = {"beta": beta, "trials": len(reps)}
    for key in ("precision", "recall", "f1", "mtd", "pcd"):
        vals = np.array([getattr(r, key) for r in reps], dtype=np.float64)
        vals = vals[~np.isnan(vals)]
        out[key] = {
            "mean": float(vals.mean()) if vals.size else None,
            "std": float(vals.std()) if vals.size else None,
        }
    return out


def level_study(trials: int, length: int, alpha: float, mode: str = "exact", dim: int = 2, seed0: int = 0) -> float:
    """Fraction of i.i.d. Gaussian streams (no change) on which anything is detected."""
    from .sigtest import TestConfig

    hits = 0
    for k in range(trials):
        seed = seed0 + k
        X = np.random.default_rng(seed).standard_normal((length, dim))
        det = Detector(DetectorConfig(TestConfig(alpha), mode=mode, seed=seed))
        hits += any(True for _ in det.run(X))
    return hits / trials


@dataclass
class RuntimeProfile:
    t: np.ndarray
    seconds: np.ndarray  # mean wall time per insert in the window ending at t
    mse_log2: float
    mse_linear: float
    coef_log2: tuple
    coef_linear: tuple
    events: int

    def ratio(self, t_hi: int, t_lo: int) -> float:
        return float(self.seconds[list(self.t).index(t_hi)] / self.seconds[list(self.t).index(t_lo)])


def _lsq(features: np.ndarray, y: np.ndarray):
    A = np.column_stack([features, np.ones_like(features)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, float(np.mean((A @ coef - y) ** 2))


def runtime_profile(
    config: DetectorConfig,
    t_max: int,
    checkpoints: Sequence[int] | None = None,
    window: int = 8192,
    dim: int = 2,
    seed: int = 0,
    truncate: bool = False,
    blocks: int = 16,
    reducer: str = "min",
) -> RuntimeProfile:
    """Time inserts of i.i.d. Gaussian data and fit ``a*log2(t)**2 + b`` and ``a*t + b``.

    The inserts ending at each checkpoint ``t`` (``min(window, t // 2)`` of
    them) are timed in ``blocks`` equal sub-blocks; the reported per-insert
    time is the smallest sub-block mean (``reducer="min"``, since interference
    only ever adds time) or their median (``reducer="median"``). The
    detector needs a fixed ``gamma``. By default rejections do not truncate
    the summary, so the profile follows the structure as it grows with ``t``.
    """
    if config.gamma is None:
        raise ValueError("runtime profiles need a fixed gamma")
    reduce = {"min": np.min, "median": np.median}[reducer]
    if checkpoints is None:
        checkpoints = sorted({int(round(v)) for v in np.geomspace(1000, t_max, 13)})
    checkpoints = sorted(int(c) for c in checkpoints)
    if checkpoints[-1] > t_max:
        raise ValueError("checkpoint beyond t_max")
    marks: dict[int, list] = {}
    spans = {}
    for c in checkpoints:
        w = max(blocks, min(window, c // 2))
        edges = np.linspace(c - w, c, blocks + 1).round().astype(int)
        spans[c] = edges
        for e in edges:
            marks.setdefault(int(e), []).append(c)
    stamps: dict[int, dict[int, float]] = {c: {} for c in checkpoints}

    det = Detector(config, truncate=truncate)
    rng = np.random.default_rng(seed)
    events = 0
    t = 0
    while t < t_max:
        block = rng.standard_normal((min(4096, t_max - t), dim))
        for x in block:
            if t in marks:
                now = time.perf_counter()
                for c in marks[t]:
                    stamps[c][t] = now
            if det.observe(x) is not None:
                events += 1
            t += 1
        if t in marks:
            now = time.perf_counter()
            for c in marks[t]:
                stamps[c][t] = now

    secs = []
    for c in checkpoints:
        e = spans[c]
        per = [(stamps[c][b] - stamps[c][a]) / (b - a) for a, b in zip(e[:-1], e[1:])]
        secs.append(float(reduce(per)))
    ts = np.array(checkpoints)
    secs = np.array(secs)
    lg = np.log2(ts.astype(np.float64)) ** 2
    c_log, mse_log = _lsq(lg, secs)
    c_lin, mse_lin = _lsq(ts.astype(np.float64), secs)
    return RuntimeProfile(ts, secs, mse_log, mse_lin, tuple(c_log), tuple(c_lin), events)
