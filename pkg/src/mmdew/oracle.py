"""Brute-force references used to pin the fast paths in tests.

Nothing here is on the detector's hot path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import DimensionError, KernelSpec, as_points, gram
from .sigtest import TestConfig, split_thresholds


@dataclass
class WindowPair:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        self.X = as_points(self.X)
        self.Y = as_points(self.Y)
        if self.X.shape[1] != self.Y.shape[1]:
            raise DimensionError("windows have different dimensions")


def mmd_b2(pair: WindowPair, spec: KernelSpec) -> float:
    """Quadratic-time biased squared MMD between the two windows."""
    X, Y = pair.X, pair.Y
    m, n = len(X), len(Y)
    kxx = gram(spec, X, X).sum()
    kyy = gram(spec, Y, Y).sum()
    kxy = gram(spec, X, Y).sum()
    return float(kxx / (m * m) + kyy / (n * n) - 2.0 * kxy / (m * n))


def term_counts_recurrence(max_level: int) -> list[tuple[int, int]]:
    """``(n_xx, n_xy)`` per level from the merge recurrence, checked against the closed forms."""
    if max_level < 0:
        raise ValueError("max_level must be nonnegative")
    out = []
    for l in range(max_level + 1):
        n_xy = 1 if l == 0 else (2**l) * l
        if l == 0:
            n_xx = 1
        elif l == 1:
            n_xx = 4
        else:
            n_xx = 2 * out[l - 1][0] + 2 * out[l - 1][1]
        closed_xx = 1 if l == 0 else 2 ** (l - 1) * (l * l - l + 4)
        assert n_xx == closed_xx, (l, n_xx, closed_xx)
        out.append((n_xx, n_xy))
    return out


def reference_detect(stream, gamma: float, test: TestConfig) -> list[tuple[int, int, int]]:
    """Exact-mode detection recomputing every split statistic from raw windows.

    Keeps raw observation lists with the same binary bucket layout and the
    same test order as the detector (test before merging, oldest split first,
    stop at the first rejection, correction over the number of splits).
    Returns ``(detected_at, boundary_offset, split_index)`` triples.
    """
    spec = KernelSpec(gamma)
    buckets: list[list] = []
    events = []
    for t, x in enumerate(stream, start=1):
        buckets.append([np.asarray(x, dtype=np.float64).ravel()])
        B = len(buckets)
        for s in range(1, B):
            X = [p for b in buckets[:s] for p in b]
            Y = [p for b in buckets[s:] for p in b]
            stat = np.sqrt(max(0.0, mmd_b2(WindowPair(X, Y), spec)))
            thr = float(split_thresholds(len(X), len(Y), B - 1, test))
            if stat >= thr:
                events.append((t, len(Y), s))
                buckets = buckets[s:]
                break
        while len(buckets) >= 2 and len(buckets[-1]) == len(buckets[-2]):
            right = buckets.pop()
            buckets[-1] = buckets[-1] + right
    return events
