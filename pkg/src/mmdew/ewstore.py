"""Exponential-bucket summary of a stream for split-point MMD estimates.

The chain holds buckets of logical size ``2**level`` ordered oldest first,
at most one per level, so after ``t`` inserts (and no truncation) the levels
are exactly the set bits of ``t``. Each bucket keeps

* ``sample``: the stored observations (all of them in exact mode, a uniform
  subsample in sampled mode),
* ``xx_sum``: the kernel sum over all pairs of the bucket's observations,
* ``xy_sums``: one kernel cross-sum per strictly older bucket (oldest first),

and, next to every sum, the number of kernel evaluations aggregated into it.
Normalising each sum by its own term count gives the biased squared MMD
between the two windows on either side of any bucket boundary; in exact mode
the term counts are ``m*m``, ``n*n`` and ``m*n`` and the value coincides with
the quadratic-time estimate.

Snapshot format (``BucketChain.to_dict``, JSON-serialisable)::

    {"format": "mmdew.chain", "version": 1,
     "mode": "exact" | "sampled", "seed": int, "dim": int | null,
     "kernel": {"family": str, "gamma": float},
     "total_count": int, "rng_state": <numpy bit-generator state>,
     "buckets": [{"level": int, "xx_sum": float, "xx_terms": int,
                  "xy_sums": [float, ...], "xy_terms": [int, ...],
                  "sample": [[float, ...], ...]}, ...]}

Floats are IEEE-754 doubles and round-trip exactly through ``json``;
counts are integers below ``2**63``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .kernel import DimensionError, KernelSpec, as_observation, point_to_points

MODES = ("exact", "sampled")
SNAPSHOT_FORMAT = "mmdew.chain"
SNAPSHOT_VERSION = 1


class StructureError(ValueError):
    """An operation would violate the bucket-chain layout."""


def stored_size(level: int, mode: str) -> int:
    """Number of observations a bucket at ``level`` keeps."""
    if mode == "exact":
        return 1 << level
    return max(1, level)


def xx_term_count(level: int) -> int:
    """Terms in the self-sum of a sampled-mode bucket at ``level``."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    if level == 0:
        return 1
    return (1 << (level - 1)) * (level * level - level + 4)


def xy_term_count(level: int) -> int:
    """Terms in the cross-sum between two same-level sampled buckets just before they merge."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    if level == 0:
        return 1
    return (1 << level) * level


@dataclass
class Bucket:
    level: int
    sample: np.ndarray
    xx_sum: float
    xx_terms: int
    xy_sums: list = field(default_factory=list)
    xy_terms: list = field(default_factory=list)

    @property
    def capacity(self) -> int:
        return 1 << self.level

    @property
    def xy_list(self) -> list[tuple[float, int]]:
        return list(zip(self.xy_sums, self.xy_terms))

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "xx_sum": self.xx_sum,
            "xx_terms": self.xx_terms,
            "xy_sums": list(self.xy_sums),
            "xy_terms": list(self.xy_terms),
            "sample": self.sample.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Bucket":
        return cls(
            level=int(d["level"]),
            sample=np.asarray(d["sample"], dtype=np.float64).reshape(len(d["sample"]), -1),
            xx_sum=float(d["xx_sum"]),
            xx_terms=int(d["xx_terms"]),
            xy_sums=[float(v) for v in d["xy_sums"]],
            xy_terms=[int(v) for v in d["xy_terms"]],
        )


def new_bucket(chain: "BucketChain", x, spec: KernelSpec | None = None) -> Bucket:
    """Level-0 bucket for ``x`` with cross-sums against every bucket in ``chain``."""
    spec = spec or chain.spec
    return _new_bucket(chain, as_observation(x, chain.dim), spec)


def _new_bucket(chain: "BucketChain", x: np.ndarray, spec: KernelSpec) -> Bucket:
    xx = float(point_to_points(spec, x, x[None, :])[0])
    if not chain.buckets:
        return Bucket(0, x[None, :].copy(), xx, 1)
    samples = [b.sample for b in chain.buckets]
    sizes = [len(s) for s in samples]
    kvals = point_to_points(spec, x, np.concatenate(samples))
    offsets = np.cumsum([0] + sizes[:-1])
    sums = np.add.reduceat(kvals, offsets)
    return Bucket(0, x[None, :].copy(), xx, 1, sums.tolist(), sizes)


def merge(left: Bucket, right: Bucket, mode: str = "exact", rng: np.random.Generator | None = None) -> Bucket:
    """Merge two same-level neighbours into one bucket a level up.

    ``left`` is the older bucket; ``right`` is newer, so its cross-sum list
    has one extra trailing entry: the interaction with ``left``.
    """
    if left.level != right.level:
        raise StructureError(f"cannot merge levels {left.level} and {right.level}")
    if len(right.xy_sums) != len(left.xy_sums) + 1:
        raise StructureError(
            f"cross-sum lists do not line up: {len(left.xy_sums)} (older) vs {len(right.xy_sums)} (newer)"
        )
    xx_sum = left.xx_sum + right.xx_sum + 2.0 * right.xy_sums[-1]
    xx_terms = left.xx_terms + right.xx_terms + 2 * right.xy_terms[-1]
    xy_sums = [a + b for a, b in zip(left.xy_sums, right.xy_sums)]
    xy_terms = [a + b for a, b in zip(left.xy_terms, right.xy_terms)]
    pool = np.concatenate([left.sample, right.sample])
    level = left.level + 1
    if mode == "exact":
        sample = pool
    elif mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs a random generator")
        k = min(stored_size(level, mode), len(pool))
        idx = np.sort(rng.permutation(len(pool))[:k])
        sample = pool[idx]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Bucket(level, sample, xx_sum, xx_terms, xy_sums, xy_terms)


class BucketChain:
    """The detector state: buckets oldest first plus the logical stream length."""

    def __init__(self, spec: KernelSpec, mode: str = "sampled", seed: int = 0, dim: int | None = None):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.spec = spec
        self.mode = mode
        self.seed = seed
        self.dim = dim
        self.rng = np.random.default_rng(seed)
        self.buckets: list[Bucket] = []
        self.total_count = 0

    def __len__(self):
        return len(self.buckets)

    @property
    def levels(self) -> list[int]:
        return [b.level for b in self.buckets]

    @property
    def stored_count(self) -> int:
        return sum(len(b.sample) for b in self.buckets)

    @property
    def num_splits(self) -> int:
        return max(0, len(self.buckets) - 1)

    def append(self, x) -> Bucket:
        """Add ``x`` as a new level-0 bucket without restoring the layout."""
        x = as_observation(x, self.dim)
        if self.dim is None:
            self.dim = x.size
        b = _new_bucket(self, x, self.spec)
        self.buckets.append(b)
        self.total_count += 1
        return b

    def compact(self) -> None:
        """Merge the two newest buckets while they share a level."""
        bs = self.buckets
        while len(bs) >= 2 and bs[-1].level == bs[-2].level:
            right = bs.pop()
            left = bs.pop()
            bs.append(merge(left, right, self.mode, self.rng))

    def insert(self, x) -> None:
        self.append(x)
        self.compact()

    def extend(self, xs: Iterable) -> None:
        for x in xs:
            self.insert(x)

    def _check_split(self, s: int) -> None:
        if not (0 < s < len(self.buckets)):
            raise IndexError(f"split index {s} out of range for {len(self.buckets)} buckets")

    def mmd_at_split(self, s: int) -> tuple[float, int, int]:
        """MMD between ``buckets[:s]`` and ``buckets[s:]``; returns ``(mmd, m, n)``.

        Each side is folded into one virtual bucket by the merge identity and
        the crossing cross-sums are added up.
        """
        self._check_split(s)
        bs = self.buckets
        lxx = lt = rxx = rt = cxy = ct = 0
        for i, b in enumerate(bs):
            if i < s:
                lxx += b.xx_sum + 2.0 * sum(b.xy_sums)
                lt += b.xx_terms + 2 * sum(b.xy_terms)
            else:
                rxx += b.xx_sum + 2.0 * sum(b.xy_sums[s:])
                rt += b.xx_terms + 2 * sum(b.xy_terms[s:])
                cxy += sum(b.xy_sums[:s])
                ct += sum(b.xy_terms[:s])
        est = lxx / lt + rxx / rt - 2.0 * cxy / ct
        m = sum(b.capacity for b in bs[:s])
        n = sum(b.capacity for b in bs[s:])
        return float(np.sqrt(max(0.0, est))), m, n

    def split_statistics(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """MMD, left size and right size at every split ``s = 1..len-1``."""
        mmd, m, n, _, _ = self.split_table()
        return mmd, m, n

    def split_table(self):
        """``(mmd, m, n, left_terms, right_terms)`` at every split ``s = 1..len-1``.

        One pass over the cross-sums collects column totals and, per row,
        running prefixes (the part of that row crossing each split); left
        windows then grow by a forward sweep and right windows by a backward
        one. Only additions, ``O(len**2)`` in total.
        """
        bs = self.buckets
        B = len(bs)
        if B < 2:
            empty = np.empty(0)
            ints = empty.astype(np.int64)
            return empty, ints, ints, ints, ints
        col = [0.0] * B
        colt = [0] * B
        cross = [0.0] * B
        crosst = [0] * B
        rows = []
        rowst = []
        for b in bs:
            acc = 0.0
            acct = 0
            for j, (v, c) in enumerate(zip(b.xy_sums, b.xy_terms)):
                col[j] += v
                colt[j] += c
                acc += v
                acct += c
                cross[j + 1] += acc
                crosst[j + 1] += acct
            rows.append(acc)
            rowst.append(acct)
        right = [0.0] * B
        rightt = [0] * B
        rxx = 0.0
        rt = 0
        for i in range(B - 1, 0, -1):
            b = bs[i]
            rxx += b.xx_sum + 2.0 * col[i]
            rt += b.xx_terms + 2 * colt[i]
            right[i] = rxx
            rightt[i] = rt
        mmd = np.empty(B - 1)
        m = np.empty(B - 1, dtype=np.int64)
        lterms = np.empty(B - 1, dtype=np.int64)
        lxx = 0.0
        lt = 0
        size = 0
        for s in range(1, B):
            b = bs[s - 1]
            lxx += b.xx_sum + 2.0 * rows[s - 1]
            lt += b.xx_terms + 2 * rowst[s - 1]
            size += 1 << b.level
            mmd[s - 1] = lxx / lt + right[s] / rightt[s] - 2.0 * cross[s] / crosst[s]
            m[s - 1] = size
            lterms[s - 1] = lt
        n = self.total_count - m
        return np.sqrt(np.maximum(mmd, 0.0)), m, n, lterms, np.array(rightt[1:], dtype=np.int64)

    def drop_older_than(self, s: int) -> None:
        """Keep ``buckets[s:]`` and forget their interactions with dropped buckets."""
        self._check_split(s)
        kept = self.buckets[s:]
        for b in kept:
            del b.xy_sums[:s]
            del b.xy_terms[:s]
        self.buckets = kept
        self.total_count = sum(b.capacity for b in kept)

    def clear(self) -> None:
        self.buckets = []
        self.total_count = 0
        self.rng = np.random.default_rng(self.seed)

    def to_dict(self) -> dict:
        return {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "mode": self.mode,
            "seed": self.seed,
            "dim": self.dim,
            "kernel": {"family": self.spec.family, "gamma": self.spec.gamma},
            "total_count": self.total_count,
            "rng_state": self.rng.bit_generator.state,
            "buckets": [b.to_dict() for b in self.buckets],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BucketChain":
        if d.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"not a bucket-chain snapshot: format={d.get('format')!r}")
        if d.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {d.get('version')!r}")
        spec = KernelSpec(gamma=float(d["kernel"]["gamma"]), family=d["kernel"]["family"])
        chain = cls(spec, mode=d["mode"], seed=int(d["seed"]), dim=d["dim"])
        chain.rng.bit_generator.state = d["rng_state"]
        chain.buckets = [Bucket.from_dict(b) for b in d["buckets"]]
        chain.total_count = int(d["total_count"])
        for b in chain.buckets:
            if chain.dim is not None and b.sample.shape[1] != chain.dim:
                raise DimensionError("snapshot sample dimension disagrees with header")
        return chain

