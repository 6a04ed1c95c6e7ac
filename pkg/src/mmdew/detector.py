"""Online change detection over the exponential-bucket summary.

Per observation: append a level-0 bucket, test every bucket boundary from
oldest to newest against the corrected distribution-free threshold, drop
everything older than the first rejecting boundary, then restore the
binary bucket layout by merging.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .ewstore import BucketChain
from .kernel import InsufficientDataError, KernelSpec, as_observation, median_heuristic
from .sigtest import TestConfig, split_thresholds

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "mmdew.detector"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings; ``gamma=None`` requests the median heuristic on a warmup prefix."""

    test: TestConfig = field(default_factory=TestConfig)
    gamma: float | None = None
    mode: str = "sampled"
    warmup_size: int = 100
    seed: int = 0
    family: str = "gaussian"

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"mode must be 'exact' or 'sampled', got {self.mode!r}")
        if self.gamma is None and self.warmup_size < 2:
            raise ValueError("automatic bandwidth needs warmup_size >= 2")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        d = dict(d)
        d["test"] = TestConfig(**d["test"])
        return cls(**d)


@dataclass(frozen=True)
class ChangeEvent:
    detected_at: int
    boundary_offset: int
    statistic: float
    threshold: float
    split_index: int

    def to_json_dict(self) -> dict:
        return {"t": self.detected_at, "offset": self.boundary_offset, "mmd": self.statistic, "threshold": self.threshold}


class Detector:
    """MMD change detector on exponential windows.

    With an explicit ``config.gamma`` the detector is ready immediately and
    :meth:`observe` can be called directly. Otherwise use :meth:`process`,
    which buffers ``config.warmup_size`` observations, fixes the bandwidth
    by the median heuristic and then replays the buffer through
    :meth:`observe`; or build the detector with :func:`warmup_then_start`.

    ``truncate=False`` keeps every test but never drops buckets after a
    rejection; it exists for runtime profiling of the untruncated structure.
    """

    def __init__(self, config: DetectorConfig | None = None, *, truncate: bool = True):
        self.config = config or DetectorConfig()
        self.truncate = truncate
        self.kernel: KernelSpec | None = None
        self.chain: BucketChain | None = None
        self.t = 0  # observations consumed by observe(), never reset
        self.dim: int | None = None
        self._buffer: list[np.ndarray] = []
        self.warmup_events: list[ChangeEvent] = []
        if self.config.gamma is not None:
            self._start(KernelSpec(self.config.gamma, self.config.family))

    @property
    def started(self) -> bool:
        return self.chain is not None

    def _start(self, kernel: KernelSpec) -> None:
        self.kernel = kernel
        self.chain = BucketChain(kernel, self.config.mode, self.config.seed, self.dim)

    def fit_bandwidth(self, warmup) -> float:
        gamma = median_heuristic(warmup)
        self._start(KernelSpec(gamma, self.config.family))
        logger.debug("median heuristic gamma=%g on %d observations", gamma, len(warmup))
        return gamma

    def _check(self, x) -> np.ndarray:
        x = as_observation(x, self.dim)
        if self.dim is None:
            self.dim = x.size
        return x

    def observe(self, x) -> ChangeEvent | None:
        if self.chain is None:
            raise RuntimeError("detector has no bandwidth yet; call process() or fit_bandwidth() first")
        chain = self.chain
        chain.append(x)
        self.dim = chain.dim
        self.t += 1
        event = None
        if len(chain) >= 2:
            mmd, m, n, lterms, rterms = chain.split_table()
            if self.config.test.window_sizes == "terms":
                thr = split_thresholds(np.sqrt(lterms), np.sqrt(rterms), self._num_tests(chain), self.config.test)
            else:
                thr = split_thresholds(m, n, self._num_tests(chain), self.config.test)
            hits = np.flatnonzero(mmd >= thr)
            if hits.size:
                i = int(hits[0])
                s = i + 1
                event = ChangeEvent(self.t, int(n[i]), float(mmd[i]), float(thr[i]), s)
                if self.truncate:
                    chain.drop_older_than(s)
                logger.info("change detected at t=%d, offset=%d", event.detected_at, event.boundary_offset)
        chain.compact()
        return event

    def _num_tests(self, chain: BucketChain) -> int:
        corr = self.config.test.correction
        if corr == "bonferroni_splits":
            return chain.num_splits
        if corr == "bonferroni_stream":
            return max(1, chain.total_count - 1)
        return 1

    def process(self, x) -> list[ChangeEvent]:
        """Feed one observation, handling the warmup buffer; returns the events it caused."""
        if self.chain is not None:
            ev = self.observe(x)
            return [ev] if ev is not None else []
        self._buffer.append(self._check(x))
        if len(self._buffer) < self.config.warmup_size:
            return []
        return self._flush_warmup()

    def _flush_warmup(self) -> list[ChangeEvent]:
        buf, self._buffer = self._buffer, []
        self.fit_bandwidth(buf)
        return [ev for ev in map(self.observe, buf) if ev is not None]

    def finish(self) -> list[ChangeEvent]:
        """Flush a warmup buffer that never filled (short streams).

        With fewer than two buffered observations there is neither a
        bandwidth nor a split to test, so nothing happens.
        """
        if self.chain is not None or len(self._buffer) < 2:
            return []
        return self._flush_warmup()

    def run(self, stream: Iterable) -> Iterator[ChangeEvent]:
        for x in stream:
            yield from self.process(x)
        yield from self.finish()

    def reset(self) -> None:
        """Empty the summary; bandwidth and configuration are kept, the generator is reseeded."""
        if self.chain is not None:
            self.chain.clear()

    def to_dict(self) -> dict:
        return {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "config": self.config.to_dict(),
            "t": self.t,
            "dim": self.dim,
            "warmup_buffer": [b.tolist() for b in self._buffer],
            "chain": self.chain.to_dict() if self.chain is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Detector":
        if d.get("format") != SNAPSHOT_FORMAT or d.get("version") != SNAPSHOT_VERSION:
            raise ValueError("not a supported detector snapshot")
        det = cls(DetectorConfig.from_dict(d["config"]))
        det.t = int(d["t"])
        det.dim = d["dim"]
        det._buffer = [np.asarray(b, dtype=np.float64) for b in d["warmup_buffer"]]
        if d["chain"] is not None:
            det.chain = BucketChain.from_dict(d["chain"])
            det.kernel = det.chain.spec
        return det


def warmup_then_start(config: DetectorConfig, warmup=()) -> Detector:
    """Detector whose bandwidth is fitted on ``warmup``, which is then fed through it.

    With ``config.gamma`` set the warmup is not needed; any observations given
    are still inserted. Events raised while inserting the warmup are kept on
    ``detector.warmup_events``.
    """
    det = Detector(config)
    warmup = list(warmup)
    if not det.started:
        if len(warmup) < max(2, config.warmup_size):
            raise InsufficientDataError(f"need {config.warmup_size} warmup observations, got {len(warmup)}")
        warmup = [det._check(x) for x in warmup]
        det.fit_bandwidth(warmup)
    det.warmup_events = [ev for ev in map(det.observe, warmup) if ev is not None]
    return det


def detect(stream, config: DetectorConfig | None = None) -> list[ChangeEvent]:
    """Run a fresh detector over a finite stream and collect its events."""
    return list(Detector(config).run(stream))
