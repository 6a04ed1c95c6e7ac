"""Distribution-free acceptance thresholds for the biased-MMD two-sample test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CORRECTIONS = ("bonferroni_splits", "bonferroni_stream", "none")
# what the correction divides by the number of tests: the level, or the threshold itself
SCALINGS = ("alpha", "threshold")
# window sizes entering the threshold: square roots of the term counts, or observations represented
WINDOW_SIZES = ("terms", "logical")


@dataclass(frozen=True)
class TestConfig:
    """Level ``alpha``, kernel bound ``bound_K`` and multiple-testing correction.

    ``scale="alpha"`` runs each of the ``k`` simultaneous tests at level
    ``alpha / k`` (family-wise level ``alpha``). ``scale="threshold"`` instead
    divides the threshold by ``k``, which lowers it and does not control the
    family-wise error; it is kept for comparison only.

    ``window_sizes="terms"`` feeds the threshold ``sqrt`` of each window's
    self-sum term count (exactly ``m`` and ``n`` when nothing is subsampled,
    smaller in sampled mode); ``"logical"`` feeds the number of observations
    the windows represent.
    """

    __test__ = False  # not a pytest class

    alpha: float = 0.01
    bound_K: float = 1.0
    correction: str = "bonferroni_splits"
    scale: str = "alpha"
    window_sizes: str = "terms"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.bound_K > 0.0:
            raise ValueError(f"bound_K must be positive, got {self.bound_K}")
        if self.correction not in CORRECTIONS:
            raise ValueError(f"correction must be one of {CORRECTIONS}, got {self.correction!r}")
        if self.scale not in SCALINGS:
            raise ValueError(f"scale must be one of {SCALINGS}, got {self.scale!r}")
        if self.window_sizes not in WINDOW_SIZES:
            raise ValueError(f"window_sizes must be one of {WINDOW_SIZES}, got {self.window_sizes!r}")

    @property
    def log_factor(self) -> float:
        return float(level_factor(self.alpha))


def level_factor(alpha):
    """``1 + sqrt(2 ln(1/alpha))``; accepts arrays."""
    return 1.0 + np.sqrt(2.0 * np.log(1.0 / np.asarray(alpha, dtype=np.float64)))


def epsilon_equal(m: int, config: TestConfig) -> float:
    """Threshold on ``MMD_b`` for two samples of equal size ``m``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return math.sqrt(2.0 * config.bound_K / m) * config.log_factor


def epsilon_unequal(m: int, n: int, config: TestConfig) -> float:
    """Threshold on ``MMD_b`` for samples of sizes ``m`` and ``n``."""
    if m < 1 or n < 1:
        raise ValueError("sample sizes must be >= 1")
    return math.sqrt(config.bound_K / m + config.bound_K / n) * config.log_factor


def epsilon_unequal_array(m, n, config: TestConfig):
    """Vectorised :func:`epsilon_unequal` over numpy arrays of sizes."""
    m = np.asarray(m, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return np.sqrt(config.bound_K / m + config.bound_K / n) * config.log_factor


def corrected_threshold(eps: float, num_tests: int, config: TestConfig) -> float:
    """Threshold ``eps`` divided by the number of simultaneous tests.

    This is the ``scale="threshold"`` rule. The detector's default divides the
    level instead, see :func:`split_thresholds`. ``correction="none"`` returns
    ``eps`` unchanged.
    """
    if num_tests < 1:
        raise ValueError(f"num_tests must be >= 1, got {num_tests}")
    if config.correction == "none":
        return eps
    return eps / num_tests


def split_thresholds(m, n, num_tests: int, config: TestConfig) -> np.ndarray:
    """Corrected thresholds for splits with window sizes ``m``, ``n`` (arrays) among ``num_tests`` tests."""
    if num_tests < 1:
        raise ValueError(f"num_tests must be >= 1, got {num_tests}")
    if config.correction == "none" or num_tests == 1:
        return epsilon_unequal_array(m, n, config)
    if config.scale == "threshold":
        return epsilon_unequal_array(m, n, config) / num_tests
    m = np.asarray(m, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return np.sqrt(config.bound_K / m + config.bound_K / n) * level_factor(config.alpha / num_tests)


def reject(statistic: float, threshold: float) -> bool:
    return statistic >= threshold
