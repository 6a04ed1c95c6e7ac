"""Bounded kernels, batch kernel sums and the median-heuristic bandwidth."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DimensionError(ValueError):
    """Observation dimensions disagree, or an observation is malformed."""


class InsufficientDataError(ValueError):
    """Not enough observations to estimate a parameter."""


# family -> supremum of the kernel over all inputs
_KERNEL_BOUNDS = {"gaussian": 1.0}


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with bandwidth ``gamma`` and known upper bound.

    Only the Gaussian kernel ``k(x, y) = exp(-gamma * ||x - y||^2)`` ships.
    """

    gamma: float
    family: str = "gaussian"

    def __post_init__(self):
        if self.family not in _KERNEL_BOUNDS:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise ValueError(f"gamma must be a positive finite number, got {self.gamma}")

    @property
    def bound_K(self) -> float:
        return _KERNEL_BOUNDS[self.family]


def as_observation(x, dim: int | None = None) -> np.ndarray:
    """Validate ``x`` as a finite 1-d float vector (of length ``dim`` if given)."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"observation must be a non-empty vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("observation contains non-finite values")
    return arr


def as_points(A) -> np.ndarray:
    """Stack a collection of observations into an ``(n, d)`` float array."""
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim == 1:
        # a flat list of scalars is a list of 1-d observations
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise DimensionError(f"expected a non-empty list of observations, got shape {arr.shape}")
    return arr


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def gram(spec: KernelSpec, A, B) -> np.ndarray:
    """Kernel matrix ``K[i, j] = k(A[i], B[j])``."""
    return np.exp(-spec.gamma * _sq_dists(as_points(A), as_points(B)))


def eval(spec: KernelSpec, x, y) -> float:  # noqa: A001 - mirrors k(x, y)
    x = as_observation(x)
    y = as_observation(y, x.size)
    d = x - y
    return float(np.exp(-spec.gamma * np.dot(d, d)))


def cross_sum(spec: KernelSpec, A, B) -> float:
    """Sum of ``k(a, b)`` over all pairs ``a`` in ``A``, ``b`` in ``B``."""
    return float(gram(spec, A, B).sum())


def self_sum(spec: KernelSpec, A) -> float:
    """Sum of ``k(a_i, a_j)`` over all ordered pairs, diagonal included."""
    return cross_sum(spec, A, A)


def point_to_points(spec: KernelSpec, x: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Kernel values between one observation and each row of ``P`` (hot path, no validation)."""
    d = P - x
    return np.exp(-spec.gamma * np.einsum("ij,ij->i", d, d))


def median_heuristic(warmup: Sequence) -> float:
    """Bandwidth ``gamma = 1 / (2 * median squared pairwise distance)``.

    The median runs over all unordered pairs of distinct indices. Constant
    warmup data (median zero) falls back to ``gamma = 1.0``.
    """
    X = as_points(warmup)
    if X.shape[0] < 2:
        raise InsufficientDataError("median heuristic needs at least 2 observations")
    iu = np.triu_indices(X.shape[0], k=1)
    med = float(np.median(_sq_dists(X, X)[iu]))
    if med <= 0.0:
        return 1.0
    return 1.0 / (2.0 * med)
