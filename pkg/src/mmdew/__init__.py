"""Online change detection with maximum mean discrepancy on exponential windows."""

from .detector import ChangeEvent, Detector, DetectorConfig, detect, warmup_then_start
from .ewstore import Bucket, BucketChain
from .kernel import KernelSpec, median_heuristic
from .sigtest import TestConfig

__all__ = [
    "Bucket",
    "BucketChain",
    "ChangeEvent",
    "Detector",
    "DetectorConfig",
    "KernelSpec",
    "TestConfig",
    "detect",
    "median_heuristic",
    "warmup_then_start",
]
