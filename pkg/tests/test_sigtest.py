import math

import numpy as np
import pytest

from mmdew.sigtest import (
    TestConfig,
    corrected_threshold,
    epsilon_equal,
    epsilon_unequal,
    reject,
    split_thresholds,
)


def test_epsilon_examples():
    cfg = TestConfig(alpha=0.1)
    assert epsilon_equal(100, cfg) == pytest.approx(0.44490678211433876, rel=1e-12)
    assert epsilon_unequal(100, 100, cfg) == pytest.approx(0.444907, abs=1e-5)
    assert epsilon_unequal(100, 50, TestConfig(alpha=0.05)) == pytest.approx(0.597164, abs=1e-5)


def test_alpha_limit():
    # alpha -> 1 removes the log factor
    cfg = TestConfig(alpha=1 - 1e-12)
    assert epsilon_equal(100, cfg) == pytest.approx(math.sqrt(0.02), rel=1e-5)
    assert epsilon_unequal(100, 50, cfg) == pytest.approx(math.sqrt(0.03), rel=1e-5)


def test_config_validation():
    for bad in (dict(alpha=0.0), dict(alpha=1.0), dict(bound_K=0.0), dict(correction="holm"), dict(scale="x")):
        with pytest.raises(ValueError):
            TestConfig(**bad)


def test_reduction_equal_sizes():
    cfg = TestConfig(alpha=0.01)
    for m in range(1, 10_001):
        assert epsilon_unequal(m, m, cfg) == pytest.approx(epsilon_equal(m, cfg), rel=1e-12)


def test_monotone_grid():
    sizes = [1, 2, 5, 17, 100, 1000]
    alphas = [0.3, 0.1, 0.01, 0.001]
    for m in sizes:
        for n in sizes:
            vals = [epsilon_unequal(m, n, TestConfig(a)) for a in alphas]
            assert all(b > a for a, b in zip(vals, vals[1:]))
            cfg = TestConfig(0.05)
            assert epsilon_unequal(m, n, cfg) == epsilon_unequal(n, m, cfg)
            assert epsilon_unequal(m + 1, n, cfg) < epsilon_unequal(m, n, cfg)
            assert epsilon_unequal(m, n + 1, cfg) < epsilon_unequal(m, n, cfg)


def test_corrected_threshold():
    cfg = TestConfig(alpha=0.1)
    assert corrected_threshold(0.6, 3, cfg) == pytest.approx(0.2)
    assert corrected_threshold(0.6, 1, cfg) == 0.6
    assert corrected_threshold(0.444907, 4, cfg) == pytest.approx(0.111227, abs=1e-6)
    assert corrected_threshold(0.6, 3, TestConfig(correction="none")) == 0.6
    with pytest.raises(ValueError):
        corrected_threshold(0.6, 0, cfg)


def test_reject_inclusive():
    assert reject(0.5, 0.5)
    assert not reject(0.0, 0.1)
    assert reject(0.45, 0.111)


def test_split_thresholds_modes():
    m = np.array([4, 8, 100])
    n = np.array([1, 3, 50])
    alpha_cfg = TestConfig(alpha=0.1)
    got = split_thresholds(m, n, 3, alpha_cfg)
    want = [epsilon_unequal(a, b, TestConfig(alpha=0.1 / 3)) for a, b in zip(m, n)]
    np.testing.assert_allclose(got, want, rtol=1e-14)
    # level splitting is more conservative than the single test
    assert np.all(got > [epsilon_unequal(a, b, alpha_cfg) for a, b in zip(m, n)])

    thr_cfg = TestConfig(alpha=0.1, scale="threshold")
    np.testing.assert_allclose(
        split_thresholds(m, n, 3, thr_cfg),
        [corrected_threshold(epsilon_unequal(a, b, thr_cfg), 3, thr_cfg) for a, b in zip(m, n)],
        rtol=1e-14,
    )
    # one test: no correction at all
    np.testing.assert_allclose(split_thresholds(m, n, 1, alpha_cfg), [epsilon_unequal(a, b, alpha_cfg) for a, b in zip(m, n)])
