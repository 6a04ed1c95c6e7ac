import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmdew import kernel
from mmdew.ewstore import (
    Bucket,
    BucketChain,
    StructureError,
    merge,
    new_bucket,
    xx_term_count,
    xy_term_count,
)
from mmdew.kernel import DimensionError, KernelSpec
from mmdew.oracle import WindowPair, mmd_b2

EXP_M2 = 0.1353352832366127


def exact_chain(X, gamma=0.5):
    c = BucketChain(KernelSpec(gamma), mode="exact")
    c.extend(X)
    return c


def bits(t):
    return sorted((i for i in range(t.bit_length()) if t >> i & 1), reverse=True)


def test_new_bucket_examples():
    spec = KernelSpec(0.5)
    c = BucketChain(spec, "exact")
    b = new_bucket(c, [0.0])
    assert b.xx_sum == 1.0 and b.xx_terms == 1 and b.xy_list == []

    c.insert([0.0])
    b = new_bucket(c, [2.0])
    assert b.xy_list == [(pytest.approx(EXP_M2, rel=1e-15), 1)]

    c = BucketChain(spec, "exact")
    c.extend([[0.0], [1.0], [2.0]])  # levels 1, 0
    b = new_bucket(c, [5.0])
    assert b.xy_terms == [2, 1]
    assert b.xy_sums[0] == pytest.approx(kernel.cross_sum(spec, [[5.0]], [[0.0], [1.0]]), rel=1e-14)

    with pytest.raises(DimensionError):
        new_bucket(c, [1.0, 2.0])


def test_merge_examples():
    left = Bucket(1, np.zeros((2, 1)), 3.0, 4, [1.0], [2])
    right = Bucket(1, np.ones((2, 1)), 2.0, 4, [0.25, 0.5], [1, 3])
    out = merge(left, right, "exact")
    assert out.level == 2 and out.capacity == 4
    assert out.xx_sum == 6.0
    assert out.xx_terms == 4 + 4 + 2 * 3
    assert out.xy_list == [(1.25, 3)]
    assert out.sample.shape == (4, 1)

    a = Bucket(0, np.zeros((1, 1)), 1.0, 1, [], [])
    b = Bucket(0, np.ones((1, 1)), 1.0, 1, [0.3], [1])
    assert merge(a, b, "exact").xx_terms == 4


def test_merge_errors():
    a = Bucket(1, np.zeros((2, 1)), 1.0, 4, [], [])
    b = Bucket(0, np.zeros((1, 1)), 1.0, 1, [0.1], [2])
    with pytest.raises(StructureError):
        merge(a, b)
    c = Bucket(1, np.zeros((2, 1)), 1.0, 4, [], [])
    with pytest.raises(StructureError):
        merge(a, c)


def test_insert_cascade():
    c = exact_chain([[0.0]])
    c.insert([1.0])
    assert c.levels == [1]
    c.extend([[2.0], [3.0]])
    assert c.levels == [2]
    c.insert([4.0])
    assert c.levels == [2, 0] and c.total_count == 5


@pytest.mark.parametrize("t", range(1, 300))
def test_binary_layout(t):
    c = BucketChain(KernelSpec(1.0), "sampled", seed=t)
    c.extend(np.random.default_rng(t).normal(size=(t, 1)))
    assert c.levels == bits(t)


def test_mmd_at_split_examples():
    c = BucketChain(KernelSpec(0.5), "exact")
    c.append([0.0])
    c.append([2.0])
    mmd, m, n = c.mmd_at_split(1)
    assert (m, n) == (1, 1)
    assert mmd == pytest.approx(1.3150397079657992, rel=1e-14)

    c = BucketChain(KernelSpec(0.5), "exact")
    c.append([1.0])
    c.append([1.0])
    assert c.mmd_at_split(1)[0] == 0.0

    with pytest.raises(IndexError):
        c.mmd_at_split(0)
    with pytest.raises(IndexError):
        c.mmd_at_split(2)


def oracle_check(c, X, rel=1e-9):
    mmd, m, n = c.split_statistics()
    for s in range(1, len(c)):
        a, mm, nn = c.mmd_at_split(s)
        assert (mm, nn) == (m[s - 1], n[s - 1])
        want = np.sqrt(max(0.0, mmd_b2(WindowPair(X[:mm], X[mm:]), c.spec)))
        assert a == pytest.approx(want, rel=rel)
        assert mmd[s - 1] == pytest.approx(want, rel=rel)


def test_exact_mode_matches_oracle(rng):
    X = rng.normal(size=(64, 2))
    c = BucketChain(KernelSpec(0.4), "exact")
    for t in range(64):
        c.append(X[t])
        oracle_check(c, X[: t + 1])
        c.compact()
        if len(c) > 1:
            oracle_check(c, X[: t + 1])


@given(st.integers(2, 80), st.integers(1, 4), st.floats(0.05, 3.0), st.integers(0, 2**32 - 1))
def test_exact_mode_matches_oracle_property(t, d, gamma, seed):
    X = np.random.default_rng(seed).normal(size=(t, d))
    c = BucketChain(KernelSpec(gamma), "exact")
    c.extend(X[:-1])
    c.append(X[-1])
    oracle_check(c, X)


def test_drop_older_than(rng):
    X = rng.normal(size=(7, 2))
    c = exact_chain(X)  # levels 2, 1, 0
    b0_len = len(c.buckets[-1].xy_sums)
    c.drop_older_than(1)
    assert c.levels == [1, 0]
    assert len(c.buckets[-1].xy_sums) == b0_len - 1
    assert c.total_count == 3
    mmd, m, n = c.mmd_at_split(1)
    want = np.sqrt(mmd_b2(WindowPair(X[4:6], X[6:]), c.spec))
    assert mmd == pytest.approx(want, rel=1e-9)

    Y = rng.normal(size=(11, 2))  # levels 3, 1, 0
    c = exact_chain(Y)
    c.append(Y[0])
    before = [b.level for b in c.buckets]
    c.drop_older_than(1)
    assert c.levels == before[1:]
    Z = np.vstack([Y[8:], Y[:1]])
    oracle_check(c, Z)
    with pytest.raises(IndexError):
        c.drop_older_than(len(c))


def test_cascade_xx_equals_self_sum(rng):
    X = rng.normal(size=(256, 3))
    c = exact_chain(X, gamma=0.2)
    b = c.buckets[0]
    assert b.level == 8
    assert b.xx_terms == 256**2
    assert b.xx_sum == pytest.approx(kernel.self_sum(c.spec, X), rel=1e-9)


def test_exact_bucket_invariants(rng):
    c = exact_chain(rng.normal(size=(45, 2)))
    caps = [b.capacity for b in c.buckets]
    for i, b in enumerate(c.buckets):
        assert len(b.sample) == b.capacity
        assert b.xx_terms == b.capacity**2
        assert b.xy_terms == [b.capacity * cap for cap in caps[:i]]
        assert b.xx_sum >= 0 and all(v >= 0 for v in b.xy_sums)


def test_sampled_term_counts(rng):
    c = BucketChain(KernelSpec(0.5), "sampled", seed=3)
    seen = set()
    for t in range(1, 2**10 + 1):
        c.append(rng.normal(size=2))
        bs = c.buckets
        while len(bs) >= 2 and bs[-1].level == bs[-2].level:
            lvl = bs[-1].level
            assert bs[-1].xy_terms[-1] == xy_term_count(lvl)
            assert bs[-2].xx_terms == bs[-1].xx_terms == xx_term_count(lvl)
            seen.add(lvl)
            right = bs.pop()
            left = bs.pop()
            bs.append(merge(left, right, "sampled", c.rng))
        for b in c.buckets:
            assert b.xx_terms == xx_term_count(b.level)
            assert len(b.sample) == max(1, b.level)
    assert seen == set(range(10))


def test_sampled_memory_bound(rng):
    c = BucketChain(KernelSpec(0.5), "sampled")
    for t in range(1, 5001):
        c.insert(rng.normal(size=1))
        L = t.bit_length() - 1
        assert c.stored_count <= sum(s + 1 for s in range(L + 1))


def test_sampled_is_seeded(rng):
    X = rng.normal(size=(100, 2))
    a = BucketChain(KernelSpec(0.5), "sampled", seed=9)
    b = BucketChain(KernelSpec(0.5), "sampled", seed=9)
    a.extend(X)
    b.extend(X)
    assert a.to_dict() == b.to_dict()
    assert np.all(a.split_statistics()[0] >= 0)


@pytest.mark.parametrize("mode", ["exact", "sampled"])
def test_snapshot_roundtrip(mode, rng):
    X = rng.normal(size=(150, 3))
    full = BucketChain(KernelSpec(0.3), mode, seed=4)
    full.extend(X)

    half = BucketChain(KernelSpec(0.3), mode, seed=4)
    half.extend(X[:77])
    restored = BucketChain.from_dict(json.loads(json.dumps(half.to_dict())))
    restored.extend(X[77:])
    assert restored.to_dict() == full.to_dict()


def test_snapshot_rejects_foreign():
    with pytest.raises(ValueError):
        BucketChain.from_dict({"format": "other", "version": 1})
    c = BucketChain(KernelSpec(1.0))
    d = c.to_dict()
    d["version"] = 99
    with pytest.raises(ValueError):
        BucketChain.from_dict(d)
