import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from fishtank import oracle

u64 = st.integers(min_value=0, max_value=2**64 - 1)
small = st.integers(min_value=0, max_value=1000)


@given(u64, u64, st.integers(0, 7), small)
def test_uniform_is_deterministic_and_in_range(seed, e, label, idx):
    a = oracle.uniform(seed, e, label, idx)
    assert a == oracle.uniform(seed, e, label, idx)
    assert 0.0 < a <= 1.0


@given(u64, u64)
def test_distinct_index_gives_distinct_draws(seed, e):
    assert oracle.uniform(seed, e, 0, 0) != oracle.uniform(seed, e, 0, 1)


@given(u64, u64, st.integers(0, 7), st.integers(0, 2**20))
def test_scalar_hash_matches_vectorized(seed, e, label, idx):
    h = oracle.hash_scalar(np.uint64(seed), np.uint64(e), label, np.uint64(idx))
    assert int(h) == int(oracle.hash64(seed, e, label, idx))


def test_uniform_mean():
    u = oracle.uniforms(123, np.arange(10**6, dtype=np.uint64), oracle.PCSA_BIT, 0)
    assert abs(u.mean() - 0.5) < 0.002


def test_uniformity_chi_square():
    u = oracle.uniforms(7, np.arange(200_000, dtype=np.uint64), oracle.LL_VALUE, 3)
    counts, _ = np.histogram(u, bins=100, range=(0, 1))
    expected = u.size / 100
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # 99 degrees of freedom; 99.9th percentile is about 148
    assert chi2 < 148


def test_labels_uncorrelated():
    e = np.arange(100_000, dtype=np.uint64)
    a = oracle.uniforms(5, e, oracle.LL_KEEP, 0)
    b = oracle.uniforms(5, e, oracle.LL_VALUE, 0)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01


@given(u64, u64)
def test_poisson_multiplicity_deterministic(seed, e):
    assert oracle.poisson_multiplicity(seed, e) == oracle.poisson_multiplicity(seed, e)


def test_poisson_moments():
    k = oracle.poisson_multiplicities(11, np.arange(10**6, dtype=np.uint64))
    assert abs(np.mean(k == 0) - math.exp(-1)) < 0.003
    assert abs(k.mean() - 1.0) < 0.01


def test_poissonize_expands_by_multiplicity():
    elems = list(range(50))
    out = list(oracle.poissonize(3, elems))
    assert len(out) == sum(oracle.poisson_multiplicity(3, a) for a in elems)


def test_subseeds_differ():
    seeds = {oracle.subseed(0, t) for t in range(1000)}
    assert len(seeds) == 1000


def test_element_id():
    assert oracle.element_id("42\n") == 42
    assert oracle.element_id("apple") == oracle.element_id(" apple ")
    assert oracle.element_id("apple") != oracle.element_id("pear")
