import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fishtank import estimation, oracle
from fishtank.estimation import (
    AlphaCache,
    alpha_from_raw,
    calibrate_alpha,
    ll_estimate_geometric,
    ll_estimate_harmonic,
    ll_log_likelihood,
    ll_mle,
    pcsa_log_likelihood,
    pcsa_mle,
    pcsa_mle_bisect,
)
from fishtank.sketches import LogLogSketch, PcsaSketch, SketchParams
from fishtank.sketches.sampling import sample_ll_registers, sample_pcsa, sample_pcsa_bits

E16 = SketchParams(q=math.e, m=16, W=32, offsets="uniform")


def random_pcsa(params, seed):
    rng = np.random.default_rng(seed)
    lam = 10 ** rng.uniform(0.5, 6)
    return sample_pcsa(params, lam, rng)


# ---------------------------------------------------------------- PCSA

def test_pcsa_likelihood_examples():
    one = PcsaSketch(SketchParams(q=2.0, m=1, W=1), bits=np.ones((1, 1), dtype=bool))
    assert pcsa_log_likelihood(one, 1.0) == pytest.approx(math.log2(1 - math.exp(-1)), abs=1e-12)
    assert pcsa_log_likelihood(one, 1.0) == pytest.approx(-0.66173, abs=1e-5)
    empty = PcsaSketch(E16)
    assert pcsa_log_likelihood(empty, 1e-12) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        pcsa_log_likelihood(empty, 0.0)


def test_pcsa_mle_degenerate_states():
    assert pcsa_mle(PcsaSketch(E16)).lambda_hat == 0.0
    one = PcsaSketch(SketchParams(q=2.0, m=1, W=1), bits=np.ones((1, 1), dtype=bool))
    est = pcsa_mle(one)
    assert est.saturated
    assert est.lambda_hat == estimation.saturation_cap(one.params)


@given(st.integers(0, 10**9), st.floats(-2, 7))
def test_pcsa_mle_maximizes_likelihood(seed, log_lam):
    sk = random_pcsa(E16, seed)
    if not sk.bits.any():
        return
    lam_hat = pcsa_mle(sk).lambda_hat
    assert pcsa_log_likelihood(sk, lam_hat) >= pcsa_log_likelihood(sk, 10**log_lam) - 1e-9
    assert pcsa_log_likelihood(sk, lam_hat) <= 0.0


@given(st.integers(0, 10**9), st.booleans())
def test_newton_matches_bisection(seed, warm):
    sk = random_pcsa(E16, seed)
    if not sk.bits.any() or sk.bits.all():
        return
    ref = pcsa_mle_bisect(sk)
    start = ref * 3.7 if warm else None
    assert pcsa_mle(sk, warm_start=start).lambda_hat == pytest.approx(ref, rel=1e-8)


def test_pcsa_score_decreasing():
    sk = random_pcsa(E16, 5)
    ones = np.ascontiguousarray(sk.probs[sk.bits])
    zero = float(sk.probs[~sk.bits].sum())
    grid = np.geomspace(1e-2, 1e4, 500)
    f = [estimation._pcsa_score(zero, ones, x)[0] for x in grid]
    assert np.all(np.diff(f) < 0)
    # far past saturation of the cells the score stays flat at -zero_mass
    assert estimation._pcsa_score(zero, ones, 1e12)[0] == pytest.approx(-zero)


def test_pcsa_grid_oracle_small():
    grid = np.geomspace(*estimation.bracket(E16), 20_000)
    for seed in range(10):
        sk = random_pcsa(E16, 100 + seed)
        ones = sk.probs[sk.bits]
        zero = sk.probs[~sk.bits].sum()
        ll = -grid * zero + np.log(-np.expm1(-np.outer(grid, ones))).sum(axis=1)
        best = grid[np.argmax(ll)]
        assert pcsa_mle(sk).lambda_hat == pytest.approx(best, rel=2e-3)


def test_pcsa_median_ratio_near_one():
    params = SketchParams(q=math.e, m=1024, offsets="uniform")
    for lam in (10**4, 10**5, 10**6):
        rng = oracle.rng_for(1, lam)
        ratios = []
        est = None
        for _ in range(300):
            sk = PcsaSketch(params, 0, sample_pcsa_bits(params, lam, rng))
            est = pcsa_mle(sk, warm_start=est).lambda_hat
            ratios.append(est / lam)
        assert 0.99 <= np.median(ratios) <= 1.01


# ---------------------------------------------------------------- LL

def test_ll_likelihood_examples():
    p = SketchParams(q=2.0, m=1)
    sk = LogLogSketch(p, registers=[3])
    direct = math.log2(math.exp(-8 / 16) - math.exp(-8 / 8))
    assert ll_log_likelihood(sk, 8.0) == pytest.approx(direct, abs=1e-12)
    assert ll_log_likelihood(sk, 8.0) == pytest.approx(-2.06706, abs=1e-4)
    full = LogLogSketch(SketchParams(q=2.0, m=4, W=10), registers=[10] * 4)
    assert ll_log_likelihood(full, 1e9) == pytest.approx(0.0, abs=1e-9)


@given(st.integers(0, 10**9), st.floats(0, 7))
def test_ll_mle_maximizes_likelihood(seed, log_lam):
    params = SketchParams(q=2.0, m=8, W=30, offsets="uniform")
    rng = np.random.default_rng(seed)
    regs = sample_ll_registers(params, 10 ** rng.uniform(1, 6), rng)
    sk = LogLogSketch(params, 0, regs)
    lam_hat = ll_mle(sk).lambda_hat
    assert ll_log_likelihood(sk, lam_hat) >= ll_log_likelihood(sk, 10**log_lam) - 1e-7
    assert ll_log_likelihood(sk, lam_hat) <= 0.0


def test_ll_mle_grid_oracle():
    params = SketchParams(q=2.0, m=16, W=40, offsets="uniform")
    grid = np.geomspace(*estimation.bracket(params), 20_000)
    for seed in range(10):
        rng = np.random.default_rng(seed)
        sk = LogLogSketch(params, 0, sample_ll_registers(params, 10 ** rng.uniform(1, 7), rng))
        ll = estimation._ll_loglik_nats(sk.registers, params, 0, grid)
        assert ll_mle(sk).lambda_hat == pytest.approx(grid[np.argmax(ll)], rel=2e-3)


def test_ll_mle_consistent():
    params = SketchParams(q=2.0, m=1024, offsets="uniform")
    lam = 10**5
    rng = oracle.rng_for(2, 0)
    est = [ll_mle(LogLogSketch(params, 0, sample_ll_registers(params, lam, rng))).lambda_hat for _ in range(20)]
    se = 1.1 / math.sqrt(params.m) * lam
    assert abs(np.mean(est) - lam) < 3 * se / math.sqrt(len(est)) + 3 * se * 0.05


def test_harmonic_examples():
    sk = LogLogSketch(SketchParams(q=2.0, m=4), registers=[5] * 4)
    assert ll_estimate_harmonic(sk, alpha=0.7).lambda_hat == pytest.approx(0.7 * 32)
    sk = LogLogSketch(SketchParams(q=2.0, m=2, offsets="uniform"), registers=[3, 4])
    expected = 2 / (2**-3 + 2**-4.5)
    assert ll_estimate_harmonic(sk).lambda_hat == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(11.82074, abs=1e-5)


@given(st.lists(st.integers(0, 30), min_size=4, max_size=4), st.floats(-5, 5))
def test_harmonic_scaling(regs, shift):
    # adding c to every exponent scales every term by q^-c and the estimate by q^c
    params = SketchParams(q=2.0, m=4, offsets="uniform")
    r = np.array(regs, dtype=float)
    base = estimation.ll_harmonic_raw(r, params)
    assert estimation.ll_harmonic_raw(r + shift, params) == pytest.approx(base * 2.0**shift, rel=1e-12)


def test_geometric_examples():
    sk = LogLogSketch(SketchParams(q=2.0, m=4), registers=[6] * 4)
    assert ll_estimate_geometric(sk, const=0.5).lambda_hat == pytest.approx(0.5 * 4 * 64)
    sk = LogLogSketch(SketchParams(q=2.0, m=2), registers=[3, 5])
    assert ll_estimate_geometric(sk, const=0.3).lambda_hat == pytest.approx(0.3 * 2 * 16)


def test_geometric_standard_error():
    params = SketchParams(q=2.0, m=1024)
    lam = 10**6
    const = calibrate_alpha(params, lam, 500, seed=1, estimator="geometric")
    rng = oracle.rng_for(3, 0)
    regs = sample_ll_registers(params, lam, rng, size=500)
    ratios = const * estimation.ll_geometric_raw(regs, params) / lam
    assert np.std(ratios, ddof=1) == pytest.approx(1.3 / math.sqrt(params.m), rel=0.15)


def test_alpha_algebra():
    raw = np.array([90.0, 110.0])
    assert alpha_from_raw(raw, 100.0) == 1.0
    assert alpha_from_raw(2 * raw, 100.0) == 0.5


@pytest.mark.parametrize("q,m,offsets,lam", [(2.0, 128, "uniform", 10**6), (16.0, 128, "random", 2**20)])
def test_calibrated_harmonic_unbiased(q, m, offsets, lam):
    params = SketchParams(q=q, m=m, offsets=offsets)
    alpha = calibrate_alpha(params, seed=0)
    rng = oracle.rng_for(99, 0)
    regs = sample_ll_registers(params, lam, rng, size=2000)
    est = alpha * estimation.ll_harmonic_raw(regs, params)
    assert abs(est.mean() / lam - 1) < 0.01


def test_alpha_cache_roundtrip(tmp_path):
    path = tmp_path / "alpha.csv"
    params = SketchParams(q=2.0, m=16, offsets="uniform")
    cache = AlphaCache(path)
    a = cache.get_or_calibrate(params, trials=200)
    assert AlphaCache(path).get(params) == a


def test_estimate_dispatch():
    ll = LogLogSketch(SketchParams(q=2.0, m=4), registers=[1, 2, 3, 4])
    assert estimation.estimate(ll, "harmonic", 1.0).method == "harmonic"
    with pytest.raises(ValueError):
        estimation.estimate(PcsaSketch(E16), "harmonic")
    with pytest.raises(ValueError):
        estimation.estimate(ll, "bogus")
