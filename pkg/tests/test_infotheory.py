import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fishtank import infotheory as it
from fishtank.sketches import SketchParams
from fishtank.sketches.sampling import sample_pcsa_bits

RATIO = 1.98016


def test_hdot_values():
    assert it.hdot(math.log(2)) == pytest.approx(1.0, abs=1e-14)
    assert it.hdot(1e-12) < 1e-9
    assert it.hdot(200.0) < 1e-80
    with pytest.raises(ValueError):
        it.hdot(-1.0)


def test_idot_values():
    assert it.idot(1.0) == pytest.approx(1 / (math.e - 1), abs=1e-15)
    assert it.idot(1.0) == pytest.approx(0.58198, abs=1e-5)
    assert it.idot(1e-9) == pytest.approx(1e-9, rel=1e-6)
    assert it.idot(650.0) > 0.0
    assert it.idot(800.0) == 0.0  # below the smallest double, no overflow warning


@given(st.floats(1e-8, 200.0))
def test_pointwise_bounds(t):
    he = it.hdot_nats(t)
    assert t * math.exp(-t) <= he * (1 + 1e-12)
    assert he <= 2 * math.sqrt(t)
    assert it.idot(t) <= 4 * math.exp(-t / 2)


def test_constants():
    assert it.i0() == pytest.approx(math.pi**2 / 6, abs=1e-15)
    assert it.h0() == pytest.approx(3.25724, abs=1e-5)
    assert it.h0() / it.i0() == pytest.approx(RATIO, abs=1e-5)


def test_series_and_quadrature_agree():
    assert it.h0_quadrature() == pytest.approx(it.h0(), abs=1e-8)
    assert it.i0_quadrature() == pytest.approx(it.i0(), abs=1e-8)
    for q in (1.5, 2.0, math.e, 16.0, 256.0):
        assert it.phi_quadrature(q) == pytest.approx(it.phi(q), abs=1e-8)
        assert it.rho_quadrature(q) == pytest.approx(it.rho(q), abs=1e-8)


def test_h0_series_converges():
    # truncation plus midpoint tail: a tenfold shorter series is already accurate
    assert it.h0_series(10_000) == pytest.approx(it.h0(), abs=1e-10)


def test_rho_and_phi_anchors():
    assert it.rho(2.0) == pytest.approx(math.pi**2 / 6 - 1, abs=1e-12)
    assert math.log(2) * it.phi(2.0) / it.rho(2.0) == pytest.approx(2.1097, abs=1e-4)
    assert abs(it.phi(1e6) / it.rho(1e6) - it.h0() / it.i0()) < 1e-3


def test_fish_pcsa():
    base = it.fish_pcsa(2.0).fish
    for q in (math.e, 16.0, 256.0):
        assert it.fish_pcsa(q).fish == pytest.approx(base, abs=1e-9)
    r = it.fish_pcsa(math.e)
    assert r.H_avg == pytest.approx(it.h0(), abs=1e-15)
    assert r.I_avg == pytest.approx(it.i0(), abs=1e-15)
    assert it.fish_pcsa(2.0).H_avg == pytest.approx(it.h0() / math.log(2), abs=1e-12)
    assert it.fish_pcsa(2.0).H_avg == pytest.approx(4.699, abs=1e-3)


def test_fish_ll():
    assert it.fish_ll(2.0).fish == pytest.approx(2.1097 / math.log(2), abs=1e-3)
    for q in (1.1, 1.5, 2.0, 4.0, 16.0, 256.0):
        assert it.fish_ll(q).fish > it.h0() / it.i0()
    grid = np.geomspace(1.4, 1e4, 40)
    vals = [it.fish_ll(q).fish for q in grid]
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("sketch,q", [("pcsa", 2.0), ("pcsa", math.e), ("ll", 2.0), ("ll", 16.0)])
def test_curves_scale_invariant(sketch, q):
    rng = np.random.default_rng(4)
    for lam in 10 ** rng.uniform(-2, 12, size=100):
        a, b = it.curves(sketch, q, lam), it.curves(sketch, q, q * lam)
        assert abs(a.entropy_bits - b.entropy_bits) < 1e-9
        assert abs(a.norm_info - b.norm_info) < 1e-9


@pytest.mark.parametrize("sketch,q", [("pcsa", math.e), ("pcsa", 2.0), ("ll", 2.0)])
def test_period_average_matches_fish_report(sketch, q):
    avg = it.curve_period_average(sketch, q)
    ref = it.fish_pcsa(q) if sketch == "pcsa" else it.fish_ll(q)
    assert avg.I_avg == pytest.approx(ref.I_avg, abs=1e-6)
    assert avg.H_avg == pytest.approx(ref.H_avg, abs=1e-6)


def test_ll2_information_dip():
    ext = it.curve_extrema("ll", 2.0)
    assert ext["info_min"] == pytest.approx(0.93, abs=0.01)


def test_pcsa_entropy_matches_simulation():
    params = SketchParams(q=2.0, m=1, W=64)
    lam = 2.0**20
    rng = np.random.default_rng(8)
    bits = sample_pcsa_bits(params, lam, rng, poissonize=True, size=100_000)[:, 0, :]
    words = np.packbits(bits, axis=1, bitorder="little").view("<u8").ravel()
    _, counts = np.unique(words, return_counts=True)
    p = counts / counts.sum()
    plug_in = float(-(p * np.log2(p)).sum())
    assert plug_in == pytest.approx(it.pcsa_curves(2.0, lam).entropy_bits, rel=0.02)


def test_verify_lemmas_passes():
    rep = it.verify_lemmas()
    assert rep.passed, rep.failures()
    assert len(rep.checks) == 5
