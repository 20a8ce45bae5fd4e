import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fishtank import fishmonger, infotheory, oracle
from fishtank.estimation import pcsa_mle
from fishtank.fishmonger import (
    BudgetExceeded,
    FishmongerFormatError,
    FishmongerParams,
    FishmongerSketch,
    quantize,
)
from fishtank.fishmonger import coder
from fishtank.fishmonger.sketch import HEADER_BITS, _HEADER
from fishtank.sketches import IncompatibleSketches, PcsaSketch
from fishtank.sketches.sampling import sample_pcsa_bits

FP = FishmongerParams(64)


def random_state(fp, seed):
    rng = np.random.default_rng(seed)
    lam = 10 ** rng.uniform(0, 8)
    return sample_pcsa_bits(fp.sketch_params, lam, rng), lam


def test_budget_formula():
    fp = FishmongerParams(256)
    slack = math.ceil(2 * math.sqrt(256 * math.log(256))) + 6**2 + 64
    assert fp.slack_bits == slack
    assert fp.budget_bits == math.ceil(1.05 * 256 * infotheory.h0()) + slack
    assert fp.budget_bits == 1052
    assert fp.payload_limit == fp.budget_bits - fp.estimate_bits


@given(st.integers(0, 2**32), st.floats(0.2, 5.0))
def test_encode_decode_roundtrip(seed, skew):
    bits, lam = random_state(FP, seed)
    lam_tilde = quantize(lam * skew, FP.mantissa_bits).value
    code = fishmonger.encode(bits, lam_tilde, FP)
    assert np.array_equal(fishmonger.decode(code, lam_tilde, FP).bits, bits)


def test_roundtrip_200_states_and_empty():
    for seed in range(200):
        bits, lam = random_state(FP, seed)
        code = fishmonger.encode(bits, lam, FP)
        assert np.array_equal(fishmonger.decode(code, lam, FP).bits, bits)
    empty = np.zeros((FP.m, FP.W), dtype=bool)
    assert not fishmonger.decode(fishmonger.encode(empty, 0.0, FP), 0.0, FP).bits.any()


def test_modal_state_codes_shorter_than_random():
    lam = 1e4
    p = np.exp(-lam * fishmonger.sketch.cell_probs(FP.sketch_params))
    modal = p < 0.5
    rng = np.random.default_rng(3)
    noise = rng.random(modal.shape) < 0.5
    assert len(fishmonger.encode(modal, lam, FP)) < len(fishmonger.encode(noise, lam, FP))


def test_mean_code_length_near_entropy():
    fp = FishmongerParams(256)
    rng = oracle.rng_for(5, 0)
    lengths = []
    est = None
    for _ in range(500):
        bits = sample_pcsa_bits(fp.sketch_params, 1e5, rng)
        est = pcsa_mle(PcsaSketch(fp.sketch_params, 0, bits), warm_start=est).lambda_hat
        lam_tilde = quantize(est, fp.mantissa_bits)
        lengths.append(coder.code_length(bits, coder.model_probs(fishmonger.sketch.model_zero_probs(fp, lam_tilde.value))))
    assert np.mean(lengths) == pytest.approx(256 * infotheory.h0(), rel=0.05)


def test_empty_sketch():
    fs = FishmongerSketch(FP, 1)
    assert fs.estimate() == 0.0
    assert fs.size_bits() <= FP.budget_bits + HEADER_BITS
    assert fishmonger.fm_insert(fs, 77) is fs
    assert fs.revert_count == 0
    assert fs.estimate() > 0


def test_duplicate_insert_no_change():
    fs = FishmongerSketch(FP, 2).update(np.arange(500, dtype=np.uint64))
    before = fs.copy()
    assert not fs.insert(123)
    assert fs == before and fs.revert_count == 0


@given(st.integers(0, 2**32), st.integers(1, 3000))
def test_estimate_is_quantized_mle(seed, n):
    fs = FishmongerSketch(FP, seed).update(np.arange(n, dtype=np.uint64))
    lam_hat = pcsa_mle(fs.state).lambda_hat
    assert fs.lambda_hat == pytest.approx(lam_hat, rel=1e-8)
    assert fs.lambda_hat <= fs.estimate() <= (1 + 1 / (FP.m * FP.U_bits)) * fs.lambda_hat


def test_stream_matches_plain_pcsa_and_stays_in_budget():
    fp = FishmongerParams(128)
    n = 20_000
    elems = np.arange(n, dtype=np.uint64) * 7919
    limit = fp.budget_bits + HEADER_BITS
    sizes = []
    fs = FishmongerSketch(fp, 11).update(elems, on_insert=lambda s: sizes.append(s.size_bits()))
    assert len(sizes) == n and max(sizes) <= limit
    assert fs.revert_count == 0
    plain = PcsaSketch(fp.sketch_params, 11).update(elems)
    assert fs.state == plain
    assert fs.decoded_state() == plain


@dataclass(frozen=True)
class TightParams(FishmongerParams):
    limit: int = 120

    @property
    def payload_limit(self) -> int:
        return self.limit


def test_reverts_keep_payload_under_limit():
    fp = TightParams(64)
    fs = FishmongerSketch(fp, 4)
    plain = PcsaSketch(fp.sketch_params, 4)
    for e in range(5000):
        fs.insert(e)
        plain.insert(e)
        assert fs.payload_bits <= fp.payload_limit
    assert fs.revert_count > 0
    # a reverted state is a sub-state of the true one and still decodes
    assert np.all(plain.bits >= fs.state.bits)
    assert fs.decoded_state() == fs.state


def test_from_state_rejects_oversized():
    fp = TightParams(64, limit=40)
    bits, _ = random_state(fp, 3)
    bits[:, :6] = True
    with pytest.raises(BudgetExceeded):
        FishmongerSketch.from_state(fp, bits)


def test_merge():
    a = FishmongerSketch(FP, 9).update(np.arange(0, 3000, dtype=np.uint64))
    b = FishmongerSketch(FP, 9).update(np.arange(2000, 6000, dtype=np.uint64))
    whole = FishmongerSketch(FP, 9).update(np.arange(6000, dtype=np.uint64))
    assert a.merge(b) == whole
    with pytest.raises(IncompatibleSketches):
        a.merge(FishmongerSketch(FP, 10))


@given(st.integers(0, 2**32), st.integers(0, 5000))
def test_serialize_roundtrip(seed, n):
    fs = FishmongerSketch(FP, seed).update(np.arange(n, dtype=np.uint64))
    back = fishmonger.deserialize(fishmonger.serialize(fs))
    assert back == fs
    assert back.payload_bits == fs.payload_bits


def test_wrong_lambda_tilde_detected():
    fs = FishmongerSketch(FP, 1).update(np.arange(4000, dtype=np.uint64))
    data = fishmonger.serialize(fs)
    fields = list(_HEADER.unpack_from(data))
    fields[6] ^= 0x155  # mantissa of the stored estimate
    body = _HEADER.pack(*fields) + data[_HEADER.size:-4]
    # the writer's checksum covers the state it meant to store
    crc = zlib.crc32(np.packbits(fs.state.bits.reshape(-1), bitorder="little").tobytes(), zlib.crc32(body))
    with pytest.raises(FishmongerFormatError):
        fishmonger.deserialize(body + struct.pack("<I", crc))
    # decoding under the wrong model gives a different state or a coding error
    wrong = fs.estimate() * 1.5
    try:
        other = fishmonger.decode(fs.payload, wrong, FP, 1)
    except coder.CodingError:
        return
    assert other != fs.state


def test_corrupt_files(tmp_path):
    fs = FishmongerSketch(FP, 1).update(range(100))
    data = fishmonger.serialize(fs)
    with pytest.raises(FishmongerFormatError):
        fishmonger.deserialize(b"XXXX" + data[4:])
    with pytest.raises(FishmongerFormatError):
        fishmonger.deserialize(data[:-3])
    flipped = bytearray(data)
    flipped[_HEADER.size + 1] ^= 0x10
    with pytest.raises(FishmongerFormatError):
        fishmonger.deserialize(bytes(flipped))
    path = tmp_path / "f.fmgr"
    fishmonger.save(fs, path)
    assert fishmonger.load(path) == fs
