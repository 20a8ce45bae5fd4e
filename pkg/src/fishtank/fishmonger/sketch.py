"""Entropy-compressed, smoothed base-e PCSA with a hard space budget.

The stored sketch is a quantized MLE lambda~ plus the PCSA bit matrix,
arithmetic-coded under the sketch's own model law at lambda~: bit (i, j) is
zero with probability exp(-lambda~ e^-(j + i/m)).  An insertion that would
push the code past the budget is rolled back.

Serialized layout (little-endian)::

    magic "FMGR" | version u8 | m u32 | U_bits u16 | delta f64 | seed u64 |
    mantissa u32 | exponent code u16 | payload bit-length u32 |
    payload (LSB-first) | crc32 u32

The CRC covers the preceding bytes followed by the packed decoded state, so a
payload decoded under the wrong lambda~ fails the check.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .. import infotheory
from ..estimation import pcsa_mle
from ..sketches import IncompatibleSketches, OffsetMode, PcsaSketch, SketchParams
from ..sketches.params import cell_probs, default_width
from ..sketches.pcsa import _chunks, hit_matrices
from . import coder
from .quantize import ExponentCodec, QuantizedEstimate, quantize

MAGIC = b"FMGR"
VERSION = 1
_HEADER = struct.Struct("<4sBIHdQIHI")
HEADER_BITS = 8 * (_HEADER.size + 4) - 8 * struct.calcsize("<IH")  # estimate fields counted separately


class FishmongerFormatError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class FishmongerParams:
    m: int
    U_bits: int = 64
    delta: float = 0.05

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"m must be at least 2, got {self.m}")
        if self.U_bits < 1:
            raise ValueError(f"U_bits must be positive, got {self.U_bits}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")

    @property
    def W(self) -> int:
        return default_width(math.e, self.U_bits)

    @property
    def sketch_params(self) -> SketchParams:
        return SketchParams(q=math.e, m=self.m, W=self.W, offsets=OffsetMode.UNIFORM)

    @property
    def mantissa_bits(self) -> int:
        return math.ceil(math.log2(self.m * self.U_bits))

    @property
    def exponent_codec(self) -> ExponentCodec:
        return ExponentCodec(1.0 / (self.m * self.W), math.e ** (self.W + 1))

    @property
    def estimate_bits(self) -> int:
        return self.mantissa_bits + self.exponent_codec.bits

    @property
    def slack_bits(self) -> int:
        m = self.m
        return math.ceil(2.0 * math.sqrt(m * math.log(m))) + math.ceil(math.log2(self.U_bits)) ** 2 + 64

    @property
    def budget_bits(self) -> int:
        return math.ceil((1.0 + self.delta) * self.m * infotheory.h0()) + self.slack_bits

    @property
    def payload_limit(self) -> int:
        return self.budget_bits - self.estimate_bits


def model_zero_probs(fp: FishmongerParams, lam_tilde: float, seed: int = 0) -> np.ndarray:
    return np.exp(-lam_tilde * cell_probs(fp.sketch_params, seed))


def encode(state: PcsaSketch | np.ndarray, lam_tilde: float, fp: FishmongerParams, seed: int = 0) -> np.ndarray:
    """Arithmetic code (0/1 array) of the bit matrix under the model at lam_tilde."""
    bits = state.bits if isinstance(state, PcsaSketch) else np.asarray(state, dtype=bool)
    return coder.encode_bits(bits, coder.model_probs(model_zero_probs(fp, lam_tilde, seed)))


def decode(code, lam_tilde: float, fp: FishmongerParams, seed: int = 0) -> PcsaSketch:
    sp = fp.sketch_params
    flat = coder.decode_bits(code, coder.model_probs(model_zero_probs(fp, lam_tilde, seed)))
    return PcsaSketch(sp, seed, flat.reshape(sp.m, sp.W).astype(bool))


class FishmongerSketch:
    """Single-writer sketch; ``state`` is a decoded cache of the payload."""

    def __init__(self, params: FishmongerParams, seed: int = 0):
        self.params = params
        self.seed = int(seed)
        self.state = PcsaSketch(params.sketch_params, self.seed)
        self.lambda_hat = 0.0
        self.lambda_tilde = quantize(0.0, params.mantissa_bits)
        self.revert_count = 0
        self.payload_bits = coder.code_length(self.state.bits, self._model(self.lambda_tilde))
        self._payload = None

    # -- core commit step, shared with the event-driven simulator

    def _model(self, lam_tilde: QuantizedEstimate) -> np.ndarray:
        return coder.model_probs(model_zero_probs(self.params, lam_tilde.value, self.seed))

    def try_commit(self, new_bits: np.ndarray) -> bool:
        """Adopt ``new_bits`` if it fits the budget, else count a revert."""
        candidate = PcsaSketch(self.state.params, self.seed, new_bits)
        warm = self.lambda_hat if self.lambda_hat > 0 else None
        lam_hat = pcsa_mle(candidate, warm_start=warm).lambda_hat
        lam_tilde = quantize(lam_hat, self.params.mantissa_bits)
        length = coder.code_length(new_bits, self._model(lam_tilde))
        if length > self.params.payload_limit:
            self.revert_count += 1
            return False
        self.state = candidate
        self.lambda_hat = lam_hat
        self.lambda_tilde = lam_tilde
        self.payload_bits = length
        self._payload = None
        return True

    def apply_hits(self, z: np.ndarray) -> bool:
        """Insert an element given its random matrix; True if the state changed."""
        new = z & ~self.state.bits
        if not new.any():
            return False  # nothing to re-encode
        return self.try_commit(self.state.bits | new)

    # -- public operations

    def insert(self, element) -> bool:
        return self.apply_hits(self.state.hits(element))

    def update(self, elements, on_insert=None) -> "FishmongerSketch":
        """Insert a stream; ``on_insert(sketch)`` runs after every element."""
        sp = self.state.params
        for chunk in _chunks(sp, elements):
            Z = hit_matrices(sp, self.seed, chunk)
            for k in range(Z.shape[0]):
                self.apply_hits(Z[k])
                if on_insert is not None:
                    on_insert(self)
        return self

    def estimate(self) -> float:
        return self.lambda_tilde.value

    def size_bits(self) -> int:
        return self.payload_bits + self.params.estimate_bits + HEADER_BITS

    @property
    def payload(self) -> np.ndarray:
        if self._payload is None:
            self._payload = coder.encode_bits(self.state.bits, self._model(self.lambda_tilde))
            assert self._payload.size == self.payload_bits
        return self._payload

    def decoded_state(self) -> PcsaSketch:
        return decode(self.payload, self.lambda_tilde.value, self.params, self.seed)

    @classmethod
    def from_state(cls, params: FishmongerParams, bits, seed: int = 0) -> "FishmongerSketch":
        """Sketch holding a given bit matrix; raises if it does not fit the budget."""
        fs = cls(params, seed)
        bits = np.asarray(bits, dtype=bool)
        if bits.any() and not fs.try_commit(bits.copy()):
            raise BudgetExceeded("state does not fit in the space budget")
        fs.revert_count = 0
        return fs

    def merge(self, other: "FishmongerSketch") -> "FishmongerSketch":
        if not isinstance(other, FishmongerSketch):
            raise IncompatibleSketches(f"cannot merge with {type(other).__name__}")
        if self.params != other.params or self.seed != other.seed:
            raise IncompatibleSketches("Fishmonger sketches differ in parameters or seed")
        return FishmongerSketch.from_state(self.params, self.state.bits | other.state.bits, self.seed)

    def copy(self) -> "FishmongerSketch":
        fs = FishmongerSketch.__new__(FishmongerSketch)
        fs.__dict__.update(self.__dict__)
        fs.state = self.state.copy()
        return fs

    def __eq__(self, other):
        if not isinstance(other, FishmongerSketch):
            return NotImplemented
        return (self.params == other.params and self.seed == other.seed
                and self.lambda_tilde == other.lambda_tilde and self.state == other.state)

    def __repr__(self):
        return (f"FishmongerSketch(m={self.params.m}, estimate={self.estimate():.6g}, "
                f"size={self.size_bits()}/{self.params.budget_bits + HEADER_BITS} bits, reverts={self.revert_count})")


# -- module-level aliases for the operations

def fm_insert(fs: FishmongerSketch, element) -> FishmongerSketch:
    fs.insert(element)
    return fs


def fm_estimate(fs: FishmongerSketch) -> float:
    return fs.estimate()


def fm_size_bits(fs: FishmongerSketch) -> int:
    return fs.size_bits()


# -- serialization

def serialize(fs: FishmongerSketch) -> bytes:
    fp = fs.params
    code = fs.payload
    head = _HEADER.pack(MAGIC, VERSION, fp.m, fp.U_bits, fp.delta, fs.seed,
                        fs.lambda_tilde.mantissa, fp.exponent_codec.encode(fs.lambda_tilde), code.size)
    body = head + coder.pack(code)
    crc = zlib.crc32(np.packbits(fs.state.bits.reshape(-1), bitorder="little").tobytes(), zlib.crc32(body))
    return body + struct.pack("<I", crc)


def deserialize(data: bytes) -> FishmongerSketch:
    if len(data) < _HEADER.size + 4:
        raise FishmongerFormatError("Fishmonger file too short")
    magic, version, m, U_bits, delta, seed, mant, ecode, nbits = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FishmongerFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FishmongerFormatError(f"unsupported version {version}")
    nbytes = (nbits + 7) // 8
    if len(data) != _HEADER.size + nbytes + 4:
        raise FishmongerFormatError(f"expected {_HEADER.size + nbytes + 4} bytes, got {len(data)}")
    try:
        fp = FishmongerParams(m, U_bits, delta)
        lam_tilde = fp.exponent_codec.decode(ecode, mant, fp.mantissa_bits)
        code = coder.unpack(data[_HEADER.size:_HEADER.size + nbytes], nbits)
        state = decode(code, lam_tilde.value, fp, seed)
    except ValueError as exc:
        raise FishmongerFormatError(str(exc)) from exc
    body = data[:-4]
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(np.packbits(state.bits.reshape(-1), bitorder="little").tobytes(), zlib.crc32(body)) != crc:
        raise FishmongerFormatError("checksum mismatch")
    fs = FishmongerSketch(fp, seed)
    fs.state = state
    fs.lambda_tilde = lam_tilde
    fs.lambda_hat = pcsa_mle(state).lambda_hat
    fs.payload_bits = nbits
    fs._payload = code
    return fs


def save(fs: FishmongerSketch, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(fs))


def load(path) -> FishmongerSketch:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
