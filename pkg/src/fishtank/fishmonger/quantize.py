"""Short floating-point codes for the stored cardinality estimate.

A nonzero value is (1 + mantissa / 2^M) * 2^exponent with an implicit leading
bit.  Quantization rounds *up*, so the decoded value never undershoots the
estimate and overshoots it by at most a factor 1 + 2^-M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class QuantizedEstimate:
    mantissa: int
    exponent: int
    mantissa_bits: int
    zero: bool = False

    @property
    def value(self) -> float:
        if self.zero:
            return 0.0
        return math.ldexp((1 << self.mantissa_bits) + self.mantissa, self.exponent - self.mantissa_bits)

    def __float__(self):
        return self.value


def quantize(lam: float, mantissa_bits: int) -> QuantizedEstimate:
    """Smallest representable value >= lam."""
    if lam < 0 or not math.isfinite(lam):
        raise ValueError(f"cannot quantize {lam}")
    if lam == 0:
        return QuantizedEstimate(0, 0, mantissa_bits, zero=True)
    _, e = math.frexp(lam)
    e -= 1  # lam in [2^e, 2^(e+1))
    full = math.ceil(math.ldexp(lam, mantissa_bits - e))  # exact: power-of-two scaling
    if full == 1 << (mantissa_bits + 1):
        full >>= 1
        e += 1
    return QuantizedEstimate(full - (1 << mantissa_bits), e, mantissa_bits)


class ExponentCodec:
    """Fixed-width exponent field over [e_min, e_max]; code 0 means the value 0."""

    def __init__(self, lam_min: float, lam_max: float):
        self.e_min = math.frexp(lam_min)[1] - 2
        self.e_max = math.frexp(lam_max)[1] + 1
        self.bits = (self.e_max - self.e_min + 1).bit_length()

    def encode(self, q: QuantizedEstimate) -> int:
        if q.zero:
            return 0
        if not self.e_min <= q.exponent <= self.e_max:
            raise ValueError(f"exponent {q.exponent} outside [{self.e_min}, {self.e_max}]")
        return q.exponent - self.e_min + 1

    def decode(self, code: int, mantissa: int, mantissa_bits: int) -> QuantizedEstimate:
        if code == 0:
            if mantissa:
                raise ValueError("zero estimate with nonzero mantissa")
            return QuantizedEstimate(0, 0, mantissa_bits, zero=True)
        if code > self.e_max - self.e_min + 1 or not 0 <= mantissa < (1 << mantissa_bits):
            raise ValueError("estimate field out of range")
        return QuantizedEstimate(mantissa, code - 1 + self.e_min, mantissa_bits)
