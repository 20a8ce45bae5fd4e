"""Carry-less binary arithmetic coder with a per-symbol fixed-point model.

The coder keeps a 32-bit interval [low, high] and emits one bit per
renormalization shift, deferring bits while the interval straddles the
midpoint (the Witten-Neal-Cleary scheme).  Each symbol brings its own
probability of a zero, given as an integer P0 in [PROB_MIN, 2^32 - PROB_MIN].

Length accounting: an encoding that performs N shifts emits exactly N + 2
bits, and the decoder performs the same N shifts, so it can tell a truncated
or padded stream apart from a well-formed one.  Since the interval never
shrinks below 2^30, the output is at most 2 bits longer than the ideal code
length under the fixed-point model.
"""

from __future__ import annotations

import math

import numba
import numpy as np

PRECISION = 32
ONE = 1 << PRECISION
PROB_MIN = 4  # 2^-30
PROB_MAX = ONE - PROB_MIN

_TOP = np.uint64(ONE - 1)
_HALF = np.uint64(1 << 31)
_QUARTER = np.uint64(1 << 30)
_THREE_Q = np.uint64(3 << 30)


class CodingError(ValueError):
    """Raised when a bit stream is not a well-formed encoding."""


def model_probs(p_zero) -> np.ndarray:
    """Fixed-point zero-probabilities for the coder, floored at 2^-30 on both sides."""
    fixed = np.rint(np.asarray(p_zero, dtype=float) * ONE)
    return np.clip(fixed, PROB_MIN, PROB_MAX).astype(np.uint64)


@numba.njit(cache=True)
def _encode(symbols, probs, out):
    low = np.uint64(0)
    high = _TOP
    pending = 0
    n = 0
    one = np.uint64(1)
    for k in range(symbols.shape[0]):
        rng = high - low + one
        split = low + ((rng * probs[k]) >> np.uint64(32)) - one
        if symbols[k]:
            low = split + one
        else:
            high = split
        while True:
            if high < _HALF:
                out[n] = 0
                n += 1
                for _ in range(pending):
                    out[n] = 1
                    n += 1
                pending = 0
            elif low >= _HALF:
                out[n] = 1
                n += 1
                for _ in range(pending):
                    out[n] = 0
                    n += 1
                pending = 0
                low -= _HALF
                high -= _HALF
            elif low >= _QUARTER and high < _THREE_Q:
                pending += 1
                low -= _QUARTER
                high -= _QUARTER
            else:
                break
            low = low << one
            high = (high << one) | one
    pending += 1
    if low < _QUARTER:
        out[n] = 0
        n += 1
        for _ in range(pending):
            out[n] = 1
            n += 1
    else:
        out[n] = 1
        n += 1
        for _ in range(pending):
            out[n] = 0
            n += 1
    return n


@numba.njit(cache=True)
def _code_length(symbols, probs):
    low = np.uint64(0)
    high = _TOP
    shifts = 0
    one = np.uint64(1)
    for k in range(symbols.shape[0]):
        rng = high - low + one
        split = low + ((rng * probs[k]) >> np.uint64(32)) - one
        if symbols[k]:
            low = split + one
        else:
            high = split
        while True:
            if high < _HALF:
                pass
            elif low >= _HALF:
                low -= _HALF
                high -= _HALF
            elif low >= _QUARTER and high < _THREE_Q:
                low -= _QUARTER
                high -= _QUARTER
            else:
                break
            low = low << one
            high = (high << one) | one
            shifts += 1
    return shifts + 2


@numba.njit(cache=True)
def _decode(stream, nbits, probs, out):
    """Returns the number of shifts performed, or -1 if the stream ran dry."""
    one = np.uint64(1)
    low = np.uint64(0)
    high = _TOP
    value = np.uint64(0)
    pos = 0
    for _ in range(32):
        b = stream[pos] if pos < nbits else 0
        value = (value << one) | np.uint64(b)
        pos += 1
    shifts = 0
    for k in range(probs.shape[0]):
        rng = high - low + one
        split = low + ((rng * probs[k]) >> np.uint64(32)) - one
        if value <= split:
            out[k] = 0
            high = split
        else:
            out[k] = 1
            low = split + one
        while True:
            if high < _HALF:
                pass
            elif low >= _HALF:
                low -= _HALF
                high -= _HALF
                value -= _HALF
            elif low >= _QUARTER and high < _THREE_Q:
                low -= _QUARTER
                high -= _QUARTER
                value -= _QUARTER
            else:
                break
            low = low << one
            high = (high << one) | one
            b = stream[pos] if pos < nbits else 0
            value = (value << one) | np.uint64(b)
            pos += 1
            shifts += 1
    return shifts


def _flat_symbols(symbols) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(symbols, dtype=np.uint8).ravel())


def _flat_probs(probs) -> np.ndarray:
    probs = np.ascontiguousarray(np.asarray(probs).ravel())
    if probs.dtype != np.uint64:
        raise TypeError("probs must be fixed-point uint64; use model_probs()")
    if probs.size and (probs.min() < PROB_MIN or probs.max() > PROB_MAX):
        raise ValueError("fixed-point probability out of range")
    return probs


def encode_bits(symbols, probs) -> np.ndarray:
    """Encode binary symbols; returns the code as a uint8 array of 0/1."""
    sym = _flat_symbols(symbols)
    pr = _flat_probs(probs)
    if sym.shape != pr.shape:
        raise ValueError(f"{sym.size} symbols but {pr.size} probabilities")
    out = np.empty(sym.size * (PRECISION + 1) + 64, dtype=np.uint8)
    n = _encode(sym, pr, out)
    return out[:n].copy()


def code_length(symbols, probs) -> int:
    """Exact length in bits of :func:`encode_bits` output, without building it."""
    sym = _flat_symbols(symbols)
    pr = _flat_probs(probs)
    if sym.shape != pr.shape:
        raise ValueError(f"{sym.size} symbols but {pr.size} probabilities")
    return int(_code_length(sym, pr))


def decode_bits(code, probs) -> np.ndarray:
    """Inverse of :func:`encode_bits`; ``probs`` fixes the number of symbols."""
    pr = _flat_probs(probs)
    stream = np.ascontiguousarray(np.asarray(code, dtype=np.uint8))
    out = np.empty(pr.size, dtype=np.uint8)
    shifts = _decode(stream, stream.size, pr, out)
    if shifts + 2 != stream.size:
        what = "truncated" if shifts + 2 > stream.size else "over-long"
        raise CodingError(f"{what} code: {stream.size} bits, expected {shifts + 2}")
    return out


def pack(code: np.ndarray) -> bytes:
    return np.packbits(np.asarray(code, dtype=np.uint8), bitorder="little").tobytes()


def unpack(data: bytes, nbits: int) -> np.ndarray:
    if 8 * len(data) < nbits:
        raise CodingError(f"{len(data)} bytes cannot hold {nbits} bits")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=nbits, bitorder="little")


def ideal_length(symbols, p_zero) -> float:
    """-log2 of the symbols' probability under the exact (unrounded) model."""
    sym = np.asarray(symbols, dtype=bool).ravel()
    p0 = np.asarray(p_zero, dtype=float).ravel()
    with np.errstate(divide="ignore"):
        cost = np.where(sym, np.log2(-np.expm1(np.log(p0))), np.log2(p0))
    return float(-math.fsum(cost))
