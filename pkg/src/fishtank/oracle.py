"""Deterministic stand-in for the random oracle.

Every random quantity used by a sketch is a pure function of
``(seed, element, label, index)``.  The tuple is folded through the
splitmix64 finalizer, which is cheap, vectorizes over numpy ``uint64`` arrays
and passes the usual avalanche tests.  Nothing here is cryptographic.
"""

from __future__ import annotations

import hashlib
import math

import numba
import numpy as np

MASK64 = (1 << 64) - 1

# Purpose labels.  One per use-site so that no two roles share randomness.
PCSA_BIT = 0
LL_KEEP = 1
LL_VALUE = 2
POISSON = 3
HBB_COLUMN = 4
HBB_LEVEL = 5
OFFSET = 6
POISSON_COPY = 7

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INDEX_SALT = np.uint64(0xD6E8FEB86659FD93)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0**-53


def mix64(x):
    """splitmix64 finalizer, elementwise on uint64 data (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> _S30)) * _M1
        x = (x ^ (x >> _S27)) * _M2
        return x ^ (x >> _S31)


def _u64(v) -> np.ndarray:
    if isinstance(v, (int, np.integer)):
        return np.asarray(int(v) & MASK64, dtype=np.uint64)
    arr = np.asarray(v)
    if arr.dtype == np.uint64:
        return arr
    if arr.dtype.kind in "iu":
        return arr.astype(np.uint64)
    return np.asarray(arr, dtype=object).astype(np.uint64)


def stream_key(seed, element, label):
    """Per-(seed, element, label) key; broadcasts over ``element``."""
    with np.errstate(over="ignore"):
        base = mix64(_u64(seed) + _GOLDEN)
        h = mix64(base ^ _u64(element))
        return mix64(h + np.uint64(label + 1) * _GOLDEN)


def index_keys(index):
    with np.errstate(over="ignore"):
        return mix64(_u64(index) * _GOLDEN + _INDEX_SALT)


def hash64(seed, element, label, index):
    """64-bit oracle word for each broadcast ``(element, index)`` pair."""
    return mix64(stream_key(seed, element, label) ^ index_keys(index))


def to_unit(h) -> np.ndarray:
    """Map 64-bit words to reals in (0, 1] with 53 bits of precision."""
    return ((np.asarray(h, dtype=np.uint64) >> _S11) + np.uint64(1)).astype(np.float64) * _TWO_M53


@numba.njit(cache=True)
def _mix_scalar(x):
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@numba.njit(cache=True)
def bernoulli_grid(stream_keys, keys, probs):
    """out[n, k] = uniform(stream n, index key k) <= probs[k].

    Fused equivalent of ``to_unit(mix64(stream_keys[:, None] ^ keys)) <= probs``.
    """
    n = stream_keys.shape[0]
    K = keys.shape[0]
    out = np.empty((n, K), dtype=np.bool_)
    scale = 2.0**-53
    for a in range(n):
        s = stream_keys[a]
        for k in range(K):
            h = _mix_scalar(s ^ keys[k])
            u = (np.float64(h >> np.uint64(11)) + 1.0) * scale
            out[a, k] = u <= probs[k]
    return out


def uniforms(seed, element, label, index) -> np.ndarray:
    """Vectorized :func:`uniform`; ``element`` and ``index`` broadcast."""
    return to_unit(hash64(seed, element, label, index))


def uniform(seed: int, element: int, label: int, index: int) -> float:
    """One oracle draw in (0, 1]."""
    return float(uniforms(seed, element, label, index))


# Poisson(1) by CDF inversion.  Tail mass beyond 25 is below 1e-25.
_POISSON_CDF = np.cumsum([math.exp(-1.0) / math.factorial(k) for k in range(26)])
_POISSON_CDF[-1] = 1.0


def poisson_multiplicities(seed, elements) -> np.ndarray:
    u = uniforms(seed, elements, POISSON, 0)
    return np.searchsorted(_POISSON_CDF, u, side="left").astype(np.int64)


def poisson_multiplicity(seed: int, element: int) -> int:
    """Number of copies of ``element`` under the Poissonized insertion mode."""
    return int(poisson_multiplicities(seed, element))


def poissonize(seed: int, elements):
    """Expand a stream of elements into the Poissonized stream of sub-elements.

    Element ``a`` becomes ``xi_a ~ Poisson(1)`` distinct sub-elements
    ``(a, 1), ..., (a, xi_a)``, each given its own 64-bit id.
    """
    for a in elements:
        a = int(a)
        for c in range(1, poisson_multiplicity(seed, a) + 1):
            yield int(hash64(seed, a, POISSON_COPY, c))


def element_id(token: str) -> int:
    """Universe element for a token read from a text stream.

    Decimal integers in [0, 2^64) map to themselves; anything else is hashed.
    """
    token = token.strip()
    try:
        v = int(token)
    except ValueError:
        return int.from_bytes(hashlib.blake2b(token.encode(), digest_size=8).digest(), "little")
    if 0 <= v <= MASK64:
        return v
    return int.from_bytes(hashlib.blake2b(token.encode(), digest_size=8).digest(), "little")


def subseed(seed: int, trial: int) -> int:
    """Per-trial seed: the trial index is mixed into the master seed."""
    return int(mix64(np.uint64(seed & MASK64) ^ mix64(np.uint64(trial & MASK64) + _GOLDEN)))


def rng_for(seed: int, trial: int = 0) -> np.random.Generator:
    return np.random.default_rng(subseed(seed, trial))


@numba.njit(cache=True)
def _stream_key_scalar(seed, element, label):
    golden = np.uint64(0x9E3779B97F4A7C15)
    base = _mix_scalar(seed + golden)
    h = _mix_scalar(base ^ element)
    return _mix_scalar(h + np.uint64(label + 1) * golden)


@numba.njit(cache=True)
def hash_scalar(seed, element, label, index):
    """Scalar, jit-compiled :func:`hash64` for use inside other kernels."""
    ik = _mix_scalar(index * np.uint64(0x9E3779B97F4A7C15) + np.uint64(0xD6E8FEB86659FD93))
    return _mix_scalar(_stream_key_scalar(seed, element, label) ^ ik)
