from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from .. import oracle


class OffsetMode(enum.IntEnum):
    NONE = 0
    UNIFORM = 1
    RANDOM = 2

    @classmethod
    def parse(cls, value) -> "OffsetMode":
        if isinstance(value, OffsetMode):
            return value
        if isinstance(value, str):
            return cls[value.strip().upper()]
        return cls(int(value))


def default_width(q: float, universe_bits: int = 64) -> int:
    """Columns needed to cover a universe of size 2**universe_bits in base q."""
    return max(1, math.ceil(universe_bits * math.log(2) / math.log(q) - 1e-12))


@dataclass(frozen=True)
class SketchParams:
    """Shape of a base-q sketch made of ``m`` offsetted copies.

    ``W`` is the number of PCSA columns, or the largest LL register value.
    """

    q: float = 2.0
    m: int = 64
    W: int | None = None
    offsets: OffsetMode = OffsetMode.NONE

    def __post_init__(self):
        if not self.q > 1.0:
            raise ValueError(f"base q must exceed 1, got {self.q}")
        if self.m < 1:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.W is None:
            object.__setattr__(self, "W", default_width(self.q))
        if self.W < 1:
            raise ValueError(f"W must be positive, got {self.W}")
        object.__setattr__(self, "offsets", OffsetMode.parse(self.offsets))
        object.__setattr__(self, "q", float(self.q))


@functools.lru_cache(maxsize=256)
def _offset_vector(params: SketchParams, seed: int) -> np.ndarray:
    m = params.m
    if params.offsets is OffsetMode.NONE:
        r = np.zeros(m)
    elif params.offsets is OffsetMode.UNIFORM:
        r = np.arange(m) / m
    else:
        # 1 - u maps the oracle's (0, 1] onto [0, 1)
        r = 1.0 - oracle.uniforms(seed, 0, oracle.OFFSET, np.arange(m))
    r.setflags(write=False)
    return r


def offset_vector(params: SketchParams, seed: int = 0) -> np.ndarray:
    """The offsets r_0..r_{m-1}; random offsets are a function of the seed."""
    return _offset_vector(params, int(seed))


@functools.lru_cache(maxsize=256)
def _cell_probs(params: SketchParams, seed: int) -> np.ndarray:
    r = offset_vector(params, seed)
    j = np.arange(params.W)
    p = np.power(params.q, -(j[None, :] + r[:, None]))
    p.setflags(write=False)
    return p


def cell_probs(params: SketchParams, seed: int = 0) -> np.ndarray:
    """Matrix of per-element hit probabilities q^-(j + r_i), shape (m, W)."""
    return _cell_probs(params, int(seed))


def pcsa_bit_prob(params: SketchParams, i: int, j: int, seed: int = 0) -> float:
    if not (0 <= i < params.m and 0 <= j < params.W):
        raise IndexError(f"cell ({i}, {j}) outside {params.m}x{params.W} sketch")
    return float(cell_probs(params, seed)[i, j])


def keep_probs(params: SketchParams, seed: int = 0) -> np.ndarray:
    """Per-register probability q^-r_i that an element is not withheld."""
    return np.power(params.q, -offset_vector(params, seed))
