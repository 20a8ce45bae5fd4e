from __future__ import annotations

import math

import numpy as np

from .. import oracle
from .params import SketchParams, keep_probs
from .pcsa import check_compatible


def candidates(params: SketchParams, seed: int, elements) -> np.ndarray:
    """Per-register candidate values, shape (n, m); withheld elements give -1.

    A kept element proposes c = clamp(ceil(-log_q u) - 1, 0, W), so that
    Pr(c > k) = q^-(k+1).
    """
    elements = oracle._u64(np.atleast_1d(np.asarray(elements))).reshape(-1)
    m = params.m
    idx = np.arange(m)
    keep = oracle.uniforms(seed, elements[:, None], oracle.LL_KEEP, idx[None, :]) <= keep_probs(params, seed)
    u = oracle.uniforms(seed, elements[:, None], oracle.LL_VALUE, idx[None, :])
    c = np.ceil(-np.log(u) / math.log(params.q)) - 1.0
    c = np.clip(c, 0, params.W).astype(np.int64)
    return np.where(keep, c, -1)


class LogLogSketch:
    """m offsetted base-q LogLog registers holding values in [0, W]."""

    kind = "ll"

    def __init__(self, params: SketchParams, seed: int = 0, registers=None):
        self.params = params
        self.seed = int(seed)
        if registers is None:
            registers = np.zeros(params.m, dtype=np.int64)
        else:
            registers = np.array(registers, dtype=np.int64)
            if registers.shape != (params.m,):
                raise ValueError(f"expected {params.m} registers, got shape {registers.shape}")
            if registers.min(initial=0) < 0 or registers.max(initial=0) > params.W:
                raise ValueError(f"register values must lie in [0, {params.W}]")
        self.registers = registers

    def insert(self, element) -> bool:
        c = candidates(self.params, self.seed, [element])[0]
        changed = c > self.registers
        if not changed.any():
            return False
        np.maximum(self.registers, c, out=self.registers)
        return True

    def update(self, elements) -> "LogLogSketch":
        arr = np.asarray(elements)
        if arr.dtype.kind not in "iu":
            arr = np.asarray(list(elements), dtype=object).astype(np.uint64)
        arr = arr.reshape(-1)
        step = max(1, (1 << 20) // self.params.m)
        for s in range(0, arr.shape[0], step):
            c = candidates(self.params, self.seed, arr[s : s + step])
            np.maximum(self.registers, c.max(axis=0), out=self.registers)
        return self

    def merge(self, other: "LogLogSketch") -> "LogLogSketch":
        check_compatible(self, other)
        return LogLogSketch(self.params, self.seed, np.maximum(self.registers, other.registers))

    def transition_probability(self) -> float:
        q, W = self.params.q, self.params.W
        S = self.registers
        p = keep_probs(self.params, self.seed) * np.power(q, -(S + 1.0))
        p = np.where(S >= W, 0.0, p)
        return float(-np.expm1(np.sum(np.log1p(-p))))

    def copy(self) -> "LogLogSketch":
        return LogLogSketch(self.params, self.seed, self.registers.copy())

    def __eq__(self, other):
        if not isinstance(other, LogLogSketch):
            return NotImplemented
        return (
            self.params == other.params
            and self.seed == other.seed
            and np.array_equal(self.registers, other.registers)
        )

    def __repr__(self):
        p = self.params
        return f"LogLogSketch(q={p.q:g}, m={p.m}, W={p.W}, offsets={p.offsets.name})"
