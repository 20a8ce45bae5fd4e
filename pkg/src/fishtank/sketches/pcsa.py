from __future__ import annotations

import functools
import math

import numpy as np

from .. import oracle
from .params import SketchParams, cell_probs


class IncompatibleSketches(ValueError):
    pass


def head_width(params: SketchParams, budget: float = 0.05) -> int:
    """Columns drawn cell-by-cell; the rest share one trigger draw per row.

    Chosen so that an element triggers a tail draw in fewer than ``budget``
    rows on average.
    """
    q, m = params.q, params.m
    factor = m * q / (q - 1.0)
    j = max(1, math.ceil(math.log(factor / budget) / math.log(q)))
    return min(params.W, j)


class _HitModel:
    """Per-(params, seed) tables for drawing an element's hit matrix Z."""

    def __init__(self, params: SketchParams, seed: int):
        self.params = params
        self.seed = seed
        m, W = params.m, params.W
        p = cell_probs(params, seed)
        self.J0 = J0 = head_width(params)
        rows = np.arange(m)
        self.head_index = (rows[:, None] * W + np.arange(J0)[None, :]).ravel()
        self.head_keys = oracle.index_keys(self.head_index)
        self.head_p = p[:, :J0].ravel()
        if J0 < W:
            tail = p[:, J0:]
            # at_least_one[i, t]: Pr(some tail bit in columns >= J0 + t is set)
            log_none = np.cumsum(np.log1p(-tail)[:, ::-1], axis=1)[:, ::-1]
            at_least_one = -np.expm1(log_none)
            self.tail_any = at_least_one[:, 0]
            self.tail_p = tail
            self.tail_cond = np.minimum(1.0, tail / np.where(at_least_one > 0, at_least_one, 1.0))
            self.trigger_keys = oracle.index_keys(m * W + rows)

    def draw(self, elements: np.ndarray) -> np.ndarray:
        params = self.params
        m, W, J0 = params.m, params.W, self.J0
        n = elements.shape[0]
        Z = np.zeros((n, m, W), dtype=bool)
        skeys = oracle.stream_key(self.seed, elements, oracle.PCSA_BIT)
        Z[:, :, :J0] = oracle.bernoulli_grid(skeys, self.head_keys, self.head_p).reshape(n, m, J0)
        if J0 == W:
            return Z
        ut = oracle.to_unit(oracle.mix64(skeys[:, None] ^ self.trigger_keys[None, :]))
        en, ei = np.nonzero(ut <= self.tail_any[None, :])
        if en.size == 0:
            return Z
        # Resolve triggered rows column by column, conditioned on at least
        # one tail hit until the first hit is drawn.
        cond = np.ones(en.size, dtype=bool)
        for t in range(W - J0):
            j = J0 + t
            keys = oracle.index_keys(ei * W + j)
            v = oracle.to_unit(oracle.mix64(skeys[en] ^ keys))
            thr = np.where(cond, self.tail_cond[ei, t], self.tail_p[ei, t])
            hit = v <= thr
            Z[en, ei, j] = hit
            cond &= ~hit
        return Z


_hit_model = functools.lru_cache(maxsize=64)(_HitModel)


def hit_matrices(params: SketchParams, seed: int, elements) -> np.ndarray:
    """Boolean Z matrices, shape (n, m, W); Z(i, j) = 1 w.p. q^-(j + r_i)."""
    elements = oracle._u64(np.atleast_1d(np.asarray(elements))).reshape(-1)
    return _hit_model(params, int(seed)).draw(elements)


def _chunks(params: SketchParams, elements):
    arr = np.asarray(elements)
    if arr.dtype.kind not in "iu":
        arr = np.asarray(list(elements), dtype=object).astype(np.uint64)
    arr = oracle._u64(arr.reshape(-1))
    step = max(1, (1 << 20) // (params.m * max(1, head_width(params))))
    for s in range(0, arr.shape[0], step):
        yield arr[s : s + step]


class PcsaSketch:
    """m rows of base-q PCSA bits, rows offsetted by r_i.

    Insertion ORs the element's random matrix Z into the state, so the state is
    monotone, idempotent and order-independent.
    """

    kind = "pcsa"

    def __init__(self, params: SketchParams, seed: int = 0, bits=None):
        self.params = params
        self.seed = int(seed)
        if bits is None:
            bits = np.zeros((params.m, params.W), dtype=bool)
        else:
            bits = np.array(bits, dtype=bool)
            if bits.shape != (params.m, params.W):
                raise ValueError(f"bits shape {bits.shape} != {(params.m, params.W)}")
        self.bits = bits

    @property
    def probs(self) -> np.ndarray:
        return cell_probs(self.params, self.seed)

    def hits(self, element) -> np.ndarray:
        return hit_matrices(self.params, self.seed, [element])[0]

    def insert(self, element) -> bool:
        """Insert one element; returns whether the state changed."""
        z = self.hits(element)
        new = z & ~self.bits
        if not new.any():
            return False
        self.bits |= new
        return True

    def update(self, elements) -> "PcsaSketch":
        for chunk in _chunks(self.params, elements):
            self.bits |= hit_matrices(self.params, self.seed, chunk).any(axis=0)
        return self

    def merge(self, other: "PcsaSketch") -> "PcsaSketch":
        check_compatible(self, other)
        return PcsaSketch(self.params, self.seed, self.bits | other.bits)

    def transition_probability(self) -> float:
        """Probability that an unseen element changes the state."""
        p = self.probs[~self.bits]
        if p.size == 0:
            return 0.0
        if np.any(p >= 1.0):
            return 1.0
        return float(-np.expm1(np.sum(np.log1p(-p))))

    def is_empty(self) -> bool:
        return not self.bits.any()

    def copy(self) -> "PcsaSketch":
        return PcsaSketch(self.params, self.seed, self.bits.copy())

    def __eq__(self, other):
        if not isinstance(other, PcsaSketch):
            return NotImplemented
        return (
            self.params == other.params
            and self.seed == other.seed
            and np.array_equal(self.bits, other.bits)
        )

    def __repr__(self):
        p = self.params
        return f"PcsaSketch(q={p.q:g}, m={p.m}, W={p.W}, offsets={p.offsets.name}, ones={int(self.bits.sum())})"


def check_compatible(a, b) -> None:
    if type(a) is not type(b):
        raise IncompatibleSketches(f"cannot merge {type(a).__name__} with {type(b).__name__}")
    if a.params != b.params:
        raise IncompatibleSketches(f"parameter mismatch: {a.params} vs {b.params}")
    if a.seed != b.seed:
        raise IncompatibleSketches(f"seed mismatch: {a.seed} vs {b.seed}")
