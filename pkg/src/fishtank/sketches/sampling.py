"""Exact samplers for sketch states at a given cardinality.

Streaming lambda elements one by one is the reference behaviour, but
Monte-Carlo studies at lambda ~ 2^24 cannot afford it.  Because every
element draws independent cells, the final state has a closed-form law:

* PCSA: bits independent, Pr(bit = 0) = (1 - p)^lambda, or exp(-lambda p)
  when Poissonized.
* LL: register i is the max of K_i iid candidates, where K_i is the number
  of elements not withheld: Binomial(lambda, q^-r_i), or Poisson.
* PCSA trajectories: the first element hitting cell (i, j) arrives at an
  independent Geometric(p_ij) time.
"""

from __future__ import annotations

import math

import numpy as np

from .loglog import LogLogSketch
from .params import SketchParams, cell_probs, keep_probs
from .pcsa import PcsaSketch


def sample_pcsa_bits(params: SketchParams, lam: float, rng: np.random.Generator,
                     seed: int = 0, poissonize: bool = False, size: int | None = None) -> np.ndarray:
    p = cell_probs(params, seed)
    if poissonize:
        p0 = np.exp(-lam * p)
    elif lam > 0:
        with np.errstate(divide="ignore"):
            p0 = np.exp(lam * np.log1p(-p))
    else:
        p0 = np.ones_like(p)
    shape = p.shape if size is None else (size,) + p.shape
    return rng.random(shape) >= p0


def sample_pcsa(params: SketchParams, lam: float, rng: np.random.Generator,
                seed: int = 0, poissonize: bool = False) -> PcsaSketch:
    return PcsaSketch(params, seed, sample_pcsa_bits(params, lam, rng, seed, poissonize))


def sample_ll_registers(params: SketchParams, lam: float, rng: np.random.Generator,
                        seed: int = 0, poissonize: bool = False, size: int | None = None) -> np.ndarray:
    keep = keep_probs(params, seed)
    shape = keep.shape if size is None else (size,) + keep.shape
    lam_int = int(round(lam))
    if poissonize:
        K = rng.poisson(lam * keep, size=shape)
    else:
        K = rng.binomial(lam_int, np.broadcast_to(keep, shape))
    u = rng.random(shape)
    regs = np.zeros(shape, dtype=np.int64)
    pos = K > 0
    if np.any(pos):
        # smallest k with (1 - q^-(k+1))^K >= u
        y = -np.expm1(np.log(u[pos]) / K[pos])
        k = np.ceil(-np.log(y) / math.log(params.q)) - 1.0
        regs[pos] = np.clip(k, 0, params.W).astype(np.int64)
    return regs


def sample_ll(params: SketchParams, lam: float, rng: np.random.Generator,
              seed: int = 0, poissonize: bool = False) -> LogLogSketch:
    return LogLogSketch(params, seed, sample_ll_registers(params, lam, rng, seed, poissonize))


def geometric_times(p: np.ndarray, rng: np.random.Generator, after=0.0) -> np.ndarray:
    """Index of the first success in iid Bernoulli(p) trials after ``after``.

    Returned as float64 so that tiny p cannot overflow an integer type.
    """
    u = 1.0 - rng.random(np.shape(p))  # (0, 1]
    with np.errstate(divide="ignore"):
        t = np.ceil(np.log(u) / np.log1p(-np.minimum(p, 1.0)))
    t = np.where(p >= 1.0, 1.0, np.maximum(t, 1.0))
    return after + t


def pcsa_hit_times(params: SketchParams, rng: np.random.Generator, seed: int = 0) -> np.ndarray:
    """Arrival index of the first element hitting each cell, shape (m, W)."""
    return geometric_times(cell_probs(params, seed), rng)
