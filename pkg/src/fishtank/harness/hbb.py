"""HyperBitBit: a small heuristic sketch whose state depends on insertion order.

The state is a level L and two 64-bit words S0, S1.  An element hashes to a
column j in [64] and a level k >= 1 with Pr(k) = 2^-k.  Feeding the sketch
the same set of elements in two different orders (all distinct once, versus
growing prefixes with repeats) gives visibly different estimate
distributions.

Repeats are simulated without replaying the quadratic-length prefix stream:
an element below the current level threshold can never act again (L only
grows), and after a pass over a prefix that caused no level change every
element is already absorbed, so the next pass only applies its new element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from numba.cpython.unsafe.numbers import trailing_zeros

from .. import oracle

WORD = 64
K_MAX = 62
ESTIMATE_SHIFT = 5.4
ROTATE_AT = 32
# An element sets S0(j) when k >= L + LEVEL_OFFSET (and S1(j) one level up).
# With Pr(k) = 2^-k this fires with probability 2^-(L+1), the rate for which
# 2^(L + 5.4) is the cardinality at which level L is entered.
LEVEL_OFFSET = 2


@dataclass
class HyperBitBitState:
    L: int = 0
    S0: int = 0
    S1: int = 0

    def weight(self) -> int:
        return bin(self.S0).count("1")


def hbb_hash(seed: int, element: int) -> tuple[int, int]:
    """(j, k): j uniform in [0, 64), k >= 1 with Pr(k) = 2^-k, clamped at 62."""
    j = int(oracle.hash64(seed, element, oracle.HBB_COLUMN, 0)) & (WORD - 1)
    h = int(oracle.hash64(seed, element, oracle.HBB_LEVEL, 0))
    return j, _level(h)


def _level(h: int) -> int:
    if h == 0:
        return K_MAX
    return min(1 + ((h & -h).bit_length() - 1), K_MAX)


def hbb_insert(state: HyperBitBitState, seed: int, element: int,
               level_offset: int = LEVEL_OFFSET) -> HyperBitBitState:
    j, k = hbb_hash(seed, element)
    return hbb_apply(state, j, k, level_offset)


def hbb_apply(state: HyperBitBitState, j: int, k: int, level_offset: int = LEVEL_OFFSET) -> HyperBitBitState:
    L, S0, S1 = state.L, state.S0, state.S1
    if k >= L + level_offset:
        S0 |= 1 << j
    if k >= L + level_offset + 1:
        S1 |= 1 << j
    # a rotation can leave S0 full again (S1 == S0), so repeat until it holds
    while bin(S0).count("1") >= ROTATE_AT:
        L, S0, S1 = L + 1, S1, 0
    return HyperBitBitState(L, S0, S1)


def hbb_estimate(state: HyperBitBitState) -> float:
    return 2.0 ** (state.L + ESTIMATE_SHIFT + bin(state.S0).count("1") / 32.0)


def gen_sequence(kind: str, lam: int):
    """A_lo = 1, 2, ..., lam.  A_hi = prefixes (1..2), (1..3), ..., (1..lam)."""
    if lam < 1:
        raise ValueError("lambda must be at least 1")
    if kind == "lo":
        yield from range(1, lam + 1)
    elif kind == "hi":
        if lam == 1:
            yield 1
            return
        for n in range(2, lam + 1):
            yield from range(1, n + 1)
    else:
        raise ValueError(f"sequence kind must be 'lo' or 'hi', not {kind!r}")


# ---------------------------------------------------------------- fast path

@numba.njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - np.uint64(1)
        c += 1
    return c


@numba.njit(cache=True)
def _levels(seed, lam):
    ks = np.empty(lam + 1, dtype=np.int64)
    ks[0] = 0
    for a in range(1, lam + 1):
        h = oracle.hash_scalar(seed, np.uint64(a), 5, np.uint64(0))  # HBB_LEVEL
        if h == np.uint64(0):
            ks[a] = K_MAX
        else:
            ks[a] = min(1 + trailing_zeros(h), K_MAX)
    return ks


@numba.njit(cache=True)
def _column(seed, a):
    return oracle.hash_scalar(seed, np.uint64(a), 4, np.uint64(0)) & np.uint64(WORD - 1)  # HBB_COLUMN


@numba.njit(cache=True)
def _apply(seed, a, k, js, L, S0, S1, off):
    """One insertion of element a (level k); returns (L, S0, S1, rotated)."""
    if js[a] < 0:
        js[a] = np.int64(_column(seed, a))
    bit = np.uint64(1) << np.uint64(js[a])
    S0 |= bit
    if k >= L + off + 1:
        S1 |= bit
    rotated = False
    while _popcount(S0) >= ROTATE_AT:
        L += 1
        S0 = S1
        S1 = np.uint64(0)
        rotated = True
    return L, S0, S1, rotated


@numba.njit(cache=True)
def _done(L, S0, until_L, until_w):
    return until_L >= 0 and (L > until_L or (L == until_L and _popcount(S0) >= until_w))


@numba.njit(cache=True)
def _run_lo(seed, lam, until_L, until_w, off):
    ks = _levels(seed, lam)
    js = np.full(lam + 1, -1, dtype=np.int64)
    L = 0
    S0 = np.uint64(0)
    S1 = np.uint64(0)
    for a in range(1, lam + 1):
        if ks[a] >= L + off:
            L, S0, S1, _ = _apply(seed, a, ks[a], js, L, S0, S1, off)
            if _done(L, S0, until_L, until_w):
                return L, S0, S1, a
    return L, S0, S1, -1


@numba.njit(cache=True)
def _run_hi(seed, lam, until_L, until_w, off):
    ks = _levels(seed, lam)
    js = np.full(lam + 1, -1, dtype=np.int64)
    L = 0
    S0 = np.uint64(0)
    S1 = np.uint64(0)
    # elements that may still matter (k >= L), ascending; shrinks as L grows
    cand = np.arange(1, lam + 1)
    ncand = lam
    cand_L = 0
    dirty = True
    for n in range(min(2, lam), lam + 1):
        rotated = False
        if dirty:
            # replay the whole prefix; only elements with k >= L can act
            for i in range(ncand):
                a = cand[i]
                if a > n:
                    break
                if ks[a] >= L + off:
                    L, S0, S1, r = _apply(seed, a, ks[a], js, L, S0, S1, off)
                    rotated = rotated or r
                    if _done(L, S0, until_L, until_w):
                        # distinct elements seen so far: the prefix before n, plus n itself if reached
                        return L, S0, S1, max(n - 1, a)
        elif ks[n] >= L + off:
            L, S0, S1, rotated = _apply(seed, n, ks[n], js, L, S0, S1, off)
            if _done(L, S0, until_L, until_w):
                return L, S0, S1, n
        if L != cand_L:
            m = 0
            for i in range(ncand):
                if ks[cand[i]] >= L + off:
                    cand[m] = cand[i]
                    m += 1
            ncand = m
            cand_L = L
        dirty = rotated
    return L, S0, S1, -1


def simulate(kind: str, lam: int, seed: int, until: tuple[int, int] | None = None,
             level_offset: int = LEVEL_OFFSET):
    """Final state after feeding gen_sequence(kind, lam), and the termination point."""
    if kind not in ("lo", "hi"):
        raise ValueError(f"sequence kind must be 'lo' or 'hi', not {kind!r}")
    uL, uw = until if until is not None else (-1, 0)
    run = _run_hi if kind == "hi" else _run_lo
    L, S0, S1, term = run(np.uint64(seed & oracle.MASK64), int(lam), uL, uw, int(level_offset))
    return HyperBitBitState(int(L), int(S0), int(S1)), int(term)


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance between empirical distributions."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.union1d(a, b)
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


@dataclass
class HbbReport:
    lam: int
    trials: int
    estimates: dict[str, np.ndarray]
    levels: dict[str, np.ndarray]
    hi_fraction: float
    lo_fraction: float
    ks_levels: float
    ks_estimates: float
    termination: dict[str, np.ndarray] | None = None

    def rows(self):
        """(lambda, statistic, value) rows for the CSV writer."""
        out = [
            (self.lam, "hi_fraction_ge_1.2", self.hi_fraction),
            (self.lam, "lo_fraction_le_0.8", self.lo_fraction),
            (self.lam, "ks_levels", self.ks_levels),
            (self.lam, "ks_estimates", self.ks_estimates),
        ]
        for kind in ("lo", "hi"):
            est = self.estimates[kind] / self.lam
            out.append((self.lam, f"{kind}_mean_ratio", float(est.mean())))
            out.append((self.lam, f"{kind}_median_ratio", float(np.median(est))))
            if self.termination is not None:
                t = self.termination[kind]
                done = t[t > 0]
                out.append((self.lam, f"{kind}_terminated", float(done.size)))
                out.append((self.lam, f"{kind}_mean_termination", float(done.mean()) if done.size else math.nan))
        for kind in ("lo", "hi"):
            counts, edges = histogram(self.estimates[kind] / self.lam)
            for c, lo_edge in zip(counts, edges[:-1]):
                out.append((self.lam, f"{kind}_hist_{lo_edge:.2f}", float(c)))
        return out


HIST_EDGES = np.round(np.arange(0.0, 3.01, 0.05), 2)


def histogram(ratios):
    r = np.clip(np.asarray(ratios, dtype=float), HIST_EDGES[0], HIST_EDGES[-1] - 1e-12)
    return np.histogram(r, bins=HIST_EDGES)


def run_hbb_demo(lam: int, trials: int, seed: int = 0, until: tuple[int, int] | None = None,
                 level_offset: int = LEVEL_OFFSET) -> HbbReport:
    """Feed both sequence kinds to `trials` independently hashed sketches."""
    if lam < 1 or trials < 1:
        raise ValueError("lambda and trials must be positive")
    estimates = {"lo": np.empty(trials), "hi": np.empty(trials)}
    levels = {"lo": np.empty(trials, dtype=np.int64), "hi": np.empty(trials, dtype=np.int64)}
    term = {"lo": np.empty(trials, dtype=np.int64), "hi": np.empty(trials, dtype=np.int64)}
    for t in range(trials):
        sub = oracle.subseed(seed, t)
        for kind in ("lo", "hi"):
            st, stop = simulate(kind, lam, sub, until, level_offset)
            estimates[kind][t] = hbb_estimate(st)
            levels[kind][t] = st.L
            term[kind][t] = stop
    return HbbReport(
        lam=lam,
        trials=trials,
        estimates=estimates,
        levels=levels,
        hi_fraction=float(np.mean(estimates["hi"] >= 1.2 * lam)),
        lo_fraction=float(np.mean(estimates["lo"] <= 0.8 * lam)),
        ks_levels=ks_statistic(levels["lo"], levels["hi"]),
        ks_estimates=ks_statistic(estimates["lo"], estimates["hi"]),
        termination=term if until is not None else None,
    )
