"""Space and accuracy audit of the Fishmonger sketch.

Three ways to drive a trial:

* ``events``: jump from one state change to the next.  Cell (i, j) is first
  hit by the element with index T_ij ~ Geometric(p_ij), independently across
  cells, so the whole trajectory is drawn exactly without hashing elements
  that change nothing.  A reverted cell is re-armed at t + Geometric(p_ij),
  which is the law of its next hit by memorylessness.
* ``stream``: insert the elements 0..lambda_max-1 through the oracle.
* ``final``: draw only the final state from its exact law and encode it; no
  per-insertion audit, but cheap enough for large-m accuracy studies.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .. import infotheory, oracle
from ..fishmonger import BudgetExceeded, FishmongerParams, FishmongerSketch
from ..fishmonger.sketch import HEADER_BITS
from ..sketches.params import cell_probs
from ..sketches.sampling import geometric_times, sample_pcsa_bits

MODES = ("events", "stream", "final")


@dataclass
class TrialTrace:
    estimate: float
    payload_bits: int
    max_size_bits: int
    reverts: int
    checkpoints: dict = field(default_factory=dict)  # cardinality -> size_bits


def checkpoints_for(lambda_max: int) -> list[int]:
    return [1 << k for k in range(int(math.log2(lambda_max)) + 1)] if lambda_max >= 1 else []


def _event_trial(fp: FishmongerParams, lambda_max: int, seed: int, rng: np.random.Generator) -> TrialTrace:
    fs = FishmongerSketch(fp, seed)
    p = cell_probs(fp.sketch_params, seed).ravel()
    times = geometric_times(p, rng)
    live = np.flatnonzero(times <= lambda_max)
    order = live[np.argsort(times[live], kind="stable")]
    queue = [(times[c], int(c)) for c in order]  # already sorted, so a valid heap
    marks = checkpoints_for(lambda_max)
    cp = {}
    mi = 0
    max_size = fs.size_bits()
    while queue:
        t = queue[0][0]
        while mi < len(marks) and marks[mi] < t:
            cp[marks[mi]] = fs.size_bits()
            mi += 1
        cells = []
        while queue and queue[0][0] == t:
            cells.append(heapq.heappop(queue)[1])
        new = fs.state.bits.copy().ravel()
        new[cells] = True
        if fs.try_commit(new.reshape(fs.state.bits.shape)):
            max_size = max(max_size, fs.size_bits())
        else:
            again = geometric_times(p[cells], rng, after=t)
            for c, t2 in zip(cells, again):
                if t2 <= lambda_max:
                    heapq.heappush(queue, (t2, c))
    for mark in marks[mi:]:
        cp[mark] = fs.size_bits()
    return TrialTrace(fs.estimate(), fs.payload_bits, max_size, fs.revert_count, cp)


def _stream_trial(fp: FishmongerParams, lambda_max: int, seed: int) -> TrialTrace:
    fs = FishmongerSketch(fp, seed)
    marks = set(checkpoints_for(lambda_max))
    cp = {}
    state = {"n": 0, "max": fs.size_bits()}

    def watch(sk):
        state["n"] += 1
        size = sk.size_bits()
        state["max"] = max(state["max"], size)
        if state["n"] in marks:
            cp[state["n"]] = size

    fs.update(np.arange(lambda_max, dtype=np.uint64), on_insert=watch)
    return TrialTrace(fs.estimate(), fs.payload_bits, state["max"], fs.revert_count, cp)


def _final_trial(fp: FishmongerParams, lambda_max: int, seed: int, rng: np.random.Generator) -> TrialTrace:
    bits = sample_pcsa_bits(fp.sketch_params, lambda_max, rng, seed)
    try:
        fs = FishmongerSketch.from_state(fp, bits, seed)
    except BudgetExceeded:
        # the final state alone would not fit; report it as one overflow
        return TrialTrace(math.nan, -1, -1, 1)
    size = fs.size_bits()
    return TrialTrace(fs.estimate(), fs.payload_bits, size, 0, {lambda_max: size})


@dataclass
class AuditReport:
    m: int
    lambda_max: int
    trials: int
    mode: str
    budget_bits: int
    header_bits: int
    max_size_bits: int
    revert_count: int
    std_error: float
    mean_ratio: float
    mean_payload_bits: float
    traces: list = field(repr=False, default_factory=list)

    @property
    def payload_per_row(self) -> float:
        return self.mean_payload_bits / self.m

    @property
    def bits_per_inverse_variance(self) -> float:
        """Stored payload bits times relative variance: bits per unit of precision."""
        return self.mean_payload_bits * self.std_error**2

    @property
    def within_budget(self) -> bool:
        return self.max_size_bits <= self.budget_bits + self.header_bits

    def checkpoint_table(self):
        marks = sorted({k for t in self.traces for k in t.checkpoints})
        for k in marks:
            sizes = [t.checkpoints[k] for t in self.traces if k in t.checkpoints]
            yield k, float(np.mean(sizes)), int(np.max(sizes))

    def rows(self):
        lam = self.lambda_max
        out = [
            (lam, "budget_bits", self.budget_bits),
            (lam, "header_bits", self.header_bits),
            (lam, "max_size_bits", self.max_size_bits),
            (lam, "revert_count", self.revert_count),
            (lam, "std_error", self.std_error),
            (lam, "reference_std_error", 0.77969 / math.sqrt(self.m)),
            (lam, "mean_ratio", self.mean_ratio),
            (lam, "mean_payload_bits", self.mean_payload_bits),
            (lam, "payload_per_row", self.payload_per_row),
            (lam, "bits_per_inverse_variance", self.bits_per_inverse_variance),
            (lam, "h0_over_i0", infotheory.h0() / infotheory.i0()),
        ]
        for k, mean, mx in self.checkpoint_table():
            out.append((k, "mean_size_bits", mean))
            out.append((k, "max_size_bits", mx))
        return out


def run_fishmonger_audit(m: int, lambda_max: int, trials: int, seed: int = 0, mode: str = "events",
                         U_bits: int = 64, delta: float = 0.05) -> AuditReport:
    if m < 64:
        raise ValueError("the audit is meant for m >= 64")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if trials < 1 or lambda_max < 1:
        raise ValueError("trials and lambda_max must be positive")
    fp = FishmongerParams(m, U_bits, delta)
    traces = []
    for t in range(trials):
        sub = oracle.subseed(seed, t)
        if mode == "events":
            traces.append(_event_trial(fp, lambda_max, sub, oracle.rng_for(sub, 0xF15)))
        elif mode == "stream":
            traces.append(_stream_trial(fp, lambda_max, sub))
        else:
            traces.append(_final_trial(fp, lambda_max, sub, oracle.rng_for(sub, 0xF15)))
    ok = [tr for tr in traces if tr.payload_bits >= 0]
    ratios = np.array([tr.estimate / lambda_max for tr in ok])
    return AuditReport(
        m=m,
        lambda_max=lambda_max,
        trials=trials,
        mode=mode,
        budget_bits=fp.budget_bits,
        header_bits=HEADER_BITS,
        max_size_bits=max(tr.max_size_bits for tr in traces),
        revert_count=sum(tr.reverts for tr in traces),
        std_error=float(np.std(ratios, ddof=1)) if ratios.size > 1 else 0.0,
        mean_ratio=float(ratios.mean()) if ratios.size else math.nan,
        mean_payload_bits=float(np.mean([tr.payload_bits for tr in ok])) if ok else math.nan,
        traces=traces,
    )
