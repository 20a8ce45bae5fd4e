"""Monte-Carlo standard-error studies over a grid of cardinalities."""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .. import estimation, oracle
from ..sketches import LogLogSketch, MartingaleSketch, OffsetMode, PcsaSketch, SketchParams
from ..sketches.sampling import sample_ll_registers, sample_pcsa_bits

QUANTILES = (1, 5, 25, 50, 75, 95, 99)
SKETCH_KINDS = ("pcsa", "ll", "martingale-pcsa", "martingale-ll")
ESTIMATORS = {
    "pcsa": ("mle",),
    "ll": ("mle", "harmonic", "geometric"),
    "martingale-pcsa": ("martingale",),
    "martingale-ll": ("martingale",),
}


@dataclass
class TrialConfig:
    sketch: str = "ll"
    q: float = 2.0
    m: int = 64
    offsets: OffsetMode = OffsetMode.NONE
    lambdas: list = field(default_factory=lambda: [1000])
    trials: int = 1000
    seed: int = 0
    estimator: str = "mle"
    W: int | None = None
    poissonize: bool = False
    mode: str = "sample"  # "sample" draws final states from their exact law; "stream" inserts elements
    alpha: float | None = None

    def __post_init__(self):
        self.offsets = OffsetMode.parse(self.offsets)
        self.lambdas = [int(x) for x in self.lambdas]
        if self.sketch not in SKETCH_KINDS:
            raise ValueError(f"unknown sketch kind {self.sketch!r}")
        if self.estimator not in ESTIMATORS[self.sketch]:
            raise ValueError(f"estimator {self.estimator!r} does not apply to {self.sketch} sketches")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.lambdas or any(x < 0 for x in self.lambdas):
            raise ValueError("lambdas must be non-negative")
        if any(b <= a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ValueError("lambdas must be strictly increasing")
        if self.mode not in ("sample", "stream"):
            raise ValueError(f"mode must be 'sample' or 'stream', not {self.mode!r}")
        if self.sketch.startswith("martingale") and self.mode != "stream":
            raise ValueError("martingale sketches depend on the insertion order; use mode='stream'")

    @property
    def params(self) -> SketchParams:
        return SketchParams(q=self.q, m=self.m, W=self.W, offsets=self.offsets)


@dataclass
class TrialResult:
    lam: int
    mean_estimate: float
    std_error: float
    quantiles: dict
    mean_size_bits: float
    ratios: np.ndarray = field(repr=False, default=None)

    def rows(self):
        out = [(self.lam, "mean", self.mean_estimate), (self.lam, "std_error", self.std_error)]
        out += [(self.lam, f"q{k:02d}", v) for k, v in self.quantiles.items()]
        out.append((self.lam, "mean_size_bits", self.mean_size_bits))
        return out


def size_bits(cfg: TrialConfig) -> int:
    p = cfg.params
    if cfg.sketch.endswith("pcsa"):
        bits = p.m * p.W
    else:
        bits = p.m * int(p.W).bit_length()
    return bits + (64 if cfg.sketch.startswith("martingale") else 0)


def summarize(lam: int, estimates: np.ndarray, size: float) -> TrialResult:
    estimates = np.asarray(estimates, dtype=float)
    if lam > 0:
        ratios = estimates / lam
        std = float(np.std(ratios, ddof=1)) if ratios.size > 1 else 0.0
        qs = {k: float(v) for k, v in zip(QUANTILES, np.percentile(ratios, QUANTILES))}
    else:
        ratios = np.full(estimates.shape, np.nan)
        std = 0.0
        qs = {k: math.nan for k in QUANTILES}
    return TrialResult(lam, float(estimates.mean()), std, qs, float(size), ratios)


def _alpha(cfg: TrialConfig) -> float:
    if cfg.estimator not in ("harmonic", "geometric"):
        return 1.0
    if cfg.alpha is not None:
        return cfg.alpha
    return estimation.calibrate_alpha(cfg.params, seed=cfg.seed, estimator=cfg.estimator,
                                      poissonize=cfg.poissonize)


def _estimate_registers(cfg: TrialConfig, regs: np.ndarray, seed: int, alpha: float) -> np.ndarray:
    p = cfg.params
    regs = np.atleast_2d(regs)
    if cfg.estimator == "harmonic":
        return alpha * estimation.ll_harmonic_raw(regs, p, seed)
    if cfg.estimator == "geometric":
        return alpha * estimation.ll_geometric_raw(regs, p, seed)
    return np.array([estimation.ll_mle(LogLogSketch(p, seed, r)).lambda_hat for r in regs])


def _sample_trials(cfg: TrialConfig, lam: int, li: int, alpha: float) -> np.ndarray:
    p = cfg.params
    out = np.empty(cfg.trials)
    if cfg.sketch == "ll" and cfg.offsets is not OffsetMode.RANDOM:
        # offsets do not depend on the seed, so the trials can be drawn as one batch
        rng = oracle.rng_for(cfg.seed, li)
        regs = sample_ll_registers(p, lam, rng, cfg.seed, cfg.poissonize, size=cfg.trials)
        return _estimate_registers(cfg, regs, cfg.seed, alpha)
    for t in range(cfg.trials):
        sub = oracle.subseed(cfg.seed, t)
        rng = oracle.rng_for(sub, li)
        if cfg.sketch == "ll":
            regs = sample_ll_registers(p, lam, rng, sub, cfg.poissonize)
            out[t] = _estimate_registers(cfg, regs, sub, alpha)[0]
        else:
            bits = sample_pcsa_bits(p, lam, rng, sub, cfg.poissonize)
            out[t] = estimation.pcsa_mle(PcsaSketch(p, sub, bits)).lambda_hat
    return out


def _new_sketch(cfg: TrialConfig, seed: int):
    p = cfg.params
    inner = PcsaSketch(p, seed) if cfg.sketch.endswith("pcsa") else LogLogSketch(p, seed)
    return MartingaleSketch(inner) if cfg.sketch.startswith("martingale") else inner


def stream_elements(seed: int, lam: int, poissonize: bool = False):
    """The distinct elements 0..lam-1, optionally expanded by Poisson multiplicities."""
    elements = np.arange(lam, dtype=np.uint64)
    if poissonize:
        return np.fromiter(oracle.poissonize(seed, elements), dtype=np.uint64)
    return elements


def _stream_trials(cfg: TrialConfig, lam: int, alpha: float) -> np.ndarray:
    out = np.empty(cfg.trials)
    for t in range(cfg.trials):
        sub = oracle.subseed(cfg.seed, t)
        sk = _new_sketch(cfg, sub)
        sk.update(stream_elements(sub, lam, cfg.poissonize))
        if isinstance(sk, MartingaleSketch):
            out[t] = sk.estimate
        elif isinstance(sk, PcsaSketch):
            out[t] = estimation.pcsa_mle(sk).lambda_hat
        else:
            out[t] = _estimate_registers(cfg, sk.registers, sub, alpha)[0]
    return out


def run_error_study(cfg: TrialConfig) -> list[TrialResult]:
    alpha = _alpha(cfg)
    size = size_bits(cfg)
    results = []
    for li, lam in enumerate(cfg.lambdas):
        if lam == 0:
            est = np.zeros(cfg.trials)
        elif cfg.mode == "sample":
            est = _sample_trials(cfg, lam, li, alpha)
        else:
            est = _stream_trials(cfg, lam, alpha)
        results.append(summarize(lam, est, size))
    return results


# ---------------------------------------------------------------- oscillation

def windowed_medians(results: list[TrialResult], window: int = 3) -> np.ndarray:
    """Median of the pooled ratios of each run of ``window`` consecutive grid points."""
    if window < 1 or window > len(results):
        raise ValueError("window must be between 1 and the number of grid points")
    return np.array([
        np.median(np.concatenate([r.ratios for r in results[i:i + window]]))
        for i in range(len(results) - window + 1)
    ])


def peak_to_trough(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.max() / values.min())


def log_grid(lo_exp: float, hi_exp: float, per_octave: int = 4) -> list[int]:
    """Cardinalities 2^(lo_exp + i / per_octave) up to 2^hi_exp, rounded."""
    n = int(round((hi_exp - lo_exp) * per_octave))
    return [int(round(2.0 ** (lo_exp + i / per_octave))) for i in range(n + 1)]


# ---------------------------------------------------------------- CSV

CSV_HEADER = ("lambda", "statistic", "value")


def format_value(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_rows(rows, out=None) -> str:
    """Write (lambda, statistic, value) rows; ``out`` is a path, file object or None (stdout)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for lam, stat, value in rows:
        w.writerow((format_value(lam), stat, format_value(value)))
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    elif hasattr(out, "write"):
        out.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def read_rows(path) -> list[tuple[str, str, str]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        return [tuple(row) for row in r]


def results_rows(results: list[TrialResult]):
    for r in results:
        yield from r.rows()
