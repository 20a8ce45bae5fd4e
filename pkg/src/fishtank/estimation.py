"""Cardinality estimators for PCSA and LogLog sketches.

Likelihoods use the Poissonized model: PCSA bit (i, j) is zero with
probability exp(-lambda p_ij), LL register i is <= k with probability
exp(-lambda q^-r_i / q^(k+1)).  Log-likelihoods are reported in bits.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numba
import numpy as np

from . import oracle
from .sketches import LogLogSketch, PcsaSketch, SketchParams
from .sketches.params import offset_vector
from .sketches.sampling import sample_ll_registers

LN2 = math.log(2.0)
P_FLOOR = 1e-300
P_CEIL = 1.0 - 1e-16
RTOL = 1e-9


@dataclass(frozen=True)
class Estimate:
    lambda_hat: float
    method: str
    saturated: bool = False

    def __float__(self):
        return self.lambda_hat


def bracket(params: SketchParams) -> tuple[float, float]:
    """Search interval [1/(m W), q^(W+1)] shared by the MLE routines."""
    return 1.0 / (params.m * params.W), params.q ** (params.W + 1)


def saturation_cap(params: SketchParams) -> float:
    return params.q ** (params.W + 1)


def _positive(lam):
    if np.any(np.asarray(lam) <= 0):
        raise ValueError(f"lambda must be positive, got {lam}")


# ---------------------------------------------------------------- PCSA

def pcsa_log_likelihood(sketch: PcsaSketch, lam: float) -> float:
    _positive(lam)
    p = sketch.probs
    zeros = p[~sketch.bits]
    ones = p[sketch.bits]
    one_mass = np.clip(-np.expm1(-lam * ones), P_FLOOR, P_CEIL)
    return float(-lam * zeros.sum() / LN2 + np.sum(np.log2(one_mass)))


@numba.njit(cache=True)
def _pcsa_score(zero_mass, ones, lam):
    """d/d(lambda) of the PCSA log-likelihood, in nats, and its slope.

    The score is a sum of convex decreasing terms minus a constant, so it has
    one root and Newton's method approaches it monotonically from the left.
    """
    f = -zero_mass
    d = 0.0
    for p in ones:
        x = lam * p
        if x < 700.0:
            em = math.expm1(x)
            f += p / em
            d -= p * p * (em + 1.0) / (em * em)
    return f, d


@numba.njit(cache=True)
def _pcsa_root(zero_mass, ones, lo, hi, x, rtol):
    """Root of the score inside the bracket (lo, hi): safeguarded Newton."""
    for _ in range(1000):
        f, d = _pcsa_score(zero_mass, ones, x)
        if f > 0.0:
            lo = x
        elif f < 0.0:
            hi = x
        else:
            return x
        if hi <= lo * (1.0 + rtol):
            break
        step = -f / d if d < 0.0 else 0.0
        nx = x + step
        if not (lo < nx < hi):
            nx = math.sqrt(lo * hi)  # Newton left the bracket: bisect in log space
        elif abs(step) <= 0.25 * rtol * x:
            return nx
        x = nx
    return math.sqrt(lo * hi)


def pcsa_mle(sketch: PcsaSketch, warm_start: float | None = None, rtol: float = RTOL) -> Estimate:
    """Maximum-likelihood cardinality: the root of the (monotone) score."""
    p = sketch.probs
    ones = np.ascontiguousarray(p[sketch.bits])
    if ones.size == 0:
        return Estimate(0.0, "mle")
    if ones.size == p.size:
        return Estimate(saturation_cap(sketch.params), "mle", saturated=True)
    zero_mass = float(p[~sketch.bits].sum())
    lo, hi = bracket(sketch.params)
    if _pcsa_score(zero_mass, ones, lo)[0] <= 0.0:
        return Estimate(lo, "mle")
    if _pcsa_score(zero_mass, ones, hi)[0] >= 0.0:
        return Estimate(hi, "mle", saturated=True)
    if warm_start is not None and lo < warm_start < hi:
        x = warm_start
    else:
        # every set bit contributes about 1/lambda to the score while unsaturated
        x = min(max(ones.size / zero_mass, lo * 2.0), hi / 2.0)
    return Estimate(_pcsa_root(zero_mass, ones, lo, hi, x, rtol), "mle")


def pcsa_mle_bisect(sketch: PcsaSketch, rtol: float = RTOL) -> float:
    """Plain log-space bisection on the score sign; slow reference for tests."""
    p = sketch.probs
    ones = np.ascontiguousarray(p[sketch.bits])
    zero_mass = float(p[~sketch.bits].sum())
    lo, hi = bracket(sketch.params)
    while hi > lo * (1.0 + rtol):
        mid = math.sqrt(lo * hi)
        if _pcsa_score(zero_mass, ones, mid)[0] > 0.0:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


# ---------------------------------------------------------------- LogLog

def _ll_loglik_nats(registers: np.ndarray, params: SketchParams, seed: int, lam) -> np.ndarray:
    """Natural-log likelihood; ``lam`` may be an array (result has its shape)."""
    q, W = params.q, params.W
    lam = np.asarray(lam, dtype=float)
    rate = lam[..., None] * np.power(q, -offset_vector(params, seed))  # (..., m)
    S = registers
    a = rate / np.power(q, S + 1.0)  # rate of exceeding S
    b = rate / np.power(q, S * 1.0)  # rate of exceeding S - 1
    with np.errstate(divide="ignore", over="ignore"):
        mid = -a + np.log(np.clip(-np.expm1(a - b), P_FLOOR, None))
        top = np.log(np.clip(-np.expm1(-b), P_FLOOR, None))
    terms = np.where(S == 0, -a, np.where(S >= W, top, mid))
    return terms.sum(axis=-1)


def ll_log_likelihood(sketch: LogLogSketch, lam: float) -> float:
    _positive(lam)
    return float(_ll_loglik_nats(sketch.registers, sketch.params, sketch.seed, lam)) / LN2


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def ll_mle(sketch: LogLogSketch, rtol: float = RTOL, grid: int = 400) -> Estimate:
    """LL maximum likelihood by a coarse log-grid scan then golden section.

    The LL likelihood need not be concave in lambda, so the scan picks the
    basin and golden-section search refines it over log(lambda).
    """
    S = sketch.registers
    params = sketch.params
    if not S.any():
        return Estimate(0.0, "mle")
    if np.all(S >= params.W):
        return Estimate(saturation_cap(params), "mle", saturated=True)
    lo, hi = bracket(params)
    xs = np.linspace(math.log(lo), math.log(hi), grid)
    ll = _ll_loglik_nats(S, params, sketch.seed, np.exp(xs))
    k = int(np.argmax(ll))
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, grid - 1)]

    def f(x):
        return float(_ll_loglik_nats(S, params, sketch.seed, math.exp(x)))

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    tol = math.log1p(rtol)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return Estimate(math.exp(x), "mle", saturated=k == grid - 1)


def ll_harmonic_raw(registers: np.ndarray, params: SketchParams, seed: int = 0) -> np.ndarray:
    """m / sum_i q^-(S(i) + r_i); works on a batch of register vectors."""
    r = offset_vector(params, seed)
    return params.m / np.sum(np.power(params.q, -(registers + r)), axis=-1)


def ll_geometric_raw(registers: np.ndarray, params: SketchParams, seed: int = 0) -> np.ndarray:
    """m q^mean(S(i) + r_i); works on a batch of register vectors."""
    r = offset_vector(params, seed)
    return params.m * np.power(params.q, np.mean(registers + r, axis=-1))


def ll_estimate_harmonic(sketch: LogLogSketch, alpha: float = 1.0) -> Estimate:
    return Estimate(float(alpha * ll_harmonic_raw(sketch.registers, sketch.params, sketch.seed)), "harmonic")


def ll_estimate_geometric(sketch: LogLogSketch, const: float = 1.0) -> Estimate:
    return Estimate(float(const * ll_geometric_raw(sketch.registers, sketch.params, sketch.seed)), "geometric")


def estimate(sketch, method: str = "mle", alpha: float = 1.0) -> Estimate:
    """Dispatch on sketch type and estimator name."""
    if hasattr(sketch, "estimate") and hasattr(sketch, "inner"):
        if method not in ("martingale", "mle"):
            raise ValueError(f"martingale sketches only support the martingale estimator, not {method!r}")
        return Estimate(sketch.estimate, "martingale")
    if isinstance(sketch, PcsaSketch):
        if method != "mle":
            raise ValueError(f"PCSA sketches only support the mle estimator, not {method!r}")
        return pcsa_mle(sketch)
    if isinstance(sketch, LogLogSketch):
        if method == "mle":
            return ll_mle(sketch)
        if method == "harmonic":
            return ll_estimate_harmonic(sketch, alpha)
        if method == "geometric":
            return ll_estimate_geometric(sketch, alpha)
        raise ValueError(f"unknown LL estimator {method!r}")
    raise TypeError(f"cannot estimate {type(sketch).__name__}")


# ---------------------------------------------------------------- calibration

def alpha_from_raw(raw, lambda_ref: float) -> float:
    """Multiplier making the mean of ``raw`` equal ``lambda_ref``."""
    return float(lambda_ref / np.mean(raw))


def calibrate_alpha(params: SketchParams, lambda_ref: float = 2.0**20, trials: int = 2000,
                    seed: int = 0, estimator: str = "harmonic", poissonize: bool = False) -> float:
    """Experimentally determined constant for the harmonic/geometric LL estimators."""
    if trials < 100:
        raise ValueError("calibration needs at least 100 trials")
    raw_fn = {"harmonic": ll_harmonic_raw, "geometric": ll_geometric_raw}[estimator]
    rng = oracle.rng_for(seed, 0xCA11)
    regs = sample_ll_registers(params, lambda_ref, rng, seed, poissonize, size=trials)
    return alpha_from_raw(raw_fn(regs, params, seed), lambda_ref)


class AlphaCache:
    """``alpha.csv``: harmonic-estimator constants keyed by (q, m, offset_mode)."""

    FIELDS = ("q", "m", "offset_mode", "alpha")

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = path
        self.table: dict[tuple[str, int, str], float] = {}
        if path is not None and os.path.exists(path):
            with open(path, newline="") as fh:
                for row in csv.DictReader(fh):
                    key = (repr(float(row["q"])), int(row["m"]), row["offset_mode"].upper())
                    self.table[key] = float(row["alpha"])

    @staticmethod
    def key(params: SketchParams):
        return repr(params.q), params.m, params.offsets.name

    def get(self, params: SketchParams) -> float | None:
        return self.table.get(self.key(params))

    def get_or_calibrate(self, params: SketchParams, seed: int = 0, trials: int = 2000,
                         lambda_ref: float = 2.0**20) -> float:
        alpha = self.get(params)
        if alpha is None:
            alpha = calibrate_alpha(params, lambda_ref, trials, seed)
            self.table[self.key(params)] = alpha
            self.save()
        return alpha

    def save(self) -> None:
        if self.path is None:
            return
        with open(self.path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.FIELDS)
            for (q, m, mode), alpha in sorted(self.table.items()):
                w.writerow([q, m, mode.lower(), repr(alpha)])
