"""Entropy / Fisher-information constants and curves for PCSA and LogLog.

Series are summed directly with an integral bound for the tail; each constant
also has a quadrature route over its defining integral so the two can be
compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

LN2 = math.log(2.0)
SERIES_TERMS = 100_000
TERM_FLOOR = 1e-14


def _check_t(t):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")


def hdot(t):
    """Entropy (bits) of the indicator that a Poisson(t) count is nonzero."""
    _check_t(t)
    t = np.asarray(t, dtype=float)
    with np.errstate(under="ignore", divide="ignore"):
        miss = np.exp(-t)
        hit = -np.expm1(-t)
        log_hit = np.where(t < 1.0, np.log(hit), np.log1p(-miss))
        out = (t * miss - hit * log_hit) / LN2
    return out if out.ndim else float(out)


def idot(t):
    """Normalized Fisher information t^2 / (e^t - 1) of the same indicator."""
    _check_t(t)
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", under="ignore"):
        out = np.where(t < 700.0, t * t / np.expm1(np.minimum(t, 700.0)),
                       t * t * np.exp(-t) / -np.expm1(-t))
    return out if out.ndim else float(out)


def hdot_nats(t):
    return hdot(t) * LN2


# ---------------------------------------------------------------- series

def _sum_with_tail(term, tail_integral, n_terms: int = SERIES_TERMS, start: int = 1) -> float:
    """sum_{k >= start} term(k) for decreasing positive terms.

    The remainder R = sum_{k >= N} f(k) lies in [int_N^inf f, f(N) + int_N^inf f];
    we take the midpoint, so the absolute error is at most f(N) / 2.
    """
    k = np.arange(start, start + n_terms, dtype=float)
    head = math.fsum(term(k))
    N = float(start + n_terms)
    return head + tail_integral(N) + 0.5 * float(term(np.array([N]))[0])


def _neg_dilog_neg(x: float) -> float:
    """-Li2(-x) = sum_{n>=1} (-1)^(n+1) x^n / n^2 for small x > 0."""
    total, power, n = 0.0, x, 1
    while power / (n * n) > 1e-20:
        total += (1 if n % 2 else -1) * power / (n * n)
        n += 1
        power *= x
    return total


def h0_series(n_terms: int = SERIES_TERMS) -> float:
    # int_N^inf (1/x) log2(1 + 1/x) dx = -Li2(-1/N) / ln 2
    return 1.0 / LN2 + _sum_with_tail(
        lambda k: np.log1p(1.0 / k) / (k * LN2),
        lambda N: _neg_dilog_neg(1.0 / N) / LN2,
        n_terms,
    )


def h0() -> float:
    """H0 = 1/ln 2 + sum_k (1/k) log2(1 + 1/k), about 3.25724 bits."""
    return _H0


def i0() -> float:
    """I0 = zeta(2) = pi^2 / 6."""
    return math.pi**2 / 6.0


def _check_q(q):
    if not q > 1.0:
        raise ValueError(f"base q must exceed 1, got {q}")


def phi(q: float, n_terms: int = SERIES_TERMS) -> float:
    """Aggregate entropy (bits, times ln q) of base-q LogLog."""
    _check_q(q)
    c = 1.0 / (q - 1.0)

    def term(k):
        return np.log1p(1.0 / (k + c)) / (k * LN2)

    def tail(N):
        val, _ = integrate.quad(lambda x: math.log1p(1.0 / (x + c)) / (x * LN2), N, np.inf,
                                epsabs=1e-15, epsrel=1e-12, limit=200)
        return val

    return (1.0 - 1.0 / q) / LN2 + _sum_with_tail(term, tail, n_terms)


def rho(q: float, n_terms: int = SERIES_TERMS) -> float:
    """Aggregate normalized information (times ln q) of base-q LogLog: zeta(2, q/(q-1))."""
    _check_q(q)
    a = q / (q - 1.0)
    return _sum_with_tail(lambda k: 1.0 / (k + a) ** 2, lambda N: 1.0 / (N + a), n_terms, start=0)


# ---------------------------------------------------------------- quadrature routes

_X_RANGE = (-40.0, 40.0)


def _quad_real_line(f) -> float:
    pts = np.linspace(*_X_RANGE, 17)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
        total += val
    return total


def h0_quadrature() -> float:
    """int over R of hdot(e^x) dx."""
    return _quad_real_line(lambda x: hdot(math.exp(x)))


def i0_quadrature() -> float:
    return _quad_real_line(lambda x: idot(math.exp(x)))


def _ll_cell(q: float, a):
    """Mass e^-a - e^-qa of one LL state and its score term, with a = lambda / q^(k+1).

    Returns (log mass, lambda * d mass / d lambda); stable for tiny and huge a.
    """
    a = np.asarray(a, dtype=float)
    with np.errstate(under="ignore", over="ignore", divide="ignore"):
        log_mass = -a + np.log(-np.expm1(-(q - 1.0) * a))
        score = np.exp(-a) * a * (q * np.exp(-(q - 1.0) * a) - 1.0)
    return log_mass, score


def _ll_info(q: float, a):
    """score^2 / mass, evaluated in log space."""
    log_mass, score = _ll_cell(q, a)
    with np.errstate(divide="ignore", under="ignore", invalid="ignore"):
        out = np.exp(2.0 * np.log(np.abs(score)) - log_mass)
    return np.where(np.isfinite(out), out, 0.0)


def phi_quadrature(q: float) -> float:
    """The defining integral of phi over r (with a = e^r)."""
    _check_q(q)

    def f(r):
        log_mass, _ = _ll_cell(q, math.exp(r))
        mass = math.exp(log_mass)
        return -mass * log_mass / LN2 if mass > 0 else 0.0

    return _quad_real_line(f)


def rho_quadrature(q: float) -> float:
    _check_q(q)

    def f(r):
        return float(_ll_info(q, math.exp(r)))

    return _quad_real_line(f)


# ---------------------------------------------------------------- Fish numbers

@dataclass(frozen=True)
class FishReport:
    H_avg: float
    I_avg: float
    fish: float

    @classmethod
    def of(cls, H_avg: float, I_avg: float) -> "FishReport":
        return cls(H_avg, I_avg, H_avg / I_avg)


def fish_pcsa(q: float) -> FishReport:
    _check_q(q)
    lq = math.log(q)
    return FishReport.of(h0() / lq, i0() / lq)


def fish_ll(q: float) -> FishReport:
    _check_q(q)
    lq = math.log(q)
    return FishReport.of(phi(q) / lq, rho(q) / lq)


# ---------------------------------------------------------------- curves

@dataclass(frozen=True)
class CurvePoint:
    lam: float
    entropy_bits: float
    norm_info: float


def _k_range(q: float, lam: float, t_lo: float, t_hi: float) -> np.ndarray:
    """Integers k with lam / q^k spanning [t_lo, t_hi]."""
    x = math.log(lam) / math.log(q)
    k_min = math.floor(x - math.log(t_hi) / math.log(q)) - 1
    k_max = math.ceil(x - math.log(t_lo) / math.log(q)) + 1
    return np.arange(k_min, k_max + 1, dtype=float)


def pcsa_curves(q: float, lam: float) -> CurvePoint:
    """Entropy and lambda^2 I of a single base-q PCSA vector over Z."""
    _check_q(q)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    k = _k_range(q, lam, 1e-22, 800.0)
    t = lam * np.power(q, -k)
    H = hdot(t)
    I = idot(t)
    return CurvePoint(lam, math.fsum(H[H > TERM_FLOOR * 1e-3]), math.fsum(I[I > TERM_FLOOR * 1e-3]))


def ll_curves(q: float, lam: float) -> CurvePoint:
    """Entropy and lambda^2 I of a single base-q LogLog register over Z."""
    _check_q(q)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    k = _k_range(q, lam, 1e-22, 800.0)
    a = lam * np.power(q, -(k + 1.0))
    log_mass, _ = _ll_cell(q, a)
    ok = np.isfinite(log_mass)
    with np.errstate(under="ignore"):
        mass = np.exp(log_mass[ok])
    H = -mass * log_mass[ok] / LN2
    return CurvePoint(lam, math.fsum(H), math.fsum(_ll_info(q, a)))


def curves(sketch: str, q: float, lam: float) -> CurvePoint:
    return {"pcsa": pcsa_curves, "ll": ll_curves}[sketch](q, lam)


def curve_period_average(sketch: str, q: float) -> FishReport:
    """Average entropy and q^(2r) I(q^r) over r in [0, 1), by quadrature."""
    fn = {"pcsa": pcsa_curves, "ll": ll_curves}[sketch]
    H, _ = integrate.quad(lambda r: fn(q, q**r).entropy_bits, 0.0, 1.0, epsabs=1e-12, limit=100)
    I, _ = integrate.quad(lambda r: fn(q, q**r).norm_info, 0.0, 1.0, epsabs=1e-12, limit=100)
    return FishReport.of(H, I)


def curve_extrema(sketch: str, q: float, points: int = 2001) -> dict[str, float]:
    """Min/max of entropy and normalized information over one period in log_q lambda."""
    fn = {"pcsa": pcsa_curves, "ll": ll_curves}[sketch]
    vals = [fn(q, q**r) for r in np.linspace(0.0, 1.0, points)]
    H = np.array([v.entropy_bits for v in vals])
    I = np.array([v.norm_info for v in vals])
    return {"entropy_min": H.min(), "entropy_max": H.max(), "info_min": I.min(), "info_max": I.max()}


# ---------------------------------------------------------------- lemma checks

@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class LemmaReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def verify_lemmas(tol: float = 1e-8, grid_points: int = 10_000) -> LemmaReport:
    """Numerically check the hdot/idot identities and bounds.

    * the log-time integrals of hdot and idot equal H0 and I0,
    * hdot / idot is strictly decreasing,
    * t e^-t <= hdot_e(t) <= 2 sqrt(t) and idot(t) <= 4 e^(-t/2).
    """
    rep = LemmaReport()
    hq, iq = h0_quadrature(), i0_quadrature()
    rep.checks.append(Check("integral_hdot_equals_H0", abs(hq - h0()) < tol, f"quad={hq!r} series={h0()!r}"))
    rep.checks.append(Check("integral_idot_equals_I0", abs(iq - i0()) < tol, f"quad={iq!r} exact={i0()!r}"))

    t = np.geomspace(1e-6, 50.0, grid_points)
    H, I = hdot(t), idot(t)
    ratio = H / I
    bad = int(np.sum(np.diff(ratio) >= 0))
    rep.checks.append(Check("hdot_over_idot_decreasing", bad == 0, f"{bad} non-decreasing steps on {grid_points} points"))

    He = H * LN2
    lower = int(np.sum(t * np.exp(-t) > He * (1 + 1e-12)))
    upper = int(np.sum(He > 2.0 * np.sqrt(t)))
    rep.checks.append(Check("hdot_e_sandwich", lower == 0 and upper == 0, f"{lower} lower / {upper} upper violations"))
    ib = int(np.sum(I > 4.0 * np.exp(-t / 2.0)))
    rep.checks.append(Check("idot_exponential_bound", ib == 0, f"{ib} violations"))
    return rep


_H0 = h0_series()
