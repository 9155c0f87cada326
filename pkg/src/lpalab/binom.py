"""Exact and windowed computations over binomial families.

Log-pmf values use the saddle-point form (Stirling remainders plus a deviance
term), which keeps full relative precision for very large trial counts; cdf
values come from scipy's regularized incomplete beta. Everything that
multiplies many probabilities works with logarithms and only exponentiates at
the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .errors import ParameterError

WINDOW_SD = 12.0
ZETA_DEFAULT = 0.4748


@dataclass(frozen=True)
class BinomialSpec:
    trials: int
    prob: float

    def __post_init__(self):
        if self.trials < 0 or int(self.trials) != self.trials:
            raise ParameterError("trials must be a nonnegative integer")
        if not (0.0 <= self.prob <= 1.0):
            raise ParameterError("prob must lie in [0, 1]")

    @property
    def mean(self) -> float:
        return self.trials * self.prob

    @property
    def sd(self) -> float:
        return math.sqrt(self.trials * self.prob * (1 - self.prob))


@dataclass
class LemmaReport:
    lemma: str
    grid: dict
    worst_margin: float
    passed: bool
    tolerance: float = 0.0
    witnesses: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "grid": self.grid,
            "worst_margin": self.worst_margin,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "witnesses": self.witnesses,
            **self.extra,
        }


@dataclass(frozen=True)
class AnalyticBounds:
    zeta: float = ZETA_DEFAULT

    def __post_init__(self):
        if not (0 < self.zeta < 0.5):
            raise ParameterError("zeta must lie in (0, 1/2)")

    @staticmethod
    def phi(t: float) -> float:
        """(t+1)log(t+1) - t, defined for t >= -1."""
        if t == -1:
            return 1.0
        return (t + 1) * math.log1p(t) - t

    @staticmethod
    def Phi(x: float) -> float:
        return 0.5 * math.erfc(-x / math.sqrt(2))

    def diff_lower_bound(self, a1: int, a2: int, p: float, M: float) -> float:
        """Phi(((a1-a2)p - M)/sqrt((a1+a2)pq)) - 2 zeta / sqrt(a2 p)."""
        s = math.sqrt((a1 + a2) * p * (1 - p))
        return self.Phi(((a1 - a2) * p - M) / s) - 2 * self.zeta / math.sqrt(a2 * p)

    @staticmethod
    def diff_simple_bound(a1: int, a2: int, p: float) -> float:
        """1/2 + min{1, (a1-a2)p / sqrt((a1+a2)p)} / 5."""
        return 0.5 + 0.2 * min(1.0, (a1 - a2) * p / math.sqrt((a1 + a2) * p))


Phi = AnalyticBounds.Phi
phi = AnalyticBounds.phi


# single binomials -----------------------------------------------------------

_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _stirlerr(n):
    """log(n!) - log(sqrt(2 pi n) (n/e)^n), elementwise for n >= 1."""
    n = np.asarray(n, dtype=np.float64)
    small = n <= 15
    ns = np.where(small, 16.0, n)
    nn = ns * ns
    series = (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - (1 / 1188) / nn) / nn) / nn) / nn) / ns
    nsm = np.where(small, n, 1.0)
    direct = np.array([math.lgamma(v + 1) for v in np.atleast_1d(nsm).ravel()]).reshape(np.shape(nsm))
    direct = direct - (nsm + 0.5) * np.log(nsm) + nsm - _HALF_LOG_2PI
    return np.where(small, direct, series)


def _bd0(x, m):
    """x log(x/m) + m - x without cancellation when x is close to m."""
    x = np.asarray(x, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        plain = x * np.log(x / m) + m - x
        v = (x - m) / (x + m)
        s = (x - m) * v
        ej = 2 * x * v
        v2 = v * v
        for j in range(1, 40):
            ej = ej * v2
            s = s + ej / (2 * j + 1)
    return np.where(np.abs(x - m) < 0.1 * (x + m), s, plain)


def _log_pmf(x, n, p):
    """Vectorized log P(Bin(n, p) = x); -inf outside the support."""
    x, n = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(n, dtype=np.float64))
    out = np.full(x.shape, -np.inf)
    if p == 0.0:
        out[x == 0] = 0.0
        return out
    if p == 1.0:
        out[x == n] = 0.0
        return out
    q = 1.0 - p
    inside = (x > 0) & (x < n)
    at0 = (x == 0) & (n >= 0)
    atn = (x == n) & (n > 0)
    out[at0] = n[at0] * math.log1p(-p)
    out[atn] = n[atn] * math.log(p)
    if inside.any():
        xi, ni = x[inside], n[inside]
        lc = _stirlerr(ni) - _stirlerr(xi) - _stirlerr(ni - xi) - _bd0(xi, ni * p) - _bd0(ni - xi, ni * q)
        lf = np.log(2 * np.pi) + np.log(xi) + np.log1p(-xi / ni)
        out[inside] = lc - 0.5 * lf
    return out


def binom_pmf_log(spec: BinomialSpec, x) -> float:
    if x < 0 or x > spec.trials or int(x) != x:
        return -math.inf
    return float(_log_pmf(int(x), spec.trials, spec.prob))


def binom_cdf(spec: BinomialSpec, t) -> float:
    t = math.floor(t)
    if t < 0:
        return 0.0
    if t >= spec.trials:
        return 1.0
    return float(stats.binom.cdf(t, spec.trials, spec.prob))


def binom_sf(spec: BinomialSpec, t) -> float:
    """P(X > t)."""
    return 1.0 - binom_cdf(spec, t) if t < 0 else float(stats.binom.sf(math.floor(t), spec.trials, spec.prob))


def _log_cdf(x, z, p):
    """log P(Bin(z, p) <= x) elementwise, accurate near both 0 and 1."""
    x = np.floor(np.asarray(x, dtype=np.float64))
    z = np.asarray(z)
    sf = stats.binom.sf(x, z, p)
    with np.errstate(divide="ignore"):
        out = np.where(sf < 0.5, np.log1p(-np.minimum(sf, 0.5)), stats.binom.logcdf(x, z, p))
    out = np.where(x < 0, -np.inf, out)
    return np.where(x >= z, 0.0, out)


# tie-weighted comparison ----------------------------------------------------


def _tie_weighted_all(n: int, n_prime: int, p: float, rho: float):
    """(p_X, p_Y) for M = -1, 0, ..., n (index M+1), float arithmetic."""
    px = stats.binom.pmf(np.arange(n + 1), n, p)
    py = np.zeros(n + 1)
    py[: n_prime + 1] = stats.binom.pmf(np.arange(n_prime + 1), n_prime, p)
    FX, FY = np.cumsum(px), np.cumsum(py)
    FXm = np.concatenate([[0.0], FX[:-1]])  # P(X < x)
    FYm = np.concatenate([[0.0], FY[:-1]])
    both = px * py
    ax = px * FYm + 0.5 * both  # X = x beats Y, ties split
    ay = py * FXm + 0.5 * both

    def above(a):
        # s[M+1] = sum_{x > M} a[x], for M = -1 .. n
        rev = np.cumsum(a[::-1])[::-1]
        return np.concatenate([rev, [0.0]])

    sx, sy = above(ax), above(ay)
    tie_x = np.concatenate([[0.0], px * FYm / (rho + 1) + both / (rho + 2)])
    tie_y = np.concatenate([[0.0], py * FXm / (rho + 1) + both / (rho + 2)])
    return sx + tie_x, sy + tie_y


def _tie_weighted_exact(n: int, n_prime: int, p: Fraction, rho: Fraction, M: int):
    q = 1 - p
    px = [math.comb(n, x) * p**x * q ** (n - x) for x in range(n + 1)]
    py = [math.comb(n_prime, y) * p**y * q ** (n_prime - y) for y in range(n_prime + 1)]

    def side(a, b):
        tot = Fraction(0)
        for x, ax in enumerate(a):
            for y, by in enumerate(b):
                w = ax * by
                if x > M and x > y:
                    tot += w
                elif x == y and x > M:
                    tot += w / 2
                elif x == M and M > y:
                    tot += w / (rho + 1)
                elif x == y == M:
                    tot += w / (rho + 2)
        return tot

    return side(px, py), side(py, px)


def tie_weighted_probs(n: int, n_prime: int, p: float, M: int, rho: float, *, exact: bool = False):
    """p_X(M, rho) and p_Y(M, rho) for independent X ~ Bin(n, p), Y ~ Bin(n', p).

    p_X = P(X > M, X > Y) + P(X = Y > M)/2 + P(X = M > Y)/(rho+1) + P(X = Y = M)/(rho+2).
    With ``exact`` the sums run over Fractions (p is taken as its exact binary value
    unless a Fraction is passed).
    """
    if not (n > n_prime >= 0) or M < -1 or rho < 0:
        raise ParameterError("need n > n' >= 0, M >= -1, rho >= 0")
    if exact:
        return _tie_weighted_exact(n, n_prime, Fraction(p), Fraction(rho), M)
    if M > n:
        return 0.0, 0.0
    a, b = _tie_weighted_all(n, n_prime, p, rho)
    return float(a[M + 1]), float(b[M + 1])


def _ratio(a, b):
    return math.inf if b == 0 else a / b


def _exact_margins(n: int, n_prime: int, p: Fraction, rho: Fraction) -> list:
    """ratio(M) - ratio(-1) for M in [0, n'], decided in exact integer arithmetic.

    All probabilities are scaled by den(p)^(n+n') and the tie weights by a common
    integer, so every p_X, p_Y becomes a Python int.
    """
    a, b = p.numerator, p.denominator
    r, s = rho.numerator, rho.denominator
    half, w1, w2 = (r + s) * (r + 2 * s), 2 * s * (r + 2 * s), 2 * s * (r + s)
    full = 2 * half
    px = [math.comb(n, x) * a**x * (b - a) ** (n - x) for x in range(n + 1)]
    py = [math.comb(n_prime, y) * a**y * (b - a) ** (n_prime - y) for y in range(n_prime + 1)] + [0] * (n - n_prime)
    FXm, FYm = [0] * (n + 1), [0] * (n + 1)
    for x in range(1, n + 1):
        FXm[x] = FXm[x - 1] + px[x - 1]
        FYm[x] = FYm[x - 1] + py[x - 1]
    # suffix sums over x > M of the "wins outright or splits a tie" terms
    sx, sy = [0] * (n + 2), [0] * (n + 2)
    for x in range(n, -1, -1):
        both = px[x] * py[x]
        sx[x] = sx[x + 1] + full * px[x] * FYm[x] + half * both
        sy[x] = sy[x + 1] + full * py[x] * FXm[x] + half * both
    X0, Y0 = sx[0], sy[0]
    out = []
    for M in range(n_prime + 1):
        both = px[M] * py[M]
        XM = sx[M + 1] + w1 * px[M] * FYm[M] + w2 * both
        YM = sy[M + 1] + w1 * py[M] * FXm[M] + w2 * both
        if YM == 0:
            out.append(math.inf)
        else:
            out.append((XM * Y0 - X0 * YM) / (YM * Y0))
    return out


def _as_fraction(x) -> Fraction:
    # decimal grid values such as 0.35 are meant as 7/20, not their binary approximation
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def verify_lem_bis(n: int, n_prime: int, p: float, rho: float, tol: float = 1e-10) -> LemmaReport:
    """ratio(M) >= ratio(-1) for every M in [0, n'] (zero denominators give +inf), decided exactly."""
    ms = _exact_margins(n, n_prime, _as_fraction(p), _as_fraction(rho))
    worst = min(ms) if ms else math.inf
    wit = [{"M": M, "margin": m} for M, m in enumerate(ms) if m < tol]
    return LemmaReport("lem:bis", {"n": n, "n_prime": n_prime, "p": p, "rho": rho}, worst, worst >= -tol, tol, wit)


BIS_GRID = {
    "n": list(range(2, 31)),
    "p": [round(0.05 * i, 2) for i in range(1, 20)],
    "rho": [0, 1, 2, 5, 10],
}


def verify_bis_grid(grid: dict | None = None, tol: float = 1e-10) -> LemmaReport:
    g = {**BIS_GRID, **(grid or {})}
    worst, wit, points = math.inf, [], 0
    norm_worst = 0.0
    for n in g["n"]:
        for n_prime in range(n):
            for p in g["p"]:
                for rho in g["rho"]:
                    points += 1
                    a, b = _tie_weighted_all(n, n_prime, p, rho)
                    norm_worst = max(norm_worst, abs(a[0] + b[0] - 1))
                    ms = _exact_margins(n, n_prime, _as_fraction(p), _as_fraction(rho))
                    m = min(ms)
                    if m < worst:
                        worst = m
                    if m < -tol:
                        wit.append({"n": n, "n_prime": n_prime, "p": p, "rho": rho, "margin": m})
    return LemmaReport("lem:bis", g, worst, worst >= -tol, tol, wit[:20],
                       {"points": points, "normalization_error": norm_worst})


# difference of two binomials --------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiffDistribution:
    a1: int
    a2: int
    p: float
    lo: int  # support value of pmf[0]
    pmf: np.ndarray = field(repr=False)
    truncated_mass: float = 0.0

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.lo, self.lo + len(self.pmf))

    def mean(self) -> float:
        return float(np.dot(self.support, self.pmf))

    def var(self) -> float:
        m = self.mean()
        return float(np.dot((self.support - m) ** 2, self.pmf))


def _window(trials: int, p: float) -> tuple[int, int, float]:
    """Index window around the mean and the exact mass left outside it.

    Starts at mean +- (12 sd + 30) and widens until the outside mass is below
    1e-30 (or the window covers the whole support).
    """
    if trials == 0:
        return 0, 0, 0.0
    sd = math.sqrt(trials * p * (1 - p))
    half = WINDOW_SD * sd + 30
    while True:
        lo = max(0, math.floor(trials * p - half))
        hi = min(trials, math.ceil(trials * p + half))
        out = (stats.binom.cdf(lo - 1, trials, p) if lo > 0 else 0.0) + (
            stats.binom.sf(hi, trials, p) if hi < trials else 0.0
        )
        if out <= 1e-30 or (lo == 0 and hi == trials):
            return lo, hi, float(out)
        half *= 2


def diff_binomial_dist(a1: int, a2: int, p: float) -> DiffDistribution:
    """Law of X1 - X2 by direct convolution of the windowed pmfs (outside mass is recorded)."""
    if not (a1 >= a2 >= 0):
        raise ParameterError("need a1 >= a2 >= 0")
    l1, h1, e1 = _window(a1, p)
    l2, h2, e2 = _window(a2, p)
    f1 = np.exp(_log_pmf(np.arange(l1, h1 + 1), a1, p))
    f2 = np.exp(_log_pmf(np.arange(l2, h2 + 1), a2, p))[::-1]  # pmf of -X2 from -h2 upward
    pmf = np.convolve(f1, f2)
    return DiffDistribution(a1, a2, p, l1 - h2, pmf, e1 + e2)


def tail(dist: DiffDistribution, M) -> float:
    """P(X1 - X2 >= M)."""
    i = math.ceil(M) - dist.lo
    if i <= 0:
        return math.fsum(dist.pmf)
    return math.fsum(dist.pmf[i:])


DIFF_GRID = {"triples": [(2000, 1500, 0.05), (5000, 4000, 0.02), (1200, 800, 0.1)], "M": [0, 1, 2, 5]}


def verify_diff(grid: dict | None = None) -> LemmaReport:
    g = {**DIFF_GRID, **(grid or {})}
    worst, wit, rows = math.inf, [], []
    for a1, a2, p in g["triples"]:
        d = diff_binomial_dist(a1, a2, p)
        bound = AnalyticBounds.diff_simple_bound(a1, a2, p)
        for M in g["M"]:
            t = tail(d, M)
            m = t - bound - d.truncated_mass
            rows.append({"a1": a1, "a2": a2, "p": p, "M": M, "tail": t, "bound": bound, "margin": m})
            worst = min(worst, m)
            if m < 0:
                wit.append(rows[-1])
    return LemmaReport("diff-binomials", g, worst, worst >= 0, 0.0, wit, {"rows": rows})


# Slud and Chernoff ----------------------------------------------------------


def slud_bound(n: int, p: float, t: float) -> float:
    """1 - Phi(t / sqrt(np(1-p))), valid for p <= 1/4 and 0 <= t <= n - 2np."""
    if p > 0.25 or p <= 0:
        raise ParameterError("Slud's bound needs 0 < p <= 1/4")
    if t < 0 or t > n - 2 * n * p:
        raise ParameterError(f"t={t} outside [0, n - 2np]")
    return 1.0 - Phi(t / math.sqrt(n * p * (1 - p)))


@dataclass(frozen=True)
class ChernoffBounds:
    upper: float  # exp(-t^2 / (2(mu + t/3)))
    lower: float  # exp(-t^2 / (2 mu))
    upper_phi: float  # exp(-phi(t/mu) mu), the sharper form
    lower_phi: float  # exp(-phi(-t/mu) mu); 0 when t > mu


def chernoff_bounds(mean: float, t: float) -> ChernoffBounds:
    if mean <= 0 or t < 0:
        raise ParameterError("need mean > 0 and t >= 0")
    up = math.exp(-t * t / (2 * (mean + t / 3)))
    lo = math.exp(-t * t / (2 * mean))
    up_phi = math.exp(-phi(t / mean) * mean)
    lo_phi = math.exp(-phi(-t / mean) * mean) if t <= mean else 0.0
    return ChernoffBounds(up, lo, up_phi, lo_phi)


SLUD_GRID = {"n": [100, 500, 2000], "p": [0.05, 0.1, 0.25], "points": 20}


def _slud_ts(n, p, points):
    # thresholds np + t must be integers for Slud's inequality; np is integral on the grid
    ts = np.unique(np.round(np.linspace(0, n - 2 * n * p, points)))
    return [float(t) for t in ts]


def verify_slud(grid: dict | None = None, tol: float = 1e-9) -> LemmaReport:
    """Slud lower <= P(X >= np + t) <= Chernoff upper on the grid."""
    g = {**SLUD_GRID, **(grid or {})}
    worst, wit = math.inf, []
    for n in g["n"]:
        for p in g["p"]:
            mu = n * p
            for t in _slud_ts(n, p, g["points"]):
                exact = float(stats.binom.sf(math.ceil(mu + t) - 1, n, p))
                low = slud_bound(n, p, t)
                up = chernoff_bounds(mu, t).upper_phi if t > 0 else 1.0
                m = min(exact - low, up - exact)
                worst = min(worst, m)
                if m < -tol:
                    wit.append({"n": n, "p": p, "t": t, "exact": exact, "slud": low, "chernoff": up})
    return LemmaReport("slud-sandwich", g, worst, worst >= -tol, tol, wit)


CHERNOFF_GRID = {"n": [100, 1000, 10000], "p": [0.01, 0.1, 0.5], "points": 20}


def verify_chernoff(grid: dict | None = None, tol: float = 1e-9) -> LemmaReport:
    """Exact upper and lower tails never exceed either Chernoff form."""
    g = {**CHERNOFF_GRID, **(grid or {})}
    worst, wit = math.inf, []
    for n in g["n"]:
        for p in g["p"]:
            mu = n * p
            for t in np.linspace(0, min(mu, n - mu), g["points"]):
                b = chernoff_bounds(mu, t)
                up_exact = float(stats.binom.sf(math.ceil(mu + t) - 1, n, p))
                lo_exact = float(stats.binom.cdf(math.floor(mu - t), n, p))
                m = min(b.upper_phi - up_exact, b.upper - up_exact, b.lower_phi - lo_exact, b.lower - lo_exact)
                worst = min(worst, m)
                if m < -tol:
                    wit.append({"n": n, "p": p, "t": float(t), "margin": m})
    return LemmaReport("chernoff", g, worst, worst >= -tol, tol, wit)


# order statistics of independent binomials ---------------------------------


def max_binomials_logcdf(z, p: float, t) -> float:
    z = np.asarray(z, dtype=np.int64)
    return float(np.sum(_log_cdf(t, z, p)))


def max_binomials_cdf(z, p: float, t) -> float:
    """P(max_l Z_l <= t) for independent Z_l ~ Bin(z_l, p)."""
    return math.exp(max_binomials_logcdf(z, p, t))


def quantile(z, p: float, q: float) -> int:
    """Smallest integer t with P(max Z_l <= t) >= q."""
    if not (0 < q <= 1):
        raise ParameterError("q must lie in (0, 1]")
    z = np.asarray(z, dtype=np.int64)
    lo, hi = -1, int(z.max())
    lq = math.log(q)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if max_binomials_logcdf(z, p, mid) >= lq:
            hi = mid
        else:
            lo = mid
    return hi


def synthetic_family(np_: float = 1e4, np3: float = 1e-4, count: int = 2000):
    """(z, p, n) with z_l = n - (l-1)np + (l-1)(l-2)np^2/2 for the first ``count`` indices."""
    p = math.sqrt(np3 / np_)
    n = np_ / p
    ell = np.arange(1, count + 1, dtype=np.float64)
    z = n - (ell - 1) * np_ + 0.5 * (ell - 1) * (ell - 2) * n * p * p
    return np.round(z).astype(np.int64), p, n


def normalized_median(z, p: float, n: float) -> float:
    np_ = n * p
    med = quantile(z, p, 0.5)
    return (med - np_) / math.sqrt(np_ * math.log(1 / (n * p**3)))


def top_two_gap_prob(z, p: float, g: float) -> tuple[float, float]:
    """P(first max - second max >= g) with the strict-max convention (a tied max is gap 0).

    Returns (probability, absolute error bound from the summation window).
    """
    z = np.asarray(z, dtype=np.int64)
    if len(z) <= 1 or g <= 0:
        return 1.0, 0.0
    G = math.ceil(g)
    means = z * p
    sds = np.sqrt(z * p * (1 - p))
    s_lo = max(0, int(math.floor(np.max(means - WINDOW_SD * sds))))
    s_hi = int(math.ceil(np.max(means + WINDOW_SD * sds)))
    s_hi = min(s_hi, int(z.max()))
    s = np.arange(s_lo, s_hi + 1)
    lpmf = _log_pmf(s[None, :], z[:, None], p)  # (L, W)
    lF = _log_cdf(s[None, :] - G, z[:, None], p)
    # product over j != l of F_j(s - G) via prefix and suffix sums of logs
    pre = np.vstack([np.zeros((1, len(s))), np.cumsum(lF, axis=0)[:-1]])
    suf = np.vstack([np.cumsum(lF[::-1], axis=0)[::-1][1:], np.zeros((1, len(s)))])
    terms = lpmf + pre + suf
    prob = float(np.exp(logsumexp(terms)))
    err = math.exp(max_binomials_logcdf(z, p, s_lo - 1)) + float(np.sum(stats.binom.sf(s_hi, z, p)))
    return min(prob, 1.0), err


def top_two_gap_mc(z, p: float, g: float, samples: int = 20000, seed: int = 0, chunk: int = 2000) -> tuple[float, float]:
    """Monte Carlo estimate of the same probability: (estimate, standard error)."""
    z = np.asarray(z, dtype=np.int64)
    if len(z) <= 1 or g <= 0:
        return 1.0, 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        x = rng.binomial(z[None, :], p, size=(m, len(z)))
        top2 = np.partition(x, len(z) - 2, axis=1)[:, -2:]
        hits += int(np.count_nonzero(top2[:, 1] - top2[:, 0] >= g))
        done += m
    est = hits / samples
    return est, math.sqrt(max(est * (1 - est), 1e-300) / samples)


def conditional_gap(z, p: float, t: int, s: int, *, unique_max: bool = True) -> float:
    """P(second max <= first max - t | first max = s).

    With ``unique_max`` a tied maximum counts as a gap of 0; otherwise the second
    maximum is the largest value strictly below the first.
    """
    if t <= 0:
        return 1.0
    z = np.asarray(z, dtype=np.int64)
    F_below = np.exp(_log_cdf(s - t, z, p))
    f_at = np.exp(_log_pmf(s, z, p))
    F_at = np.exp(_log_cdf(s, z, p))
    p_max = np.prod(F_at) - np.prod(F_at - f_at)
    if p_max <= 0:
        return math.nan
    if unique_max:
        num = sum(f_at[l] * np.prod(np.delete(F_below, l)) for l in range(len(z)))
    else:
        num = np.prod(F_below + f_at) - np.prod(F_below)
    return float(num / p_max)


def cdf_logconcavity_margin(trials: int, p: float, t: int, s_values) -> float:
    """min over s of F(s+1-t)F(s) - F(s-t)F(s+1) (non-negative when log-concave)."""
    F = lambda x: binom_cdf(BinomialSpec(trials, p), x)  # noqa: E731
    return min(F(s + 1 - t) * F(s) - F(s - t) * F(s + 1) for s in s_values)


MONOTONE_GRID = {"z": [20, 18, 16], "p": 0.3, "t": [1, 2, 3], "s": [4, 16],
                 "logconcave": {"trials": 50, "p": 0.2, "t": [1, 2, 3, 4, 5]}, "unique_max": True}


def conditional_gap_monotone(z, p: float, t: int, s_range, tol: float = 1e-12, *, unique_max: bool = True) -> LemmaReport:
    vals = [conditional_gap(z, p, t, s, unique_max=unique_max) for s in s_range]
    diffs = np.diff(vals)
    worst = float(diffs.min()) if len(diffs) else math.inf
    wit = [{"s": int(s_range[i]), "drop": float(d)} for i, d in enumerate(diffs) if d < -tol]
    return LemmaReport("lem decreasing", {"z": list(map(int, z)), "p": p, "t": t, "s": [int(s_range[0]), int(s_range[-1])]},
                       worst, worst >= -tol, tol, wit, {"values": vals})


def verify_monotone(grid: dict | None = None, tol: float = 1e-12) -> LemmaReport:
    g = {**MONOTONE_GRID, **(grid or {})}
    s_range = list(range(g["s"][0], g["s"][1] + 1))
    worst, wit, extra = math.inf, [], {}
    for t in g["t"]:
        r = conditional_gap_monotone(g["z"], g["p"], t, s_range, tol, unique_max=g["unique_max"])
        worst = min(worst, r.worst_margin)
        wit += [{"t": t, **w} for w in r.witnesses]
        extra[f"t={t}"] = r.extra["values"]
    lc = g["logconcave"]
    for t in lc["t"]:
        m = cdf_logconcavity_margin(lc["trials"], lc["p"], t, range(t, lc["trials"]))
        worst = min(worst, m)
        if m < -tol:
            wit.append({"logconcave_t": t, "margin": m})
    return LemmaReport("lem decreasing", g, worst, worst >= -tol, tol, wit, {"values": extra})


MAX_GRID = {"np": 1e4, "np3": 1e-4, "count": 2000, "band": [0.7, 1.3]}


def verify_max(grid: dict | None = None) -> LemmaReport:
    g = {**MAX_GRID, **(grid or {})}
    z, p, n = synthetic_family(g["np"], g["np3"], g["count"])
    full = normalized_median(z, p, n)
    from .theory import derive_params

    ks = derive_params(int(round(n)), p).k_star
    restricted = normalized_median(z[int(math.ceil(ks)) - 1 :], p, n)
    lo, hi = g["band"]
    margin = min(full - lo, hi - full, full - restricted)
    return LemmaReport("lem:max", g, margin, margin > 0 or (lo <= full <= hi and restricted < full), 0.0, [],
                       {"normalized_median": full, "restricted_normalized_median": restricted, "k_star": ks})


GAP_GRID = {"np": 1e4, "np3": 1e-4, "count": 2000, "target": 0.8, "mc_samples": 20000, "seed": 1}


def verify_gap(grid: dict | None = None) -> LemmaReport:
    g = {**GAP_GRID, **(grid or {})}
    z, p, n = synthetic_family(g["np"], g["np3"], g["count"])
    np_ = n * p
    eps_n = math.log(np_) ** -0.5
    gap = 2 * np_ ** (0.5 - eps_n)
    prob, err = top_two_gap_prob(z, p, gap)
    mc, se = top_two_gap_mc(z, p, gap, g["mc_samples"], g["seed"])
    agree = abs(prob - mc) <= 3 * se + err
    margin = prob - err - g["target"]
    return LemmaReport("lem fst snd max", g, margin, margin >= 0 and agree, 0.0, [],
                       {"g": gap, "prob": prob, "window_error": err, "mc": mc, "mc_se": se, "mc_agrees": agree})


def gaussian_argmax_winner_dist(c: float, L: int, samples: int, seed: int = 0, chunk: int = 200_000) -> np.ndarray:
    """Frequencies over [1..L] of argmax_i (N_i + (L-i) c^{3/2}), N_i iid standard normal."""
    if L < 1 or samples < 1:
        raise ParameterError("need L >= 1 and samples >= 1")
    rng = np.random.default_rng(seed)
    drift = (L - np.arange(1, L + 1)) * c**1.5
    counts = np.zeros(L, dtype=np.int64)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        x = rng.standard_normal((m, L)) + drift
        counts += np.bincount(np.argmax(x, axis=1), minlength=L)
        done += m
    return counts / samples


ARGMAX_GRID = {"L": 12, "samples": 200_000, "seed": 0}


def verify_argmax(grid: dict | None = None) -> LemmaReport:
    """c = 0 is uniform, large c concentrates on 1, c = 1 stays strictly inside (0, 1)."""
    g = {**ARGMAX_GRID, **(grid or {})}
    L, S = g["L"], g["samples"]
    u = gaussian_argmax_winner_dist(0.0, L, S, g["seed"])
    big = gaussian_argmax_winner_dist(50.0, L, S, g["seed"])
    one = gaussian_argmax_winner_dist(1.0, L, S, g["seed"])
    se = math.sqrt((1 / L) * (1 - 1 / L) / S)
    m_uniform = 5 * se - float(np.max(np.abs(u - 1 / L)))
    m_big = float(big[0]) - 1.0
    m_one = min(float(one[0]), 1 - float(one[0])) - 0.01
    worst = min(m_uniform, m_big, m_one)
    return LemmaReport("argmax", g, worst, worst >= 0, 0.0, [],
                       {"c0": u.tolist(), "c1": one.tolist(), "c50_first": float(big[0])})


SUITES = {
    "bis": verify_bis_grid,
    "diff": verify_diff,
    "slud": verify_slud,
    "chernoff": verify_chernoff,
    "max": verify_max,
    "gap": verify_gap,
    "monotone": verify_monotone,
    "argmax": verify_argmax,
}
