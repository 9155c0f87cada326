"""Closed-form regime quantities for LPA on G(n, p) and per-trial event checks.

All logarithms are natural. Margins are signed so that a non-negative margin
means the inequality holds (with that much slack).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ParameterError, RegimeError

DEFAULT_EPS = 0.02


@dataclass(frozen=True)
class DerivedParams:
    n: int
    p: float
    k: int
    K: int
    omega: float
    Lambda: float
    k_star: float | None
    eps_n: float | None
    gamma_n: float | None
    M_n: float | None
    frakN_coeff: float

    @property
    def np_(self) -> float:
        return self.n * self.p

    @property
    def np2(self) -> float:
        return self.n * self.p**2

    @property
    def np3(self) -> float:
        return self.n * self.p**3

    def z_at(self, ell) -> np.ndarray | float:
        """z_l = n - (l-1)np + (l-1)(l-2)np^2/2."""
        e = np.asarray(ell, dtype=np.float64)
        return self.n - (e - 1) * self.np_ + 0.5 * (e - 1) * (e - 2) * self.np2

    @cached_property
    def z(self) -> np.ndarray:
        if 2 * self.k > 50_000_000:
            raise ParameterError(f"2k = {2 * self.k} is too large to tabulate z")
        return self.z_at(np.arange(1, 2 * self.k + 1))

    def expected_basin(self, ell) -> np.ndarray | float:
        """E|B_1(l)| = (n - 2k)(1 - p)^(l-1) p."""
        e = np.asarray(ell, dtype=np.float64)
        return (self.n - 2 * self.k) * (1 - self.p) ** (e - 1) * self.p


def compute_k(n: int, p: float) -> int:
    return max(1, math.ceil(15 * p**-2 * math.sqrt(math.log(n) / n)))


def compute_K(n: int, p: float) -> int:
    return max(1, math.ceil(2 * math.log(n) / p))


def lambda_advantage(n: int, p: float) -> float:
    return 0.5 + 0.2 * min(1.0, math.sqrt(n * p**4) / 2)


def derive_params(n: int, p: float) -> DerivedParams:
    if not (0 < p < 1):
        raise ParameterError(f"p must lie in (0, 1), got {p}")
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    np_ = n * p
    np3 = n * p**3
    Lam = lambda_advantage(n, p)
    if np3 < 1 and np_ > math.e:
        L = math.log(1 / np3)
        eps_n = math.log(np_) ** -0.5
        k_star = 0.5 * math.sqrt(L / (2 * np3))
        gamma_n = np_ ** (0.5 - eps_n)
        M_n = np_ + math.sqrt((1 - eps_n / 2) * np_ * L)
    else:
        eps_n = math.log(np_) ** -0.5 if np_ > 1 else None
        k_star = gamma_n = M_n = None
    return DerivedParams(
        n=n,
        p=p,
        k=compute_k(n, p),
        K=compute_K(n, p),
        omega=n**0.75 * p**1.25,
        Lambda=Lam,
        k_star=k_star,
        eps_n=eps_n,
        gamma_n=gamma_n,
        M_n=M_n,
        frakN_coeff=(2 * Lam - 1) / 10,
    )


def assert_params_invariants(dp: DerivedParams) -> None:
    assert dp.k >= 1 and dp.K >= 1
    assert 0.5 < dp.Lambda <= 0.7 + 1e-15
    assert dp.z_at(1) == dp.n
    if 2 * dp.k * dp.p < 1:
        assert np.all(np.diff(dp.z) < 0), "z must decrease while 2kp < 1"


# pure event predicates -----------------------------------------------------


def event_E(sizes, np2: float, omega: float, expected_first: float) -> tuple[bool, float]:
    """First basin beats basin l by (l-1)np^2/1.4 for all l in [2, 2k] and sits within omega of its mean."""
    s = np.asarray(sizes, dtype=np.float64)
    ell = np.arange(2, len(s) + 1)
    gap_slack = (s[0] - s[1:]) - (ell - 1) * np2 / 1.4
    conc_slack = omega - abs(s[0] - expected_first)
    margin = min(gap_slack.min() if len(gap_slack) else math.inf, conc_slack)
    return bool(margin >= 0), float(margin)


def event_Eprime(sizes, expected, omega: float) -> tuple[bool, float]:
    """Every basin l lies within l*omega of its mean."""
    s = np.asarray(sizes, dtype=np.float64)
    ell = np.arange(1, len(s) + 1)
    margin = float(np.min(ell * omega - np.abs(s - np.asarray(expected))))
    return margin >= 0, margin


def event_F(level2_size: int, k: int, np_: float) -> tuple[bool, float]:
    lo, hi = 4 / 3 * k * np_, 8 / 3 * k * np_
    margin = min(level2_size - lo, hi - level2_size)
    return margin >= 0, float(margin)


def event_G(sizes, L: int, delta: float, np2: float) -> tuple[bool, float]:
    """Pairwise separation of the first L basins by delta*np^2."""
    s = np.sort(np.asarray(sizes[:L], dtype=np.float64))
    if len(s) < 2:
        return True, math.inf
    margin = float(np.min(np.diff(s)) - delta * np2)
    return margin >= 0, margin


def claim3_gap(c2, Lam: float) -> tuple[bool, float]:
    """Level-3 count of label 1 beats label l by (1 - ((1-L)/L)^(l-1)) c2(1) / 2, l in [2, len]."""
    c = np.asarray(c2, dtype=np.float64)
    if len(c) < 2:
        return True, math.inf
    r = (1 - Lam) / Lam
    ell = np.arange(2, len(c) + 1)
    slack = (c[0] - c[1:]) - 0.5 * (1 - r ** (ell - 1)) * c[0]
    m = float(slack.min())
    return m >= 0, m


def claim4(b2, np_: float) -> tuple[bool, float]:
    """No Level-2 label count exceeds that of label 1 by more than 44np."""
    b = np.asarray(b2, dtype=np.float64)
    if len(b) < 2:
        return True, math.inf
    m = float(44 * np_ - np.max(b[1:] - b[0]))
    return m >= 0, m


# reports --------------------------------------------------------------------


@dataclass
class EventReport:
    E: bool | None = None
    E_margin: float | None = None
    Eprime: bool | None = None
    Eprime_margin: float | None = None
    F: bool | None = None
    F_margin: float | None = None
    G: bool | None = None
    G_margin: float | None = None
    lemma2_ok: bool | None = None
    lemma2_exceptions: int | None = None
    claim3_ok: bool | None = None
    claim3_margin: float | None = None
    claim4_ok: bool | None = None
    claim4_margin: float | None = None
    claim3prime_ok: bool | None = None
    claim3prime_margin: float | None = None
    snd_level2_ok: bool | None = None
    snd_level2_margin: float | None = None
    level3_gap_ok: bool | None = None
    level3_gap_pass_fraction: float | None = None
    ob45_pass_fraction: float | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "extra"}
        d.update(self.extra)
        return d


def check_events(basins, dec, params: DerivedParams, G_config=(5, 0.1)) -> EventReport:
    """Events E, E', F and G on a realized basin table."""
    sizes = basins.sizes
    ell = np.arange(1, len(sizes) + 1)
    E, Em = event_E(sizes, params.np2, params.omega, float(params.expected_basin(1)))
    Ep, Epm = event_Eprime(sizes, params.expected_basin(ell), params.omega)
    F, Fm = event_F(len(dec.B), dec.k, params.np_)
    L, delta = G_config
    G, Gm = event_G(sizes, L, delta, params.np2)
    return EventReport(E=E, E_margin=Em, Eprime=Ep, Eprime_margin=Epm, F=F, F_margin=Fm, G=G, G_margin=Gm)


def lemma2_exceptions(round2_labels: np.ndarray, params: DerivedParams) -> tuple[int, int]:
    """(exceptions to "v_j carries a label in [k]" for j outside [k+1, K-1],
    vertices other than v_j carrying a label j in [k+1, K])."""
    lab = np.asarray(round2_labels)
    n, k, K = params.n, params.k, params.K
    j = np.arange(1, n + 1)
    outside = (j <= k) | (j >= K)
    first = int(np.count_nonzero(outside & (lab > k)))
    mid = (lab >= k + 1) & (lab <= K)
    second = int(np.count_nonzero(mid & (lab != j)))
    return first, second


def _counts(labels: np.ndarray, members: np.ndarray, top: int) -> np.ndarray:
    """counts[l-1] = #members with label l, for l in [1, top]."""
    lab = labels[members - 1]
    lab = lab[(lab >= 1) & (lab <= top)]
    return np.bincount(lab, minlength=top + 1)[1:]


def check_round2_statistics(graph, round2_labels, dec, basins, params: DerivedParams, eps: float = DEFAULT_EPS) -> EventReport:
    """Level-2/Level-3 label-count inequalities after round 2 (LPA or ALAP labels)."""
    lab = np.asarray(round2_labels)
    top = 2 * dec.k
    n, p = params.n, params.p
    c2 = _counts(lab, dec.C, top)
    b2 = _counts(lab, dec.B, top)
    Lam = params.Lambda
    ok_gap, gap_m = claim3_gap(c2, Lam)
    first_m = c2[0] - 0.5 * (2 * Lam - 1) * n
    c3_m = min(gap_m, first_m)
    ok4, m4 = claim4(b2, params.np_)

    l1 = basins.first_max_label
    c3p_m = c2[l1 - 1] - n / (2 * dec.k)
    extra = {}
    if params.eps_n is not None and c2[l1 - 1] > 0:
        others = [c2[i - 1] for i in range(1, min(dec.k, top) + 1) if i != l1]
        if others:
            rel = 1 - max(others) / c2[l1 - 1]
            extra["claim3prime_rel_gap"] = rel / (p**0.5 * params.np_ ** -params.eps_n)

    snd_thr = 200 * n**1.5 * p ** (2.5 + eps / 100)
    snd_counts = _snd_level2_counts(graph, lab, dec, basins)
    snd_m = float(snd_thr - snd_counts.max()) if len(snd_counts) else math.inf
    extra["technical_threshold"] = 400 * n**1.5 * p ** (3.5 + eps / 100)

    return EventReport(
        claim3_ok=bool(c3_m >= 0), claim3_margin=float(c3_m),
        claim4_ok=ok4, claim4_margin=m4,
        claim3prime_ok=bool(c3p_m >= 0), claim3prime_margin=float(c3p_m),
        snd_level2_ok=bool(snd_m >= 0), snd_level2_margin=snd_m,
        extra=extra,
    )


def _snd_level2_counts(graph, lab, dec, basins) -> np.ndarray:
    """For each l != l1, vertices of label l lying in basins l1, l, or basins of A-neighbors of v_l1 / v_l."""
    top = 2 * dec.k
    l1 = basins.first_max_label
    bo = basins.basin_of[dec.B - 1]
    lb = lab[dec.B - 1]
    keep = (lb >= 1) & (lb <= top)
    table = np.zeros((top + 1, top + 1), dtype=np.int64)  # [basin, label]
    np.add.at(table, (bo[keep], lb[keep]), 1)
    a_nb = [None] + [graph.neighbors(i)[graph.neighbors(i) <= top] for i in range(1, top + 1)]
    out = []
    for ell in range(1, top + 1):
        if ell == l1:
            continue
        S = np.unique(np.concatenate([[l1, ell], a_nb[l1], a_nb[ell]]))
        out.append(int(table[S, ell].sum()))
    return np.asarray(out, dtype=np.int64)


def check_level3_neighborhood_gap(graph, round2_labels, dec, params: DerivedParams, sample_size: int = 1000, seed: int = 0, target: int = 1) -> EventReport:
    """Per sampled u in Level 3: |N(u) ∩ C_2(target)| >= |N(u) ∩ C_2(l)| + frakN*p for all other l in [2k];
    also the Level-2 bound |N(u) ∩ B_2(l)| - |N(u) ∩ B_2(1)| <= 90np^2."""
    lab = np.asarray(round2_labels)
    top = 2 * dec.k
    C = dec.C
    if sample_size > len(C):
        raise ParameterError("sample_size exceeds |C|")
    c2 = _counts(lab, C, top)
    frakN = params.frakN_coeff * c2[target - 1]
    thr = frakN * params.p
    rng = np.random.default_rng(seed)
    sample = np.sort(rng.choice(C, size=sample_size, replace=False)) if sample_size else C[:0]
    level = dec.level
    gap_pass = ob_pass = 0
    for u in sample:
        nb = graph.neighbors(int(u))
        nl = lab[nb - 1]
        inC = level[nb - 1] == 3
        inB = level[nb - 1] == 2
        cc = np.bincount(nl[inC & (nl <= top)], minlength=top + 1)
        bc = np.bincount(nl[inB & (nl <= top)], minlength=top + 1)
        others = np.delete(cc[1:], target - 1)
        if cc[target] >= (others.max() if len(others) else 0) + thr:
            gap_pass += 1
        if top < 2 or np.max(bc[2:]) - bc[1] <= 90 * params.np2:
            ob_pass += 1
    s = max(len(sample), 1)
    return EventReport(
        level3_gap_ok=bool(gap_pass == len(sample)),
        level3_gap_pass_fraction=gap_pass / s,
        ob45_pass_fraction=ob_pass / s,
        extra={"frakN": float(frakN)},
    )


def regime_p(n: int, *, p: float | None = None, alpha: float | None = None, c: float | None = None) -> float:
    """Edge probability from exactly one of p, np = n^alpha, np = c n^(2/3)."""
    given = [x is not None for x in (p, alpha, c)]
    if sum(given) != 1:
        raise ParameterError("give exactly one of p, alpha, c")
    if p is not None:
        return float(p)
    if alpha is not None:
        return float(n**alpha / n)
    return float(c * n ** (2 / 3) / n)


def require_regime(params: DerivedParams) -> None:
    if np.any(params.z < 0):
        raise RegimeError("z_l < 0 for some l in [2k]")
