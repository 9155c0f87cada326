"""The alternative label attribution procedure (ALAP), level decomposition and basins.

Level 1 is A = {v_1, ..., v_2k}, Level 2 is B = N(A) \\ A and Level 3 is the
rest. A vertex of B lies in basin l when v_l is its smallest-index neighbor in A.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np

from ._rng import derive, nb_below, nb_tie_hash
from .dynamics import (
    LabelVector,
    RunResult,
    TiePolicy,
    _majority_pass,
    lpa_round,
    round1_minindex,
    run_lpa,
    tie_stream,
)
from .errors import ParameterError, RegimeError
from .graph import Graph

LEVEL_A, LEVEL_B, LEVEL_C = 1, 2, 3


@dataclass(frozen=True, eq=False)
class LevelDecomposition:
    k: int
    A: np.ndarray  # 1-based, ascending
    B: np.ndarray
    C: np.ndarray
    level: np.ndarray = field(repr=False)  # level[i] in {1, 2, 3} for v_{i+1}


@dataclass(frozen=True, eq=False)
class BasinTable:
    basin_of: np.ndarray = field(repr=False)  # basin_of[i] = l if v_{i+1} in B_1(l), else 0
    sizes: np.ndarray  # sizes[l-1] = |B_1(l)|
    first_max_label: int
    first_max: int
    second_max: int

    def basin(self, ell: int) -> np.ndarray:
        return np.flatnonzero(self.basin_of == ell) + 1

    @property
    def basins(self) -> list:
        order = np.argsort(self.basin_of, kind="stable")
        bounds = np.searchsorted(self.basin_of[order], np.arange(1, len(self.sizes) + 2))
        return [order[bounds[i] : bounds[i + 1]] + 1 for i in range(len(self.sizes))]


@dataclass
class AlapResult:
    dec: LevelDecomposition
    basins: BasinTable
    round1_labels: np.ndarray  # 0 on C
    round2_labels: np.ndarray  # full vector; A follows the ordinary LPA rule
    run: RunResult  # rounds >= 3, resumed from round 2
    z_values: np.ndarray | None
    exposure_ledger: list

    @property
    def later_rounds(self) -> list:
        return self.run.history


@dataclass
class DisagreementReport:
    n: int
    k: int
    K: int
    disagreeing_vertices: np.ndarray
    count_outside_VK: int

    @property
    def fraction_outside_VK(self) -> float | None:
        rest = self.n - self.K
        return self.count_outside_VK / rest if rest > 0 else None


def decompose_levels(graph: Graph, k: int) -> LevelDecomposition:
    n = graph.n
    if k < 1 or 2 * k > n:
        raise ParameterError(f"need 1 <= k and 2k <= n, got k={k}, n={n}")
    top = 2 * k
    level = np.full(n, LEVEL_C, dtype=np.int8)
    deg = graph.degrees()
    has = deg > 0
    first = np.full(n, n, dtype=np.int64)
    first[has] = graph.nbr[graph.off[:-1][has]]
    level[first < top] = LEVEL_B
    level[:top] = LEVEL_A
    idx = np.arange(1, n + 1)
    return LevelDecomposition(
        k=k,
        A=idx[:top],
        B=idx[level == LEVEL_B],
        C=idx[level == LEVEL_C],
        level=level,
    )


def compute_basins(graph: Graph, dec: LevelDecomposition) -> BasinTable:
    top = 2 * dec.k
    basin_of = np.zeros(graph.n, dtype=np.int32)
    b0 = dec.B - 1
    # neighbor lists are sorted, so the first neighbor is the smallest A-neighbor
    basin_of[b0] = graph.nbr[graph.off[b0]] + 1
    sizes = np.bincount(basin_of[b0], minlength=top + 1)[1:]
    l1 = int(np.argmax(sizes)) + 1
    rest = np.delete(sizes, l1 - 1)
    return BasinTable(
        basin_of=basin_of,
        sizes=sizes,
        first_max_label=l1,
        first_max=int(sizes[l1 - 1]),
        second_max=int(rest.max()) if len(rest) else 0,
    )


@nb.njit(nogil=True, cache=True)
def _alap_round2_kernel(off, nbr, basin_of, level, top, policy, state, hseed, out):
    n = basin_of.shape[0]
    cnt = np.zeros(top + 1, dtype=np.int64)
    maxers = np.empty(top, dtype=np.int32)
    for u in range(n):
        if level[u] == 1:
            continue
        best = 0
        for j in range(off[u], off[u + 1]):
            b = basin_of[nbr[j]]
            if b > 0:
                cnt[b] += 1
                if cnt[b] > best:
                    best = cnt[b]
        nm = 0
        for i in range(1, top + 1):
            if cnt[i] == best:
                maxers[nm] = i
                nm += 1
        for j in range(off[u], off[u + 1]):
            cnt[basin_of[nbr[j]]] = 0
        if nm == 1:
            out[u] = maxers[0]
        elif policy == 1:
            out[u] = maxers[nb_below(state, nm)]
        else:
            choice = maxers[0]
            hbest = nb_tie_hash(hseed, u + 1, choice)
            for t in range(1, nm):
                h = nb_tie_hash(hseed, u + 1, maxers[t])
                if h < hbest:
                    hbest = h
                    choice = maxers[t]
            out[u] = choice


def alap_round2(
    graph: Graph,
    dec: LevelDecomposition,
    basins: BasinTable,
    policy: TiePolicy = TiePolicy.UNIFORM,
    rng: np.ndarray | None = None,
    hash_seed: int = 0,
) -> np.ndarray:
    """ALAP round-2 labels for B ∪ C (entries for A are 0).

    Each u counts its neighbors in every basin B_1(i), i in [2k], and takes a
    label from the argmax set; with no B-neighbors the argmax set is all of [2k].
    """
    if policy == TiePolicy.SMALLEST:
        raise ParameterError("ALAP round 2 uses UNIFORM or HASH ties")
    if policy == TiePolicy.UNIFORM and rng is None:
        raise ParameterError("UNIFORM tie breaking needs a random stream")
    state = rng if rng is not None else tie_stream(0)
    out = np.zeros(graph.n, dtype=np.int32)
    _alap_round2_kernel(
        graph.off, graph.nbr, basins.basin_of, dec.level, 2 * dec.k, int(policy),
        state, np.uint64(hash_seed), out,
    )
    return out


def _round2_on_A(graph, dec, r1_full, policy, state, hash_seed):
    # v in A has N[v] inside A ∪ B, so the ordinary LPA rule reads only round-1 labels of A ∪ B
    top = 2 * dec.k
    prev = np.ascontiguousarray(r1_full, dtype=np.int32)
    out = np.empty_like(prev)
    only_A = np.zeros(graph.n, dtype=np.bool_)
    only_A[:top] = True
    flags = np.zeros(graph.n, dtype=np.bool_)
    _majority_pass(graph.off, graph.nbr, prev, out, int(policy), state, np.uint64(hash_seed), only_A, True, flags, False)
    return out[:top]


def alap_run(
    graph: Graph,
    params=None,
    seed: int = 0,
    max_rounds: int = 64,
    *,
    k: int | None = None,
    policy: TiePolicy = TiePolicy.UNIFORM,
    hash_seed: int | None = None,
    keep_history: bool = False,
) -> AlapResult:
    """Run ALAP: two structured rounds, then ordinary LPA with UNIFORM ties from the same stream.

    ``k`` defaults to ``params.k``. ``z_values`` is filled only when ``params`` is given.
    """
    if k is None:
        if params is None:
            raise ParameterError("give params or k")
        k = params.k
    dec = decompose_levels(graph, k)
    basins = compute_basins(graph, dec)
    r1 = round1_minindex(graph).labels
    round1 = np.where(dec.level == LEVEL_C, 0, r1).astype(np.int32)

    state = tie_stream(seed)
    hseed = seed if hash_seed is None else hash_seed
    r2 = np.zeros(graph.n, dtype=np.int32)
    r2[: 2 * k] = _round2_on_A(graph, dec, r1, policy, state, hseed)
    rest = alap_round2(graph, dec, basins, policy, state, hseed)
    r2[2 * k :] = rest[2 * k :]

    ledger = [
        {"stage": 1, "reads": ["A-V"], "labels": "A∪B"},
        {"stage": 2, "reads": ["A-B", "B-B", "B-C"], "labels": "B∪C"},
        {"stage": 3, "reads": ["all"], "labels": "V"},
    ]
    run = run_lpa(
        graph,
        max_rounds=max(max_rounds, 2),
        start=LabelVector(r2, 2),
        stream=state,
        keep_history=keep_history,
    )
    z = build_coupled_Z(graph, basins, params, dec) if params is not None and params.k == k else None
    return AlapResult(dec, basins, round1, r2, run, z, ledger)


def build_coupled_Z(graph: Graph, basins: BasinTable, params, dec: LevelDecomposition | None = None) -> np.ndarray:
    """Z_l = |N(v_l) \\ (A ∪ U_l)| with |U_l| = max(0, n - z_l - 2k).

    U_l is the lowest-index part of B_1([l-1]) when that set is too large, and
    B_1([l-1]) padded with the lowest-index vertices outside A ∪ B_1([l-1]) otherwise.
    """
    n = graph.n
    top = len(basins.sizes)
    z = params.z_at(np.arange(1, top + 1))
    if np.any(z < 0):
        raise RegimeError("z_l < 0 for some l in [2k]")
    target = np.maximum(0, np.floor(n - z - top).astype(np.int64))
    bo = basins.basin_of
    out = np.zeros(top, dtype=np.int64)
    for ell in range(1, top + 1):
        nb_ = graph.neighbors(ell)
        nb_ = nb_[nb_ > top]
        size = int(target[ell - 1])
        if size == 0 or len(nb_) == 0:
            out[ell - 1] = len(nb_)
            continue
        prior = (bo >= 1) & (bo < ell)
        prior[:top] = False
        prior_idx = np.flatnonzero(prior)
        if len(prior_idx) >= size:
            U = prior_idx[:size]
        else:
            others = np.flatnonzero(~prior)
            others = others[others >= top][: size - len(prior_idx)]
            U = np.concatenate([prior_idx, others])
        inU = np.zeros(n, dtype=bool)
        inU[U] = True
        out[ell - 1] = int(np.count_nonzero(~inU[nb_ - 1]))
    return out


def compare_lpa_alap(graph: Graph, params, seed: int = 0, *, k: int | None = None, K: int | None = None) -> DisagreementReport:
    """Rounds 1-2 of LPA and of ALAP on one graph, both breaking ties by the same hash."""
    k = params.k if k is None else k
    K = params.K if K is None else K
    r1 = round1_minindex(graph)
    lpa2 = lpa_round(graph, r1, 2, TiePolicy.HASH, hash_seed=seed).labels
    dec = decompose_levels(graph, k)
    basins = compute_basins(graph, dec)
    alap2 = np.zeros(graph.n, dtype=np.int32)
    alap2[: 2 * k] = _round2_on_A(graph, dec, r1.labels, TiePolicy.HASH, tie_stream(0), seed)
    alap2[2 * k :] = alap_round2(graph, dec, basins, TiePolicy.HASH, hash_seed=seed)[2 * k :]
    dis = np.flatnonzero(lpa2 != alap2) + 1
    return DisagreementReport(
        n=graph.n, k=k, K=K, disagreeing_vertices=dis, count_outside_VK=int(np.count_nonzero(dis > K))
    )


def coupled_Z_statistic(Z: np.ndarray, basins: BasinTable, np_: float) -> tuple[float, bool]:
    """max_l |Z_l - |B_1(l)|| and whether it is within (np)^(2/5)."""
    dev = float(np.max(np.abs(Z - basins.sizes))) if len(Z) else 0.0
    return dev, dev <= np_**0.4


def trial_tie_seed(seed: int) -> int:
    return derive(seed, 2)
