"""Synchronous label propagation with the round-1 smallest-label rule.

Round 1 breaks ties toward the smallest label; later rounds break ties
uniformly at random by default. A run stops at the first round that leaves
the label vector unchanged.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from ._rng import nb_below, nb_tie_hash, new_state
from .errors import ContractError, ParameterError
from .graph import Graph

DEFAULT_MAX_ROUNDS = 64


class TiePolicy(enum.IntEnum):
    SMALLEST = 0
    UNIFORM = 1
    HASH = 2


@dataclass(frozen=True, eq=False)
class LabelVector:
    labels: np.ndarray  # labels[i] is the label of v_{i+1}; values in [1, n]
    round: int = 0

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, v: int) -> int:
        return int(self.labels[v - 1])

    def __eq__(self, other):
        if not isinstance(other, LabelVector):
            return NotImplemented
        return self.round == other.round and np.array_equal(self.labels, other.labels)

    def as_tuple(self) -> tuple:
        return tuple(int(x) for x in self.labels)

    def histogram(self) -> np.ndarray:
        """(label, count) rows for every label present, ascending by label."""
        counts = np.bincount(self.labels, minlength=len(self.labels) + 1)
        present = np.flatnonzero(counts)
        return np.stack([present, counts[present]], axis=1)

    def mode(self) -> int:
        """Most frequent label; ties go to the smallest label."""
        return int(np.argmax(np.bincount(self.labels)))


@dataclass
class RunResult:
    rounds_executed: int
    converged: bool
    final_labels: LabelVector
    surviving_label_count: int
    winner: int | None
    per_round_histograms: list | None = None
    history: list = field(default_factory=list, repr=False)
    consensus_round: int | None = None  # first round whose vector is constant

    def labels_at(self, r: int) -> LabelVector:
        for lv in self.history:
            if lv.round == r:
                return lv
        raise KeyError(f"round {r} was not kept; run with keep_history=True")


def init_labels(n: int) -> LabelVector:
    if n < 1:
        raise ParameterError("n must be >= 1")
    return LabelVector(np.arange(1, n + 1, dtype=np.int32), 0)


def tie_stream(seed: int) -> np.ndarray:
    """A seeded random stream for UNIFORM tie breaking (consumed only on genuine ties)."""
    return new_state(seed)


# kernels --------------------------------------------------------------------


@nb.njit(nogil=True, cache=True)
def _round1_min(off, nbr):
    n = off.shape[0] - 1
    out = np.empty(n, dtype=np.int32)
    for v in range(n):
        best = v
        if off[v + 1] > off[v] and nbr[off[v]] < v:
            best = nbr[off[v]]
        out[v] = best + 1
    return out


@nb.njit(nogil=True, cache=True)
def _majority_pass(off, nbr, prev, out, policy, state, hseed, dirty, use_dirty, tie_flag, reverse):
    n = prev.shape[0]
    stamp = np.zeros(n + 1, dtype=np.int64)
    cnt = np.zeros(n + 1, dtype=np.int64)
    maxdeg = 0
    for v in range(n):
        d = off[v + 1] - off[v]
        if d > maxdeg:
            maxdeg = d
    touched = np.empty(maxdeg + 1, dtype=np.int32)
    maxers = np.empty(maxdeg + 1, dtype=np.int32)
    changed = 0
    for ii in range(n):
        v = n - 1 - ii if reverse else ii
        if use_dirty and not dirty[v]:
            out[v] = prev[v]
            continue
        ep = v + 1
        lab = prev[v]
        stamp[lab] = ep
        cnt[lab] = 1
        touched[0] = lab
        nt = 1
        best = 1
        for j in range(off[v], off[v + 1]):
            lab = prev[nbr[j]]
            if stamp[lab] != ep:
                stamp[lab] = ep
                cnt[lab] = 1
                touched[nt] = lab
                nt += 1
            else:
                cnt[lab] += 1
                if cnt[lab] > best:
                    best = cnt[lab]
        nm = 0
        for t in range(nt):
            if cnt[touched[t]] == best:
                maxers[nm] = touched[t]
                nm += 1
        if nm == 1:
            choice = maxers[0]
            tie_flag[v] = False
        else:
            tie_flag[v] = True
            if policy == 0:
                choice = maxers[0]
                for t in range(1, nm):
                    if maxers[t] < choice:
                        choice = maxers[t]
            elif policy == 1:
                cand = np.sort(maxers[:nm])
                choice = cand[nb_below(state, nm)]
            else:
                choice = maxers[0]
                hbest = nb_tie_hash(hseed, v + 1, choice)
                for t in range(1, nm):
                    h = nb_tie_hash(hseed, v + 1, maxers[t])
                    if h < hbest or (h == hbest and maxers[t] < choice):
                        hbest = h
                        choice = maxers[t]
        out[v] = choice
        if choice != prev[v]:
            changed += 1
    return changed


@nb.njit(nogil=True, cache=True)
def _mark_dirty(off, nbr, prev, cur, tie_flag, with_ties, dirty):
    n = prev.shape[0]
    dirty[:] = False
    for v in range(n):
        if cur[v] != prev[v]:
            dirty[v] = True
            for j in range(off[v], off[v + 1]):
                dirty[nbr[j]] = True
        elif with_ties and tie_flag[v]:
            dirty[v] = True


# public ---------------------------------------------------------------------


def round1_minindex(graph: Graph) -> LabelVector:
    """Exact round-1 labels: the minimum index in each closed neighborhood."""
    return LabelVector(_round1_min(graph.off, graph.nbr), 1)


def lpa_round(
    graph: Graph,
    labels: LabelVector,
    round_index: int,
    policy: TiePolicy,
    rng: np.ndarray | None = None,
    hash_seed: int = 0,
    *,
    reverse_order: bool = False,
) -> LabelVector:
    """One synchronous round computed from ``labels`` (the previous round's vector).

    ``rng`` is a tie stream from :func:`tie_stream`; required for UNIFORM.
    ``reverse_order`` only exists to test that processing order is irrelevant.
    """
    if labels.round != round_index - 1:
        raise ContractError(
            f"labels reflect round {labels.round}, cannot compute round {round_index}"
        )
    if (policy == TiePolicy.SMALLEST) != (round_index == 1):
        raise ContractError("SMALLEST ties are used at round 1 and only there")
    if policy == TiePolicy.UNIFORM and rng is None:
        raise ContractError("UNIFORM tie breaking needs a random stream")
    state = rng if rng is not None else new_state(0)
    prev = np.ascontiguousarray(labels.labels, dtype=np.int32)
    out = np.empty_like(prev)
    flags = np.zeros(len(prev), dtype=np.bool_)
    _majority_pass(
        graph.off, graph.nbr, prev, out, int(policy), state, np.uint64(hash_seed),
        flags, False, flags, reverse_order,
    )
    return LabelVector(out, round_index)


def _summary(labels: np.ndarray) -> tuple[int, int | None]:
    present = np.unique(labels)
    return len(present), (int(present[0]) if len(present) == 1 else None)


def run_lpa(
    graph: Graph,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    seed: int = 0,
    record_histograms: bool = False,
    *,
    keep_history: bool = False,
    later_policy: TiePolicy = TiePolicy.UNIFORM,
    hash_seed: int | None = None,
    start: LabelVector | None = None,
    stream: np.ndarray | None = None,
) -> RunResult:
    """Run LPA from the identity labeling until a round changes nothing or ``max_rounds`` is hit.

    Only vertices whose closed neighborhood changed (or that broke a tie
    randomly) are recomputed; this is exact, including the order in which the
    tie stream is consumed. ``start`` resumes from a given vector and ``stream``
    continues an existing tie stream (both used by ALAP).
    """
    if max_rounds < 1:
        raise ParameterError("max_rounds must be >= 1")
    if later_policy == TiePolicy.SMALLEST:
        raise ParameterError("rounds after the first use UNIFORM or HASH ties")
    n = graph.n
    state = stream if stream is not None else tie_stream(seed)
    hseed = np.uint64(seed if hash_seed is None else hash_seed)
    history = []
    hists = [] if record_histograms else None

    if start is None:
        prev = init_labels(n).labels
        cur = _round1_min(graph.off, graph.nbr)
        r = 1
    else:
        prev = None
        cur = np.ascontiguousarray(start.labels, dtype=np.int32)
        r = start.round
    converged = prev is not None and np.array_equal(prev, cur)

    consensus = [None]

    def keep(arr, rr):
        if consensus[0] is None and n and arr.min() == arr.max():
            consensus[0] = rr
        if keep_history:
            history.append(LabelVector(arr.copy(), rr))
        if hists is not None:
            hists.append(LabelVector(arr, rr).histogram())

    keep(cur, r)
    dirty = np.ones(n, dtype=np.bool_)
    tie_flag = np.zeros(n, dtype=np.bool_)
    if prev is not None:
        _mark_dirty(graph.off, graph.nbr, prev, cur, tie_flag, False, dirty)
    with_ties = later_policy == TiePolicy.UNIFORM
    while not converged and r < max_rounds:
        r += 1
        if n and cur.min() == cur.max():
            # constant vector: every closed neighborhood is unanimous, so this round is a no-op
            keep(cur, r)
            converged = True
            break
        nxt = np.empty_like(cur)
        changed = _majority_pass(
            graph.off, graph.nbr, cur, nxt, int(later_policy), state, hseed,
            dirty, True, tie_flag, False,
        )
        keep(nxt, r)
        if changed == 0:
            converged = True
            cur = nxt
            break
        _mark_dirty(graph.off, graph.nbr, cur, nxt, tie_flag, with_ties, dirty)
        cur = nxt

    count, winner = _summary(cur)
    return RunResult(
        rounds_executed=r,
        converged=bool(converged),
        final_labels=LabelVector(cur, r),
        surviving_label_count=count,
        winner=winner,
        per_round_histograms=hists,
        history=history,
        consensus_round=consensus[0],
    )
