import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lpalab.errors import CapacityError, ParameterError
from lpalab.graph import (
    Graph,
    GnpParams,
    check_invariants,
    complete_graph,
    degree,
    empty_graph,
    from_edges,
    resample_induced,
    sample_gnp,
)


def test_p_zero_and_one_short_circuit():
    assert sample_gnp(GnpParams(100, 0.0)).m == 0
    g = sample_gnp(GnpParams(100, 1.0))
    assert g.m == 4950
    check_invariants(g)


def test_edge_count_within_four_sd():
    n, p = 10_000, 0.01
    mean = n * (n - 1) / 2 * p
    sd = math.sqrt(n * (n - 1) / 2 * p * (1 - p))
    for seed in (1, 2, 3):
        g = sample_gnp(GnpParams(n, p, seed))
        check_invariants(g)
        assert abs(g.m - mean) <= 4 * sd


def test_degree_examples():
    assert degree(empty_graph(7), 3) == 0
    assert all(degree(complete_graph(5), v) == 4 for v in range(1, 6))
    assert degree(from_edges(3, [(1, 2), (1, 3)]), 1) == 2
    with pytest.raises(ParameterError):
        degree(empty_graph(3), 4)
    with pytest.raises(ParameterError):
        degree(empty_graph(3), 0)


def test_bad_params():
    for bad in [dict(n=0, p=0.5), dict(n=5, p=-0.1), dict(n=5, p=1.5), dict(n=5, p=float("nan"))]:
        with pytest.raises(ParameterError):
            GnpParams(**bad)


def test_capacity_refusal_names_expected_count():
    with pytest.raises(CapacityError, match="4950"):
        sample_gnp(GnpParams(100, 1.0), max_edges=1000)


def test_determinism_and_serialization(tmp_path):
    a = sample_gnp(GnpParams(3000, 0.01, 99))
    b = sample_gnp(GnpParams(3000, 0.01, 99))
    assert a.to_bytes() == b.to_bytes()
    assert sample_gnp(GnpParams(3000, 0.01, 100)).to_bytes() != a.to_bytes()
    path = tmp_path / "g.bin"
    a.save(path)
    c = Graph.load(path)
    assert c.to_bytes() == a.to_bytes()
    with pytest.raises(ValueError):
        Graph.from_bytes(b"nope" + a.to_bytes()[4:])


def _merged_chi_square(sample, trials, p):
    """Chi-square p-value of an integer sample against Bin(trials, p), bins merged to expected >= 5."""
    support = np.arange(trials + 1)
    probs = stats.binom.pmf(support, trials, p)
    obs = np.bincount(sample, minlength=trials + 1)[: trials + 1]
    exp = probs * len(sample)
    bins_o, bins_e, acc_o, acc_e = [], [], 0, 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
            acc_o, acc_e = 0, 0.0
    bins_o[-1] += acc_o
    bins_e[-1] += acc_e
    bins_e = np.array(bins_e)
    return stats.chisquare(bins_o, bins_e / bins_e.sum() * sum(bins_o)).pvalue


@pytest.mark.slow
def test_edge_mean_and_degree_chi_square():
    n, p, reps = 2000, 0.05, 200
    mean = n * (n - 1) / 2 * p
    sd = math.sqrt(n * (n - 1) / 2 * p * (1 - p))
    ms, degs = [], []
    for s in range(reps):
        g = sample_gnp(GnpParams(n, p, 1000 + s))
        ms.append(g.m)
        if s < 20:
            check_invariants(g)
        # one vertex per graph keeps the degree sample independent
        degs.append(g.degree(1 + (s * 37) % n))
    assert abs(np.mean(ms) - mean) <= 5 * sd / math.sqrt(reps)
    assert _merged_chi_square(np.array(degs), n - 1, p) > 0.001


def test_resample_induced_keeps_outside_pairs():
    g = sample_gnp(GnpParams(400, 0.1, 5))
    S = np.arange(200, 401)
    h = resample_induced(g, S, 0.1, 77)
    check_invariants(h)
    inside = np.zeros(401, dtype=bool)
    inside[S] = True

    def outside(e):
        keep = ~(inside[e[:, 0]] & inside[e[:, 1]])
        return {tuple(x) for x in e[keep]}

    assert outside(g.edges()) == outside(h.edges())
    assert h.to_bytes() != g.to_bytes()


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 300), st.floats(0, 1), st.integers(0, 2**64 - 1))
def test_sampled_graphs_satisfy_invariants(n, p, seed):
    check_invariants(sample_gnp(GnpParams(n, p, seed)))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40).flatmap(lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(1, n), st.integers(1, n)), max_size=120))))
def test_from_edges_matches_edge_set(arg):
    n, pairs = arg
    pairs = [(u, v) for u, v in pairs if u != v]
    g = from_edges(n, pairs)
    check_invariants(g)
    want = {(min(u, v), max(u, v)) for u, v in pairs}
    assert {tuple(e) for e in g.edges().tolist()} == want
