import dataclasses
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpalab.alap import compute_basins, decompose_levels
from lpalab.errors import ParameterError
from lpalab.graph import GnpParams, from_edges, sample_gnp
from lpalab.theory import (
    DerivedParams,
    assert_params_invariants,
    check_events,
    check_level3_neighborhood_gap,
    check_round2_statistics,
    claim3_gap,
    claim4,
    derive_params,
    event_E,
    event_Eprime,
    event_F,
    event_G,
    lemma2_exceptions,
    regime_p,
)

mpmath.mp.dps = 50


def mp_k(n, p):
    n, p = mpmath.mpf(n), mpmath.mpf(p)
    return int(mpmath.ceil(15 / p**2 * mpmath.sqrt(mpmath.log(n) / n)))


def mp_K(n, p):
    return int(mpmath.ceil(2 * mpmath.log(mpmath.mpf(n)) / mpmath.mpf(p)))


def test_closed_forms_against_high_precision():
    d = derive_params(10_000, 0.1)
    assert (d.k, d.K) == (46, 185) == (mp_k(10_000, "0.1"), mp_K(10_000, "0.1"))
    assert d.Lambda == pytest.approx(0.6, abs=1e-15)
    assert d.z[0] == 10_000 and d.z[1] == pytest.approx(9000) and d.z[2] == pytest.approx(8100)

    d = derive_params(50_000, 0.04)
    assert (d.k, d.K) == (138, 541) == (mp_k(50_000, "0.04"), mp_K(50_000, "0.04"))
    assert d.omega == pytest.approx(59.8, abs=0.05)
    assert d.Lambda == pytest.approx(0.5358, abs=5e-5)


@pytest.mark.parametrize("alpha", [0.64, 0.7, 0.72])
def test_acceptance_grid_ceilings_are_robust(alpha):
    for n in (2000, 20_000, 50_000):
        p = n**alpha / n
        d = derive_params(n, p)
        assert d.k == mp_k(n, p) and d.K == mp_K(n, p)
    n = 50_000
    p = regime_p(n, c=1.0)
    assert derive_params(n, p).k == mp_k(n, p)


def test_absent_fields_when_np3_large():
    d = derive_params(1000, 0.5)
    assert d.k_star is None and d.M_n is None and d.gamma_n is None
    s = derive_params(10**8, 1e-4)
    assert s.k_star == pytest.approx(0.5 * math.sqrt(math.log(1e4) / 2e-4))
    assert s.gamma_n == pytest.approx(1e4 ** (0.5 - math.log(1e4) ** -0.5))


def test_domain_errors():
    for n, p in [(2, 0.5), (10, 0.0), (10, 1.0)]:
        with pytest.raises(ParameterError):
            derive_params(n, p)
    with pytest.raises(ParameterError):
        regime_p(100, p=0.1, alpha=0.5)


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 10**7), st.floats(1e-4, 0.999))
def test_params_invariants(n, p):
    d = derive_params(n, p)
    assert d.z_at(1) == n
    assert 0.5 < d.Lambda <= 0.7
    assert d.k >= 1 and d.K >= 1
    if 2 * d.k * p < 1 and 2 * d.k < 10**6:
        assert_params_invariants(d)


def test_event_E_examples():
    ok, m = event_E([1000, 900, 850], 50, 1e9, 1000)
    assert ok and m == pytest.approx(100 - 50 / 1.4)
    ok, m = event_E([1000, 990], 50, 1e9, 1000)
    assert not ok and m == pytest.approx(10 - 50 / 1.4)
    assert not event_E([1000, 900], 50, 5, 1010)[0]  # concentration part


def test_event_F_G_Eprime():
    k, np_ = 3, 100.0
    assert event_F(2 * k * np_, k, np_) == (True, pytest.approx(2 / 3 * k * np_))
    assert not event_F(4 / 3 * k * np_ - 1, k, np_)[0]
    assert event_G([10, 30, 60], 3, 0.1, 100)[0]
    assert not event_G([10, 15, 60], 3, 0.1, 100)[0]
    assert event_Eprime([100, 90], [100, 90], 1)[0]
    assert not event_Eprime([103, 90], [100, 90], 2)[0]


def test_claim_helpers():
    ok, m = claim3_gap([600, 300], 0.6)
    assert ok and m == pytest.approx(200)
    assert claim3_gap([600, 0, 0, 0], 0.6)[0]
    assert not claim4([100, 100 + 50 * 10.0], 10.0)[0]
    assert claim4([100, 100 + 40 * 10.0], 10.0)[0]


def small_setup():
    g = sample_gnp(GnpParams(3000, 0.05, 4))
    d = derive_params(3000, 0.05)
    d = dataclasses.replace(d, k=20, K=60)
    dec = decompose_levels(g, d.k)
    return g, d, dec, compute_basins(g, dec)


def test_check_events_is_pure_and_consistent():
    g, d, dec, b = small_setup()
    r1 = check_events(b, dec, d)
    r2 = check_events(b, dec, d)
    assert r1.as_dict() == r2.as_dict()
    assert r1.F == (4 / 3 * d.k * d.np_ <= len(dec.B) <= 8 / 3 * d.k * d.np_)


def test_round2_statistics_all_label_one():
    g, d, dec, b = small_setup()
    lab = np.ones(g.n, dtype=np.int32)
    rep = check_round2_statistics(g, lab, dec, b, d)
    assert rep.claim4_ok  # every other count is zero
    c2 = np.zeros(2 * d.k)
    c2[0] = len(dec.C)
    assert claim3_gap(c2, d.Lambda)[0]
    l3 = check_level3_neighborhood_gap(g, lab, dec, d, sample_size=50, seed=1)
    deg_c = [np.count_nonzero(dec.level[g.neighbors(int(u)) - 1] == 3) for u in dec.C]
    assert l3.level3_gap_ok == (min(deg_c) >= l3.extra["frakN"] * d.p or l3.level3_gap_pass_fraction == 1.0)


def test_level3_gap_fails_on_even_split():
    g, d, dec, b = small_setup()
    lab = np.where(np.arange(g.n) % 2 == 0, 1, 2).astype(np.int32)
    l3 = check_level3_neighborhood_gap(g, lab, dec, d, sample_size=min(200, len(dec.C)), seed=3)
    assert not l3.level3_gap_ok
    with pytest.raises(ParameterError):
        check_level3_neighborhood_gap(g, lab, dec, d, sample_size=len(dec.C) + 1)


def test_snd_level2_counts_by_brute_force():
    g, d, dec, b = small_setup()
    rng = np.random.default_rng(0)
    lab = rng.integers(1, 2 * d.k + 1, size=g.n).astype(np.int32)
    rep = check_round2_statistics(g, lab, dec, b, d, eps=0.02)
    l1 = b.first_max_label
    worst = 0
    for ell in range(1, 2 * d.k + 1):
        if ell == l1:
            continue
        S = {l1, ell} | {int(x) for x in g.neighbors(l1) if x <= 2 * d.k} | {int(x) for x in g.neighbors(ell) if x <= 2 * d.k}
        cnt = sum(1 for u in dec.B if b.basin_of[u - 1] in S and lab[u - 1] == ell)
        worst = max(worst, cnt)
    thr = 200 * d.n**1.5 * d.p ** (2.5 + 0.02 / 100)
    assert rep.snd_level2_margin == pytest.approx(thr - worst)


def test_lemma2_exceptions():
    d = dataclasses.replace(derive_params(20, 0.5), k=2, K=5)
    lab = np.array([1, 1, 2, 9, 5] + [1] * 15, dtype=np.int32)
    # v4 sits inside [k+1, K-1] and is exempt; v5 (= K) carries its own label 5 > k
    first, second = lemma2_exceptions(lab, d)
    assert first == 1
    assert second == 0
    lab[10] = 4
    assert lemma2_exceptions(lab, d)[1] == 1
