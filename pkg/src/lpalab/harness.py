"""Seeded Monte Carlo trials, JSON-lines records and CSV summaries."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import binom
from ._rng import derive, trial_seed
from .alap import compare_lpa_alap, compute_basins, decompose_levels
from .dynamics import run_lpa
from .errors import ParameterError
from .graph import GnpParams, sample_gnp
from .theory import (
    check_events,
    check_level3_neighborhood_gap,
    check_round2_statistics,
    derive_params,
    lemma2_exceptions,
    regime_p,
)

SCHEMA_VERSION = 1
MODES = ("simulate", "compare", "sweep", "verify", "summarize")
STREAM_GRAPH, STREAM_TIES, STREAM_HASH, STREAM_SAMPLE = 0, 1, 2, 3


class HarnessError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "simulate"
    n: int | None = None
    p: float | None = None
    alpha: float | None = None
    c: float | None = None
    trials: int = 1
    base_seed: int = 0
    max_rounds: int = 64
    thread_count: int | None = None
    events: bool = False
    out: str | None = None
    G_L: int = 5
    G_delta: float = 0.1
    eps: float = 0.02
    level3_sample: int = 1000

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.mode in ("simulate", "compare"):
            if self.n is None or self.n < 1:
                raise ParameterError("n must be a positive integer")
            if sum(x is not None for x in (self.p, self.alpha, self.c)) != 1:
                raise ParameterError("give exactly one of p, alpha, c")
            if self.trials < 1:
                raise ParameterError("trials must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ParameterError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @property
    def edge_p(self) -> float:
        return regime_p(self.n, p=self.p, alpha=self.alpha, c=self.c)


@dataclass
class TrialRecord:
    schema_version: int = SCHEMA_VERSION
    mode: str | None = None
    trial: int | None = None
    n: int | None = None
    p: float | None = None
    seed: int | None = None
    edges: int | None = None
    rounds_executed: int | None = None
    consensus_round: int | None = None
    converged: bool | None = None
    winner: int | None = None
    winner_is_1: bool | None = None
    round1_mode: int | None = None
    winner_equals_round1_mode: bool | None = None
    surviving_label_count: int | None = None
    k: int | None = None
    K: int | None = None
    ell1: int | None = None
    basin_first_max: int | None = None
    basin_second_max: int | None = None
    basin_gap: int | None = None
    level2_size: int | None = None
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
    alap_disagreements: int | None = None
    alap_disagreement_outside_VK: int | None = None
    alap_disagreement_fraction_outside_VK: float | None = None
    timing: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"), default=_json_default)

    @classmethod
    def from_json(cls, line: str) -> "TrialRecord":
        d = json.loads(line)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise HarnessError(f"unsupported schema_version {d.get('schema_version')!r}")
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(type(x))


def _finite(x):
    return None if x is None or (isinstance(x, float) and math.isinf(x)) else float(x)


def thread_count(requested: int | None = None) -> int:
    """Flag beats LPA_THREADS beats the number of available CPUs."""
    if requested:
        return max(1, int(requested))
    env = os.environ.get("LPA_THREADS")
    if env:
        v = int(env)
        if v < 1:
            raise ParameterError("LPA_THREADS must be a positive integer")
        return v
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _simulate(cfg: ExperimentConfig, t: int, p: float) -> TrialRecord:
    seed = trial_seed(cfg.base_seed, t)
    rec = TrialRecord(mode="simulate", trial=t, n=cfg.n, p=p, seed=seed)
    t0 = time.perf_counter()
    g = sample_gnp(GnpParams(cfg.n, p, derive(seed, STREAM_GRAPH)))
    rec.edges = g.m
    t1 = time.perf_counter()
    run = run_lpa(g, cfg.max_rounds, seed=derive(seed, STREAM_TIES), keep_history=True)
    t2 = time.perf_counter()
    rec.rounds_executed = run.rounds_executed
    rec.consensus_round = run.consensus_round
    rec.converged = run.converged
    rec.surviving_label_count = run.surviving_label_count
    rec.winner = run.winner
    r1 = run.labels_at(1)
    rec.round1_mode = r1.mode()
    if run.winner is not None:
        rec.winner_is_1 = run.winner == 1
        rec.winner_equals_round1_mode = run.winner == rec.round1_mode
    rec.timing = {"sample_s": t1 - t0, "lpa_s": t2 - t1}

    if 0 < p < 1 and cfg.n >= 3:
        dp = derive_params(cfg.n, p)
        rec.k, rec.K = dp.k, dp.K
        if 2 * dp.k <= cfg.n:
            dec = decompose_levels(g, dp.k)
            basins = compute_basins(g, dec)
            rec.ell1 = basins.first_max_label
            rec.basin_first_max = basins.first_max
            rec.basin_second_max = basins.second_max
            rec.basin_gap = basins.first_max - basins.second_max
            rec.level2_size = len(dec.B)
            if cfg.events:
                _events(cfg, rec, g, run, dec, basins, dp, seed)
        rec.timing["events_s"] = time.perf_counter() - t2
    return rec


def _events(cfg, rec, g, run, dec, basins, dp, seed):
    ev = check_events(basins, dec, dp, (cfg.G_L, cfg.G_delta))
    rec.E, rec.E_margin = ev.E, _finite(ev.E_margin)
    rec.Eprime, rec.Eprime_margin = ev.Eprime, _finite(ev.Eprime_margin)
    rec.F, rec.F_margin = ev.F, _finite(ev.F_margin)
    rec.G, rec.G_margin = ev.G, _finite(ev.G_margin)
    try:
        lab2 = run.labels_at(2).labels
    except KeyError:
        lab2 = run.final_labels.labels  # converged at round 1; the vector is fixed
    first, _ = lemma2_exceptions(lab2, dp)
    rec.lemma2_exceptions = first
    rec.lemma2_ok = first == 0
    r2 = check_round2_statistics(g, lab2, dec, basins, dp, cfg.eps)
    rec.claim3_ok, rec.claim3_margin = r2.claim3_ok, _finite(r2.claim3_margin)
    rec.claim4_ok, rec.claim4_margin = r2.claim4_ok, _finite(r2.claim4_margin)
    rec.claim3prime_ok, rec.claim3prime_margin = r2.claim3prime_ok, _finite(r2.claim3prime_margin)
    rec.snd_level2_ok, rec.snd_level2_margin = r2.snd_level2_ok, _finite(r2.snd_level2_margin)
    size = min(cfg.level3_sample, len(dec.C))
    if size > 0:
        l3 = check_level3_neighborhood_gap(g, lab2, dec, dp, size, derive(seed, STREAM_SAMPLE))
        rec.level3_gap_ok = l3.level3_gap_ok
        rec.level3_gap_pass_fraction = l3.level3_gap_pass_fraction
        rec.ob45_pass_fraction = l3.ob45_pass_fraction


def _compare(cfg: ExperimentConfig, t: int, p: float) -> TrialRecord:
    seed = trial_seed(cfg.base_seed, t)
    rec = TrialRecord(mode="compare", trial=t, n=cfg.n, p=p, seed=seed)
    t0 = time.perf_counter()
    g = sample_gnp(GnpParams(cfg.n, p, derive(seed, STREAM_GRAPH)))
    rec.edges = g.m
    dp = derive_params(cfg.n, p)
    rec.k, rec.K = dp.k, dp.K
    rep = compare_lpa_alap(g, dp, derive(seed, STREAM_HASH))
    rec.alap_disagreements = len(rep.disagreeing_vertices)
    rec.alap_disagreement_outside_VK = rep.count_outside_VK
    rec.alap_disagreement_fraction_outside_VK = rep.fraction_outside_VK
    rec.timing = {"compare_s": time.perf_counter() - t0}
    return rec


def run_trials(cfg: ExperimentConfig, on_record=None) -> list[TrialRecord]:
    """Run cfg.trials trials in parallel; records come back (and are written) in trial order."""
    if cfg.mode not in ("simulate", "compare"):
        raise ParameterError(f"run_trials handles simulate/compare, not {cfg.mode!r}")
    p = cfg.edge_p
    GnpParams(cfg.n, p)  # validate before spawning work
    if cfg.mode == "compare":
        k = derive_params(cfg.n, p).k
        if 2 * k > cfg.n:
            raise ParameterError(f"compare needs 2k <= n; k={k} at n={cfg.n}, p={p:.6g}")
    work = _simulate if cfg.mode == "simulate" else _compare
    out_f = None
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        out_f = open(cfg.out, "w")
    records = []
    try:
        with ThreadPoolExecutor(max_workers=thread_count(cfg.thread_count)) as ex:
            futures = [ex.submit(work, cfg, t, p) for t in range(cfg.trials)]
            for t, fut in enumerate(futures):
                try:
                    rec = fut.result()
                except Exception as e:
                    for f in futures[t + 1 :]:
                        f.cancel()
                    raise HarnessError(f"trial {t} failed: {e}") from e
                records.append(rec)
                if out_f:
                    try:
                        out_f.write(rec.to_json() + "\n")
                        out_f.flush()
                    except OSError as e:
                        raise HarnessError(f"writing trial {t} failed: {e}") from e
                if on_record:
                    on_record(rec)
    finally:
        if out_f:
            out_f.close()
    return records


def run_sweep(path) -> list[list[TrialRecord]]:
    spec = json.loads(Path(path).read_text())
    if isinstance(spec, dict):
        spec = [spec]
    return [run_trials(ExperimentConfig.from_dict(d)) for d in spec]


# summaries ------------------------------------------------------------------

FLAG_COLUMNS = ["E", "Eprime", "F", "G", "lemma2_ok", "claim3_ok", "claim4_ok", "claim3prime_ok", "snd_level2_ok", "level3_gap_ok"]
SUMMARY_COLUMNS = (
    ["mode", "n", "p", "count", "converged_freq", "consensus_le5_freq", "winner1_freq", "winner_eq_round1_mode_freq"]
    + [f"{c}_freq" for c in FLAG_COLUMNS]
    + ["rounds_mean", "rounds_se", "disagreement_fraction_mean", "disagreement_fraction_se"]
)


def read_records(path) -> list[TrialRecord]:
    out = []
    with open(path) as f:
        for i, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                out.append(TrialRecord.from_json(line))
            except (ValueError, TypeError, HarnessError) as e:
                raise HarnessError(f"line {i}: malformed record ({e})") from e
    return out


def _freq(vals):
    v = [x for x in vals if x is not None]
    return sum(bool(x) for x in v) / len(v) if v else None


def _mean_se(vals):
    v = np.array([x for x in vals if x is not None], dtype=float)
    if len(v) == 0:
        return None, None
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return float(v.mean()), se


def summary_rows(records: list[TrialRecord]) -> list[dict]:
    groups: dict = {}
    for r in records:
        groups.setdefault((r.mode, r.n, r.p), []).append(r)
    rows = []
    for (mode, n, p), rs in sorted(groups.items(), key=lambda kv: (str(kv[0][0]), kv[0][1] or 0, kv[0][2] or 0)):
        conv = [r for r in rs if r.converged]
        row = {
            "mode": mode,
            "n": n,
            "p": p,
            "count": len(rs),
            "converged_freq": _freq([r.converged for r in rs]),
            "consensus_le5_freq": _freq([None if r.rounds_executed is None else (r.consensus_round is not None and r.consensus_round <= 5) for r in rs]),
            "winner1_freq": _freq([None if r.rounds_executed is None else bool(r.winner_is_1) for r in rs]),
            "winner_eq_round1_mode_freq": _freq([r.winner_equals_round1_mode for r in conv]),
        }
        for c in FLAG_COLUMNS:
            row[f"{c}_freq"] = _freq([getattr(r, c) for r in rs])
        row["rounds_mean"], row["rounds_se"] = _mean_se([r.rounds_executed for r in rs])
        row["disagreement_fraction_mean"], row["disagreement_fraction_se"] = _mean_se(
            [r.alap_disagreement_fraction_outside_VK for r in rs]
        )
        rows.append(row)
    return rows


def summarize(path, out=None) -> list[dict]:
    rows = summary_rows(read_records(path))
    if out:
        with open(out, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=SUMMARY_COLUMNS)
            w.writeheader()
            for r in rows:
                w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return rows


# verification ---------------------------------------------------------------


def verify(suite: str, grid: dict | None = None) -> binom.LemmaReport:
    if suite not in binom.SUITES:
        raise ParameterError(f"unknown suite {suite!r}; choose from {sorted(binom.SUITES)}")
    return binom.SUITES[suite](grid)


def winner_histogram(records, L: int = 12) -> np.ndarray:
    """Empirical winner distribution over labels 1..L with everything else pooled in slot L+1."""
    h = np.zeros(L + 1)
    ws = [r.winner for r in records if r.winner is not None]
    for w in ws:
        h[min(w, L + 1) - 1] += 1
    return h / max(len(ws), 1)

