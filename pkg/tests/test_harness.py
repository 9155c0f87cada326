import csv
import json
import math

import pytest

from lpalab import harness
from lpalab._rng import mix64, trial_seed
from lpalab.errors import ParameterError
from lpalab.harness import ExperimentConfig, HarnessError, TrialRecord, run_trials, summarize


def _strip_timing(path):
    out = []
    for line in open(path):
        d = json.loads(line)
        d.pop("timing")
        out.append(json.dumps(d, sort_keys=True))
    return out


def test_empty_graph_trials():
    recs = run_trials(ExperimentConfig(n=1000, p=0.0, trials=2))
    assert len(recs) == 2
    for r in recs:
        assert r.converged is True
        assert r.rounds_executed == 1
        assert r.surviving_label_count == 1000


def test_complete_graph_trial():
    (r,) = run_trials(ExperimentConfig(n=100, p=1.0, trials=1))
    assert r.winner == 1
    assert r.rounds_executed == 2


def test_trial_seed_formula():
    assert trial_seed(42, 0) == mix64(42)
    assert trial_seed(42, 3) == mix64(42 ^ ((3 * 0x9E3779B97F4A7C15) % 2**64))
    (r,) = run_trials(ExperimentConfig(n=50, p=0.1, trials=1, base_seed=7))
    assert r.seed == trial_seed(7, 0)


@pytest.mark.parametrize("mode", ["simulate", "compare"])
def test_reruns_are_byte_identical_and_thread_independent(tmp_path, mode):
    paths = []
    for threads in (1, 4, 1):
        p = tmp_path / f"{mode}-{threads}-{len(paths)}.jsonl"
        run_trials(ExperimentConfig(mode=mode, n=3000, alpha=0.7, trials=6, base_seed=5,
                                    thread_count=threads, events=True, out=str(p)))
        paths.append(p)
    ref = _strip_timing(paths[0])
    assert len(ref) == 6
    assert [json.loads(x)["trial"] for x in ref] == list(range(6))
    for p in paths[1:]:
        assert _strip_timing(p) == ref


def test_absent_fields_are_null_not_defaults(tmp_path):
    out = tmp_path / "r.jsonl"
    run_trials(ExperimentConfig(mode="compare", n=500, alpha=0.7, trials=1, out=str(out)))
    d = json.loads(out.read_text())
    assert set(d) == {f for f in TrialRecord.__dataclass_fields__}
    assert d["winner"] is None and d["E"] is None and d["rounds_executed"] is None
    assert d["alap_disagreement_outside_VK"] is not None


def test_events_populate_flags():
    (r,) = run_trials(ExperimentConfig(n=3000, alpha=0.7, trials=1, events=True, base_seed=1))
    for f in ("E", "Eprime", "F", "G", "lemma2_ok", "claim3_ok", "claim4_ok", "claim3prime_ok"):
        assert isinstance(getattr(r, f), bool), f


@pytest.mark.parametrize("kw", [
    dict(n=10, trials=1),
    dict(n=10, p=0.1, alpha=0.5, trials=1),
    dict(n=10, p=0.1, trials=0),
    dict(mode="bogus", n=10, p=0.1),
])
def test_config_validation(kw):
    with pytest.raises(ParameterError):
        ExperimentConfig(**kw)


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ParameterError):
        ExperimentConfig.from_dict({"n": 10, "p": 0.1, "colour": "red"})


def test_alpha_and_c_conveniences_record_the_p_used():
    (r,) = run_trials(ExperimentConfig(n=1000, alpha=0.5, trials=1))
    assert r.p == pytest.approx(1000**0.5 / 1000, rel=1e-15)
    (r,) = run_trials(ExperimentConfig(n=1000, c=1.0, trials=1))
    assert r.p == pytest.approx(1000 ** (2 / 3) / 1000, rel=1e-15)


def test_failing_trial_names_its_index(monkeypatch):
    real = harness._simulate

    def flaky(cfg, t, p):
        if t == 2:
            raise RuntimeError("boom")
        return real(cfg, t, p)

    monkeypatch.setattr(harness, "_simulate", flaky)
    with pytest.raises(HarnessError, match="trial 2"):
        run_trials(ExperimentConfig(n=50, p=0.1, trials=4))


def test_thread_count_precedence(monkeypatch):
    monkeypatch.setenv("LPA_THREADS", "3")
    assert harness.thread_count(None) == 3
    assert harness.thread_count(5) == 5
    monkeypatch.setenv("LPA_THREADS", "0")
    with pytest.raises(ParameterError):
        harness.thread_count(None)


def test_summarize_empty_file_has_header_only(tmp_path):
    src, dst = tmp_path / "e.jsonl", tmp_path / "e.csv"
    src.write_text("")
    assert summarize(src, dst) == []
    rows = list(csv.reader(open(dst)))
    assert rows == [harness.SUMMARY_COLUMNS]


def test_summarize_two_identical_records(tmp_path):
    (r,) = run_trials(ExperimentConfig(n=300, alpha=0.7, trials=1, events=True))
    src, dst = tmp_path / "d.jsonl", tmp_path / "d.csv"
    src.write_text((r.to_json() + "\n") * 2)
    (row,) = summarize(src, dst)
    assert row["count"] == 2
    for k, v in row.items():
        if k.endswith("_freq") and v is not None:
            assert v in (0.0, 1.0)
    with open(dst) as f:
        assert next(csv.reader(f)) == harness.SUMMARY_COLUMNS


def test_summary_counts_reconcile(tmp_path):
    out = tmp_path / "m.jsonl"
    run_trials(ExperimentConfig(n=400, alpha=0.7, trials=5, out=str(out)))
    with open(out, "a") as f:
        for r in run_trials(ExperimentConfig(n=200, p=0.05, trials=3)):
            f.write(r.to_json() + "\n")
    rows = summarize(out)
    assert sorted(r["count"] for r in rows) == [3, 5]
    for row in rows:
        for k, v in row.items():
            if k.endswith("_freq") and v is not None:
                assert 0.0 <= v <= 1.0
    assert summarize(out) == rows  # deterministic


def test_summarize_malformed_line_names_it(tmp_path):
    (r,) = run_trials(ExperimentConfig(n=50, p=0.1, trials=1))
    src = tmp_path / "bad.jsonl"
    src.write_text(r.to_json() + "\n{not json\n")
    with pytest.raises(HarnessError, match="line 2"):
        summarize(src)


def test_schema_version_gates_parsing():
    d = json.loads(TrialRecord(mode="simulate").to_json())
    d["schema_version"] = 99
    with pytest.raises(HarnessError):
        TrialRecord.from_json(json.dumps(d))


def test_sweep_runs_every_config(tmp_path):
    cfgs = [
        {"mode": "simulate", "n": 60, "p": 0.1, "trials": 2, "out": str(tmp_path / "a.jsonl")},
        {"mode": "compare", "n": 600, "alpha": 0.7, "trials": 1, "out": str(tmp_path / "b.jsonl")},
    ]
    spec = tmp_path / "sweep.json"
    spec.write_text(json.dumps(cfgs))
    res = harness.run_sweep(spec)
    assert [len(r) for r in res] == [2, 1]
    assert len((tmp_path / "a.jsonl").read_text().splitlines()) == 2


def test_compare_rejects_levels_that_do_not_fit():
    with pytest.raises(ParameterError, match="2k <= n"):
        run_trials(ExperimentConfig(mode="compare", n=60, p=0.2, trials=1))


def test_verify_unknown_suite():
    with pytest.raises(ParameterError):
        harness.verify("nope")


def test_winner_histogram_pools_tail():
    recs = [TrialRecord(winner=w) for w in (1, 1, 2, 13, 40)] + [TrialRecord(winner=None)]
    h = harness.winner_histogram(recs, L=12)
    assert len(h) == 13
    assert h[0] == pytest.approx(0.4) and h[1] == pytest.approx(0.2) and h[12] == pytest.approx(0.4)
    assert math.isclose(h.sum(), 1.0)
