import json
import subprocess
import sys

import pytest

from lpalab.cli import main


def test_simulate_writes_records(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    assert main(["simulate", "--n", "1000", "--p", "0", "--trials", "2", "--seed", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["surviving_label_count"] == 1000


def test_compare_and_summarize(tmp_path, capsys):
    out, csv_ = tmp_path / "c.jsonl", tmp_path / "c.csv"
    assert main(["compare", "--n", "800", "--alpha", "0.7", "--trials", "2", "--seed", "3",
                 "--threads", "2", "--out", str(out)]) == 0
    assert main(["summarize", str(out), "--out", str(csv_)]) == 0
    assert csv_.read_text().splitlines()[0].startswith("mode,n,p,count")


def test_regime_flags_are_mutually_exclusive(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["simulate", "--n", "10", "--p", "0.1", "--alpha", "0.5", "--trials", "1",
              "--seed", "0", "--out", str(tmp_path / "x")])
    assert e.value.code == 2


def test_unknown_suite_is_a_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["verify", "--suite", "nope"])
    assert e.value.code == 2


@pytest.mark.parametrize("suite", ["slud", "monotone"])
def test_verify_passing_suite_exits_zero(suite, capsys):
    assert main(["verify", "--suite", suite]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] is True


def test_verify_failing_grid_exits_nonzero(tmp_path, capsys):
    # the literal "largest value strictly below the max" gap is not monotone here
    grid = tmp_path / "g.json"
    grid.write_text(json.dumps({"unique_max": False}))
    code = main(["verify", "--suite", "monotone", "--grid", str(grid)])
    assert code == 1


def test_bad_parameter_exits_two(tmp_path, capsys):
    code = main(["simulate", "--n", "10", "--p", "1.5", "--trials", "1", "--seed", "0",
                 "--out", str(tmp_path / "x.jsonl")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_console_script_module_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "lpalab", "verify", "--suite", "slud"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
