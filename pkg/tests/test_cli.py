import csv
import json
import math

import pytest
import yaml

from dmed.cli import main

TWO_ARMS = {
    "arms": [{"family": "bernoulli", "p": 0.7}, {"family": "bernoulli", "p": 0.5}],
    "policy": {"name": "dmed", "r": 0.1},
    "horizon": 500,
    "replications": 3,
    "seed": 5,
    "checkpoints": [50, 200, 500],
}


def write_yaml(path, doc):
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_simulate_outputs(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", TWO_ARMS)
    out = tmp_path / "out"
    assert main(["simulate", cfg, "--out", str(out)]) == 0
    rows = list(csv.reader(open(out / "regret.csv")))
    assert rows[0] == ["replication", "checkpoint_n", "cum_pseudo_regret", "T_1", "T_2"]
    assert len(rows) - 1 == 3 * 3
    for rep, n, reg, t1, t2 in rows[1:]:
        assert int(t1) + int(t2) == int(n)
        assert float(reg) == pytest.approx(0.2 * int(t2), abs=1e-12)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == 1 and summary["seed"] == 5
    assert summary["config"] == TWO_ARMS and "version" in summary
    assert summary["summary"]["checkpoints"] == [50, 200, 500]


def test_simulate_byte_identical(tmp_path):
    cfg = write_yaml(tmp_path / "c.yaml", TWO_ARMS)
    main(["simulate", cfg, "--out", str(tmp_path / "a")])
    main(["simulate", cfg, "--out", str(tmp_path / "b"), "--workers", "2"])
    for name in ("regret.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_missing_config(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "nope.yaml"), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize(
    "patch,key",
    [
        ({"horizon": "many"}, "horizon"),
        ({"arms": [{"family": "bernoulli"}, {"family": "bernoulli", "p": 0.5}]}, "arms[0].p"),
        ({"arms": [{"family": "cauchy"}, {"family": "bernoulli", "p": 0.5}]}, "arms[0]"),
    ],
)
def test_simulate_config_errors_name_key(tmp_path, capsys, patch, key):
    cfg = write_yaml(tmp_path / "c.yaml", {**TWO_ARMS, **patch})
    assert main(["simulate", cfg, "--out", str(tmp_path / "o")]) == 2
    assert key in capsys.readouterr().err


def test_bound_override(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "c.yaml", TWO_ARMS)
    assert main(["bound", cfg, "--arm", "2", "--n", "100000", "--epsilon", "0.5", "--delta", "0.01"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["log_coeff"] == pytest.approx(25.491, abs=1e-3)
    assert d["arm_index"] == 2 and d["params_source"] == "override" and d["schema_version"] == 1
    assert set(d["components"]) >= {"index_deviation", "optimal_mean_deviation", "suboptimal_mean_deviation"}


def test_bound_optimized(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "c.yaml", TWO_ARMS)
    assert main(["bound", cfg, "--arm", "2", "--n", "100000"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["params_source"] == "optimized"
    assert 0 < d["epsilon"] < 1 and 0 < d["delta"] < 0.2 and d["xi"] > 0


def test_bound_optimal_arm(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "c.yaml", TWO_ARMS)
    assert main(["bound", cfg, "--arm", "1", "--n", "1000"]) == 2
    assert "optimal" in capsys.readouterr().err


def test_bound_infeasible_delta(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "c.yaml", TWO_ARMS)
    assert main(["bound", cfg, "--arm", "2", "--n", "1000", "--epsilon", "0.5", "--delta", "0.5"]) == 2
    assert "delta" in capsys.readouterr().err


def test_verify_dinf(capsys):
    assert main(["verify-dinf", "--trials", "20", "--seed", "3"]) == 0
    first = capsys.readouterr().out
    assert main(["verify-dinf", "--trials", "20", "--seed", "3"]) == 0
    assert capsys.readouterr().out == first
    assert first.count("PASS") >= 5 and "FAIL" not in first


def test_verify_dinf_zero_trials():
    assert main(["verify-dinf", "--trials", "0"]) == 2


def test_verify_ldp_small(tmp_path, capsys):
    doc = {
        "ldp": {
            "trials": 4000,
            "seed": 1,
            "cells": [
                {"kind": "lower", "model": {"family": "bernoulli", "p": 0.5}, "mu": 0.75, "t": [1, 20], "thresholds": [0.05]},
                {"kind": "upper", "model": {"family": "bernoulli", "p": 0.7}, "mu": 0.5, "t": [20], "thresholds": [0.2]},
            ],
        }
    }
    cfg = write_yaml(tmp_path / "l.yaml", doc)
    assert main(["verify-ldp", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = list(csv.reader(open(tmp_path / "o" / "ldp.csv")))
    assert rows[0] == ["model", "kind", "mu", "t", "threshold", "empirical_freq", "bound", "slack", "pass"]
    assert len(rows) == 4 and all(r[-1] == "1" for r in rows[1:])


@pytest.mark.parametrize(
    "ldp",
    [
        {"cells": [{"kind": "sideways", "model": {"family": "bernoulli", "p": 0.5}, "mu": 0.7, "t": [5], "thresholds": [0.1]}]},
        {"cells": [{"kind": "lower", "mu": 0.7, "t": [5], "thresholds": [0.1]}]},
        {"cells": []},
        {"trials": "lots"},
        {"cells": [{"kind": "lower", "model": {"family": "bernoulli", "p": 0.5}, "mu": 0.2, "t": [5], "thresholds": [0.1]}]},
    ],
)
def test_verify_ldp_malformed(tmp_path, ldp):
    cfg = write_yaml(tmp_path / "l.yaml", {"ldp": ldp})
    assert main(["verify-ldp", cfg, "--out", str(tmp_path / "o")]) == 2


def run_show(tmp_path, capsys, text, mu):
    f = tmp_path / "s.txt"
    f.write_text(text)
    code = main(["show-index", str(f), "--mu", str(mu)])
    captured = capsys.readouterr()
    return code, captured


def test_show_index_zeros(tmp_path, capsys):
    code, out = run_show(tmp_path, capsys, "0\n0\n0\n", 0.5)
    d = json.loads(out.out)
    assert code == 0
    assert d["dinf"] == pytest.approx(math.log(2), abs=1e-15) and d["nu_star"] == 2.0 and d["at_boundary"]


def test_show_index_mean_above(tmp_path, capsys):
    code, out = run_show(tmp_path, capsys, "0.9\n0.8\n1\n", 0.5)
    assert code == 0 and json.loads(out.out)["dinf"] == 0.0


def test_show_index_rejects_above_one(tmp_path, capsys):
    code, out = run_show(tmp_path, capsys, "0.1\n\n1.5\n", 0.5)
    assert code == 2 and "line 3" in out.err


def test_show_index_bad_token(tmp_path, capsys):
    code, out = run_show(tmp_path, capsys, "0.1\nabc\n", 0.5)
    assert code == 2 and "line 2" in out.err


def test_usage_error():
    assert main(["bogus"]) == 2
