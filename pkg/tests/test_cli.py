import json
import math

import pytest

from mra.cli import main
from mra.config import ExperimentConfig
from mra.errors import ConfigurationError
from mra.experiments import design_for
from mra.io import read_table

TOY = {"model": {"family": "exponential", "variance": 1.0, "range": 0.25, "nugget": 0.0},
       "partition": {"branching": [3, 3, 3], "strategy": "child-boundaries", "r": 2},
       "data": {"n": 54}, "competitors": ["exact", "mra"]}


def write_config(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def run(tmp_path, *argv, raw=None, out="out"):
    cfg = write_config(tmp_path, raw if raw is not None else TOY)
    code = main([*argv, "--config", cfg, "--out", str(tmp_path / out)])
    assert code == 0
    return tmp_path / out


def meta_lines(path):
    return [line for line in open(path) if line.startswith("#")]


def test_simulate_and_loglik(tmp_path, capsys):
    out = run(tmp_path, "simulate", "--seed", "3")
    header, data = read_table(out / "simulate.csv")
    assert header == ["s0", "value"] and data.shape == (54, 2)
    meta = "".join(meta_lines(out / "simulate.csv"))
    assert "config_hash" in meta and "seed: 3" in meta
    capsys.readouterr()
    run(tmp_path, "loglik", "--exact", "--data", str(out / "simulate.csv"))
    res = json.loads((out / "loglik.json").read_text())
    assert abs(res["loglik"] - res["loglik_exact"]) < 1e-6 * abs(res["loglik_exact"])
    assert {"config_hash", "seed"} <= res.keys()


def test_floats_have_17_digits(tmp_path):
    out = run(tmp_path, "simulate")
    _, data = read_table(out / "simulate.csv")
    rows = [line for line in open(out / "simulate.csv") if not line.startswith("#")][1:]
    v = rows[5].strip().split(",")[1]
    assert float(v) == data[5, 1]
    assert len(v.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) == 17


def test_predict_and_score(tmp_path):
    out = run(tmp_path, "predict", "--grid", "50", "--samples", "3", "--seed", "1")
    header, pred = read_table(out / "predict.csv")
    assert header == ["s0", "mean", "sd"] and pred.shape == (50, 3)
    _, draws = read_table(out / "samples.csv")
    assert draws.shape == (50, 4)
    truth = tmp_path / "truth.csv"
    truth.write_text("s0,value\n" + "".join(f"{s},{m}\n" for s, m, _ in pred))
    code = main(["score", "--pred", str(out / "predict.csv"), "--truth", str(truth),
                 "--out", str(out)])
    assert code == 0
    rep = json.loads((out / "score.json").read_text())
    assert rep["rmspe"] == 0.0 and rep["count"] == 50


def test_fit_writes_trace(tmp_path):
    raw = {**TOY, "model": {"family": "exponential", "variance": 0.8, "range": 0.2, "nugget": 0.0}}
    out = run(tmp_path, "fit", "--fix-nugget", "--max-iter", "30", raw=raw)
    header, trace = read_table(out / "fit_trace.csv")
    assert header == ["iteration", "variance", "range", "nugget", "loglik"]
    assert all(b >= a for a, b in zip(trace[:, 4], trace[1:, 4]))
    res = json.loads((out / "fit.json").read_text())
    assert res["nugget"] == 0.0 and res["loglik"] == trace[-1, 4]


def test_compare_toy_is_exact(tmp_path):
    out = run(tmp_path, "compare")
    summary = json.loads((out / "compare_summary.json").read_text())
    entry = summary["results"]["54"]
    assert entry["reference"] == "exact"
    assert abs(entry["competitors"]["mra"]["difference"]) < 1e-6


def test_compare_designs_at_7680(tmp_path):
    raw = {"competitors": ["dl-exact", "mra", "fsa-fast", "exact"], "n_ladder": [7680], "seeds": [0]}
    out = run(tmp_path, "compare", raw=raw)
    text = (out / "compare.csv").read_text()
    assert "skipped: cap" in text            # dense oracle is above its cap
    summary = json.loads((out / "compare_summary.json").read_text())["results"]["7680"]
    assert summary["reference"] == "dl-exact"
    assert {"mra", "fsa-fast", "dl-exact"} <= summary["competitors"].keys()
    cfg = ExperimentConfig.from_dict(raw)
    assert design_for("mra", 7680, cfg).branching == (4, 4, 4, 4)
    assert design_for("fsa-fast", 7680, cfg).branching == (32,)


def test_partition_info_depth(tmp_path, capsys):
    out = run(tmp_path, "partition-info", "--n", "7680", raw={})
    info = json.loads((out / "partition.json").read_text())
    assert info["depth"] == 4 and info["knots_per_level"][:4] == [30] * 4
    assert info["regions_per_level"] == [1, 4, 16, 64, 256]


def test_reruns_are_bitwise(tmp_path):
    a = run(tmp_path, "predict", "--grid", "40", "--samples", "2", "--seed", "7", out="a")
    b = run(tmp_path, "predict", "--grid", "40", "--samples", "2", "--seed", "7", out="b")
    for name in ("predict.csv", "samples.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_trace_schedule(tmp_path):
    trace = tmp_path / "trace.csv"
    run(tmp_path, "loglik", "--workers", "2", "--trace-schedule", str(trace))
    lines = trace.read_text().splitlines()
    assert lines[0] == "region,stage,start,end,worker"
    assert len(lines) == 1 + 1 + 3 + 9 + 27


def test_bench_memory_subquadratic(tmp_path):
    raw = {"n_ladder": [480, 1920, 7680], "partition": {"r": 30, "J": 4}}
    out = run(tmp_path, "bench", raw=raw)
    slopes = json.loads((out / "bench_summary.json").read_text())["slopes"]
    assert slopes["mra"]["memory"] < 1.5
    assert math.isfinite(slopes["mra"]["time"])


def test_bad_arguments(tmp_path, capsys):
    assert main(["loglik", "--seed", "-1", "--out", str(tmp_path)]) == 2
    assert main(["loglik", "--workers", "0", "--out", str(tmp_path)]) == 2
    bad = write_config(tmp_path, {"competitors": ["magic"]})
    assert main(["compare", "--config", bad, "--out", str(tmp_path)]) == 1
    assert main(["loglik", "--data", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 1


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"n_ladder": [10, 5]})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"subset": "sideways"})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"unknown": 1})
    a, b = ExperimentConfig(), ExperimentConfig.from_dict({})
    assert a.digest() == b.digest()
    assert a.digest() != ExperimentConfig.from_dict({"seeds": [1]}).digest()
