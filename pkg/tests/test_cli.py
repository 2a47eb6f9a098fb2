import json
import subprocess
import sys

import pytest

from ngle.cli import CliConfig, ConfigError, cmd_net_stats, cmd_sweep, cmd_threshold, main
from ngle.game import RunResult


def ngle(*args):
    return subprocess.run([sys.executable, "-m", "ngle", *args], capture_output=True, text=True)


def small(*extra):
    return ["--n", "150", "--p", "0.1", "--seed", "7", *extra]


def test_run_writes_trajectory_and_summary(tmp_path):
    out = tmp_path / "run"
    assert main(["run", *small("--rho", "0", "--out", str(out))]) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "iteration,total_words,distinct_words,success_rate"
    assert lines[1] == "0,0,0,0.000000"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] is True
    assert summary["outcome_counts"]["FailureWithError"] == 0
    assert summary["outcome_counts"]["PseudoConsensus"] == 0
    assert summary["final_total_words"] == 150 and summary["final_distinct_words"] == 1


def test_run_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["run", *small("--rho", "0.2", "--out", str(tmp_path / name))]) == 0
    for f in ("trajectory.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_non_convergence_exits_zero(tmp_path):
    proc = ngle("run", *small("--rho", "0.5", "--mode", "persistent", "--max-iter", "2000",
                              "--out", str(tmp_path)))
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["converged"] is False


def test_invalid_parameters_exit_nonzero(tmp_path):
    assert ngle("run", "--rho", "0.7", "--n", "50").returncode != 0
    assert ngle("net-stats", "--net", "rg", "--n", "200", "--p", "0.0005", "--trials", "1").returncode != 0
    bad = tmp_path / "bad.yaml"
    bad.write_text("network.colour: blue\n")
    assert ngle("run", "--config", str(bad)).returncode != 0


def test_force_allows_high_error_rate():
    assert main(["run", *small("--rho", "0.7", "--force", "--max-iter", "1000")]) == 0


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text("network.type: sw\nnetwork.n: 100\nnetwork.k: 3\nnetwork.rp: 0.2\n"
                   "game:\n  error_rate: 0.1\n  vocab_size: 500\nseed: 3\n")
    c = CliConfig.resolve(cfg, {"game.error_rate": 0.2})
    assert c["game.error_rate"] == 0.2 and c["game.vocab_size"] == 500
    assert c.network().label == "SW/3/0.2"
    assert CliConfig.resolve(cfg)["game.error_rate"] == 0.1
    with pytest.raises(ConfigError):
        CliConfig.resolve(None, {"game.colour": 1})


def test_defaults_mirror_reference_setup():
    c = CliConfig.resolve()
    plan = c.plan()
    assert plan.network.n == 2000 and plan.trials == 20 and plan.vocab_size == 10_000
    assert plan.max_iterations == 10_000_000 and len(plan.error_rates) == 24
    assert plan.threshold_step == 0.0001


def test_net_stats_triangle_edge_list(tmp_path):
    path = tmp_path / "tri.txt"
    path.write_text("# n=3\n0 1\n0 2\n1 2\n")
    report = cmd_net_stats(CliConfig.resolve(None, {"network.edge_list": str(path)}))
    assert report["mean"] == {"average_degree": 2.0, "average_path_length": 1.0, "clustering_coefficient": 1.0}


def test_net_stats_generated(tmp_path):
    proc = ngle("net-stats", "--net", "ws", "--n", "200", "--k", "3", "--rp", "0.1", "--trials", "3",
                "--out", str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    report = json.loads(proc.stdout)
    assert len(report["instances"]) == 3
    assert report["mean"]["average_degree"] == 6.0
    assert json.loads((tmp_path / "net_stats.json").read_text()) == report


def test_graph_export_import_round_trip(tmp_path):
    g = tmp_path / "g.txt"
    assert main(["run", *small("--export-graph", str(g), "--out", str(tmp_path / "a"))]) == 0
    assert g.read_text().startswith("# n=150\n")
    assert main(["run", "--graph", str(g), "--seed", "7", "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_text()
    b = (tmp_path / "b" / "trajectory.csv").read_text()
    assert a == b


def test_sweep_outputs(tmp_path):
    proc = ngle("sweep", *small("--trials", "3", "--rates", "0,0.01,0.1,0.2,0.3", "--out", str(tmp_path)))
    assert proc.returncode == 0, proc.stderr
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == ("error_rate,mean_convergence_iterations,relative_increment,"
                        "mean_max_distinct_words,converged_trials")
    assert lines[1].startswith("0.000000,") and ",0.000000," in lines[1]
    assert len(lines) == 6
    summary = json.loads((tmp_path / "sweep_summary.json").read_text())
    assert sum(summary["histogram"]["counts"]) == 4
    assert "r_squared" in summary["linear_fit"]
    assert (tmp_path / "increments.csv").read_text().startswith("error_rate,relative_increment\n")
    assert (tmp_path / "curves.csv").exists()


def test_sweep_requires_baseline():
    assert ngle("sweep", *small("--trials", "1", "--rates", "0.1,0.2")).returncode != 0


def test_sweep_constant_stub(tmp_path):
    cfg = CliConfig.resolve(None, {"experiment.trials": 2, "experiment.error_rates": "0,0.1,0.2",
                                   "output.dir": str(tmp_path)})
    report = cmd_sweep(cfg, engine=lambda plan, rho, t, a: RunResult(True, 1000, 1000, 5))
    assert report["summary"] == "0+/0-"
    assert [r["relative_increment"] for r in report["rows"]] == [0.0, 0.0, 0.0]


def test_sweep_marks_censored_cells(tmp_path):
    cfg = CliConfig.resolve(None, {"experiment.trials": 2, "experiment.error_rates": "0,0.1",
                                   "output.dir": str(tmp_path)})
    report = cmd_sweep(cfg, engine=lambda plan, rho, t, a: RunResult(rho == 0, 10 if rho == 0 else None, 10, 1))
    assert report["censored_error_rates"] == [0.1]
    row = (tmp_path / "sweep.csv").read_text().splitlines()[2]
    assert row == "0.100000,censored,censored,1.000000,0"


def test_threshold_stub(tmp_path):
    cfg = CliConfig.resolve(None, {"output.dir": str(tmp_path)})
    stub = lambda plan, rho, t, a: RunResult(rho < 0.003 - 1e-12, 10, 10, 1)
    report = cmd_threshold(cfg, engine=stub)
    assert report["error_mode"] == "persistent"
    assert report["thresholds"] == [0.003] * 20
    box = report["box"]
    assert box["q1"] == box["q3"] == box["median"] == 0.003 and box["outliers"] == []
    lines = (tmp_path / "thresholds.csv").read_text().splitlines()
    assert lines[0] == "trial,threshold" and lines[1] == "0,0.003000" and len(lines) == 21


def test_threshold_small_network_is_deterministic(tmp_path):
    args = small("--trials", "2", "--step", "0.01", "--max-iter", "20000")
    for name in ("a", "b"):
        assert main(["threshold", *args, "--out", str(tmp_path / name)]) == 0
    for f in ("thresholds.csv", "threshold_summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
