import csv
import json
import numpy as np
import pytest
from click.testing import CliRunner

import app.api.rate as rate_module
from app.models.bandit import BanditSpec
from app.models.saddle import RateCurve
from app.solver.search import most_probable_regret
from main import cli

SMALL_SPEC = {"K": 3, "T": 5, "mu": [1.0, 2.0, 3.0], "sigma_tilde": [1.0, 1.0, 1.0], "gamma": 0.25, "beta": 3.0,
              "c": 0.4}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def config_file(tmp_path):
    def write(payload):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
        return str(path)
    return write


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_toy_command(runner, tmp_path):
    result = runner.invoke(cli, ["toy", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    rows = read_csv(tmp_path / "branches.csv")
    assert rows[0] == ["r", "branch_id", "delta_s0", "ir_hat", "action"]
    assert [row[0] for row in rows[1:]].count("1.0") == 1
    assert [row[0] for row in rows[1:]].count("3.0") == 3
    metadata = json.loads((tmp_path / "metadata.json").read_text())
    assert metadata["command"] == "toy"
    assert metadata["extra"]["r_c"] == pytest.approx(1.9533, abs=1e-3)
    assert metadata["extra"]["branch_counts"] == {"1.0": 1, "3.0": 3}


def test_toy_rejects_bad_brackets(runner, tmp_path):
    assert runner.invoke(cli, ["toy", "--out", str(tmp_path), "--bracket", "3", "1"]).exit_code == 2
    assert runner.invoke(cli, ["toy", "--out", str(tmp_path), "--bracket", "2.5", "3"]).exit_code == 2


def test_simulate_is_reproducible(runner, tmp_path, config_file):
    config = config_file({"spec": SMALL_SPEC, "simulate": {"trials": 20000, "master_seed": 5}})
    first, second = tmp_path / "a", tmp_path / "b"
    assert runner.invoke(cli, ["simulate", "--config", config, "--out", str(first), "--threads", "1"]).exit_code == 0
    assert runner.invoke(cli, ["simulate", "--config", config, "--out", str(second), "--threads", "2"]).exit_code == 0
    histogram = (first / "histogram.csv").read_bytes()
    assert histogram == (second / "histogram.csv").read_bytes()
    rows = read_csv(first / "histogram.csv")
    assert rows[0] == ["r", "count", "phi_sim", "gamma_phi_sim"]
    assert sum(int(row[1]) for row in rows[1:]) == 20000
    assert min(float(row[2]) for row in rows[1:]) == 0.0

    metadata = json.loads((first / "metadata.json").read_text())
    assert metadata["seed"] == 5
    assert metadata["workers"] == 1
    assert metadata["config"]["simulate"]["trials"] == 20000

    rerun = tmp_path / "c"
    result = runner.invoke(cli, ["simulate", "--config", str(first / "metadata.json"), "--out", str(rerun)])
    assert result.exit_code == 0, result.output
    assert (rerun / "histogram.csv").read_bytes() == histogram


def test_flags_override_the_config(runner, tmp_path, config_file):
    config = config_file({"spec": SMALL_SPEC, "simulate": {"trials": 20000, "master_seed": 5}})
    result = runner.invoke(cli, ["simulate", "--config", config, "--out", str(tmp_path), "--trials", "100",
                                 "--seed", "9", "--gamma", "0.5"])
    assert result.exit_code == 0, result.output
    metadata = json.loads((tmp_path / "metadata.json").read_text())
    assert metadata["config"]["simulate"]["trials"] == 100
    assert metadata["config"]["spec"]["gamma"] == 0.5
    assert metadata["config"]["spec"]["K"] == 3
    assert metadata["seed"] == 9


def test_threads_from_environment(runner, tmp_path, config_file):
    config = config_file({"spec": SMALL_SPEC, "simulate": {"trials": 100}})
    result = runner.invoke(cli, ["simulate", "--config", config, "--out", str(tmp_path)],
                           env={"BANDIT_LDP_THREADS": "3"})
    assert result.exit_code == 0, result.output
    assert json.loads((tmp_path / "metadata.json").read_text())["workers"] == 3


def test_simulate_rejects_bad_input(runner, tmp_path, config_file):
    assert runner.invoke(cli, ["simulate", "--out", str(tmp_path), "--trials", "0"]).exit_code == 2
    unknown = config_file({"spec": SMALL_SPEC, "simulate": {"trials": 10, "shots": 3}})
    assert runner.invoke(cli, ["simulate", "--config", unknown, "--out", str(tmp_path)]).exit_code == 2
    assert runner.invoke(cli, ["simulate", "--config", str(tmp_path / "missing.json")]).exit_code == 2


def test_unwritable_output(runner, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    result = runner.invoke(cli, ["sweep-c", "--out", str(blocker / "results"), "--c", "0.1"])
    assert result.exit_code == 3


def test_rate_at_most_probable_regret(runner, tmp_path, config_file):
    r_mpv = most_probable_regret(BanditSpec(**SMALL_SPEC))
    config = config_file({"spec": SMALL_SPEC, "rate": {"r_min": r_mpv, "r_max": r_mpv, "multistarts": 0}})
    result = runner.invoke(cli, ["rate", "--config", config, "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    rows = read_csv(tmp_path / "rate_curve.csv")
    assert rows[0] == ["r", "action", "rate", "ir_hat", "n_solutions", "residual", "converged"]
    assert len(rows) == 2
    assert float(rows[1][2]) == pytest.approx(0.0, abs=1e-10)
    assert rows[1][6] == "true"


def test_rate_needs_noise(runner, tmp_path, config_file):
    config = config_file({"spec": SMALL_SPEC})
    assert runner.invoke(cli, ["rate", "--config", config, "--out", str(tmp_path), "--gamma", "0"]).exit_code == 2


def test_rate_reports_failed_grids(runner, tmp_path, config_file, monkeypatch):
    def failing_curve(spec, r_grid, strategy=None):
        grid = np.asarray(r_grid, dtype=float)
        blank = np.full(grid.size, np.nan)
        return RateCurve(r_grid=grid, action=blank, rate=blank.copy(), ir_hat=blank.copy(), residual=blank.copy(),
                         converged=np.zeros(grid.size, dtype=bool), n_solutions=np.zeros(grid.size, dtype=int),
                         r_mpv=0.0, gamma=spec.gamma)

    monkeypatch.setattr(rate_module, "rate_curve", failing_curve)
    config = config_file({"spec": SMALL_SPEC, "rate": {"r_min": 0.0, "r_max": 2.0}})
    result = runner.invoke(cli, ["rate", "--config", config, "--out", str(tmp_path), "--threads", "1"])
    assert result.exit_code == 4
    rows = read_csv(tmp_path / "rate_curve.csv")
    assert len(rows) == 4
    assert all(row[6] == "false" for row in rows[1:])


def test_rate_with_several_exploration_parameters(runner, tmp_path, config_file):
    r_mpv = most_probable_regret(BanditSpec(**SMALL_SPEC))
    config = config_file({"spec": SMALL_SPEC, "rate": {"r_min": r_mpv + 0.5, "r_max": r_mpv + 0.5,
                                                       "multistarts": 0}})
    result = runner.invoke(cli, ["rate", "--config", config, "--out", str(tmp_path), "--c", "0.4", "--c", "0.8",
                                 "--threads", "1"])
    assert result.exit_code == 0, result.output
    rows = read_csv(tmp_path / "rate_curve.csv")
    assert rows[0][0] == "c"
    assert [row[0] for row in rows[1:]] == ["0.4", "0.8"]


def test_sweep_c(runner, tmp_path):
    result = runner.invoke(cli, ["sweep-c", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    rows = read_csv(tmp_path / "rmpv_vs_c.csv")
    assert rows[0] == ["c", "r_mpv"]
    assert len(rows) == 22
    values = [float(row[1]) for row in rows[1:]]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
    greedy = BanditSpec(K=3, T=20, mu=(1.0, 2.0, 3.0), sigma_tilde=(1.0, 1.0, 1.0), gamma=0.36, beta=10.0, c=0.0)
    assert values[0] == most_probable_regret(greedy)

    single = tmp_path / "single"
    assert runner.invoke(cli, ["sweep-c", "--out", str(single), "--c", "0.3"]).exit_code == 0
    assert len(read_csv(single / "rmpv_vs_c.csv")) == 2


def test_trajectory_with_an_empty_window(runner, tmp_path, config_file):
    # the warm-up alone costs (3 - 1) + (3 - 2) = 3, so regret below 1 needs rewards far outside the noise
    spec = {**SMALL_SPEC, "sigma_tilde": [1.0, 0.8, 1.2], "gamma": 0.005}
    config = config_file({"spec": spec, "trajectory": {"r_window": [0.5, 1.0], "trials": 200}})
    result = runner.invoke(cli, ["trajectory", "--config", config, "--out", str(tmp_path), "--threads", "1"])
    assert result.exit_code == 0, result.output
    sim = read_csv(tmp_path / "trajectory_sim.csv")
    assert sim[0] == ["t", "arm", "n_mean", "n_std", "muhat_mean", "muhat_std", "matched"]
    assert len(sim) == 1 + 6 * 3
    assert all(row[2:6] == ["", "", "", ""] and row[6] == "0" for row in sim[1:])
    theory = read_csv(tmp_path / "trajectory_theory.csv")
    assert theory[0] == ["t", "arm", "n", "muhat", "is_hat", "in_hat"]
    assert len(theory) == 1 + 6 * 3
    assert {row[1] for row in theory[1:]} == {"1", "2", "3"}
    assert all(np.isfinite(float(value)) for row in theory[1:] for value in row[2:])
    metadata = json.loads((tmp_path / "metadata.json").read_text())
    assert metadata["extra"]["matched"] == 0
    assert metadata["extra"]["r_mid"] == pytest.approx(0.75)
    assert metadata["extra"]["action"] > 0
