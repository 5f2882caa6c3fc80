import json

import numpy as np
import pytest

from ocopt.baselines import BaselineConfig
from ocopt.cli import main
from ocopt.harness.experiments import (
    ExperimentSpec,
    r_sweep,
    read_series,
    run_experiment,
    spec_from_manifest,
    sweep_table,
)
from ocopt.harness.figures import FIGURES, repro
from ocopt.harness.metrics import oscillation_metric, relative_error_series, steps_to_reach
from ocopt.harness.schedule import Phase, PhaseSchedule, Stop, restrict, run_schedule
from ocopt.objective import registry_get
from ocopt.ocsolver import SolverConfig


def test_relative_error_series():
    e = relative_error_series([[2 * 3.5], [3.5]], [3.5])
    assert np.array_equal(e.values[:, 0], [1.0, 0.0])
    assert e.modes == ["relative"]


def test_relative_error_zero_target_switches_to_absolute():
    e = relative_error_series([[0.3], [-0.1]], [0.0])
    assert e.modes == ["absolute"]
    assert np.array_equal(e.values[:, 0], [0.3, -0.1])


def test_f6_origin_target_uses_absolute_error():
    spec = ExperimentSpec("f6", "oc", SolverConfig(R=200.0, N=98, max_outer=200), target=1)
    assert run_experiment(spec).error_modes == ["absolute"]


def test_oscillation_metric():
    assert oscillation_metric([0, 1, 2, 3, 4, 5]) == 0
    assert oscillation_metric([0, 1, 0, 1, 0, 1, 0, 1]) == 2
    assert oscillation_metric([0, 1, 0, 1, 0, 1, 0, 1], tail=1.0) == 6
    # sub-threshold jitter is not oscillation
    assert oscillation_metric([0, 1e-10, 0, 1e-10, 0, 1e-10]) == 0
    assert oscillation_metric(np.c_[[0, 1, 0, 1, 0, 1], [0, 1, 2, 3, 4, 5]], tail=1.0) == 4


def test_steps_to_reach():
    assert steps_to_reach([5.0, 2.0, 0.5, 0.001, 0.0], [0.0], 1e-2) == 3
    assert steps_to_reach([5.0, 0.0, 5.0], [0.0], 1e-2) is None


def test_quadratic_gd_errors_halve(tmp_path):
    spec = ExperimentSpec("quadratic", "gd", BaselineConfig(eta=0.5, max_iters=6, grad_tol=0.0),
                          x0=[1.0], output=str(tmp_path / "q.csv"))
    res = run_experiment(spec)
    err = res.errors[:, 0]
    assert res.error_modes == ["absolute"]
    assert np.array_equal(err[1:], err[:-1] / 2)


def test_csv_and_manifest_contents(tmp_path):
    out = tmp_path / "f1.csv"
    res = run_experiment(ExperimentSpec("f1", "oc", SolverConfig(R=1.0), output=str(out)))
    cols = read_series(out)
    assert list(cols) == ["k", "x_0", "u_0", "err_0"]
    assert np.array_equal(cols["x_0"], res.states[:, 0])
    assert np.isnan(cols["u_0"][-1])
    assert np.array_equal(cols["x_0"][:-1] + cols["u_0"][:-1], cols["x_0"][1:])
    m = json.loads(out.with_suffix(".json").read_text())
    assert m["outcome"]["termination"] == "converged"
    assert m["outcome"]["pmp_residual"] <= 10 * 1e-6
    assert m["spec"]["config"]["alpha"] == "auto"
    assert m["target"]["listed"] == [-0.592]


@pytest.mark.parametrize("spec", [
    ExperimentSpec("f5", "oc", SolverConfig(R=0.1, N=40, init_control="random", seed=11)),
    ExperimentSpec("f7", "oc", SolverConfig(R=[[2.0, 0.0], [0.0, 1.0]], N=30, alpha=0.01, max_outer=400)),
    ExperimentSpec("f3", "newton", BaselineConfig(max_iters=40)),
    ExperimentSpec("f2", "gd", BaselineConfig(eta=0.1, max_iters=20, grad_tol=0.0)),
])
def test_manifest_reruns_bit_identically(tmp_path, spec):
    first = tmp_path / "a.csv"
    spec.output = str(first)
    run_experiment(spec)
    again = spec_from_manifest(first.with_suffix(".json"))
    again.output = str(tmp_path / "b.csv")
    run_experiment(again)
    assert first.read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("f1", "bfgs")
    with pytest.raises(TypeError):
        ExperimentSpec("f1", "gd", SolverConfig())
    assert ExperimentSpec("f1", "oc", seed=4).config.seed == 4


def test_sweep_single_quadratic_row():
    rows = r_sweep("quadratic", [1.0], SolverConfig(N=10), x0=[2.0])
    assert len(rows) == 1
    assert rows[0].nearest == 0 and rows[0].distance <= 1e-3


def test_sweep_f6_maps_weights_to_three_minima(tmp_path):
    rows = r_sweep("f6", [1.0, 200.0, 500.0], SolverConfig(N=98, max_outer=5000), outdir=tmp_path)
    assert [r.nearest for r in rows] == [0, 1, 2]
    assert all(r.distance <= 1e-2 for r in rows)
    table = sweep_table(rows)
    assert [t["monotonicity"] for t in table] == ["n/a", "observed", "observed"]
    assert len(list(tmp_path.glob("*.csv"))) == 3


def test_restrict_holds_inactive_coordinates():
    f8 = registry_get("f8").objective
    sub, embed = restrict(f8, [-20.0, 40.0], [False, True])
    assert sub.dim == 1
    assert sub.eval([11.0]) == f8.eval([-20.0, 11.0])
    assert sub.grad([11.0])[0] == f8.grad([-20.0, 11.0])[1]
    assert np.array_equal(embed(np.array([[3.0]])), [[-20.0, 3.0]])


def test_schedule_waypoint_then_minimum():
    sched = PhaseSchedule((
        Phase((False, True), 1.0, Stop("waypoint", (-20.0, 11.0)), SolverConfig(N=100)),
        Phase((True, True), np.eye(2), Stop("residual"), SolverConfig(N=20)),
    ))
    res = run_schedule("f8", sched)
    assert not res.aborted
    first = res.phases[0].states
    assert np.all(first[:, 0] == -20.0)
    assert np.linalg.norm(first[-1] - [-20.0, 11.0]) <= 0.5
    assert np.linalg.norm(res.final_point - [9.93, 9.99]) <= 0.2
    assert res.boundaries[1] == first.shape[0] - 1


def test_schedule_aborts_on_missed_waypoint():
    sched = PhaseSchedule((
        Phase((False, True), 1.0, Stop("waypoint", (-20.0, -50.0)), SolverConfig(N=50)),
        Phase((True, True), np.eye(2), Stop("residual"), SolverConfig(N=20)),
    ))
    res = run_schedule("f8", sched)
    assert res.aborted and len(res.phases) == 1
    assert "waypoint" in res.message
    assert res.states.shape[0] > 1


def test_schedule_roundtrip_through_json(tmp_path):
    sched = FIGURES["fig14b"].schedules["schedule"][1]
    path = tmp_path / "s.json"
    path.write_text(json.dumps(sched.to_dict()))
    back = PhaseSchedule.load(path)
    assert back.to_dict() == sched.to_dict()


def test_phase_rejects_indefinite_weight():
    with pytest.raises(ValueError):
        Phase((True, True), [[1.0, 2.0], [2.0, 1.0]], Stop("residual"), SolverConfig())


def test_repro_writes_artifacts(tmp_path):
    res = repro("fig6", tmp_path)
    names = sorted(p.name for p in (tmp_path / "fig6").iterdir())
    assert names == ["gd.csv", "gd.json", "index.json", "newton.csv", "newton.json",
                     "oc.csv", "oc.json", "plot.gp"]
    assert abs(res.runs["oc"].final_state[0] + 1.566) <= 1e-2
    for label in ("gd", "newton"):
        assert np.all(res.runs[label].states == 0.0)
    assert "'gd.csv' using 1:2" in (tmp_path / "fig6" / "plot.gp").read_text()


def test_repro_fig13_gd_flips_more_over_whole_run():
    res = repro("fig13")
    oc, gd = res.runs["oc"].states, res.runs["gd"].states
    assert np.linalg.norm(oc[-1] - [-0.592, 0.0]) <= 2e-2
    assert oscillation_metric(gd, tail=1.0) > oscillation_metric(oc, tail=1.0)


def test_repro_fig7_three_minima():
    res = repro("fig7")
    ends = [res.runs[k].final_state[0] for k in ("oc_R1", "oc_R200", "oc_R500")]
    assert np.allclose(ends, [1.323, 0.0, -1.323], atol=1e-2)


def test_repro_schedule_artifacts(tmp_path):
    repro("fig14c", tmp_path)
    m = json.loads((tmp_path / "fig14c" / "schedule.json").read_text())
    assert m["outcome"]["aborted"] is False
    assert len(m["outcome"]["phases"]) == 2
    cols = read_series(tmp_path / "fig14c" / "schedule.csv")
    assert list(cols) == ["k", "x_0", "x_1", "u_0", "u_1", "err_0", "err_1"]


# -- command line ---------------------------------------------------------------

def test_cli_solve_converged(capsys, tmp_path):
    out = tmp_path / "run.csv"
    assert main(["solve", "f2", "--R", "0.01", "--N", "30", "--output", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["termination"] == "converged"
    assert out.exists() and out.with_suffix(".json").exists()


def test_cli_solve_max_iters():
    assert main(["solve", "f1", "--max-outer", "2"]) == 2


def test_cli_solve_numerical_error():
    assert main(["solve", "f1", "--alpha", "10", "--N", "20", "--max-outer", "100"]) == 3


def test_cli_newton_diverged():
    assert main(["solve", "f3", "--method", "newton"]) == 3


def test_cli_usage_errors(capsys):
    assert main(["solve", "nope"]) == 1
    assert main(["solve"]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["repro", "fig99"]) == 1
    assert main(["solve", "f1", "--R", "[[1, 2], [2"]) == 1


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"case": "f1", "method": "gd", "config": {"eta": 0.001, "max_iters": 10}}))
    assert main(["solve", "--config", str(cfg)]) == 2
    assert json.loads(capsys.readouterr().out)["iterations"] == 10


def test_cli_sweep_and_list(capsys):
    assert main(["sweep", "f1", "--R", "[1, 200]"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 2 and all(r["termination"] == "converged" for r in rows)
    assert main(["list"]) == 0
    assert "fig14b" in capsys.readouterr().out


def test_cli_schedule(tmp_path, capsys):
    path = tmp_path / "phases.json"
    path.write_text(json.dumps(FIGURES["fig14a"].schedules["schedule"][1].to_dict()))
    assert main(["schedule", "f8", str(path), "--output", str(tmp_path / "s.csv")]) == 0
    assert (tmp_path / "s.json").exists()


def test_cli_repro(tmp_path):
    assert main(["repro", "fig3", "--outdir", str(tmp_path)]) == 0
    assert (tmp_path / "fig3" / "index.json").exists()
