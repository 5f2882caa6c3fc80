"""Bundled experiment sets, one entry per figure id.

Each experiment fixes the weight R and the gradient-descent step. The outer
step, horizon and iteration budget of the control method were chosen by hand;
they are written into every run manifest.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..baselines import BaselineConfig
from ..objective import registry_get
from ..ocsolver import SolverConfig
from .experiments import ExperimentSpec, RunResult, _clean, csv_header, run_experiment, _fmt
from .metrics import relative_error_series
from .schedule import Phase, PhaseSchedule, ScheduleResult, Stop, run_schedule


@dataclass
class Figure:
    id: str
    title: str
    runs: dict[str, ExperimentSpec] = field(default_factory=dict)
    schedules: dict[str, tuple[str, PhaseSchedule, int]] = field(default_factory=dict)  # case, schedule, target


@dataclass
class FigureResult:
    figure: Figure
    runs: dict[str, RunResult]
    schedules: dict[str, ScheduleResult]
    files: list[Path]


def _oc(case, R, **cfg) -> ExperimentSpec:
    return ExperimentSpec(case, "oc", SolverConfig(R=R, **cfg))


def _gd(case, eta, steps, grad_tol=1e-10) -> ExperimentSpec:
    return ExperimentSpec(case, "gd", BaselineConfig(eta=eta, max_iters=steps, grad_tol=grad_tol))


def _newton(case, steps, grad_tol=1e-10) -> ExperimentSpec:
    return ExperimentSpec(case, "newton", BaselineConfig(max_iters=steps, grad_tol=grad_tol))


# Short horizon for the two fast-converging scalar cases: over 100 steps gradient
# descent on the convex f2 reaches rounding level, which the plotted comparisons never show.
SHORT_N = 30

F5_TRANSIENT = dict(N=70, alpha=1e-6, max_outer=10_000)
F6_SHARED = dict(N=98, max_outer=5_000)
F7_N = 200


def _schedule(first_R, waypoint, second_R, second_cfg: SolverConfig, name) -> PhaseSchedule:
    return PhaseSchedule((
        Phase((False, True), first_R, Stop("waypoint", waypoint, 0.5), SolverConfig(N=100)),
        Phase((True, True), second_R, *second_cfg),
    ), name=name)


SCHEDULE_A = _schedule(1.0, (-20.0, 11.0), np.eye(2), (Stop("residual"), SolverConfig(N=20)), "f8-a")
SCHEDULE_B = _schedule(1.0, (-20.0, 11.0), np.diag([100.0, 1e-5]),
                       (Stop("max_outer"), SolverConfig(N=100, max_outer=3_000)), "f8-b")
SCHEDULE_C = _schedule(100.0, (-20.0, 35.0), np.eye(2), (Stop("residual"), SolverConfig(N=20)), "f8-c")


def _figures() -> dict[str, Figure]:
    figs = [
        Figure("fig3", "f1: trajectories for R = 1 and R = 200", runs={
            "oc_R1": _oc("f1", 1.0, N=100),
            "oc_R200": _oc("f1", 200.0, N=100),
        }),
        Figure("fig2", "f2: control method vs gradient descent and Newton", runs={
            "oc": _oc("f2", 0.01, N=SHORT_N),
            "gd": _gd("f2", 0.1, SHORT_N + 1),
            "newton": _newton("f2", SHORT_N + 1),
        }),
        Figure("fig_f3", "f3: control method vs gradient descent; Newton diverges", runs={
            "oc": _oc("f3", 0.01, N=SHORT_N),
            "gd": _gd("f3", 0.01, SHORT_N + 1),
            "newton": _newton("f3", SHORT_N + 1),
        }),
        Figure("fig4a", "f1 relative error, R = 0.01, eta = 0.001", runs={
            "oc": _oc("f1", 0.01, N=100),
            "gd": _gd("f1", 0.001, 101),
            "newton": _newton("f1", 101),
        }),
        Figure("fig4b", "f2 relative error, R = 0.01, eta = 0.1", runs={
            "oc": _oc("f2", 0.01, N=SHORT_N),
            "gd": _gd("f2", 0.1, SHORT_N + 1),
            "newton": _newton("f2", SHORT_N + 1),
        }),
        Figure("fig4c", "f3 relative error, R = 0.01, eta = 0.01", runs={
            "oc": _oc("f3", 0.01, N=SHORT_N),
            "gd": _gd("f3", 0.01, SHORT_N + 1),
            "newton": _newton("f3", SHORT_N + 1),
        }),
        Figure("fig6", "f4 from the saddle at 0", runs={
            "oc": _oc("f4", 1 / 0.026, N=100, init_control=1e-3),
            "gd": _gd("f4", 0.026, 101, grad_tol=0.0),
            "newton": _newton("f4", 101, grad_tol=0.0),
        }),
        Figure("fig_f5", "f5: R = 100 and R = 0.1 settle in different minima", runs={
            "oc_R100": ExperimentSpec("f5", "oc", SolverConfig(R=100.0, **F5_TRANSIENT), target=0),
            "oc_R0.1": ExperimentSpec("f5", "oc", SolverConfig(R=0.1, N=100), target=1),
        }),
        Figure("fig7", "f6: R = 1, 200, 500 select the three minima", runs={
            "oc_R1": ExperimentSpec("f6", "oc", SolverConfig(R=1.0, **F6_SHARED), target=0),
            "oc_R200": ExperimentSpec("f6", "oc", SolverConfig(R=200.0, **F6_SHARED), target=1),
            "oc_R500": ExperimentSpec("f6", "oc", SolverConfig(R=500.0, **F6_SHARED), target=2),
        }),
        Figure("fig13", "f7: two-dimensional trajectories", runs={
            "oc": _oc("f7", np.eye(2) / 0.12, N=F7_N),
            "gd": _gd("f7", 0.12, F7_N + 1),
        }),
        Figure("fig14a", "f8: y-phase (R = 1) then both axes (R = I)",
               schedules={"schedule": ("f8", SCHEDULE_A, 2)}),
        Figure("fig14b", "f8: y-phase (R = 1) then both axes (R = diag(100, 1e-5))",
               schedules={"schedule": ("f8", SCHEDULE_B, 1)}),
        Figure("fig14c", "f8: y-phase (R = 100) then both axes (R = I)",
               schedules={"schedule": ("f8", SCHEDULE_C, 0)}),
    ]
    return {f.id: f for f in figs}


FIGURES = _figures()


def get_figure(fig_id: str) -> Figure:
    try:
        return FIGURES[fig_id]
    except KeyError:
        raise KeyError(f"unknown figure {fig_id!r}; known: {', '.join(FIGURES)}") from None


def write_schedule(case_name: str, schedule: PhaseSchedule, result: ScheduleResult, target: int | None,
                   output) -> tuple[Path, Path]:
    case = registry_get(case_name)
    states = result.states
    end = states[-1]
    ti = case.nearest_minimum(end)[0] if target is None else target
    err = relative_error_series(states, case.refined_point(ti))
    controls = np.full_like(states, np.nan)
    controls[:-1] = np.diff(states, axis=0)
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = states.shape[1]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(n))
        for k in range(states.shape[0]):
            w.writerow([k] + [_fmt(v) for v in states[k]] + [_fmt(v) for v in controls[k]]
                       + [_fmt(v) for v in err.values[k]])
    near_i, near_d = case.nearest_minimum(end)
    manifest = _clean(dict(
        schema="ocopt.schedule/1",
        case=case_name,
        x0=case.x0,
        schedule=schedule.to_dict(),
        target=dict(index=ti, listed=case.minima[ti].point, refined=case.refined_point(ti)),
        error_modes=err.modes,
        outcome=dict(
            aborted=result.aborted, message=result.message, final_point=end,
            nearest_minimum=dict(index=near_i, point=case.minima[near_i].point, distance=near_d),
            phases=[dict(start_row=b, end_point=p.end, termination=p.termination,
                         outer_iters=p.outer_iters, stopped=p.stopped, message=p.message)
                    for b, p in zip(result.boundaries, result.phases)],
        ),
        csv=path.name,
    ))
    mpath = path.with_suffix(".json")
    mpath.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path, mpath


def plot_script(fig: Figure, csv_names: dict[str, str], dim: int) -> str:
    """Plain gnuplot commands for the CSVs of one figure."""
    out = [f"# {fig.id}: {fig.title}", "set datafile separator ','", "set key autotitle columnhead",
           f"set title '{fig.title}'"]
    if dim == 1:
        out += ["set xlabel 'k'", "set ylabel 'x_k'",
                "plot " + ", \\\n     ".join(f"'{name}' using 1:2 with linespoints title '{label}'"
                                              for label, name in csv_names.items())]
        out += ["pause -1", "set logscale y", "set ylabel '|error|'",
                "plot " + ", \\\n     ".join(f"'{name}' using 1:(abs($4)) with linespoints title '{label}'"
                                              for label, name in csv_names.items())]
    else:
        out += ["set xlabel 'x'", "set ylabel 'y'",
                "plot " + ", \\\n     ".join(f"'{name}' using 2:3 with linespoints title '{label}'"
                                              for label, name in csv_names.items())]
    out.append("pause -1")
    return "\n".join(out) + "\n"


def repro(fig_id: str, outdir=None) -> FigureResult:
    """Run every experiment bundled for ``fig_id``; write artifacts under ``outdir/fig_id``."""
    fig = get_figure(fig_id)
    base = None if outdir is None else Path(outdir) / fig.id
    files: list[Path] = []
    runs: dict[str, RunResult] = {}
    csv_names: dict[str, str] = {}
    dim = 1
    for label, spec in fig.runs.items():
        if base is not None:
            spec = ExperimentSpec(**{**spec.__dict__, "output": str(base / f"{label}.csv")})
        res = run_experiment(spec)
        runs[label] = res
        dim = res.states.shape[1]
        csv_names[label] = f"{label}.csv"
        if base is not None:
            files += [base / f"{label}.csv", base / f"{label}.json"]
    schedules: dict[str, ScheduleResult] = {}
    for label, (case, sched, target) in fig.schedules.items():
        res = run_schedule(case, sched)
        schedules[label] = res
        dim = res.states.shape[1]
        csv_names[label] = f"{label}.csv"
        if base is not None:
            files += list(write_schedule(case, sched, res, target, base / f"{label}.csv"))
    if base is not None:
        script = base / "plot.gp"
        script.write_text(plot_script(fig, csv_names, dim), encoding="utf-8")
        index = base / "index.json"
        index.write_text(json.dumps(dict(figure=fig.id, title=fig.title,
                                         files=sorted(p.name for p in files)), indent=2) + "\n",
                         encoding="utf-8")
        files += [script, index]
    return FigureResult(fig, runs, schedules, files)
