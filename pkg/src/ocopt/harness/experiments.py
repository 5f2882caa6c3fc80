"""Single runs, R sweeps, CSV series and JSON manifests."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .. import __version__
from ..baselines import BaselineConfig, BaselineResult, gradient_descent, newton
from ..numerics import as_vector
from ..objective import DomainError, ReferenceCase, registry_get
from ..ocsolver import (
    NUMERICAL_ERROR,
    NumericalError,
    SolveReport,
    SolverConfig,
    solve,
    steady_state_extract,
    verify_pmp,
)
from .metrics import oscillation_metric, relative_error_series, steps_to_reach

METHODS = ("oc", "gd", "newton")
MANIFEST_SCHEMA = "ocopt.run/1"
# "settled" means within this distance of the target for the rest of the trajectory
SETTLE_TOL = 1e-2


@dataclass
class ExperimentSpec:
    case: str
    method: str = "oc"
    config: SolverConfig | BaselineConfig = field(default_factory=SolverConfig)
    output: str | None = None  # CSV path; the manifest goes next to it as .json
    seed: int | None = None
    x0: Any = None  # overrides the case's start
    target: int | None = None  # index of the registered minimum; default: nearest to the end point
    dim: int = 1  # only used by the synthetic quadratic

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        want = SolverConfig if self.method == "oc" else BaselineConfig
        if isinstance(self.config, dict):
            self.config = want(**self.config)
        if not isinstance(self.config, want):
            raise TypeError(f"method {self.method!r} needs a {want.__name__}")
        if self.method == "oc" and self.seed is not None and self.config.seed is None:
            self.config = dataclasses.replace(self.config, seed=self.seed)

    def resolve_case(self) -> ReferenceCase:
        return registry_get(self.case, x0=self.x0, dim=self.dim)

    def to_dict(self) -> dict:
        x0 = None if self.x0 is None else as_vector(self.x0).tolist()
        return dict(case=self.case, method=self.method, config=self.config.to_dict(),
                    output=self.output, seed=self.seed, x0=x0, target=self.target, dim=self.dim)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        method = d.get("method", "oc")
        cfg = d.get("config", {}) or {}
        d["config"] = SolverConfig(**cfg) if method == "oc" else BaselineConfig(**cfg)
        return cls(**d)


@dataclass
class RunResult:
    spec: ExperimentSpec
    case: ReferenceCase
    states: np.ndarray  # (K, n)
    controls: np.ndarray  # (K, n), last row NaN
    errors: np.ndarray  # (K, n)
    error_modes: list[str]
    termination: str
    manifest: dict
    report: SolveReport | BaselineResult | None = None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def converged(self) -> bool:
        return self.termination == "converged"


def _series_from_history(history: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    controls = np.full_like(history, np.nan)
    controls[:-1] = np.diff(history, axis=0)
    return history, controls


def _execute(spec: ExperimentSpec, case: ReferenceCase):
    obj, x0, cfg = case.objective, case.x0, spec.config
    if spec.method == "oc":
        try:
            report = solve(obj, x0, cfg)
        except (NumericalError, DomainError) as exc:
            states = x0[None, :]
            return states, np.full_like(states, np.nan), NUMERICAL_ERROR, None, str(exc)
        traj = report.trajectory
        controls = np.vstack([traj.controls, np.full((1, obj.dim), np.nan)])
        return traj.states, controls, report.termination, report, report.message
    run = gradient_descent if spec.method == "gd" else newton
    result = run(obj, x0, cfg)
    states, controls = _series_from_history(result.history)
    return states, controls, result.termination, result, result.message


def _target_index(spec: ExperimentSpec, case: ReferenceCase, end) -> int:
    if spec.target is not None:
        return spec.target
    return case.nearest_minimum(end)[0] if np.all(np.isfinite(end)) else 0


def _clean(v):
    """JSON-safe floats: NaN/inf become None."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def run_experiment(spec: ExperimentSpec) -> RunResult:
    """Run one method on one case; write CSV and manifest if ``spec.output`` is set.

    Method failures end up in the manifest's ``termination``/``message``
    fields rather than as exceptions.
    """
    case = spec.resolve_case()
    states, controls, termination, report, message = _execute(spec, case)
    end = states[-1]
    ti = _target_index(spec, case, end)
    target = case.refined_point(ti)
    err = relative_error_series(states, target)
    near_i, near_d = case.nearest_minimum(end) if np.all(np.isfinite(end)) else (None, math.nan)

    outcome: dict[str, Any] = dict(
        termination=termination,
        message=message,
        final_point=end,
        iterations=_iterations(report),
        trajectory_steps=int(states.shape[0] - 1),
        nearest_minimum=None if near_i is None else dict(
            index=near_i, label=case.minima[near_i].label,
            point=case.minima[near_i].point, distance=near_d),
        steps_to_target=steps_to_reach(states, target, SETTLE_TOL) if np.all(np.isfinite(states)) else None,
        oscillation=oscillation_metric(states),
        terminal_error=err.values[-1],
    )
    if isinstance(report, SolveReport):
        steady = steady_state_extract(report.trajectory)
        outcome.update(final_residual=report.residual, steady=steady.steady, tail_control_max=steady.tail_max)
        if report.converged:
            outcome["pmp_residual"] = verify_pmp(case.objective, report.config.R, report).residual
    elif isinstance(report, BaselineResult):
        outcome["events"] = [list(e) for e in report.events]

    manifest = _clean(dict(
        schema=MANIFEST_SCHEMA,
        version=__version__,
        spec=spec.to_dict(),
        x0=case.x0,
        target=dict(index=ti, listed=case.minima[ti].point, refined=target),
        error_modes=err.modes,
        outcome=outcome,
    ))
    result = RunResult(spec, case, states, controls, err.values, err.modes, termination, manifest, report)
    if spec.output:
        write_run(result, spec.output)
    return result


def _iterations(report) -> int | None:
    if isinstance(report, SolveReport):
        return report.outer_iters
    if isinstance(report, BaselineResult):
        return report.iterations
    return None


def csv_header(n: int) -> list[str]:
    return (["k"] + [f"x_{i}" for i in range(n)] + [f"u_{i}" for i in range(n)]
            + [f"err_{i}" for i in range(n)])


def _fmt(v: float) -> str:
    return "" if not math.isfinite(v) else repr(float(v))


def write_run(result: RunResult, output) -> tuple[Path, Path]:
    """One CSV of series rows plus a JSON manifest with the same stem."""
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = result.states.shape[1]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(n))
        for k in range(result.states.shape[0]):
            w.writerow([k] + [_fmt(v) for v in result.states[k]] + [_fmt(v) for v in result.controls[k]]
                       + [_fmt(v) for v in result.errors[k]])
    manifest_path = path.with_suffix(".json")
    result.manifest["csv"] = path.name
    manifest_path.write_text(json.dumps(result.manifest, indent=2) + "\n", encoding="utf-8")
    return path, manifest_path


def read_series(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {h: np.array([float(r[i]) if r[i] != "" else np.nan for r in body]) for i, h in enumerate(header)}
    return cols


def spec_from_manifest(manifest: dict | str | Path) -> ExperimentSpec:
    if not isinstance(manifest, dict):
        manifest = json.loads(Path(manifest).read_text(encoding="utf-8"))
    return ExperimentSpec.from_dict(manifest["spec"])


# -- R sweeps -------------------------------------------------------------------------

@dataclass
class SweepRow:
    R: Any
    final_point: np.ndarray | None
    nearest: int | None
    minimum: np.ndarray | None
    distance: float
    termination: str
    monotonicity: str = "n/a"  # larger R -> minimum nearer x0: observed | violated | n/a
    message: str = ""
    run: RunResult | None = None


def r_sweep(case: str, R_list, config: SolverConfig | None = None, x0=None,
            outdir=None, overrides: dict | None = None) -> list[SweepRow]:
    """Solve ``case`` once per weight in ``R_list`` with a shared config.

    ``overrides`` optionally maps a position in ``R_list`` to config field
    replacements for that run alone. The claim "larger R settles nearer x0"
    is annotated per row (in increasing-R order), not enforced.
    """
    config = config or SolverConfig()
    overrides = overrides or {}
    rows: list[SweepRow] = []
    for i, R in enumerate(R_list):
        cfg = dataclasses.replace(config, R=R, **overrides.get(i, {}))
        out = None if outdir is None else str(Path(outdir) / f"{case}_R{i}.csv")
        try:
            run = run_experiment(ExperimentSpec(case, "oc", cfg, output=out, x0=x0))
        except Exception as exc:  # recorded per row, the sweep continues
            rows.append(SweepRow(R, None, None, None, math.nan, NUMERICAL_ERROR, message=str(exc)))
            continue
        nm = run.manifest["outcome"]["nearest_minimum"]
        rows.append(SweepRow(
            R, run.final_state.copy(),
            None if nm is None else nm["index"],
            None if nm is None else np.asarray(nm["point"]),
            math.nan if nm is None else nm["distance"],
            run.termination, message=run.manifest["outcome"]["message"], run=run))
    _annotate_monotonicity(rows, registry_get(case, x0=x0).x0)
    return rows


def _weight_scale(R) -> float:
    return float(np.max(np.linalg.eigvalsh(np.atleast_2d(np.asarray(R, dtype=float)))))


def _annotate_monotonicity(rows: list[SweepRow], x0) -> None:
    order = sorted((r for r in rows if r.minimum is not None), key=lambda r: _weight_scale(r.R))
    for prev, row in zip(order, order[1:]):
        d_prev = np.linalg.norm(prev.minimum - x0)
        d_row = np.linalg.norm(row.minimum - x0)
        row.monotonicity = "observed" if d_row <= d_prev else "violated"


def sweep_table(rows: list[SweepRow]) -> list[dict]:
    return [_clean(dict(R=r.R, final_point=r.final_point, nearest=r.nearest, minimum=r.minimum,
                        distance=r.distance, termination=r.termination,
                        monotonicity=r.monotonicity, message=r.message)) for r in rows]
