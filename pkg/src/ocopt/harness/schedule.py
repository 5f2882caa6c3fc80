"""Alternating-axis optimization: a sequence of solves on coordinate subsets.

Each phase freezes the inactive coordinates at their current values and
solves the control problem over the active ones only, with its own weight
block. A phase ends by convergence, by passing a waypoint, or after a fixed
number of outer iterations.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..numerics import as_matrix, as_vector, spd_check
from ..objective import DomainError, Objective, registry_get
from ..ocsolver import CONVERGED, NUMERICAL_ERROR, NumericalError, SolverConfig, solve

STOP_KINDS = ("residual", "waypoint", "max_outer")
DEFAULT_WAYPOINT_RADIUS = 0.5


@dataclass(frozen=True)
class Stop:
    kind: str = "residual"
    point: tuple[float, ...] | None = None
    radius: float = DEFAULT_WAYPOINT_RADIUS

    def __post_init__(self):
        if self.kind not in STOP_KINDS:
            raise ValueError(f"stop kind must be one of {STOP_KINDS}")
        if self.kind == "waypoint" and self.point is None:
            raise ValueError("waypoint stop needs a point")


@dataclass(frozen=True)
class Phase:
    active: tuple[bool, ...]
    R: Any  # weight over the active coordinates only
    stop: Stop = field(default_factory=Stop)
    config: SolverConfig = field(default_factory=SolverConfig)  # its R is ignored

    def __post_init__(self):
        m = int(sum(self.active))
        if m == 0:
            raise ValueError("a phase needs at least one active coordinate")
        check = spd_check(as_matrix(self.R, m))
        if not check:
            raise ValueError(f"phase weight block is {check.reason}")

    @property
    def weight(self) -> np.ndarray:
        return as_matrix(self.R, int(sum(self.active)))

    def to_dict(self) -> dict:
        cfg = self.config.to_dict()
        cfg.pop("R")
        return dict(active=list(self.active), R=self.weight.tolist(),
                    stop=dict(kind=self.stop.kind,
                              point=None if self.stop.point is None else list(self.stop.point),
                              radius=self.stop.radius),
                    config=cfg)

    @classmethod
    def from_dict(cls, d: dict) -> "Phase":
        stop = d.get("stop", {}) or {}
        point = stop.get("point")
        return cls(
            active=tuple(bool(a) for a in d["active"]),
            R=d["R"],
            stop=Stop(stop.get("kind", "residual"), None if point is None else tuple(point),
                      stop.get("radius", DEFAULT_WAYPOINT_RADIUS)),
            config=SolverConfig(**(d.get("config") or {})),
        )


@dataclass(frozen=True)
class PhaseSchedule:
    phases: tuple[Phase, ...]
    name: str = "schedule"

    def to_dict(self) -> dict:
        return dict(name=self.name, phases=[p.to_dict() for p in self.phases])

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseSchedule":
        return cls(tuple(Phase.from_dict(p) for p in d["phases"]), d.get("name", "schedule"))

    @classmethod
    def load(cls, path) -> "PhaseSchedule":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class PhaseResult:
    phase: Phase
    states: np.ndarray  # full-dimensional, from the phase start to its end point
    termination: str  # solver termination
    outer_iters: int
    stopped: bool  # stop rule satisfied
    message: str = ""

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]


@dataclass
class ScheduleResult:
    phases: list[PhaseResult]
    states: np.ndarray  # concatenated; consecutive phases share their junction state
    boundaries: list[int]  # row in ``states`` holding each phase's starting point
    aborted: bool
    message: str = ""

    @property
    def final_point(self) -> np.ndarray:
        return self.states[-1]


def restrict(obj: Objective, anchor, active):
    """``obj`` as a function of the active coordinates, the rest held at ``anchor``.

    Returns the restricted objective and the map back to full coordinates.
    """
    anchor = as_vector(anchor, obj.dim)
    idx = np.flatnonzero(np.asarray(active, dtype=bool))

    def embed(Z):
        Z = np.asarray(Z, dtype=float)
        X = np.broadcast_to(anchor, Z.shape[:-1] + (obj.dim,)).copy()
        X[..., idx] = Z
        return X

    gradient = None
    if obj.gradient is not None:
        def gradient(Z):
            return np.asarray(obj.gradient(embed(Z)))[..., idx]

    return Objective(name=f"{obj.name}|{idx.tolist()}", dim=idx.size,
                     value=lambda Z: obj.value(embed(Z)), gradient=gradient), embed


def run_phase(obj: Objective, start, phase: Phase) -> PhaseResult:
    start = as_vector(start, obj.dim)
    if len(phase.active) != obj.dim:
        raise ValueError(f"phase mask has {len(phase.active)} entries for a {obj.dim}-d objective")
    sub, embed = restrict(obj, start, phase.active)
    cfg = dataclasses.replace(phase.config, R=phase.weight)
    idx = np.flatnonzero(phase.active)
    try:
        report = solve(sub, start[idx], cfg)
    except (NumericalError, DomainError) as exc:
        return PhaseResult(phase, start[None, :], NUMERICAL_ERROR, 0, False, str(exc))
    states = embed(report.trajectory.states)
    stop = phase.stop
    if report.termination == NUMERICAL_ERROR:
        return PhaseResult(phase, states, report.termination, report.outer_iters, False, report.message)
    if stop.kind == "residual":
        ok = report.termination == CONVERGED
        msg = "" if ok else f"phase did not converge within {cfg.max_outer} outer iterations"
        return PhaseResult(phase, states, report.termination, report.outer_iters, ok, msg)
    if stop.kind == "max_outer":
        return PhaseResult(phase, states, report.termination, report.outer_iters, True)
    # waypoint: the phase ends at the first trajectory state inside the radius
    d = np.linalg.norm(states - as_vector(stop.point, obj.dim), axis=1)
    inside = np.flatnonzero(d <= stop.radius)
    if inside.size == 0:
        return PhaseResult(phase, states, report.termination, report.outer_iters, False,
                           f"trajectory never came within {stop.radius} of waypoint {list(stop.point)} "
                           f"(closest {float(d.min()):.4g})")
    k = int(inside[0])
    return PhaseResult(phase, states[: k + 1], report.termination, report.outer_iters, True)


def run_schedule(case, schedule: PhaseSchedule, x0=None) -> ScheduleResult:
    """Execute phases in order; the first phase that misses its stop rule aborts the rest."""
    if isinstance(case, str):
        case = registry_get(case, x0=x0)
    obj = case.objective
    point = case.x0 if x0 is None else as_vector(x0, obj.dim)
    results: list[PhaseResult] = []
    pieces, boundaries = [], []
    offset = 0
    for i, phase in enumerate(schedule.phases):
        res = run_phase(obj, point, phase)
        results.append(res)
        boundaries.append(0 if i == 0 else offset - 1)
        pieces.append(res.states if i == 0 else res.states[1:])
        offset += pieces[-1].shape[0]
        if not res.stopped:
            states = np.vstack(pieces)
            return ScheduleResult(results, states, boundaries, True, f"phase {i}: {res.message}")
        point = res.end
    return ScheduleResult(results, np.vstack(pieces), boundaries, False)
