"""Optimization through discrete-time optimal control.

Minimizing ``f`` is recast as steering the single integrator
``x_{k+1} = x_k + u_k`` so that

    J(u) = sum_{k=0}^{N} [f(x_k) + 0.5 u_k^T R u_k] + f(x_{N+1})

is minimal. The forward-backward difference equations give the gradient of
``J`` with respect to each control in closed form,

    dJ/du_k = R u_k + lambda_{k+1},   lambda_k = grad f(x_k) + lambda_{k+1},
    lambda_{N+1} = grad f(x_{N+1}),

and the outer iteration is plain gradient descent on the control sequence.
The terminal state ``x_{N+1}`` of the converged trajectory is the answer.
Only first derivatives of ``f`` are ever evaluated here.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .numerics import SPDSolver, as_matrix, as_vector
from .objective import DomainError, Objective

CONVERGED = "converged"
MAX_ITERS = "max_iters"
NUMERICAL_ERROR = "numerical_error"

# auto step: length of the nonmonotone acceptance window and Armijo constant
_NONMONOTONE_WINDOW = 10
_ARMIJO = 1e-4
_MAX_STEP_HALVINGS = 60


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the outer control-gradient iteration.

    ``alpha`` is either a fixed positive step or ``"auto"``. The auto step is
    ``1 / c_t`` where ``c_t`` is the curvature of ``J`` along the previous
    update (the ``R`` part plus a secant estimate of the ``f`` part), with a
    nonmonotone sufficient-decrease safeguard.

    ``init_control`` is ``"zeros"``, a constant (applied to every
    component), an explicit ``(N+1, n)`` sequence, or ``"random"``
    (uniform in ``[-init_scale, init_scale]`` drawn with ``seed``).

    ``backtracking`` applies to a fixed ``alpha`` only: whenever ``J``
    increases, ``alpha`` is halved for the rest of the run, down to
    ``alpha / 1024``.
    """

    N: int = 100
    R: Any = 1.0
    alpha: float | str = "auto"
    epsilon: float = 1e-6
    max_outer: int = 50_000
    init_control: Any = 1e-3
    init_scale: float = 1e-3
    seed: int | None = None
    backtracking: bool = False

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("horizon N must be an integer >= 1")
        if self.alpha != "auto" and not (isinstance(self.alpha, (int, float)) and self.alpha > 0):
            raise ValueError("alpha must be positive or 'auto'")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer < 0:
            raise ValueError("max_outer must be non-negative")

    def weight(self, dim: int) -> np.ndarray:
        return as_matrix(self.R, dim)

    def initial_controls(self, dim: int) -> np.ndarray:
        shape = (self.N + 1, dim)
        init = self.init_control
        if isinstance(init, str):
            if init == "zeros":
                return np.zeros(shape)
            if init == "random":
                rng = np.random.default_rng(self.seed)
                return rng.uniform(-self.init_scale, self.init_scale, size=shape)
            raise ValueError(f"unknown init_control policy {init!r}")
        arr = np.asarray(init, dtype=float)
        if arr.ndim == 0:
            return np.full(shape, float(arr))
        arr = arr.reshape(self.N + 1, -1)
        if arr.shape != shape:
            raise ValueError(f"initial controls must have shape {shape}, got {arr.shape}")
        return arr.copy()

    def to_dict(self) -> dict:
        R = np.asarray(self.R, dtype=float)
        init = self.init_control
        if not isinstance(init, str):
            init = np.asarray(init, dtype=float).tolist()
        return dict(N=self.N, R=R.tolist(), alpha=self.alpha, epsilon=self.epsilon,
                    max_outer=self.max_outer, init_control=init, init_scale=self.init_scale,
                    seed=self.seed, backtracking=self.backtracking)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        return cls(**d)


@dataclass
class Trajectory:
    states: np.ndarray  # (N+2, n): x_0 .. x_{N+1}
    controls: np.ndarray  # (N+1, n): u_0 .. u_N
    costates: np.ndarray | None = None  # (N+1, n): lambda_1 .. lambda_{N+1}

    @property
    def N(self) -> int:
        return self.controls.shape[0] - 1


@dataclass
class SolveReport:
    final_state: np.ndarray
    trajectory: Trajectory
    outer_iters: int
    residual_history: np.ndarray
    cost_history: np.ndarray
    termination: str
    config: SolverConfig
    message: str = ""
    step_history: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def converged(self) -> bool:
        return self.termination == CONVERGED

    @property
    def residual(self) -> float:
        return float(self.residual_history[-1])


def forward_rollout(x0, controls) -> np.ndarray:
    """States ``x_0..x_{N+1}`` of ``x_{k+1} = x_k + u_k``.

    ``np.cumsum`` accumulates sequentially, so ``states[k+1]`` is bitwise
    ``states[k] + controls[k]``.
    """
    x0 = as_vector(x0)
    controls = np.asarray(controls, dtype=float).reshape(-1, x0.size)
    with np.errstate(over="ignore", invalid="ignore"):
        states = np.cumsum(np.vstack([x0, controls]), axis=0)
    if not np.all(np.isfinite(states)):
        k = int(np.flatnonzero(~np.all(np.isfinite(states), axis=1))[0])
        raise NumericalError(f"nonfinite state at k={k}")
    return states


def backward_costates(obj: Objective, states) -> np.ndarray:
    """Costates ``lambda_1..lambda_{N+1}`` from the backward recursion."""
    states = np.asarray(states, dtype=float)
    try:
        grads = obj.grad_batch(states[1:])
    except DomainError:
        for k in range(1, states.shape[0]):
            try:
                obj.grad(states[k])
            except DomainError as exc:
                raise DomainError(states[k], f"gradient failed at k={k}: {exc}") from exc
        raise
    return np.cumsum(grads[::-1], axis=0)[::-1]


def hamiltonian_gradient(R, controls, costates) -> np.ndarray:
    """``dH/du_k = R u_k + lambda_{k+1}`` for every k."""
    controls = np.asarray(controls, dtype=float)
    costates = np.asarray(costates, dtype=float)
    if controls.shape != costates.shape:
        raise ValueError(f"controls {controls.shape} and costates {costates.shape} differ")
    R = as_matrix(R, controls.shape[1])
    return controls @ R.T + costates


def cost_of(obj: Objective, R, traj: Trajectory) -> float:
    u = traj.controls
    R = as_matrix(R, u.shape[1])
    return float(np.sum(obj.eval_batch(traj.states)) + 0.5 * np.sum((u @ R.T) * u))


def _max_norm(G: np.ndarray) -> float:
    return float(np.max(np.sqrt(np.sum(G * G, axis=1))))


class _Evaluation:
    """Everything the outer loop needs at one control sequence."""

    __slots__ = ("u", "states", "costates", "G", "J", "residual")

    def __init__(self, obj: Objective, x0, R, u):
        self.u = u
        self.states = forward_rollout(x0, u)
        fvals = obj.eval_batch(self.states)
        self.costates = backward_costates(obj, self.states)
        with np.errstate(over="ignore", invalid="ignore"):
            Ru = u @ R.T
            self.G = Ru + self.costates
            self.J = float(np.sum(fvals) + 0.5 * np.sum(Ru * u))
            self.residual = _max_norm(self.G)
        if not (math.isfinite(self.J) and math.isfinite(self.residual)):
            raise NumericalError("nonfinite cost or gradient")


def _try_eval(obj, x0, R, u) -> _Evaluation | None:
    try:
        return _Evaluation(obj, x0, R, u)
    except (NumericalError, DomainError, FloatingPointError):
        return None


def solve(obj: Objective, x0, cfg: SolverConfig | None = None) -> SolveReport:
    """Run the forward-backward sweep until ``max_k ||dH/du_k|| <= epsilon``.

    Each outer iteration rolls the states forward, sweeps the costates
    backward and moves every control against ``R u_k + lambda_{k+1}``.
    Nonfinite intermediates end the run with ``numerical_error``; the report
    then holds the last finite iterate.
    """
    cfg = cfg or SolverConfig()
    x0 = as_vector(x0, obj.dim)
    R = cfg.weight(obj.dim)
    SPDSolver(R)  # validates R
    u = cfg.initial_controls(obj.dim)

    cur = _try_eval(obj, x0, R, u)
    if cur is None:
        raise NumericalError("objective is not finite along the initial trajectory")

    auto = cfg.alpha == "auto"
    alpha = None if auto else float(cfg.alpha)
    alpha_floor = None if auto else alpha / 1024.0
    recent_J: deque[float] = deque([cur.J], maxlen=_NONMONOTONE_WINDOW)
    residuals, costs, steps = [cur.residual], [cur.J], []
    prev: _Evaluation | None = None
    termination, message = MAX_ITERS, ""

    t = 0
    while True:
        if cur.residual <= cfg.epsilon:
            termination = CONVERGED
            break
        if t >= cfg.max_outer:
            break

        if auto:
            step = _auto_step(obj, x0, R, cur, prev)
            if step is None:
                termination, message = NUMERICAL_ERROR, "curvature probe left the domain"
                break
            gg = float(np.sum(cur.G * cur.G))
            finite_trial = False
            for _ in range(_MAX_STEP_HALVINGS):
                nxt = _try_eval(obj, x0, R, cur.u - step * cur.G)
                if nxt is not None:
                    finite_trial = True
                    if nxt.J <= max(recent_J) - _ARMIJO * step * gg:
                        break
                step *= 0.5
            else:
                if finite_trial:
                    # no representable decrease left: rounding floor, not a blow-up
                    message = f"step search stalled at outer iteration {t + 1}"
                    break
                nxt = None
        else:
            while True:
                step = alpha
                nxt = _try_eval(obj, x0, R, cur.u - step * cur.G)
                if not cfg.backtracking or alpha <= alpha_floor:
                    break
                if nxt is not None and nxt.J <= cur.J:
                    break
                alpha = max(alpha * 0.5, alpha_floor)

        if nxt is None:
            termination, message = NUMERICAL_ERROR, f"nonfinite iterate at outer iteration {t + 1}"
            break
        prev, cur = cur, nxt
        recent_J.append(cur.J)
        residuals.append(cur.residual)
        costs.append(cur.J)
        steps.append(step)
        t += 1

    traj = Trajectory(cur.states, cur.u, cur.costates)
    return SolveReport(
        final_state=cur.states[-1].copy(),
        trajectory=traj,
        outer_iters=t,
        residual_history=np.array(residuals),
        cost_history=np.array(costs),
        termination=termination,
        config=cfg,
        message=message,
        step_history=np.array(steps),
    )


def _auto_step(obj, x0, R, cur: _Evaluation, prev: _Evaluation | None) -> float | None:
    """Inverse curvature of ``J`` along the last update (or along ``-G`` at start)."""
    if prev is not None:
        s = cur.u - prev.u
        y = cur.costates - prev.costates
    else:
        # probe the f-part curvature along the gradient with a tiny displacement
        gnorm = float(np.linalg.norm(cur.G))
        delta = 1e-6 * max(1.0, float(np.max(np.abs(cur.states))))
        s = -delta * cur.G / gnorm
        probe = _try_eval(obj, x0, R, cur.u + s)
        if probe is None:
            return None
        y = probe.costates - cur.costates
    ss = float(np.sum(s * s))
    if ss == 0.0:
        return None
    curvature = abs(float(np.sum(s * (s @ R.T))) + float(np.sum(s * y))) / ss
    if not math.isfinite(curvature) or curvature == 0.0:
        curvature = float(np.linalg.eigvalsh(R)[-1])
    return 1.0 / curvature


@dataclass(frozen=True)
class PMPResidual:
    residual: float
    converged: bool
    bound: float  # 10 * epsilon * ||R^{-1}||

    @property
    def within_bound(self) -> bool:
        return self.residual <= self.bound


def verify_pmp(obj: Objective, R, report: SolveReport) -> PMPResidual:
    """Closed-form control consistency ``max_k ||u_k + R^{-1} sum_{i>k} grad f(x_i)||``.

    The sums are formed directly for each k, independent of the backward
    recursion used by the solver.
    """
    traj = report.trajectory
    n = traj.states.shape[1]
    solver = SPDSolver(as_matrix(R, n))
    grads = np.array([obj.grad(x) for x in traj.states])
    worst = 0.0
    for k in range(traj.N + 1):
        tail = np.sum(grads[k + 1:], axis=0)
        r = traj.controls[k] + solver.solve(tail)
        worst = max(worst, float(np.linalg.norm(r)))
    bound = 10.0 * report.config.epsilon * solver.inverse_norm()
    return PMPResidual(worst, report.converged, bound)


@dataclass(frozen=True)
class SteadyState:
    point: np.ndarray
    steady: bool
    tail_max: float


def steady_state_extract(traj: Trajectory, plateau_tol: float = 1e-6) -> SteadyState:
    """``x_{N+1}`` if the controls over the last ceil(N/10) steps have died out."""
    tail = max(1, math.ceil(0.1 * traj.N))
    norms = np.linalg.norm(traj.controls[-tail:], axis=1)
    tail_max = float(np.max(norms))
    return SteadyState(traj.states[-1].copy(), tail_max <= plateau_tol, tail_max)
