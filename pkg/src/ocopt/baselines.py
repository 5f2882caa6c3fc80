"""Gradient descent and Newton's method, kept deliberately plain."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .numerics import as_vector
from .objective import DomainError, Objective

CONVERGED = "converged"
MAX_ITERS = "max_iters"
DIVERGED = "diverged"

SINGULAR_HESSIAN = "singular_hessian"


@dataclass(frozen=True)
class BaselineConfig:
    """``grad_tol = 0`` runs the full ``max_iters`` budget.

    Iterates whose norm exceeds ``divergence_bound`` count as diverged, the
    same as nonfinite ones.
    """

    eta: float = 0.1
    max_iters: int = 1000
    grad_tol: float = 1e-8
    singular_tol: float = 1e-12
    divergence_bound: float = 1e6

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.max_iters < 0 or self.grad_tol < 0 or self.singular_tol < 0:
            raise ValueError("iteration cap and tolerances must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BaselineResult:
    history: np.ndarray  # (iterations + 1, n), x_0 first
    termination: str
    events: list[tuple[int, str]] = field(default_factory=list)
    message: str = ""

    @property
    def iterations(self) -> int:
        return self.history.shape[0] - 1

    @property
    def final_state(self) -> np.ndarray:
        return self.history[-1]


def _diverged(x, bound) -> bool:
    return not np.all(np.isfinite(x)) or float(np.max(np.abs(x))) > bound


def gradient_descent(obj: Objective, x0, cfg: BaselineConfig | None = None) -> BaselineResult:
    """``x_{k+1} = x_k - eta * grad f(x_k)``, stopping once ``||grad f|| < grad_tol``."""
    cfg = cfg or BaselineConfig()
    x = as_vector(x0, obj.dim)
    history = [x]
    for _ in range(cfg.max_iters):
        try:
            g = obj.grad(x)
        except DomainError as exc:
            return BaselineResult(np.array(history), DIVERGED, message=str(exc))
        if np.linalg.norm(g) < cfg.grad_tol:
            return BaselineResult(np.array(history), CONVERGED)
        with np.errstate(over="ignore", invalid="ignore"):
            x = x - cfg.eta * g
        history.append(x)
        if _diverged(x, cfg.divergence_bound):
            return BaselineResult(np.array(history), DIVERGED)
    try:
        done = np.linalg.norm(obj.grad(x)) < cfg.grad_tol
    except DomainError:
        done = False
    return BaselineResult(np.array(history), CONVERGED if done else MAX_ITERS)


def newton(obj: Objective, x0, cfg: BaselineConfig | None = None) -> BaselineResult:
    """``x_{k+1} = x_k - H(x_k)^{-1} grad f(x_k)``.

    A Hessian whose LU factorization has a pivot smaller than
    ``singular_tol`` in magnitude yields a zero step; the iteration holds
    its position and records a ``singular_hessian`` event.
    """
    cfg = cfg or BaselineConfig()
    x = as_vector(x0, obj.dim)
    history = [x]
    events: list[tuple[int, str]] = []
    for k in range(cfg.max_iters):
        try:
            g = obj.grad(x)
            if np.linalg.norm(g) < cfg.grad_tol:
                return BaselineResult(np.array(history), CONVERGED, events)
            H = obj.hess(x)
        except DomainError as exc:
            return BaselineResult(np.array(history), DIVERGED, events, str(exc))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(H, check_finite=False)
        if np.min(np.abs(np.diag(lu))) < cfg.singular_tol:
            events.append((k, SINGULAR_HESSIAN))
            step = np.zeros_like(x)
        else:
            step = lu_solve((lu, piv), g)
        with np.errstate(over="ignore", invalid="ignore"):
            x = x - step
        history.append(x)
        if _diverged(x, cfg.divergence_bound):
            return BaselineResult(np.array(history), DIVERGED, events)
    try:
        done = np.linalg.norm(obj.grad(x)) < cfg.grad_tol
    except DomainError:
        done = False
    return BaselineResult(np.array(history), CONVERGED if done else MAX_ITERS, events)
