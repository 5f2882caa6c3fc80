"""Objective functions and the registry of benchmark cases f1..f8.

Every callable stored on an :class:`Objective` is vectorized over leading
axes: ``value`` maps ``(..., n) -> (...)`` and ``gradient`` maps
``(..., n) -> (..., n)``. The solver relies on this to evaluate a whole
trajectory in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import as_vector, central_diff_grad, central_diff_hess


class DomainError(ValueError):
    """Objective evaluated outside its domain or to a nonfinite value."""

    def __init__(self, x, message: str = "nonfinite objective value"):
        self.x = np.array(x, dtype=float)
        super().__init__(f"{message} at x={self.x.tolist()}")


@dataclass(frozen=True)
class Objective:
    name: str
    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None

    def _check_point(self, x) -> np.ndarray:
        return as_vector(x, self.dim)

    def eval(self, x) -> float:
        x = self._check_point(x)
        v = float(self.value(x))
        if not np.isfinite(v):
            raise DomainError(x)
        return v

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.asarray(self.value(X), dtype=float)
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise DomainError(X[bad])
        return v

    def grad(self, x) -> np.ndarray:
        x = self._check_point(x)
        if self.gradient is None:
            g = central_diff_grad(self.eval, x)
        else:
            g = np.asarray(self.gradient(x), dtype=float)
        if not np.all(np.isfinite(g)):
            raise DomainError(x, "nonfinite gradient")
        return g

    def grad_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.gradient is None:
            return np.array([self.grad(row) for row in X]).reshape(X.shape)
        with np.errstate(over="ignore", invalid="ignore"):
            G = np.asarray(self.gradient(X), dtype=float)
        if not np.all(np.isfinite(G)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(G), axis=-1))[0])
            raise DomainError(X[bad], "nonfinite gradient")
        return G

    def hess(self, x) -> np.ndarray:
        x = self._check_point(x)
        if self.hessian is None:
            return central_diff_hess(self.eval, x)
        H = np.asarray(self.hessian(x), dtype=float).reshape(self.dim, self.dim)
        if not np.all(np.isfinite(H)):
            raise DomainError(x, "nonfinite Hessian")
        return H

    def gradient_mismatch(self, x) -> float:
        """``||g - g_fd|| / (1 + ||g||)`` against a central-difference gradient."""
        g = self.grad(x)
        g_fd = central_diff_grad(self.eval, x)
        return float(np.linalg.norm(g - g_fd) / (1.0 + np.linalg.norm(g)))

    def check_gradient(self, points, tol: float = 1e-4) -> None:
        for p in points:
            err = self.gradient_mismatch(p)
            if err > tol:
                raise AssertionError(f"{self.name}: analytic gradient off by {err:.3e} at {list(p)}")


@dataclass(frozen=True)
class Minimum:
    point: np.ndarray
    label: str  # "global" or "local"


@dataclass(frozen=True)
class ReferenceCase:
    name: str
    objective: Objective
    x0: np.ndarray
    minima: tuple[Minimum, ...]
    # (method, parameter name, value, index into minima) as tabulated for the figures
    reference_params: tuple[dict, ...] = field(default_factory=tuple)

    def refined_point(self, i: int) -> np.ndarray:
        """Stationary point polished from the rounded coordinate of minimum ``i``."""
        start = self.minima[i].point
        x = start.copy()
        for _ in range(50):
            step = np.linalg.solve(self.objective.hess(x), self.objective.grad(x))
            x = x - step
            if np.linalg.norm(step) <= 1e-14 * (1.0 + np.linalg.norm(x)):
                break
        if np.linalg.norm(x - start) > 0.05 or np.linalg.norm(self.objective.grad(x)) > 1e-8:
            raise RuntimeError(f"{self.name}: could not refine minimum {i} near {start.tolist()}")
        return x

    def nearest_minimum(self, x) -> tuple[int, float]:
        x = as_vector(x)
        d = [float(np.linalg.norm(x - m.point)) for m in self.minima]
        i = int(np.argmin(d))
        return i, d[i]


# -- the test functions -----------------------------------------------------

def _x(X):
    return X[..., 0]


def _f1(X):
    x = _x(X)
    return x**4 + np.sin(x)


def _g1(X):
    x = _x(X)
    return (4 * x**3 + np.cos(x))[..., None]


def _h1(X):
    x = _x(X)
    return (12 * x**2 - np.sin(x))[..., None, None]


def _f2(X):
    x = _x(X)
    return np.exp(x) + np.sin(x) + x**2


def _g2(X):
    x = _x(X)
    return (np.exp(x) + np.cos(x) + 2 * x)[..., None]


def _h2(X):
    x = _x(X)
    return (np.exp(x) - np.sin(x) + 2.0)[..., None, None]


def _f3(X):
    x = _x(X)
    return np.log(x**2 + 1) + np.log((x - 1) ** 2 + 0.01)


def _g3(X):
    x = _x(X)
    return (2 * x / (x**2 + 1) + 2 * (x - 1) / ((x - 1) ** 2 + 0.01))[..., None]


def _h3(X):
    x = _x(X)
    a = x**2 + 1
    b = (x - 1) ** 2 + 0.01
    return (2 * (1 - x**2) / a**2 + 2 * (0.01 - (x - 1) ** 2) / b**2)[..., None, None]


# e^{x^2} overflows doubles just above |x| = 26.6
F4_DOMAIN = 26.0


def _f4_guard(X):
    x = _x(np.asarray(X, dtype=float))
    if np.any(np.abs(x) > F4_DOMAIN):
        bad = np.unravel_index(int(np.argmax(np.abs(x))), x.shape)
        raise DomainError(np.asarray(X)[bad], f"|x| > {F4_DOMAIN} overflows exp(x^2)")
    return x


def _f4(X):
    x = _f4_guard(X)
    return 7 * x**3 + x**4 + np.exp(x**2) + np.exp(-(x**2))


def _g4(X):
    x = _f4_guard(X)
    return (21 * x**2 + 4 * x**3 + 2 * x * np.exp(x**2) - 2 * x * np.exp(-(x**2)))[..., None]


def _h4(X):
    x = _f4_guard(X)
    e_pos, e_neg = np.exp(x**2), np.exp(-(x**2))
    return (42 * x + 12 * x**2 + (2 + 4 * x**2) * e_pos + (4 * x**2 - 2) * e_neg)[..., None, None]


def _f5(X):
    x = _x(X)
    return x - 4 * x**2 + 0.2 * x**3 + 2 * x**4


def _g5(X):
    x = _x(X)
    return (1 - 8 * x + 0.6 * x**2 + 8 * x**3)[..., None]


def _h5(X):
    x = _x(X)
    return (-8 + 1.2 * x + 24 * x**2)[..., None, None]


def _f6(X):
    x = _x(X)
    return (x - 1) * (x + 1) * (x + 0.5) * (x + 1.5) * (x - 0.5) * (x - 1.5)


# expanded: x^6 - 3.5 x^4 + 3.0625 x^2 - 0.5625
def _g6(X):
    x = _x(X)
    return (6 * x**5 - 14 * x**3 + 6.125 * x)[..., None]


def _h6(X):
    x = _x(X)
    return (30 * x**4 - 42 * x**2 + 6.125)[..., None, None]


def _f7(X):
    x, y = X[..., 0], X[..., 1]
    return x**4 + y**4 + np.sin(x)


def _g7(X):
    x, y = X[..., 0], X[..., 1]
    return np.stack([4 * x**3 + np.cos(x), 4 * y**3], axis=-1)


F8_CENTERS = np.array([[0.0, 0.0], [10.0, 10.0], [2.0, 30.0]])


def _f8(X):
    d = X[..., None, :] - F8_CENTERS
    return np.sum(np.log(np.sum(d * d, axis=-1) + 1.0), axis=-1)


def _g8(X):
    d = X[..., None, :] - F8_CENTERS
    w = 2.0 / (np.sum(d * d, axis=-1) + 1.0)
    return np.sum(w[..., None] * d, axis=-2)


def quadratic(dim: int = 1) -> Objective:
    """``f(x) = x^T x / 2``."""
    return Objective(
        name="quadratic",
        dim=dim,
        value=lambda X: 0.5 * np.sum(np.asarray(X) ** 2, axis=-1),
        gradient=lambda X: np.array(X, dtype=float),
        hessian=lambda X: np.eye(dim),
    )


def _case(name, obj, x0, minima, params=()):
    return ReferenceCase(
        name=name,
        objective=obj,
        x0=as_vector(x0),
        minima=tuple(Minimum(as_vector(p), lbl) for p, lbl in minima),
        reference_params=tuple(params),
    )


def _build_registry() -> dict[str, ReferenceCase]:
    o = Objective
    cases = [
        _case("f1", o("f1", 1, _f1, _g1, _h1), 10.0, [(-0.592, "global")],
              [dict(method="oc", R=1.0, minimum=0), dict(method="oc", R=200.0, minimum=0),
               dict(method="oc", R=0.01, minimum=0), dict(method="gd", eta=0.001, minimum=0)]),
        _case("f2", o("f2", 1, _f2, _g2, _h2), 3.0, [(-0.6558, "global")],
              [dict(method="oc", R=0.01, minimum=0), dict(method="gd", eta=0.1, minimum=0)]),
        _case("f3", o("f3", 1, _f3, _g3, _h3), 2.0, [(0.995, "global")],
              [dict(method="oc", R=0.01, minimum=0), dict(method="gd", eta=0.01, minimum=0)]),
        _case("f4", o("f4", 1, _f4, _g4, _h4), 0.0, [(-1.566, "global")],
              [dict(method="oc", R=1 / 0.026, minimum=0), dict(method="gd", eta=0.026, minimum=0)]),
        _case("f5", o("f5", 1, _f5, _g5, _h5), -10.0, [(0.89, "local"), (-1.094, "global")],
              [dict(method="oc", R=100.0, minimum=0), dict(method="oc", R=0.1, minimum=1)]),
        _case("f6", o("f6", 1, _f6, _g6, _h6), -3.0,
              [(1.323, "local"), (0.0, "local"), (-1.323, "local")],
              [dict(method="oc", R=1.0, minimum=0), dict(method="oc", R=200.0, minimum=1),
               dict(method="oc", R=500.0, minimum=2)]),
        _case("f7", o("f7", 2, _f7, _g7), [2.0, -2.0], [([-0.592, 0.0], "global")],
              [dict(method="oc", R=1 / 0.12, minimum=0), dict(method="gd", eta=0.12, minimum=0)]),
        _case("f8", o("f8", 2, _f8, _g8), [-20.0, 40.0],
              [([2.0, 29.9], "local"), ([0.05, 0.08], "local"), ([9.93, 9.99], "local")]),
    ]
    return {c.name: c for c in cases}


REGISTRY = _build_registry()
NAMES = tuple(REGISTRY) + ("quadratic",)


def registry_get(name: str, x0=None, dim: int = 1) -> ReferenceCase:
    """Look up a benchmark case by name.

    ``quadratic`` is synthetic: ``dim`` and ``x0`` (default all ones) are
    configurable. For the registered cases ``x0`` overrides the tabulated start.
    """
    if name == "quadratic":
        start = np.ones(dim) if x0 is None else as_vector(x0, dim)
        return _case("quadratic", quadratic(dim), start, [(np.zeros(dim), "global")])
    try:
        case = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown case {name!r}; known: {', '.join(NAMES)}") from None
    if x0 is not None:
        case = ReferenceCase(case.name, case.objective, as_vector(x0, case.objective.dim),
                             case.minima, case.reference_params)
    return case
