"""Per-step error series and trajectory shape metrics."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..numerics import as_vector

# below this magnitude a target component is treated as zero and the error
# is reported in absolute terms
ZERO_TARGET = 1e-9


class ErrorSeries(NamedTuple):
    values: np.ndarray  # (K, n)
    absolute: np.ndarray  # (n,) True where the absolute error is reported

    @property
    def modes(self) -> list[str]:
        return ["absolute" if a else "relative" for a in self.absolute]


def relative_error_series(history, target) -> ErrorSeries:
    """Componentwise ``(x_k - x*) / x*``, or ``x_k - x*`` where ``|x*_i| < 1e-9``."""
    X = np.atleast_2d(np.asarray(history, dtype=float))
    if X.shape[0] == 1 and np.ndim(history) == 1:
        X = X.T
    t = as_vector(target, X.shape[1])
    absolute = np.abs(t) < ZERO_TARGET
    denom = np.where(absolute, 1.0, t)
    return ErrorSeries((X - t) / denom, absolute)


def oscillation_metric(history, tail: float = 0.5, atol: float = 1e-8) -> int:
    """Sign changes of per-step increments over the last ``tail`` of a trajectory.

    Increments with magnitude at or below ``atol`` are skipped: near a
    converged point the solver leaves sub-tolerance jitter whose sign is
    arbitrary, and that should not count as oscillation. Components are summed.
    """
    X = np.asarray(history, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    start = int(np.floor(X.shape[0] * (1.0 - tail)))
    d = np.diff(X[start:], axis=0)
    total = 0
    for col in d.T:
        s = np.sign(col[np.abs(col) > atol])
        total += int(np.count_nonzero(s[1:] != s[:-1]))
    return total


def steps_to_reach(history, target, tol: float) -> int | None:
    """First step index from which every later state stays within ``tol`` of ``target``."""
    X = np.asarray(history, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    inside = np.linalg.norm(X - as_vector(target, X.shape[1]), axis=1) <= tol
    if not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    return 0 if outside.size == 0 else int(outside[-1]) + 1
