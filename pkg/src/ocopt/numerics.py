"""Small dense linear algebra helpers and finite-difference derivatives."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class FiniteDifferenceError(ArithmeticError):
    """Raised when a finite-difference probe evaluates to a nonfinite value."""

    def __init__(self, point, value):
        self.point = np.array(point, dtype=float)
        self.value = value
        super().__init__(f"nonfinite objective value {value!r} at probe point {self.point.tolist()}")


class SPDCheck(NamedTuple):
    ok: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


ASYMMETRIC = "asymmetric"
NOT_POSITIVE_DEFINITE = "not positive definite"


def as_vector(x, dim: int | None = None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise ValueError(f"expected a vector of length {dim}, got {v.size}")
    return v


def as_matrix(M, dim: int | None = None) -> np.ndarray:
    """Coerce a scalar, 1-D diagonal or 2-D array into a square float matrix.

    A scalar becomes ``M * I`` when ``dim`` is given (1x1 otherwise).
    """
    A = np.asarray(M, dtype=float)
    if A.ndim == 0:
        A = float(A) * np.eye(dim or 1)
    elif A.ndim == 1:
        A = np.diag(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if dim is not None and A.shape[0] != dim:
        raise ValueError(f"expected a {dim}x{dim} matrix, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has nonfinite entries")
    return A


def spd_check(M, sym_tol: float = 1e-12) -> SPDCheck:
    """Check that ``M`` is symmetric (within ``sym_tol``) and positive definite.

    Positive definiteness is decided by a Cholesky factorization of the
    symmetrized matrix; the failure reason distinguishes the two cases.
    """
    A = as_matrix(M)
    if np.max(np.abs(A - A.T), initial=0.0) > sym_tol:
        return SPDCheck(False, ASYMMETRIC)
    try:
        L = np.linalg.cholesky(0.5 * (A + A.T))
    except np.linalg.LinAlgError:
        return SPDCheck(False, NOT_POSITIVE_DEFINITE)
    if not np.all(np.diag(L) > 0.0):
        return SPDCheck(False, NOT_POSITIVE_DEFINITE)
    return SPDCheck(True)


class SPDSolver:
    """Applies ``M^{-1}`` through a cached Cholesky factorization."""

    def __init__(self, M, sym_tol: float = 1e-12):
        A = as_matrix(M)
        check = spd_check(A, sym_tol)
        if not check:
            raise ValueError(f"matrix is {check.reason}")
        self.matrix = 0.5 * (A + A.T)
        self._factor = cho_factor(self.matrix, lower=True)

    def solve(self, b) -> np.ndarray:
        """Solve ``M y = b``; ``b`` may be (n,) or a stack of row vectors (m, n)."""
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            return cho_solve(self._factor, b)
        return cho_solve(self._factor, b.T).T

    def inverse_norm(self) -> float:
        """Spectral norm of ``M^{-1}`` (1 / smallest eigenvalue)."""
        return 1.0 / float(np.linalg.eigvalsh(self.matrix)[0])


def default_step(x) -> float:
    return 1e-6 * max(1.0, float(np.max(np.abs(x), initial=0.0)))


def _probe(f: Callable, p: np.ndarray) -> float:
    v = float(f(p))
    if not np.isfinite(v):
        raise FiniteDifferenceError(p, v)
    return v


def central_diff_grad(f: Callable, x, h: float | None = None) -> np.ndarray:
    """Central-difference gradient ``(f(x + h e_i) - f(x - h e_i)) / 2h``."""
    x = as_vector(x)
    if h is None:
        h = default_step(x)
    if not h > 0:
        raise ValueError("step h must be positive")
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (_probe(f, x + e) - _probe(f, x - e)) / (2.0 * h)
    return g


def central_diff_hess(f: Callable, x, h: float | None = None) -> np.ndarray:
    """Second-order central-difference Hessian, symmetrized as ``(H + H^T) / 2``.

    Diagonal entries use the three-point stencil, off-diagonal entries the
    four-point cross stencil. The default step is larger than for gradients
    (``1e-4`` scaled) since the stencil divides by ``h**2``.
    """
    x = as_vector(x)
    if h is None:
        h = 1e-4 * max(1.0, float(np.max(np.abs(x), initial=0.0)))
    if not h > 0:
        raise ValueError("step h must be positive")
    n = x.size
    H = np.empty((n, n))
    f0 = _probe(f, x)
    eye = np.eye(n) * h
    for i in range(n):
        H[i, i] = (_probe(f, x + eye[i]) - 2.0 * f0 + _probe(f, x - eye[i])) / h**2
        for j in range(i + 1, n):
            fpp = _probe(f, x + eye[i] + eye[j])
            fpm = _probe(f, x + eye[i] - eye[j])
            fmp = _probe(f, x - eye[i] + eye[j])
            fmm = _probe(f, x - eye[i] - eye[j])
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
    return 0.5 * (H + H.T)
