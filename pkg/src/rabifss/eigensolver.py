"""Dense symmetric eigensolver written in-repo.

Householder tridiagonalization followed by implicit-shift QL iteration.
`ground_state` computes the full eigenvalue spectrum, surfaces only the
minimum, and recovers its eigenvector by inverse iteration on the
tridiagonal form; `spectrum` accumulates all eigenvectors.  Both paths
are deterministic: two calls on the same matrix give bitwise-identical
results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimensionError, NotSymmetricError, NumericalError
from .operators import TruncatedOperator

_EPS = float(np.finfo(np.float64).eps)
_MAX_QL_SWEEPS = 64


@dataclass(frozen=True)
class GroundSolution:
    """Lowest eigenpair of a symmetric matrix plus its residual norm."""

    energy: float
    vector: np.ndarray = field(repr=False)
    residual: float

    def __post_init__(self):
        v = np.ascontiguousarray(self.vector, dtype=np.float64)
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)


def _as_matrix(h) -> np.ndarray:
    if isinstance(h, TruncatedOperator):
        return h.entries
    return np.asarray(h, dtype=np.float64)


def _check_symmetric(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        raise InvalidDimensionError("matrix must have at least one row")
    hmax = np.max(np.abs(a)) if a.size else 0.0
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > 1e-12 * hmax:
        raise NotSymmetricError(
            f"matrix is not symmetric: max asymmetry {asym:.3e} exceeds 1e-12 * {hmax:.3e}"
        )


def _tridiagonalize(a: np.ndarray):
    """Reduce symmetric a (destroyed) to tridiagonal T with A = Q T Q^T."""
    n = a.shape[0]
    q = np.eye(n)
    e = np.empty(max(n - 1, 0))
    scratch = np.empty((n, n))
    for k in range(n - 2):
        x = a[k + 1 :, k]
        alpha = math.sqrt(float(x @ x))
        if alpha == 0.0:
            e[k] = 0.0
            continue
        if x[0] >= 0.0:
            alpha = -alpha  # sign chosen so u = x - alpha*e1 cannot cancel
        u = x.copy()
        u[0] -= alpha
        beta = 2.0 / float(u @ u)
        b = a[k + 1 :, k + 1 :]
        p = beta * (b @ u)
        w = p - (0.5 * beta * float(u @ p)) * u
        m = n - k - 1
        tmp = scratch[:m, :m]
        np.multiply.outer(u, w, out=tmp)
        b -= tmp
        np.multiply.outer(w, u, out=tmp)
        b -= tmp
        e[k] = alpha
        qsub = q[:, k + 1 :]
        qu = beta * (qsub @ u)
        tmp = scratch[:n, :m]
        np.multiply.outer(qu, u, out=tmp)
        qsub -= tmp
    if n > 1:
        e[n - 2] = a[n - 1, n - 2]
    d = np.diag(a).copy()
    return d, e, q


def _ql_implicit(d_in, e_in, zt: np.ndarray | None):
    """Implicit-shift QL on a tridiagonal; optionally rotate rows of zt.

    Returns eigenvalues in the order QL leaves them (unsorted).  Scalars
    run on python lists: for values-only calls this loop dominates and
    list access is measurably faster than ndarray item access.
    """
    n = len(d_in)
    d = [float(v) for v in d_in]
    ee = [float(v) for v in e_in] + [0.0]
    for low in range(n):
        sweeps = 0
        while True:
            for m in range(low, n - 1):
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= _EPS * dd:
                    break
            else:
                m = n - 1
            if m == low:
                break
            sweeps += 1
            if sweeps > _MAX_QL_SWEEPS:
                raise NumericalError("QL iteration failed to converge")
            g = (d[low + 1] - d[low]) / (2.0 * ee[low])
            r = math.hypot(g, 1.0)
            g = d[m] - d[low] + ee[low] / (g + (r if g >= 0.0 else -r))
            s = c = 1.0
            p = 0.0
            interrupted = False
            for i in range(m - 1, low - 1, -1):
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    interrupted = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if zt is not None:
                    old_hi = zt[i + 1].copy()
                    zt[i + 1] = s * zt[i] + c * old_hi
                    zt[i] = c * zt[i] - s * old_hi
            if interrupted:
                continue
            d[low] -= p
            ee[low] = g
            ee[m] = 0.0
    return np.array(d)


def _solve_shifted_tridiag(d, e, lam: float, rhs: np.ndarray, tiny: float) -> np.ndarray:
    """Solve (T - lam*I) y = rhs by banded LU with partial pivoting."""
    n = len(d)
    diag = [float(v) - lam for v in d]
    lower = [float(v) for v in e]
    upper = [float(v) for v in e]
    u2 = [0.0] * max(n - 2, 0)
    r = [float(v) for v in rhs]
    for i in range(n - 1):
        a11, a12 = diag[i], upper[i]
        a13 = 0.0
        a21, a22 = lower[i], diag[i + 1]
        a23 = upper[i + 1] if i + 1 < n - 1 else 0.0
        r1, r2 = r[i], r[i + 1]
        if abs(a21) > abs(a11):
            a11, a21 = a21, a11
            a12, a22 = a22, a12
            a13, a23 = a23, a13
            r1, r2 = r2, r1
        if a11 == 0.0:
            a11 = tiny
        f = a21 / a11
        a22 -= f * a12
        a23 -= f * a13
        r2 -= f * r1
        diag[i], upper[i] = a11, a12
        if i + 2 < n:
            u2[i] = a13
        diag[i + 1] = a22
        if i + 1 < n - 1:
            upper[i + 1] = a23
        r[i], r[i + 1] = r1, r2
    if diag[n - 1] == 0.0:
        diag[n - 1] = tiny
    y = np.empty(n)
    y[n - 1] = r[n - 1] / diag[n - 1]
    if n > 1:
        y[n - 2] = (r[n - 2] - upper[n - 2] * y[n - 1]) / diag[n - 2]
    for i in range(n - 3, -1, -1):
        y[i] = (r[i] - upper[i] * y[i + 1] - u2[i] * y[i + 2]) / diag[i]
    return y


def _tridiag_ground_vector(d, e, lam: float) -> np.ndarray:
    """Inverse iteration for the eigenvector of lam on tridiagonal (d, e)."""
    n = len(d)
    scale = max(
        float(np.max(np.abs(d))),
        float(np.max(np.abs(e))) if n > 1 else 0.0,
        1.0,
    )
    tiny = _EPS * scale * n
    y = np.full(n, 1.0 / math.sqrt(n))
    for _ in range(3):
        y_new = _solve_shifted_tridiag(d, e, lam, y, tiny)
        norm = float(np.linalg.norm(y_new))
        if norm == 0.0 or not math.isfinite(norm):
            # deterministic fallback start with alternating signs
            y = np.ones(n)
            y[1::2] = -1.0
            y /= math.sqrt(n)
            continue
        y = y_new / norm
    return y


def _apply_sign_convention(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v)))
    if v[idx] < 0.0:
        return -v
    return v


def ground_state(h) -> GroundSolution:
    """Lowest eigenpair of a symmetric matrix.

    The full eigenvalue spectrum is computed; only the minimum is
    surfaced.  For a degenerate ground level the returned vector is the
    deterministic one selected by inverse iteration from a fixed start.
    """
    a = _as_matrix(h)
    _check_symmetric(a)
    n = a.shape[0]
    hmax = float(np.max(np.abs(a))) if a.size else 0.0
    bound = 1e-9 * max(1.0, hmax * n)
    if n == 1:
        return GroundSolution(float(a[0, 0]), np.array([1.0]), 0.0)
    d, e, q = _tridiagonalize(a.copy())
    values = _ql_implicit(d, e, None)
    lam = float(values.min())
    y = _tridiag_ground_vector(d, e, lam)
    v = q @ y
    v /= math.sqrt(float(v @ v))
    v = _apply_sign_convention(v)
    residual = float(np.linalg.norm(a @ v - lam * v))
    if residual > bound:
        # rare: fall back to the full eigenvector path
        lam2, vectors = spectrum(h)
        v = vectors[:, 0]
        lam = float(lam2[0])
        residual = float(np.linalg.norm(a @ v - lam * v))
        if residual > bound:
            raise NumericalError(
                f"eigensolver residual {residual:.3e} exceeds bound {bound:.3e}"
            )
    return GroundSolution(lam, v, residual)


def spectrum(h):
    """All eigenvalues (ascending) and the matching eigenvector columns."""
    a = _as_matrix(h)
    _check_symmetric(a)
    n = a.shape[0]
    if n == 1:
        return np.array([float(a[0, 0])]), np.array([[1.0]])
    d, e, q = _tridiagonalize(a.copy())
    zt = np.ascontiguousarray(q.T)
    values = _ql_implicit(d, e, zt)
    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = zt[order].T.copy()
    for j in range(n):
        vectors[:, j] = _apply_sign_convention(vectors[:, j])
    return values, vectors
