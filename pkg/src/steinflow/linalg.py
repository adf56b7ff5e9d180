"""Dense symmetric linear algebra: Cholesky, CG, and a Jacobi eigensolver.

The Cholesky factorization and the row-cyclic Jacobi sweeps are compiled
with numba: at the ensemble sizes this package targets, LAPACK wall time
is dominated by fixed call overhead, which hides the cubic cost profile
the solver benchmarks are meant to expose. The compiled loops keep a
clean O(n^3) scaling and a deterministic operation order.
"""

from dataclasses import dataclass

import numba
import numpy as np

from ._validation import check_square
from .errors import MaxIterExceededError, NotSPDError

SYM_EIGEN_CAP = 2000


@dataclass(frozen=True)
class SolveConfig:
    """How to apply the inverse of an SPD matrix.

    method: "cholesky" (exact) or "cg" (iterative, per-column tolerance
    tol relative to ||b||, optionally Jacobi-preconditioned).
    """

    method: str = "cholesky"
    tol: float = 1e-10
    max_iter: int = 1000
    jacobi_precondition: bool = False

    def __post_init__(self):
        if self.method not in ("cholesky", "cg"):
            raise ValueError(f"unknown solve method {self.method!r}")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@numba.njit(cache=True, nogil=True)
def _chol(a, scale, shift):
    # factor scale * a + shift * I, reading a's lower triangle on the fly
    n = a.shape[0]
    low = np.zeros((n, n))
    for j in range(n):
        s = scale * a[j, j] + shift
        for k in range(j):
            s -= low[j, k] * low[j, k]
        if s <= 0.0:
            return low, j
        low[j, j] = np.sqrt(s)
        for i in range(j + 1, n):
            t = scale * a[i, j]
            for k in range(j):
                t -= low[i, k] * low[j, k]
            low[i, j] = t / low[j, j]
    return low, -1


@numba.njit(cache=True, nogil=True)
def _solve_tri(low, b):
    # low @ y = b followed by low.T @ x = y, for each column of b
    n, m = b.shape
    x = b.copy()
    for c in range(m):
        for i in range(n):
            s = x[i, c]
            for k in range(i):
                s -= low[i, k] * x[k, c]
            x[i, c] = s / low[i, i]
        for i in range(n - 1, -1, -1):
            s = x[i, c]
            for k in range(i + 1, n):
                s -= low[k, i] * x[k, c]
            x[i, c] = s / low[i, i]
    return x


@numba.njit(cache=True, nogil=True)
def _jacobi(a, rel_tol, max_sweeps):
    n = a.shape[0]
    m = a.copy()
    vec = np.eye(n)
    norm = 0.0
    for i in range(n):
        for j in range(n):
            norm += m[i, j] * m[i, j]
    norm = np.sqrt(norm)
    if norm == 0.0:
        return np.diag(m), vec, True
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * m[i, j] * m[i, j]
        if np.sqrt(off) <= rel_tol * norm:
            return np.diag(m).copy(), vec, True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if apq == 0.0:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    mkp = m[k, p]
                    mkq = m[k, q]
                    m[k, p] = c * mkp - s * mkq
                    m[k, q] = s * mkp + c * mkq
                for k in range(n):
                    mpk = m[p, k]
                    mqk = m[q, k]
                    m[p, k] = c * mpk - s * mqk
                    m[q, k] = s * mpk + c * mqk
                for k in range(n):
                    vkp = vec[k, p]
                    vkq = vec[k, q]
                    vec[k, p] = c * vkp - s * vkq
                    vec[k, q] = s * vkp + c * vkq
    return np.diag(m).copy(), vec, False


def cholesky(a) -> np.ndarray:
    """Lower-triangular L with L L' = a; raises NotSPDError(pivot) otherwise."""
    a = check_square(a)
    low, fail = _chol(np.ascontiguousarray(a), 1.0, 0.0)
    if fail >= 0:
        raise NotSPDError(fail)
    return low


def _solve_cg(a, scale, shift, b, tol, max_iter, precondition):
    # matrix-vector products against scale * a + shift * I, never materialized
    def matvec(p):
        out = a @ p
        if scale != 1.0:
            out *= scale
        if shift != 0.0:
            out += shift * p
        return out

    m = b.shape[1]
    x = np.zeros_like(b)
    r = b.copy()
    inv_diag = None
    if precondition:
        diag = scale * np.diag(a) + shift
        if np.any(diag <= 0.0):
            raise NotSPDError(int(np.argmax(diag <= 0.0)))
        inv_diag = 1.0 / diag
    z = r * inv_diag[:, None] if precondition else r
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    b_norm = np.maximum(np.sqrt(np.einsum("ij,ij->j", b, b)), np.finfo(float).tiny)
    active = np.ones(m, dtype=bool)
    for _ in range(max_iter):
        res = np.sqrt(np.einsum("ij,ij->j", r, r)) / b_norm
        active = res > tol
        if not active.any():
            return x
        ap = matvec(p)
        pap = np.einsum("ij,ij->j", p, ap)
        alpha = np.where(active & (pap > 0.0), rz / np.where(pap == 0.0, 1.0, pap), 0.0)
        x += alpha * p
        r -= alpha * ap
        z = r * inv_diag[:, None] if precondition else r
        rz_new = np.einsum("ij,ij->j", r, z)
        beta = np.where(active, rz_new / np.where(rz == 0.0, 1.0, rz), 0.0)
        p = z + beta * p
        rz = rz_new
    res = np.sqrt(np.einsum("ij,ij->j", r, r)) / b_norm
    if res.max() > tol:
        raise MaxIterExceededError(float(res.max()), max_iter)
    return x


def solve_regularized(a, scale: float, shift: float, b,
                      cfg: SolveConfig = SolveConfig()) -> np.ndarray:
    """Solve (scale * a + shift * I) x = b without materializing the system.

    The Cholesky path factors the shifted matrix in one compiled pass over
    a's lower triangle; the CG path applies it as an operator.
    """
    a = check_square(a)
    b_arr = np.asarray(b, dtype=np.float64)
    squeeze = b_arr.ndim == 1
    if squeeze:
        b_arr = b_arr[:, None]
    if b_arr.shape[0] != a.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} vs {b_arr.shape}")
    if cfg.method == "cholesky":
        low, fail = _chol(np.ascontiguousarray(a), scale, shift)
        if fail >= 0:
            raise NotSPDError(fail)
        x = _solve_tri(low, np.ascontiguousarray(b_arr))
    else:
        x = _solve_cg(a, scale, shift, b_arr, cfg.tol, cfg.max_iter,
                      cfg.jacobi_precondition)
    return x[:, 0] if squeeze else x


def solve_spd(a, b, cfg: SolveConfig = SolveConfig()) -> np.ndarray:
    """Solve a x = b for SPD a and one or more right-hand-side columns."""
    return solve_regularized(a, 1.0, 0.0, b, cfg)


def sym_eigen(a, cap: int = SYM_EIGEN_CAP):
    """Eigenvalues (ascending) and orthonormal eigenvectors by cyclic Jacobi."""
    a = check_square(a)
    if a.shape[0] > cap:
        raise ValueError(f"matrix order {a.shape[0]} exceeds the eigensolver cap {cap}")
    vals, vecs, converged = _jacobi(np.ascontiguousarray(a), 1e-12, 100)
    if not converged:
        raise RuntimeError("Jacobi sweeps did not converge")
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]
