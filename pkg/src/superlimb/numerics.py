"""Dense linear-algebra kernels used by the rest of the library.

Thin, contract-checked wrappers around LAPACK (via numpy): full QR with a
fixed sign convention, SVD pseudo-inverse, the inertia-weighted
(dynamically consistent) pseudo-inverse, finite-difference derivatives and
a positive-semidefiniteness test.  Everything operates on plain float
ndarrays; all functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFinite,
    NotSymmetric,
    RankDeficient,
    SingularWeight,
)

#: relative threshold below which a QR diagonal entry counts as zero
QR_RANK_RTOL = 1e-10
#: factor applied to max(n, k) * sigma_max when truncating singular values
SVD_CUTOFF_FACTOR = 1e-12
#: condition-number bound beyond which a weighted Gram matrix is singular
GRAM_COND_MAX = 1e12


def _as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return a


def _as_vector(v, name: str = "vector") -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return a


@dataclass(frozen=True)
class QrFactorization:
    """Full QR factorization m = q @ [[r], [0]].

    q is n-by-n orthogonal, r is the k-by-k upper-triangular block with a
    non-negative diagonal, so the factorization is unique for full-rank
    input.
    """

    q: np.ndarray
    r: np.ndarray
    n: int
    k: int


def qr_full(m) -> QrFactorization:
    """Full (complete) QR factorization of an n-by-k matrix, n >= k >= 1.

    Raises RankDeficient when the smallest |r_ii| falls below
    ``QR_RANK_RTOL`` times the largest, i.e. the columns of ``m`` are not
    numerically independent.
    """
    a = _as_matrix(m, "m")
    n, k = a.shape
    if not (n >= k >= 1):
        raise DimensionMismatch(f"need n >= k >= 1, got shape {a.shape}")
    q, r_full = np.linalg.qr(a, mode="complete")
    # fix the sign convention: make every diagonal entry of R non-negative
    diag = np.diag(r_full[:k, :])
    flip = np.where(diag < 0.0, -1.0, 1.0)
    q = q.copy()
    r_full = r_full.copy()
    q[:, :k] *= flip[np.newaxis, :]
    r_full[:k, :] *= flip[:, np.newaxis]
    r = r_full[:k, :k]
    d = np.abs(np.diag(r))
    if d.min() < QR_RANK_RTOL * max(d.max(), np.finfo(float).tiny):
        raise RankDeficient(
            f"matrix rank < {k}: |r_ii| range [{d.min():.3e}, {d.max():.3e}]"
        )
    return QrFactorization(q=q, r=r, n=n, k=k)


def svd_pinv(m) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values sigma_i <= max(n, k) * sigma_max * 1e-12 are truncated
    to zero, so an (effectively) zero matrix maps to the zero matrix of the
    transposed shape.
    """
    a = _as_matrix(m, "m")
    if a.size == 0:
        return np.zeros(a.shape[::-1])
    return np.linalg.pinv(a, rcond=max(a.shape) * SVD_CUTOFF_FACTOR)


def dyn_consistent_pinv(w, a) -> np.ndarray:
    """Inertia-weighted right pseudo-inverse  a^-1 w^T (w a^-1 w^T)^-1.

    ``w`` is k-by-n with full row rank, ``a`` an n-by-n symmetric positive
    definite weight (the joint-space inertia).  The result X satisfies
    w @ X = I_k and picks, among all right inverses, the one whose range is
    orthogonal to null(w) in the metric induced by ``a``.

    Raises SingularWeight if ``a`` is not SPD and RankDeficient if the
    weighted Gram matrix w a^-1 w^T is (numerically) singular.
    """
    wm = _as_matrix(w, "w")
    am = _as_matrix(a, "a")
    k, n = wm.shape
    if am.shape != (n, n):
        raise DimensionMismatch(f"weight must be {n}x{n}, got {am.shape}")
    asym = 0.5 * (am + am.T)
    if np.max(np.abs(am - am.T)) > 1e-9 * (1.0 + np.max(np.abs(am))):
        raise SingularWeight("weight matrix is not symmetric")
    try:
        chol = np.linalg.cholesky(asym) if n else asym
    except np.linalg.LinAlgError as exc:
        raise SingularWeight("weight matrix is not positive definite") from exc
    if k == 0:
        return np.zeros((n, 0))
    # X = A^-1 W^T via two triangular solves
    from scipy.linalg import cho_solve

    x = cho_solve((chol, True), wm.T)
    gram = wm @ x
    gram = 0.5 * (gram + gram.T)
    if np.linalg.cond(gram) > GRAM_COND_MAX:
        raise RankDeficient("w a^-1 w^T is numerically singular")
    return x @ np.linalg.inv(gram)


def default_fd_step(p0: np.ndarray) -> np.ndarray:
    """Per-coordinate central-difference step 1e-4 * (1 + |p0_i|)."""
    return 1e-4 * (1.0 + np.abs(np.asarray(p0, dtype=float)))


def finite_diff_jacobian(f: Callable, p0, step=None) -> np.ndarray:
    """Central-difference Jacobian of a vector map f: R^n -> R^m at p0."""
    p = _as_vector(p0, "p0")
    h = default_fd_step(p) if step is None else np.broadcast_to(
        np.asarray(step, dtype=float), p.shape
    )
    f0 = np.atleast_1d(np.asarray(f(p), dtype=float))
    jac = np.zeros((f0.size, p.size))
    for i in range(p.size):
        dp = np.zeros_like(p)
        dp[i] = h[i]
        fp = np.atleast_1d(np.asarray(f(p + dp), dtype=float))
        fm = np.atleast_1d(np.asarray(f(p - dp), dtype=float))
        jac[:, i] = (fp - fm) / (2.0 * h[i])
    if not np.all(np.isfinite(jac)):
        raise NonFinite("map returned NaN/Inf during differentiation")
    return jac


def finite_diff_hessian(f: Callable, p0, step=None) -> np.ndarray:
    """Symmetrized central-difference Hessian of a scalar map at p0.

    The default step is 1e-4 * (1 + |p0_i|) per coordinate.  Raises
    NonFinite if any function evaluation is NaN or Inf.
    """
    p = _as_vector(p0, "p0")
    m = p.size
    h = default_fd_step(p) if step is None else np.broadcast_to(
        np.asarray(step, dtype=float), p.shape
    )

    def ev(dp):
        v = float(f(p + dp))
        if not np.isfinite(v):
            raise NonFinite("function returned NaN/Inf during differentiation")
        return v

    hess = np.zeros((m, m))
    f0 = ev(np.zeros_like(p))
    for i in range(m):
        ei = np.zeros_like(p)
        ei[i] = h[i]
        hess[i, i] = (ev(ei) - 2.0 * f0 + ev(-ei)) / (h[i] * h[i])
        for j in range(i + 1, m):
            ej = np.zeros_like(p)
            ej[j] = h[j]
            val = (ev(ei + ej) - ev(ei - ej) - ev(-ei + ej) + ev(-ei - ej)) / (
                4.0 * h[i] * h[j]
            )
            hess[i, j] = val
            hess[j, i] = val
    return 0.5 * (hess + hess.T)


def psd_check(m, tol: float) -> tuple[bool, float]:
    """Test a symmetric matrix for positive semidefiniteness.

    Returns (is_psd, min_eigenvalue).  The input is symmetrized first; if
    the asymmetry exceeds ``tol`` (inf-norm) NotSymmetric is raised.  The
    verdict is min_eigenvalue >= -tol.
    """
    a = _as_matrix(m, "m")
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    if float(tol) < 0.0:
        raise ValueError("tol must be >= 0")
    if a.size == 0:
        return True, 0.0
    if np.max(np.abs(a - a.T)) > tol:
        raise NotSymmetric(
            f"asymmetry {np.max(np.abs(a - a.T)):.3e} exceeds tol {tol:.3e}"
        )
    sym = 0.5 * (a + a.T)
    eigs = np.linalg.eigvalsh(sym)
    min_eig = float(eigs[0])
    return min_eig >= -float(tol), min_eig
