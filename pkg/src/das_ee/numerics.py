"""Small Hermitian linear-algebra kernel used by the covariance solvers.

Matrices are plain complex ``numpy`` arrays. Every routine symmetrizes its
Hermitian input before factorizing it so roundoff picked up across solver
iterations does not leak into the eigenvectors.
"""

from __future__ import annotations

import numpy as np

DEFAULT_RANK_TOL = 1e-10


class NotPSDError(ValueError):
    """Raised when a matrix that must be positive semidefinite is not."""


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """Return ``(A + A^H) / 2``."""
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def _require_square(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")


def hermitian_evd(a, rank_tol: float = DEFAULT_RANK_TOL):
    """Thin eigendecomposition of a Hermitian PSD matrix.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Hermitian positive semidefinite matrix.
    rank_tol : float
        Eigenvalues at or below ``rank_tol * max_eigenvalue`` are dropped.
        An eigenvalue below ``-rank_tol * max_eigenvalue`` means the input is
        not PSD.

    Returns
    -------
    u : ndarray, shape (n, r)
        Orthonormal eigenvectors of the retained eigenvalues.
    d : ndarray, shape (r,)
        Retained eigenvalues, sorted in descending order.
    """
    a = np.asarray(a, dtype=complex)
    _require_square(a)
    if rank_tol < 0:
        raise ValueError("rank_tol must be nonnegative")
    w, v = np.linalg.eigh(hermitian_part(a))
    top = w[-1] if w.size else 0.0
    if top <= 0.0:
        # zero matrix (or negative definite, caught below)
        if w.size and w[0] < -rank_tol * max(1.0, np.abs(a).max()):
            raise NotPSDError(f"smallest eigenvalue {w[0]:.3e} is negative")
        return np.zeros((a.shape[0], 0), dtype=complex), np.zeros(0)
    if w[0] < -rank_tol * top:
        raise NotPSDError(f"smallest eigenvalue {w[0]:.3e} is negative")
    keep = w > rank_tol * top
    return v[:, keep][:, ::-1], w[keep][::-1]


def is_psd(a, tol: float = 1e-9) -> bool:
    """True iff the smallest eigenvalue of ``a`` is >= ``-tol * max(1, max|a|)``."""
    a = np.asarray(a, dtype=complex)
    _require_square(a)
    if a.size == 0:
        return True
    w = np.linalg.eigvalsh(hermitian_part(a))
    return bool(w[0] >= -tol * max(1.0, np.abs(a).max()))


def log_det_rate(h, q, psd_tol: float = 1e-9) -> float:
    """Spectral efficiency ``log2 |I + H Q H^H|`` in bit/s/Hz."""
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    q = np.atleast_2d(np.asarray(q, dtype=complex))
    _require_square(q)
    if h.shape[1] != q.shape[0]:
        raise ValueError(f"H is {h.shape} but Q is {q.shape}")
    if not is_psd(q, psd_tol):
        raise NotPSDError("covariance is not positive semidefinite")
    gram = hermitian_part(h @ q @ h.conj().T)
    # eigenvalue form stays >= 0 where slogdet could return -1e-17
    w = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
    return float(np.sum(np.log1p(w)) / np.log(2.0))


def gram_evd(g: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL):
    """Eigenpairs of ``G^H G`` computed through the smaller ``G G^H``.

    For ``G`` of shape (N, M) with N << M only an N x N factorization is
    needed. Returns ``(u, d)`` with ``u`` of shape (M, r) orthonormal and
    ``G^H G = u diag(d) u^H`` up to the rank cut.
    """
    small, d = hermitian_evd(g @ g.conj().T, rank_tol)
    if d.size == 0:
        return np.zeros((g.shape[1], 0), dtype=complex), d
    u = (g.conj().T @ small) / np.sqrt(d)
    return u, d
