"""Leading eigenvectors of symmetric matrices, ordered by eigenvalue magnitude."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

DENSE_LIMIT = 4096
SYMMETRY_TOL = 1e-10
RESIDUAL_TOL = 1e-10
GAP_TOL = 1e-10


class SpectralError(RuntimeError):
    pass


class ConvergenceError(SpectralError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


class GapWarning(UserWarning):
    """|lambda_K| and |lambda_{K+1}| coincide, so the subspace is ill-defined."""


@dataclass(frozen=True)
class EigenBasis:
    U: np.ndarray
    lam: np.ndarray
    residual: float = 0.0
    gap_degenerate: bool = False

    @property
    def K(self) -> int:
        return self.U.shape[1]


def fix_signs(U: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive.

    ``np.argmax`` returns the first maximiser, which breaks ties by the
    smallest row index.
    """
    U = np.array(U, dtype=float, copy=True)
    if U.size == 0:
        return U
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def _residual(S, U, lam) -> float:
    R = S @ U - U * lam
    return float(np.max(np.linalg.norm(R, axis=0))) if U.size else 0.0


def leading_eigenvectors(S, K: int, *, method: str = "auto", tol: float = RESIDUAL_TOL) -> EigenBasis:
    """Top-``K`` eigenpairs of a symmetric matrix by decreasing ``|lambda|``.

    Parameters
    ----------
    S : array_like, shape (n, n)
        Symmetric matrix. Integer input is converted to float64.
    K : int
        Number of eigenpairs, ``1 <= K <= n``.
    method : {"auto", "dense", "lanczos"}
        ``auto`` uses a dense solver up to ``DENSE_LIMIT`` rows and ARPACK's
        implicitly restarted Lanczos iteration beyond.
    tol : float
        Relative residual bound: every column must satisfy
        ``||S u - lam u|| <= tol * ||S||_F``.

    Returns
    -------
    EigenBasis
        Orthonormal ``U`` with the sign convention of :func:`fix_signs`.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise SpectralError(f"expected a square matrix, got shape {S.shape}")
    n = S.shape[0]
    if not (1 <= K <= n):
        raise SpectralError(f"K={K} must satisfy 1 <= K <= n={n}")
    scale = np.linalg.norm(S)
    asym = np.max(np.abs(S - S.T)) if n else 0.0
    if asym > SYMMETRY_TOL * max(scale, 1.0):
        raise SpectralError(f"matrix is not symmetric (max asymmetry {asym:.3e})")

    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "lanczos"

    if method == "dense":
        w, V = scipy.linalg.eigh(S)
        order = np.argsort(-np.abs(w), kind="stable")
        lam_all = w[order]
        lam, U = lam_all[:K], V[:, order[:K]]
        next_lam = lam_all[K] if K < n else None
    elif method == "lanczos":
        k = min(K + 1, n - 1)
        if k < K:
            return leading_eigenvectors(S, K, method="dense", tol=tol)
        try:
            w, V = spla.eigsh(S, k=k, which="LM", tol=tol * 1e-2)
        except spla.ArpackNoConvergence as exc:
            got = exc.eigenvalues
            res = _residual(S, exc.eigenvectors, got) / max(scale, 1e-300) if got.size else np.inf
            raise ConvergenceError("Lanczos iteration did not converge", res) from exc
        order = np.argsort(-np.abs(w), kind="stable")
        lam, U = w[order[:K]], V[:, order[:K]]
        next_lam = w[order[K]] if k > K else None
        # refine orthonormality lost to the iteration
        U, _ = np.linalg.qr(U)
        lam = np.einsum("ij,ij->j", U, S @ U)
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")

    U = fix_signs(U)
    res = _residual(S, U, lam)
    if scale > 0 and res > tol * scale and method == "lanczos":
        raise ConvergenceError("eigenvector residual above tolerance", res / scale)

    degenerate = False
    if next_lam is not None and abs(abs(lam[-1]) - abs(next_lam)) <= GAP_TOL * max(abs(lam[0]), 1e-300):
        degenerate = True
        warnings.warn(
            f"|lambda_{K}| = {abs(lam[-1]):.6g} and |lambda_{K + 1}| = {abs(next_lam):.6g} coincide; "
            "the leading subspace is not uniquely defined",
            GapWarning,
            stacklevel=2,
        )
    return EigenBasis(U, lam, residual=res, gap_degenerate=degenerate)


def leading_singular_vectors(M, K: int, *, method: str = "auto"):
    """Left and right top-``K`` singular vectors of an asymmetric matrix.

    Computed as eigenvectors of the Gram matrices ``M M'`` and ``M' M``;
    this is only meant to serve the sum-of-adjacency comparison method.
    """
    M = np.asarray(M, dtype=np.float64)
    left = leading_eigenvectors(M @ M.T, K, method=method)
    right = leading_eigenvectors(M.T @ M, K, method=method)
    return left, right
