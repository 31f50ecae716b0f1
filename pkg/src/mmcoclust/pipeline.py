"""Spectral co-clustering detectors for overlapping communities.

``cspdsos`` runs the debiased sum-of-squares aggregation, the leading
eigenvectors of each side, successive projection and membership
reconstruction. ``ideal_cspdsos`` runs the same stages on the population
aggregates, and ``baseline_detect`` swaps in the plain sum of adjacency
matrices (``cspsum``) or the sum of squares without debiasing (``cspsos``).

Detectors return columns in the order SPA picked the vertices; aligning to a
reference labelling is left to :mod:`mmcoclust.metrics`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .aggregation import (
    AggregationPair,
    baseline_aggregation,
    debiased_aggregation,
    layer_degrees,
    population_aggregation,
)
from .model import AdjacencyStack, ExpectationStack, Membership
from .spectral import EigenBasis, leading_eigenvectors, leading_singular_vectors
from .vertex_hunting import VertexSet, spa

COND_LIMIT = 1e12
DEGENERATE_TOL = 1e-12
METHODS = ("cspdsos", "cspsos", "cspsum")

Eigensolver = Callable[[np.ndarray, int], EigenBasis]


class DetectionError(RuntimeError):
    """A pipeline stage failed on one side (``row`` or ``column``)."""

    def __init__(self, side: str, stage: str, cause: Exception):
        super().__init__(f"{side} side, {stage} stage: {cause}")
        self.side = side
        self.stage = stage
        self.cause = cause


class SingularVertexError(ValueError):
    def __init__(self, cond: float):
        super().__init__(f"vertex submatrix condition number {cond:.3e} exceeds {COND_LIMIT:.0e}")
        self.cond = cond


@dataclass(frozen=True)
class DetectionResult:
    pi_r_hat: Membership
    pi_c_hat: Membership
    vertices_r: VertexSet
    vertices_c: VertexSet
    spectrum_r: EigenBasis
    spectrum_c: EigenBasis
    method: str = "cspdsos"
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.pi_r_hat.n

    @property
    def K(self) -> int:
        return self.pi_r_hat.K


def reconstruct_membership(U, vertices: VertexSet, *, with_diagnostics: bool = False):
    """Memberships from an eigenvector matrix and its vertex rows.

    ``Y = max(0, U @ inv(U[vertices]))`` followed by l1 normalisation of
    each row. Rows whose clipped sum is below ``DEGENERATE_TOL`` become the
    uniform vector.
    """
    U = np.asarray(U, dtype=np.float64)
    idx = list(vertices.indices) if isinstance(vertices, VertexSet) else [int(i) for i in vertices]
    K = U.shape[1]
    if len(idx) != K:
        raise ValueError(f"need {K} vertex rows, got {len(idx)}")
    V = U[idx]
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularVertexError(cond)
    # Y V = U  <=>  V' Y' = U'
    Y = np.linalg.solve(V.T, U.T).T
    clipped = int(np.count_nonzero(Y < 0))
    Y = np.maximum(Y, 0.0)
    sums = Y.sum(axis=1)
    degenerate = sums < DEGENERATE_TOL
    Y[degenerate] = 1.0 / K
    sums[degenerate] = 1.0
    Y /= sums[:, None]
    # clear the 1-ulp excess that division can leave above 1
    np.clip(Y, 0.0, 1.0, out=Y)
    pi = Membership(Y)
    if with_diagnostics:
        return pi, {"cond": cond, "clipped": clipped, "degenerate": int(degenerate.sum())}
    return pi


def _side(basis: EigenBasis, K: int, side: str):
    try:
        vs = spa(basis.U, K)
    except Exception as exc:
        raise DetectionError(side, "vertex hunting", exc) from exc
    try:
        pi, diag = reconstruct_membership(basis.U, vs, with_diagnostics=True)
    except Exception as exc:
        raise DetectionError(side, "membership reconstruction", exc) from exc
    return pi, vs, diag


def _eigen(S, K: int, side: str, eigensolver: Optional[Eigensolver]) -> EigenBasis:
    solve = eigensolver or leading_eigenvectors
    try:
        return solve(S, K)
    except Exception as exc:
        raise DetectionError(side, "eigendecomposition", exc) from exc


def detect_from_bases(basis_r: EigenBasis, basis_c: EigenBasis, K: int, method: str = "cspdsos",
                      diagnostics: Optional[dict] = None) -> DetectionResult:
    """Vertex hunting and membership reconstruction on both sides."""
    pi_r, vs_r, d_r = _side(basis_r, K, "row")
    pi_c, vs_c, d_c = _side(basis_c, K, "column")
    diag = dict(diagnostics or {})
    for name, d, basis in (("row", d_r, basis_r), ("col", d_c, basis_c)):
        diag[f"{name}_vertex_cond"] = d["cond"]
        diag[f"{name}_clipped"] = d["clipped"]
        diag[f"{name}_degenerate_rows"] = d["degenerate"]
        diag[f"{name}_gap_degenerate"] = int(basis.gap_degenerate)
    return DetectionResult(pi_r, pi_c, vs_r, vs_c, basis_r, basis_c, method, diag)


def detect_from_aggregation(pair: AggregationPair, K: int, method: str = "cspdsos",
                            eigensolver: Optional[Eigensolver] = None,
                            diagnostics: Optional[dict] = None) -> DetectionResult:
    basis_r = _eigen(pair.S_row, K, "row", eigensolver)
    basis_c = _eigen(pair.S_col, K, "column", eigensolver)
    return detect_from_bases(basis_r, basis_c, K, method, diagnostics)


def _check_inputs(A, K: int) -> AdjacencyStack:
    if not isinstance(A, AdjacencyStack):
        A = AdjacencyStack.from_dense(A)
    if K < 1:
        raise ValueError(f"K must be positive, got {K}")
    if K > A.n:
        raise ValueError(f"K={K} exceeds the node count {A.n}")
    return A


def _degree_diagnostics(A: AdjacencyStack) -> dict:
    out_tot = np.zeros(A.n, dtype=np.int64)
    in_tot = np.zeros(A.n, dtype=np.int64)
    for layer in A.layers:
        d = layer_degrees(layer)
        out_tot += d.out_deg
        in_tot += d.in_deg
    return {
        "zero_out_degree": int(np.count_nonzero(out_tot == 0)),
        "zero_in_degree": int(np.count_nonzero(in_tot == 0)),
        "isolated": int(np.count_nonzero((out_tot == 0) & (in_tot == 0))),
    }


def cspdsos(A, K: int, *, eigensolver: Optional[Eigensolver] = None) -> DetectionResult:
    """Estimate row and column memberships from an adjacency stack.

    Parameters
    ----------
    A : AdjacencyStack or array_like of shape (L, n, n)
    K : int
        Number of communities on each side.
    eigensolver : callable, optional
        Replacement for :func:`~mmcoclust.spectral.leading_eigenvectors`
        with the same ``(S, K) -> EigenBasis`` signature.
    """
    A = _check_inputs(A, K)
    return detect_from_aggregation(debiased_aggregation(A), K, "cspdsos", eigensolver, _degree_diagnostics(A))


def ideal_cspdsos(omega, K: int) -> DetectionResult:
    """Same stages as :func:`cspdsos` applied to the population aggregates."""
    if not isinstance(omega, ExpectationStack):
        omega = ExpectationStack(omega)
    if K < 1 or K > omega.n:
        raise ValueError(f"K={K} must lie in [1, {omega.n}]")
    return detect_from_aggregation(population_aggregation(omega), K, "ideal")


def baseline_detect(A, K: int, method: str, *, eigensolver: Optional[Eigensolver] = None) -> DetectionResult:
    """Comparison methods ``cspsum`` and ``cspsos``."""
    A = _check_inputs(A, K)
    diag = _degree_diagnostics(A)
    if method == "cspsos":
        return detect_from_aggregation(baseline_aggregation(A, "sos"), K, method, eigensolver, diag)
    if method == "cspsum":
        M = baseline_aggregation(A, "sum")
        try:
            left, right = leading_singular_vectors(M, K)
        except Exception as exc:
            raise DetectionError("row", "singular vectors", exc) from exc
        return detect_from_bases(left, right, K, method, diag)
    raise ValueError(f"unknown baseline method {method!r}; expected 'cspsum' or 'cspsos'")


def detect(A, K: int, method: str = "cspdsos", **kwargs) -> DetectionResult:
    if method == "cspdsos":
        return cspdsos(A, K, **kwargs)
    return baseline_detect(A, K, method, **kwargs)
