"""Sum-of-squares aggregates of a layer stack.

Sample aggregates are accumulated in ``int64``. Per-layer Gram products of a
binary matrix are integers bounded by ``n``; on the dense path they are
formed with a float64 BLAS product, which is exact for integers below 2**53,
and rounded back to ``int64`` before accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numpy as np
import scipy.sparse as sp

from .model import AdjacencyStack, ExpectationStack, ValidationError

DENSE_THRESHOLD = 0.05
COO_HEADER = "# mmcoclust-coo v1: i j value (1-based)"


@dataclass(frozen=True)
class LayerDegrees:
    out_deg: np.ndarray
    in_deg: np.ndarray


@dataclass(frozen=True)
class AggregationPair:
    """Symmetric row-side and column-side ``n x n`` aggregates."""

    S_row: np.ndarray
    S_col: np.ndarray
    exact_integer: bool = False

    def __post_init__(self):
        for name in ("S_row", "S_col"):
            a = np.array(getattr(self, name), copy=True)
            a.setflags(write=False)
            object.__setattr__(self, name, a)


def layer_degrees(A: sp.csr_matrix) -> LayerDegrees:
    out_deg = np.asarray(A.sum(axis=1, dtype=np.int64)).ravel()
    in_deg = np.asarray(A.sum(axis=0, dtype=np.int64)).ravel()
    return LayerDegrees(out_deg, in_deg)


def _check_stack(A) -> AdjacencyStack:
    if isinstance(A, AdjacencyStack):
        return A
    try:
        return AdjacencyStack.from_dense(A)
    except ValidationError:
        raise
    except Exception as exc:  # pragma: no cover - malformed container
        raise ValidationError(f"not an adjacency stack: {exc}") from exc


def _gram(A: sp.csr_matrix, transpose: bool) -> np.ndarray:
    """``A A'`` (or ``A' A`` when ``transpose``) as a dense int64 array."""
    n = A.shape[0]
    density = A.nnz / float(n * n) if n else 0.0
    if density > DENSE_THRESHOLD:
        D = A.toarray().astype(np.float64)
        G = D.T @ D if transpose else D @ D.T
        return np.rint(G).astype(np.int64)
    A64 = A.astype(np.int64)
    G = (A64.T @ A64) if transpose else (A64 @ A64.T)
    return G.toarray()


def sum_of_squares(A) -> AggregationPair:
    """``(sum_l A_l A_l', sum_l A_l' A_l)`` without any diagonal correction."""
    A = _check_stack(A)
    n = A.n
    S_row = np.zeros((n, n), dtype=np.int64)
    S_col = np.zeros((n, n), dtype=np.int64)
    for layer in A.layers:
        S_row += _gram(layer, transpose=False)
        S_col += _gram(layer, transpose=True)
    return AggregationPair(S_row, S_col, exact_integer=True)


def debiased_aggregation(A) -> AggregationPair:
    """Debiased aggregates ``sum_l (A_l A_l' - D_l^r)`` and ``sum_l (A_l' A_l - D_l^c)``.

    ``D_l^r`` and ``D_l^c`` are the diagonal out- and in-degree matrices of
    layer ``l``. For binary layers they equal the diagonals of the Gram
    products, so both outputs have an exactly zero diagonal.
    """
    A = _check_stack(A)
    pair = sum_of_squares(A)
    S_row = np.array(pair.S_row)
    S_col = np.array(pair.S_col)
    out_total = np.zeros(A.n, dtype=np.int64)
    in_total = np.zeros(A.n, dtype=np.int64)
    for layer in A.layers:
        deg = layer_degrees(layer)
        out_total += deg.out_deg
        in_total += deg.in_deg
    S_row[np.diag_indices(A.n)] -= out_total
    S_col[np.diag_indices(A.n)] -= in_total
    return AggregationPair(S_row, S_col, exact_integer=True)


def population_aggregation(omega) -> AggregationPair:
    """``(sum_l Omega_l Omega_l', sum_l Omega_l' Omega_l)`` in floating point."""
    P = omega.omega if isinstance(omega, ExpectationStack) else np.asarray(omega, dtype=float)
    if P.ndim == 2:
        P = P[None]
    if P.ndim != 3 or P.shape[1] != P.shape[2]:
        raise ValidationError(f"expectation stack must have shape (L, n, n), got {P.shape}")
    S_row = np.einsum("lij,lkj->ik", P, P, optimize=True)
    S_col = np.einsum("lji,ljk->ik", P, P, optimize=True)
    # enforce exact symmetry lost to summation order
    S_row = (S_row + S_row.T) / 2
    S_col = (S_col + S_col.T) / 2
    return AggregationPair(S_row, S_col, exact_integer=False)


def baseline_aggregation(A, kind: str):
    """Aggregates used by the comparison methods.

    ``kind="sum"`` returns the (generally asymmetric) matrix ``sum_l A_l``;
    ``kind="sos"`` returns :func:`sum_of_squares`, whose diagonals hold the
    total out- and in-degrees.
    """
    if kind == "sum":
        A = _check_stack(A)
        M = np.zeros((A.n, A.n), dtype=np.int64)
        for layer in A.layers:
            M += layer.toarray()
        return M
    if kind == "sos":
        return sum_of_squares(A)
    raise ValueError(f"unknown baseline aggregation kind {kind!r}; expected 'sum' or 'sos'")


def dump_coordinates(S: np.ndarray, stream: TextIO) -> None:
    """Write the nonzero entries of ``S`` as ``i j value`` lines, 1-based."""
    S = np.asarray(S)
    stream.write(COO_HEADER + "\n")
    stream.write(f"# shape {S.shape[0]} {S.shape[1]}\n")
    rows, cols = np.nonzero(S)
    integer = np.issubdtype(S.dtype, np.integer)
    for i, j in zip(rows.tolist(), cols.tolist()):
        v = S[i, j]
        stream.write(f"{i + 1} {j + 1} {int(v) if integer else repr(float(v))}\n")


def load_coordinates(stream: TextIO) -> np.ndarray:
    shape = None
    entries = []
    for line in stream:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "shape":
                shape = (int(parts[1]), int(parts[2]))
            continue
        i, j, v = line.split()
        entries.append((int(i) - 1, int(j) - 1, v))
    if shape is None:
        raise ValueError("coordinate dump lacks a shape line")
    integer = all("." not in v and "e" not in v.lower() for _, _, v in entries)
    S = np.zeros(shape, dtype=np.int64 if integer else float)
    for i, j, v in entries:
        S[i, j] = int(v) if integer else float(v)
    return S
