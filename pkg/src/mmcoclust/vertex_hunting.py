"""Successive projection algorithm for simplex vertex hunting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-12
ZERO_TOL = 1e-14


class RankDeficiencyError(RuntimeError):
    def __init__(self, step: int, max_norm: float):
        super().__init__(
            f"SPA step {step}: largest residual row norm {max_norm:.3e} is numerically zero; "
            "the rows span fewer than K directions"
        )
        self.step = step
        self.max_norm = max_norm


@dataclass(frozen=True)
class VertexSet:
    indices: tuple
    pick_norms: tuple

    def __len__(self):
        return len(self.indices)


def spa(V, K: int) -> VertexSet:
    """Pick ``K`` rows of ``V`` spanning the vertices of its row simplex.

    At each step the row of largest Euclidean norm is selected (first index
    on ties) and every row is projected onto the orthogonal complement of
    the selected residual row.

    Rank deficiency is judged relative to the largest initial row norm, so
    the picks are invariant to rescaling ``V``.
    """
    R = np.array(V, dtype=np.float64, copy=True)
    if R.ndim != 2:
        raise ValueError(f"SPA expects a 2-d matrix, got shape {R.shape}")
    n = R.shape[0]
    if not (1 <= K <= n):
        raise ValueError(f"SPA needs 1 <= K <= n, got K={K}, n={n}")
    sq = np.einsum("ij,ij->i", R, R)
    ref = float(np.sqrt(sq.max())) if n else 0.0
    picks, norms = [], []
    for t in range(1, K + 1):
        i = int(np.argmax(sq))
        top = float(np.sqrt(sq[i]))
        if ref == 0.0 or top < RANK_TOL * ref:
            raise RankDeficiencyError(t, top)
        picks.append(i)
        norms.append(top)
        u = R[i] / top
        R -= np.outer(R @ u, u)
        sq = np.einsum("ij,ij->i", R, R)
        tiny = sq < (ZERO_TOL * ref) ** 2
        R[tiny] = 0.0
        sq[tiny] = 0.0
    return VertexSet(tuple(picks), tuple(norms))
