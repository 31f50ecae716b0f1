"""Permutation-minimised membership errors.

Both errors compare an estimate against the truth after the best relabelling
of the estimate's columns, chosen independently on the row and column side,
and report the worse side. The l1 norm is the entrywise sum of absolute
values, so the Hamming error of row-stochastic inputs lies in [0, 2].
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class ErrorReport:
    hamming: float
    relative: float
    hamming_perm_r: tuple
    hamming_perm_c: tuple
    relative_perm_r: tuple
    relative_perm_c: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


def _matrix(pi) -> np.ndarray:
    return np.asarray(getattr(pi, "W", pi), dtype=np.float64)


def _cost(est: np.ndarray, truth: np.ndarray, kind: str) -> np.ndarray:
    diff = est[:, :, None] - truth[:, None, :]
    if kind == "l1":
        return np.abs(diff).sum(axis=0)
    return (diff ** 2).sum(axis=0)


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = 134217729.0 * a  # 2**27 + 1
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _exact_norm(D_hi, D_lo, kind: str) -> float:
    """Correctly rounded l1 norm or squared Frobenius norm of ``D_hi + D_lo``."""
    if kind == "l1":
        neg = D_hi < 0
        parts = np.concatenate([np.where(neg, -D_hi, D_hi).ravel(), np.where(neg, -D_lo, D_lo).ravel()])
        return math.fsum(parts.tolist())
    p1, e1 = _two_prod(D_hi, D_hi)
    p2, e2 = _two_prod(2.0 * D_hi, D_lo)
    p3, e3 = _two_prod(D_lo, D_lo)
    return math.fsum(np.concatenate([x.ravel() for x in (p1, e1, p2, e2, p3, e3)]).tolist())


def side_objective(est, truth, perm, kind: str) -> float:
    """``||est[:, perm] - truth||`` divided by ``n``.

    ``perm[b]`` is the estimated column matched to true column ``b``. The
    norm is evaluated without intermediate rounding (error-free differences
    and products, then an exactly rounded sum), so matchings whose costs tie
    in exact arithmetic return bit-identical values.
    """
    est, truth = _matrix(est), _matrix(truth)
    D_hi, D_lo = _two_sum(est[:, list(perm)], -truth)
    n = truth.shape[0]
    total = _exact_norm(D_hi, D_lo, kind)
    return total / n if kind == "l1" else math.sqrt(total) / n


def best_permutation(est, truth, kind: str):
    """Column matching minimising the side objective via linear assignment."""
    est, truth = _matrix(est), _matrix(truth)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch: estimate {est.shape} vs truth {truth.shape}")
    rows, cols = linear_sum_assignment(_cost(est, truth, kind))
    perm = np.empty(truth.shape[1], dtype=int)
    perm[cols] = rows
    perm = tuple(int(p) for p in perm)
    return perm, side_objective(est, truth, perm, kind)


def brute_force_permutation(est, truth, kind: str):
    """Exhaustive search over all ``K!`` column matchings."""
    est, truth = _matrix(est), _matrix(truth)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch: estimate {est.shape} vs truth {truth.shape}")
    best = None
    for perm in itertools.permutations(range(truth.shape[1])):
        val = side_objective(est, truth, perm, kind)
        if best is None or val < best[1]:
            best = (perm, val)
    return best


def _check_shapes(pi_r_hat, pi_r, pi_c_hat, pi_c):
    shapes = [_matrix(m).shape for m in (pi_r_hat, pi_r, pi_c_hat, pi_c)]
    if len(set(shapes)) != 1:
        raise ValueError(f"membership shapes disagree: {shapes}")


def hamming_error(pi_r_hat, pi_r, pi_c_hat, pi_c) -> float:
    _check_shapes(pi_r_hat, pi_r, pi_c_hat, pi_c)
    return max(best_permutation(pi_r_hat, pi_r, "l1")[1], best_permutation(pi_c_hat, pi_c, "l1")[1])


def relative_error(pi_r_hat, pi_r, pi_c_hat, pi_c) -> float:
    _check_shapes(pi_r_hat, pi_r, pi_c_hat, pi_c)
    return max(best_permutation(pi_r_hat, pi_r, "fro")[1], best_permutation(pi_c_hat, pi_c, "fro")[1])


def evaluate(pi_r_hat, pi_r, pi_c_hat, pi_c) -> ErrorReport:
    _check_shapes(pi_r_hat, pi_r, pi_c_hat, pi_c)
    hp_r, h_r = best_permutation(pi_r_hat, pi_r, "l1")
    hp_c, h_c = best_permutation(pi_c_hat, pi_c, "l1")
    rp_r, r_r = best_permutation(pi_r_hat, pi_r, "fro")
    rp_c, r_c = best_permutation(pi_c_hat, pi_c, "fro")
    return ErrorReport(max(h_r, h_c), max(r_r, r_c), hp_r, hp_c, rp_r, rp_c)


def align_columns(est, truth) -> np.ndarray:
    """Estimate with columns reordered to best match ``truth`` in l1."""
    perm, _ = best_permutation(est, truth, "l1")
    return _matrix(est)[:, list(perm)]


def max_entry_error(est, truth) -> float:
    """Largest absolute entrywise difference after l1 column alignment."""
    aligned = align_columns(est, truth)
    return float(np.max(np.abs(aligned - _matrix(truth)))) if aligned.size else 0.0

