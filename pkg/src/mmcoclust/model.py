"""Multi-layer mixed membership co-block model: types and generators.

Random numbers come from numpy's ``PCG64`` bit generator. Every call that
consumes randomness derives independent child streams from a
``numpy.random.SeedSequence``: one per layer in :func:`sample_network` and
one per ingredient (row memberships, column memberships, mixing matrices)
in :func:`synth_instance`. Outputs therefore do not depend on the order or
degree of parallelism in which the streams are consumed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

ROW_SUM_TOL = 1e-12

SeedLike = Union[int, np.random.SeedSequence]


class ValidationError(ValueError):
    """Raised when an input violates a model invariant."""


def _as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Membership:
    """Row-stochastic ``n x K`` membership matrix.

    Every entry lies in [0, 1] and every row sums to one within
    ``ROW_SUM_TOL``.
    """

    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 2 or W.shape[1] < 1:
            raise ValidationError(f"membership must be a 2-d n x K array, got shape {W.shape}")
        if not np.all(np.isfinite(W)):
            raise ValidationError("membership contains non-finite entries")
        if W.min(initial=0.0) < 0.0 or W.max(initial=0.0) > 1.0:
            raise ValidationError("membership entries must lie in [0, 1]")
        dev = np.abs(W.sum(axis=1) - 1.0)
        if dev.size and dev.max() > ROW_SUM_TOL:
            i = int(np.argmax(dev))
            raise ValidationError(f"membership row {i} sums to {W[i].sum()!r}, not 1")
        object.__setattr__(self, "W", _frozen(W))

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def K(self) -> int:
        return self.W.shape[1]

    def pure_rows(self) -> np.ndarray:
        """Indices of rows equal to a standard basis vector."""
        return np.flatnonzero(np.all((self.W == 0.0) | (self.W == 1.0), axis=1) & (self.W.max(axis=1) == 1.0))

    def has_pure_nodes(self) -> bool:
        pure = self.pure_rows()
        found = set(np.argmax(self.W[pure], axis=1).tolist())
        return len(found) == self.K


@dataclass(frozen=True)
class MixingSequence:
    """``L`` connection-intensity matrices, stored as an ``(L, K, K)`` array."""

    B: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 2:
            B = B[None]
        if B.ndim != 3 or B.shape[1] != B.shape[2] or B.shape[0] < 1:
            raise ValidationError(f"mixing matrices must have shape (L, K, K), got {B.shape}")
        if not np.all(np.isfinite(B)) or B.min() < 0.0 or B.max() > 1.0:
            raise ValidationError("mixing matrix entries must lie in [0, 1]")
        object.__setattr__(self, "B", _frozen(B))

    @property
    def L(self) -> int:
        return self.B.shape[0]

    @property
    def K(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class ExpectationStack:
    """Edge-probability matrices ``Omega_l``, stored as an ``(L, n, n)`` array."""

    omega: np.ndarray
    rho: float = 1.0

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        if omega.ndim == 2:
            omega = omega[None]
        if omega.ndim != 3 or omega.shape[1] != omega.shape[2]:
            raise ValidationError(f"expectation stack must have shape (L, n, n), got {omega.shape}")
        check_sparsity(self.rho)
        object.__setattr__(self, "omega", _frozen(omega))
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def L(self) -> int:
        return self.omega.shape[0]

    @property
    def n(self) -> int:
        return self.omega.shape[1]


@dataclass(frozen=True)
class AdjacencyStack:
    """``L`` directed binary adjacency matrices on a shared node set.

    Layers are held as CSR matrices with ``int8`` data; entry ``(i, j)`` of
    layer ``l`` is one when there is an edge ``i -> j`` in that layer.
    """

    layers: tuple

    def __post_init__(self):
        if len(self.layers) == 0:
            raise ValidationError("adjacency stack needs at least one layer")
        mats = []
        n = None
        for l, A in enumerate(self.layers):
            A = sp.csr_matrix(A, copy=True)
            if A.shape[0] != A.shape[1]:
                raise ValidationError(f"layer {l} is not square: {A.shape}")
            if n is None:
                n = A.shape[0]
            elif A.shape[0] != n:
                raise ValidationError(f"layer {l} has {A.shape[0]} nodes, expected {n}")
            A.eliminate_zeros()
            if A.nnz and not np.all(A.data == 1):
                raise ValidationError(f"layer {l} has non-binary entries")
            A = A.astype(np.int8)
            A.sort_indices()
            A.data.setflags(write=False)
            A.indices.setflags(write=False)
            A.indptr.setflags(write=False)
            mats.append(A)
        object.__setattr__(self, "layers", tuple(mats))

    @classmethod
    def from_dense(cls, A) -> "AdjacencyStack":
        A = np.asarray(A)
        if A.ndim == 2:
            A = A[None]
        return cls(tuple(sp.csr_matrix(a) for a in A))

    @property
    def n(self) -> int:
        return self.layers[0].shape[0]

    @property
    def L(self) -> int:
        return len(self.layers)

    def to_dense(self) -> np.ndarray:
        return np.stack([A.toarray() for A in self.layers])

    def edge_counts(self) -> np.ndarray:
        return np.array([A.nnz for A in self.layers], dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, AdjacencyStack):
            return NotImplemented
        if self.n != other.n or self.L != other.L:
            return False
        return all((a != b).nnz == 0 for a, b in zip(self.layers, other.layers))

    __hash__ = None


@dataclass(frozen=True)
class GroundTruth:
    """Planted memberships with one designated pure node per community and side."""

    pi_r: Membership
    pi_c: Membership
    pure_r: tuple = field(default=())
    pure_c: tuple = field(default=())

    def __post_init__(self):
        if self.pi_r.W.shape != self.pi_c.W.shape:
            raise ValidationError("row and column memberships must share shape")
        K = self.pi_r.K
        for side, pi, pure in (("row", self.pi_r, self.pure_r), ("column", self.pi_c, self.pure_c)):
            pure = tuple(int(i) for i in pure)
            if len(pure) != K:
                raise ValidationError(f"{side} side needs {K} pure indices, got {len(pure)}")
            block = pi.W[list(pure)]
            if not np.array_equal(block, np.eye(K)):
                raise ValidationError(f"{side} pure rows do not form the identity")
        object.__setattr__(self, "pure_r", tuple(int(i) for i in self.pure_r))
        object.__setattr__(self, "pure_c", tuple(int(i) for i in self.pure_c))


def check_sparsity(rho: float) -> float:
    rho = float(rho)
    if not (0.0 < rho <= 1.0):
        raise ValidationError(f"sparsity parameter must lie in (0, 1], got {rho}")
    return rho


def build_expectations(pi_r: Membership, pi_c: Membership, B: MixingSequence, rho: float) -> ExpectationStack:
    """Edge probabilities ``rho * pi_r @ B_l @ pi_c.T`` for every layer."""
    rho = check_sparsity(rho)
    if not isinstance(pi_r, Membership):
        pi_r = Membership(pi_r)
    if not isinstance(pi_c, Membership):
        pi_c = Membership(pi_c)
    if not isinstance(B, MixingSequence):
        B = MixingSequence(B)
    if pi_r.n != pi_c.n:
        raise ValidationError(f"row/column memberships disagree on n: {pi_r.n} vs {pi_c.n}")
    if not (pi_r.K == pi_c.K == B.K):
        raise ValidationError(f"community counts disagree: {pi_r.K}, {pi_c.K}, {B.K}")
    omega = rho * np.einsum("ik,lkm,jm->lij", pi_r.W, B.B, pi_c.W, optimize=True)
    # rounding can push a product of unit-bounded factors a hair past rho
    np.clip(omega, 0.0, rho, out=omega)
    return ExpectationStack(omega, rho)


def _sample_layer(p: np.ndarray, ss: np.random.SeedSequence) -> sp.csr_matrix:
    rng = np.random.Generator(np.random.PCG64(ss))
    draws = rng.random(p.shape)
    return sp.csr_matrix(draws < p, dtype=np.int8)


def sample_network(omega, seed: SeedLike, workers: int = 1) -> AdjacencyStack:
    """Draw ``A_l(i, j) ~ Bernoulli(Omega_l(i, j))`` independently.

    Layer ``l`` uses the ``l``-th child of the seed sequence, so the result is
    identical for any ``workers``. Diagonal entries are sampled like any
    other pair.
    """
    P = omega.omega if isinstance(omega, ExpectationStack) else np.asarray(omega, dtype=float)
    if P.ndim == 2:
        P = P[None]
    if not np.all(np.isfinite(P)) or P.min() < 0.0 or P.max() > 1.0:
        raise ValidationError("edge probabilities must lie in [0, 1]")
    children = _as_seed_sequence(seed).spawn(P.shape[0])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            layers = list(pool.map(_sample_layer, P, children))
    else:
        layers = [_sample_layer(p, ss) for p, ss in zip(P, children)]
    return AdjacencyStack(tuple(layers))


def _membership_block(n: int, K: int, n0: int, rng: np.random.Generator) -> np.ndarray:
    W = np.zeros((n, K))
    for k in range(K):
        W[k * n0:(k + 1) * n0, k] = 1.0
    m = n - K * n0
    if m:
        if K == 3:
            r1 = rng.random(m) / 2
            r2 = rng.random(m) / 2
            W[K * n0:] = np.column_stack([r1, r2, 1.0 - r1 - r2])
        else:
            W[K * n0:] = rng.dirichlet(np.ones(K), size=m)
    return W


def synth_instance(n: int, K: int, n0_r: int, n0_c: int, L: int, rho: float, seed: SeedLike):
    """Random instance in the layout used by the simulation studies.

    The first ``K * n0_r`` nodes are pure on the row side, ``n0_r`` per
    community in contiguous blocks; likewise for columns. For ``K == 3`` a
    mixed row is ``(u1/2, u2/2, 1 - u1/2 - u2/2)`` with ``u1, u2`` uniform on
    [0, 1]; for other ``K`` mixed rows come from the flat Dirichlet
    distribution. Every ``B_l`` entry is uniform on [0, 1].

    Returns
    -------
    truth : GroundTruth
    B : MixingSequence
    omega : ExpectationStack
    """
    rho = check_sparsity(rho)
    if K < 1 or L < 1 or n < 1:
        raise ValidationError("n, K and L must be positive")
    for side, n0 in (("row", n0_r), ("column", n0_c)):
        if n0 < 1:
            raise ValidationError(f"{side} side needs at least one pure node per community")
        if K * n0 > n:
            raise ValidationError(f"no room for {K}x{n0} pure {side} nodes among n={n}")
    ss_r, ss_c, ss_b = _as_seed_sequence(seed).spawn(3)
    W_r = _membership_block(n, K, n0_r, np.random.Generator(np.random.PCG64(ss_r)))
    W_c = _membership_block(n, K, n0_c, np.random.Generator(np.random.PCG64(ss_c)))
    B = MixingSequence(np.random.Generator(np.random.PCG64(ss_b)).random((L, K, K)))
    truth = GroundTruth(
        Membership(W_r),
        Membership(W_c),
        tuple(k * n0_r for k in range(K)),
        tuple(k * n0_c for k in range(K)),
    )
    return truth, B, build_expectations(truth.pi_r, truth.pi_c, B, rho)
