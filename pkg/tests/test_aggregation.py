import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmcoclust.aggregation import (
    baseline_aggregation,
    debiased_aggregation,
    dump_coordinates,
    load_coordinates,
    population_aggregation,
)
from mmcoclust.model import AdjacencyStack, ValidationError, sample_network, synth_instance


def naive_debiased(A):
    """Quadruple loop over (l, i, j, m) straight from the definition."""
    L, n, _ = A.shape
    S_row = np.zeros((n, n), dtype=np.int64)
    S_col = np.zeros((n, n), dtype=np.int64)
    for l in range(L):
        for i in range(n):
            for j in range(n):
                for m in range(n):
                    S_row[i, j] += int(A[l, i, m]) * int(A[l, j, m])
                    S_col[i, j] += int(A[l, m, i]) * int(A[l, m, j])
        for i in range(n):
            S_row[i, i] -= int(A[l, i].sum())
            S_col[i, i] -= int(A[l, :, i].sum())
    return S_row, S_col


def test_empty_network():
    pair = debiased_aggregation(np.zeros((2, 4, 4), dtype=int))
    assert not pair.S_row.any() and not pair.S_col.any()


def test_two_node_swap():
    pair = debiased_aggregation(np.array([[0, 1], [1, 0]]))
    np.testing.assert_array_equal(pair.S_row, np.zeros((2, 2)))
    np.testing.assert_array_equal(pair.S_col, np.zeros((2, 2)))


def test_three_node_example():
    A = np.array([[0, 1, 1], [0, 1, 0], [0, 0, 0]])
    pair = debiased_aggregation(A)
    np.testing.assert_array_equal(pair.S_row, [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    assert pair.S_row.dtype == np.int64


def test_rejects_non_binary():
    with pytest.raises(ValidationError):
        debiased_aggregation(np.array([[[0, 2], [1, 0]]]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_matches_quadruple_loop(n, L, seed, p):
    A = (np.random.default_rng(seed).random((L, n, n)) < p).astype(np.int8)
    pair = debiased_aggregation(A)
    S_row, S_col = naive_debiased(A)
    np.testing.assert_array_equal(pair.S_row, S_row)
    np.testing.assert_array_equal(pair.S_col, S_col)
    assert not np.diag(pair.S_row).any() and not np.diag(pair.S_col).any()
    np.testing.assert_array_equal(pair.S_row, pair.S_row.T)


@pytest.mark.parametrize("p", [0.01, 0.04, 0.2, 0.7])
def test_sparse_and_dense_paths_agree(p):
    rng = np.random.default_rng(int(p * 100))
    A = (rng.random((3, 120, 120)) < p).astype(np.int8)
    pair = debiased_aggregation(A)
    Ai = A.astype(np.int64)
    expected = sum(a @ a.T - np.diag(a.sum(1)) for a in Ai)
    np.testing.assert_array_equal(pair.S_row, expected)


def test_layer_permutation_invariance():
    A = (np.random.default_rng(3).random((4, 15, 15)) < 0.3).astype(np.int8)
    a = debiased_aggregation(A)
    b = debiased_aggregation(A[[2, 0, 3, 1]])
    np.testing.assert_array_equal(a.S_row, b.S_row)
    np.testing.assert_array_equal(a.S_col, b.S_col)


def test_population_simple_cases():
    z = population_aggregation(np.zeros((2, 3, 3)))
    assert not z.S_row.any()
    rho, n = 0.3, 5
    one = population_aggregation(np.full((1, n, n), rho))
    np.testing.assert_allclose(one.S_row, rho ** 2 * n * np.ones((n, n)), rtol=1e-14)


def test_population_brute_force():
    _, _, om = synth_instance(4, 2, 1, 1, 3, 0.7, 9)
    P = om.omega
    S_row = np.zeros((4, 4))
    S_col = np.zeros((4, 4))
    for l in range(3):
        for i in range(4):
            for j in range(4):
                for m in range(4):
                    S_row[i, j] += P[l, i, m] * P[l, j, m]
                    S_col[i, j] += P[l, m, i] * P[l, m, j]
    pair = population_aggregation(om)
    np.testing.assert_allclose(pair.S_row, S_row, atol=1e-12, rtol=0)
    np.testing.assert_allclose(pair.S_col, S_col, atol=1e-12, rtol=0)
    assert np.linalg.eigvalsh(pair.S_row).min() > -1e-12


def test_population_rank_at_most_k():
    _, _, om = synth_instance(40, 3, 5, 5, 4, 0.5, 1)
    w = np.abs(np.linalg.eigvalsh(population_aggregation(om).S_row))
    assert np.sort(w)[-4] < 1e-10 * w.max()


def test_baseline_replicated_layers():
    A = (np.random.default_rng(0).random((6, 6)) < 0.4).astype(np.int8)
    stack = np.stack([A, A])
    np.testing.assert_array_equal(baseline_aggregation(stack, "sum"), 2 * A)
    np.testing.assert_array_equal(baseline_aggregation(stack, "sos").S_row, 2 * (A.astype(int) @ A.T))


def test_baseline_zero_and_unknown():
    Z = np.zeros((2, 3, 3), dtype=int)
    assert not baseline_aggregation(Z, "sum").any()
    assert not baseline_aggregation(Z, "sos").S_col.any()
    with pytest.raises(ValueError):
        baseline_aggregation(Z, "median")


def test_sos_equals_debiased_plus_degrees():
    A = (np.random.default_rng(17).random((2, 3, 3)) < 0.5).astype(np.int8)
    sos = baseline_aggregation(A, "sos")
    deb = debiased_aggregation(A)
    np.testing.assert_array_equal(sos.S_row - deb.S_row, np.diag(A.sum(axis=(0, 2))))
    np.testing.assert_array_equal(sos.S_col - deb.S_col, np.diag(A.sum(axis=(0, 1))))


def test_debiased_off_diagonal_unbiased():
    _, _, om = synth_instance(20, 2, 2, 2, 3, 0.6, 21)
    P = om.omega
    reps = 2000
    acc = np.zeros((20, 20))
    for s in range(reps):
        acc += debiased_aggregation(sample_network(om, s)).S_row
    mean = acc / reps
    target = population_aggregation(om).S_row
    # S_row(i, j) is a sum of independent Bernoulli(P_l(i,m) P_l(j,m)) terms for i != j
    q = np.einsum("lim,ljm->lijm", P, P)
    var = (q * (1 - q)).sum(axis=(0, 3))
    off = ~np.eye(20, dtype=bool)
    assert np.all(np.abs(mean - target)[off] <= 4 * np.sqrt(var[off] / reps))


def test_coordinate_dump_round_trip():
    A = (np.random.default_rng(2).random((2, 7, 7)) < 0.4).astype(np.int8)
    S = debiased_aggregation(A).S_row
    buf = io.StringIO()
    dump_coordinates(S, buf)
    assert buf.getvalue().startswith("# mmcoclust-coo v1")
    np.testing.assert_array_equal(load_coordinates(io.StringIO(buf.getvalue())), S)
    F = population_aggregation(np.random.default_rng(1).random((1, 4, 4))).S_row
    buf = io.StringIO()
    dump_coordinates(F, buf)
    np.testing.assert_array_equal(load_coordinates(io.StringIO(buf.getvalue())), F)


def test_outputs_read_only():
    pair = debiased_aggregation(AdjacencyStack.from_dense(np.eye(3, dtype=int)))
    with pytest.raises(ValueError):
        pair.S_row[0, 0] = 1
