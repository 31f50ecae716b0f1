import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmcoclust.model import (
    AdjacencyStack,
    ExpectationStack,
    GroundTruth,
    Membership,
    MixingSequence,
    ValidationError,
    build_expectations,
    sample_network,
    synth_instance,
)


def test_membership_rejects_bad_rows():
    with pytest.raises(ValidationError):
        Membership([[0.5, 0.4]])
    with pytest.raises(ValidationError):
        Membership([[1.2, -0.2]])
    Membership([[0.5, 0.5], [1.0, 0.0]])


def test_membership_is_read_only():
    pi = Membership(np.eye(2))
    with pytest.raises(ValueError):
        pi.W[0, 0] = 0.0


def test_pure_node_detection():
    assert Membership(np.eye(3)).has_pure_nodes()
    assert not Membership([[1, 0], [0.5, 0.5]]).has_pure_nodes()


def test_ground_truth_checks_pure_rows():
    pi = Membership([[1, 0], [0, 1], [0.5, 0.5]])
    GroundTruth(pi, pi, (0, 1), (0, 1))
    with pytest.raises(ValidationError):
        GroundTruth(pi, pi, (0, 2), (0, 1))


def test_expectations_rank_one():
    rng = np.random.default_rng(0)
    W = rng.dirichlet(np.ones(1), size=5)
    om = build_expectations(Membership(W), Membership(W), MixingSequence([[[0.4]]]), 0.5)
    np.testing.assert_allclose(om.omega[0], 0.2 * np.ones((5, 5)))


def test_expectations_block_identity():
    labels = np.array([0, 1, 2, 0, 1])
    W = np.eye(3)[labels]
    om = build_expectations(Membership(W), Membership(W), MixingSequence(np.eye(3)), 1.0)
    expected = (labels[:, None] == labels[None, :]).astype(float)
    np.testing.assert_array_equal(om.omega[0], expected)


def test_expectations_three_node_example():
    pi = Membership([[1, 0], [0, 1], [0.5, 0.5]])
    om = build_expectations(pi, pi, MixingSequence(np.eye(2)), 0.5)
    # direct evaluation of 0.5 * pi @ pi.T
    assert om.omega[0, 2, 2] == pytest.approx(0.25, abs=1e-15)
    assert om.omega[0, 0, 2] == pytest.approx(0.25, abs=1e-15)
    assert om.omega[0, 0, 1] == 0.0


def test_expectations_dimension_errors():
    pi3 = Membership(np.eye(3))
    pi2 = Membership(np.eye(2))
    with pytest.raises(ValidationError):
        build_expectations(pi3, pi2, MixingSequence(np.eye(3)), 0.5)
    with pytest.raises(ValidationError):
        build_expectations(pi3, pi3, MixingSequence(np.eye(2)), 0.5)
    with pytest.raises(ValidationError):
        build_expectations([[0.3, 0.3]], [[0.5, 0.5]], MixingSequence(np.eye(2)), 0.5)
    with pytest.raises(ValidationError):
        build_expectations(pi2, pi2, MixingSequence(np.eye(2)), 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 12), st.integers(1, 4), st.floats(0.01, 1.0), st.integers(0, 2**32 - 1))
def test_expectations_bounded_by_rho(K, n, L, rho, seed):
    rng = np.random.default_rng(seed)
    W_r = rng.dirichlet(np.ones(K), size=n)
    W_c = rng.dirichlet(np.ones(K), size=n)
    B = rng.random((L, K, K))
    om = build_expectations(Membership(W_r), Membership(W_c), MixingSequence(B), rho)
    assert om.omega.min() >= 0.0
    assert om.omega.max() <= rho
    np.testing.assert_allclose(om.omega, rho * np.einsum("ik,lkm,jm->lij", W_r, B, W_c), atol=1e-15)


def test_sample_extremes():
    assert sample_network(np.zeros((2, 4, 4)), 1).to_dense().sum() == 0
    assert sample_network(np.ones((2, 4, 4)), 1).to_dense().sum() == 32


def test_sample_rejects_out_of_range():
    with pytest.raises(ValidationError):
        sample_network(np.full((1, 3, 3), 1.5), 0)
    with pytest.raises(ValidationError):
        sample_network(np.full((1, 3, 3), -0.1), 0)


def test_sample_deterministic_and_parallel_invariant():
    _, _, om = synth_instance(60, 3, 5, 5, 6, 0.4, 3)
    a = sample_network(om, 99)
    b = sample_network(om, 99)
    c = sample_network(om, 99, workers=4)
    assert a == b == c
    assert a != sample_network(om, 100)


def test_sample_bernoulli_means():
    _, _, om = synth_instance(20, 3, 2, 2, 3, 0.8, 5)
    P = om.omega
    reps = 2000
    total = np.zeros(P.shape)
    for s in range(reps):
        total += sample_network(om, s).to_dense()
    mean = total / reps
    band = 3 * np.sqrt(P * (1 - P) / reps)
    outside = np.abs(mean - P) > band
    # 4 sigma everywhere; 3 sigma for all but a chance fraction of the 1200 cells
    assert np.all(np.abs(mean - P) <= 4 * np.sqrt(P * (1 - P) / reps) + 1e-12)
    assert outside.mean() < 0.01


def test_sample_edge_count_concentrates():
    _, _, om = synth_instance(80, 3, 5, 5, 4, 0.3, 8)
    P = om.omega
    A = sample_network(om, 4)
    sd = np.sqrt((P * (1 - P)).sum())
    assert abs(A.edge_counts().sum() - P.sum()) <= 4 * sd


def test_adjacency_rejects_non_binary():
    with pytest.raises(ValidationError):
        AdjacencyStack.from_dense(np.full((1, 2, 2), 2))


def test_synth_all_pure_layout():
    truth, B, om = synth_instance(6, 3, 2, 2, 2, 0.5, 0)
    np.testing.assert_array_equal(truth.pi_r.W, np.repeat(np.eye(3), 2, axis=0))
    assert truth.pure_r == (0, 2, 4)
    assert B.B.shape == (2, 3, 3)
    assert isinstance(om, ExpectationStack)


def test_synth_errors():
    with pytest.raises(ValidationError):
        synth_instance(5, 3, 2, 1, 2, 0.5, 0)
    with pytest.raises(ValidationError):
        synth_instance(5, 3, 1, 0, 2, 0.5, 0)


def test_synth_mixed_rows_valid_and_pure_condition():
    for K in (2, 3, 5):
        truth, B, om = synth_instance(60, K, 3, 4, 3, 0.2, K)
        for pi in (truth.pi_r, truth.pi_c):
            assert pi.has_pure_nodes()
            np.testing.assert_allclose(pi.W.sum(axis=1), 1.0, atol=1e-12)
        assert B.B.min() >= 0 and B.B.max() <= 1


def test_synth_k3_mixing_recipe_moments():
    n = 100_003
    # build only the membership block; the full instance would allocate n x n
    from mmcoclust.model import _membership_block

    W = _membership_block(n, 3, 1, np.random.default_rng(42))[3:]
    assert W.shape[0] == 100_000
    assert np.all(W[:, :2] <= 0.5) and np.all(W[:, 2] >= 0)
    # E[u/2] = 0.25 and E[1 - u1/2 - u2/2] = 0.5 for u uniform on [0, 1]
    assert abs(W[:, 0].mean() - 0.25) < 0.01
    assert abs(W[:, 2].mean() - 0.5) < 0.01


def test_synth_reproducible():
    a = synth_instance(30, 3, 3, 3, 2, 0.5, 11)
    b = synth_instance(30, 3, 3, 3, 2, 0.5, 11)
    np.testing.assert_array_equal(a[0].pi_r.W, b[0].pi_r.W)
    np.testing.assert_array_equal(a[1].B, b[1].B)
