import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcmad.errors import DimensionError
from fcmad.fcm import fit_fcm
from fcmad.reconstruction import (
    anomaly_scores,
    degranulation_objective,
    reconstruct,
    reconstruct_model,
    reconstruction_error,
)


def random_model(seed, c=None):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(4, 41))
    n = int(rng.integers(1, 4))
    q = int(rng.integers(2, 7))
    c = c or int(rng.integers(2, min(5, N) + 1))
    W = rng.normal(size=(N, n, q))
    lam = rng.dirichlet(np.ones(n))
    m = float(rng.choice([1.5, 2.0, 3.0]))
    return W, fit_fcm(W, c, m, lam, seed=seed), lam


def test_single_cluster_returns_prototype():
    V = np.arange(6.0).reshape(1, 2, 3)
    out = reconstruct(np.ones((1, 4)), V, 2.0)
    for j in range(4):
        np.testing.assert_array_equal(out[j], V[0])


def test_equal_memberships_average():
    V = np.array([[[0.0, 2.0]], [[4.0, -2.0]]])
    out = reconstruct(np.full((2, 1), 0.5), V, 2.0)
    np.testing.assert_allclose(out[0], [[2.0, 0.0]])


def test_error_examples():
    W = np.random.default_rng(0).normal(size=(5, 2, 3))
    assert reconstruction_error(W, W) == 0.0
    W2 = W.copy()
    W2[3, 1, 2] += 0.125
    assert reconstruction_error(W, W2) == 0.125 ** 2
    s = anomaly_scores(W, W2)
    assert s.tolist() == [0, 0, 0, 0.125 ** 2, 0]
    with pytest.raises(DimensionError):
        reconstruction_error(W, W[:4])


def test_identical_windows_single_cluster_equal_scores():
    W = np.tile(np.array([[1.0, 2.0, 0.5]]), (6, 1, 1))
    s = anomaly_scores(W, reconstruct(np.ones((1, 6)), W[:1], 2.0))
    assert np.all(s == s[0])


def test_tiny_instance_against_straight_line():
    W = np.array([[[0.3, 1.2]], [[0.1, 0.9]], [[2.0, -1.0]], [[2.2, -0.7]]])
    U = np.array([[0.8, 0.7, 0.1, 0.25], [0.2, 0.3, 0.9, 0.75]])
    V = np.array([[[0.2, 1.0]], [[2.1, -0.8]]])
    m = 2.0
    got = anomaly_scores(W, reconstruct(U, V, m))
    for j in range(4):
        num0 = num1 = den = 0.0
        for i in range(2):
            wgt = U[i, j] ** m
            num0 += wgt * V[i, 0, 0]
            num1 += wgt * V[i, 0, 1]
            den += wgt
        s = (W[j, 0, 0] - num0 / den) ** 2 + (W[j, 0, 1] - num1 / den) ** 2
        assert got[j] == pytest.approx(s, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_zero_gradient_finite_difference(seed):
    W, model, lam = random_model(seed)
    U, V, m = model.partition, model.centers, model.m
    W_hat = reconstruct(U, V, m)
    F = degranulation_objective(W_hat, U, V, lam, m)
    h = 1e-5
    for idx in np.ndindex(W_hat.shape):
        up = W_hat.copy()
        dn = W_hat.copy()
        up[idx] += h
        dn[idx] -= h
        grad = (degranulation_objective(up, U, V, lam, m) - degranulation_objective(dn, U, V, lam, m)) / (2 * h)
        assert abs(grad) < 1e-6 * (1 + abs(F))


def test_perturbations_never_decrease_objective():
    W, model, lam = random_model(7, c=3)
    U, V, m = model.partition, model.centers, model.m
    W_hat = reconstruct(U, V, m)
    F = degranulation_objective(W_hat, U, V, lam, m)
    rng = np.random.default_rng(1)
    for _ in range(200):
        d = rng.normal(size=W_hat.shape)
        d *= 1e-3 / np.linalg.norm(d)
        assert degranulation_objective(W_hat + d, U, V, lam, m) >= F - 1e-12


def test_crisp_data_reconstructs_exactly():
    A = np.array([[1.0, -1.0, 0.5]])
    B = np.array([[-3.0, 2.0, 4.0]])
    W = np.stack([A, B, A, B, B])
    model = fit_fcm(W, 2, 2.0, [1.0], seed=0)
    rec = reconstruct_model(W, model)
    assert rec.total_error < 1e-20
    np.testing.assert_allclose(rec.reconstructed, W, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_scores_nonnegative_and_additive(seed):
    W, model, _ = random_model(seed)
    rec = reconstruct_model(W, model)
    assert np.all(rec.per_subsequence_error >= 0)
    assert rec.total_error == pytest.approx(rec.per_subsequence_error.sum(), abs=1e-9)
    assert rec.total_error == pytest.approx(reconstruction_error(W, rec.reconstructed), abs=1e-9)
