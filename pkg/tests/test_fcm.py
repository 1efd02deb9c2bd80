import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcmad.errors import DegenerateClusterError, DimensionError, InvalidConfigError
from fcmad.fcm import (
    as_weight_vector,
    distance_matrix,
    fit_fcm,
    initial_partition,
    objective,
    update_partition,
    update_prototypes,
    weighted_distance,
)


def standard_fcm_step(U, X, m):
    """One textbook FCM sweep on flat vectors: centres, then memberships."""
    um = U ** m
    V = um @ X / um.sum(axis=1, keepdims=True)
    D = ((X[None, :, :] - V[:, None, :]) ** 2).sum(axis=2)
    ratio = D[:, None, :] / D[None, :, :]
    U_new = 1.0 / (ratio ** (1.0 / (m - 1))).sum(axis=1)
    return U_new, V


def random_instance(seed, N=None, n=None, q=None):
    rng = np.random.default_rng(seed)
    N = N or int(rng.integers(6, 41))
    n = n or int(rng.integers(1, 4))
    q = q or int(rng.integers(2, 7))
    return rng.normal(size=(N, n, q)) * rng.uniform(0.5, 2.0, size=(1, n, 1))


# -- distance ---------------------------------------------------------------


def test_distance_identity():
    w = np.arange(6.0).reshape(2, 3)
    assert weighted_distance(w, w, [0.5, 0.5]) == 0.0


def test_distance_weighted_rows():
    w = np.zeros((2, 2))
    v = np.array([[2.0, 0.0], [0.0, 3.0]])  # squared row norms 4 and 9
    assert weighted_distance(w, v, [0.25, 0.75]) == pytest.approx(7.75, abs=1e-15)


def test_distance_uniform_is_scaled_euclidean():
    rng = np.random.default_rng(1)
    w, v = rng.normal(size=(2, 3, 4))
    flat = np.sum((w - v) ** 2)
    assert weighted_distance(w, v, np.full(3, 1 / 3)) == pytest.approx(flat / 3, rel=1e-12)


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionError):
        weighted_distance(np.zeros((2, 3)), np.zeros((2, 4)), [0.5, 0.5])
    with pytest.raises(DimensionError):
        weighted_distance(np.zeros((2, 3)), np.zeros((2, 3)), [1.0])


def test_distance_matrix_agrees_with_scalar():
    X = random_instance(4, N=7, n=3, q=4)
    V = X[:3] + 0.5
    lam = [0.2, 0.5, 0.3]
    D = distance_matrix(X, V, lam)
    for i in range(3):
        for j in range(7):
            assert D[i, j] == pytest.approx(weighted_distance(X[j], V[i], lam), rel=1e-12)


def test_weight_vector_validation():
    as_weight_vector([0.3, 0.7])
    with pytest.raises(InvalidConfigError):
        as_weight_vector([0.5, 0.6])
    with pytest.raises(InvalidConfigError):
        as_weight_vector([-0.1, 1.1])


# -- prototypes -------------------------------------------------------------


def test_single_cluster_is_mean():
    X = random_instance(2)
    for m in (1.5, 2.0, 3.0):
        V = update_prototypes(np.ones((1, len(X))), X, m)
        np.testing.assert_allclose(V[0], X.mean(axis=0), atol=1e-12)


def test_crisp_partition_matches_kmeans_centroids():
    X = random_instance(5, N=12, n=2, q=3)
    labels = np.array([0, 1, 2, 0, 1, 2, 2, 2, 0, 1, 1, 0])
    U = np.zeros((3, 12))
    U[labels, np.arange(12)] = 1.0
    V = update_prototypes(U, X, 2.0)
    for k in range(3):
        # k-means centroid of the assigned members
        members = [X[j] for j in range(12) if labels[j] == k]
        np.testing.assert_allclose(V[k], sum(members) / len(members), atol=1e-12)


def test_single_window_prototype():
    X = random_instance(6, N=1, n=2, q=3)
    V = update_prototypes(np.array([[0.3], [0.7]]), X, 2.0)
    np.testing.assert_allclose(V, np.repeat(X, 2, axis=0), atol=1e-12)


def test_empty_cluster():
    X = random_instance(7, N=4)
    U = np.array([[1.0, 1, 1, 1], [0, 0, 0, 0]])
    with pytest.raises(DegenerateClusterError):
        update_prototypes(U, X, 2.0)


# -- memberships ------------------------------------------------------------


def test_coincident_centre_gets_full_membership():
    X = np.array([[[0.0, 0.0]], [[1.0, 1.0]]])
    V = np.array([[[0.0, 0.0]], [[5.0, 5.0]], [[-3.0, 2.0]]])
    U = update_partition(V, X, [1.0], 2.0)
    np.testing.assert_array_equal(U[:, 0], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(U.sum(axis=0), 1.0)


def test_two_coincident_centres_split():
    X = np.array([[[1.0, 2.0]]])
    V = np.array([[[1.0, 2.0]], [[1.0, 2.0]], [[0.0, 0.0]]])
    U = update_partition(V, X, [1.0], 2.0)
    np.testing.assert_array_equal(U[:, 0], [0.5, 0.5, 0.0])


def test_equidistant_uniform_membership():
    X = np.zeros((1, 1, 2))
    V = np.array([[[1.0, 0.0]], [[0.0, 1.0]], [[-1.0, 0.0]], [[0.0, -1.0]]])
    U = update_partition(V, X, [1.0], 2.0)
    np.testing.assert_allclose(U[:, 0], 0.25, atol=1e-15)


def test_large_fuzzifier_flattens():
    X = random_instance(8, N=30, n=2, q=3)
    V = X[:4]
    # evaluate the textbook formula directly as the oracle
    D = distance_matrix(X, V, [0.5, 0.5])
    oracle = 1.0 / ((D[:, None, :] / D[None, :, :]) ** (1 / 99)).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        U = update_partition(V, X, [0.5, 0.5], 100.0)
    finite = np.all(D > 0, axis=0)
    np.testing.assert_allclose(U[:, finite], oracle[:, finite], atol=1e-12)
    assert np.all(np.abs(U[:, finite] - 0.25) < 0.02)


def test_partition_matches_textbook_formula():
    X = random_instance(9, N=25, n=3, q=4)
    V = X[[0, 5, 9]] + 0.1
    lam = np.array([0.1, 0.6, 0.3])
    for m in (1.3, 2.0, 4.0):
        U = update_partition(V, X, lam, m)
        D = distance_matrix(X, V, lam)
        oracle = 1.0 / ((D[:, None, :] / D[None, :, :]) ** (1 / (m - 1))).sum(axis=1)
        np.testing.assert_allclose(U, oracle, rtol=1e-12)


# -- fitting ----------------------------------------------------------------


def test_config_errors():
    X = random_instance(10, N=5)
    with pytest.raises(InvalidConfigError):
        fit_fcm(X, 6)
    with pytest.raises(InvalidConfigError):
        fit_fcm(X, 2, m=1.0)


def test_duplicate_groups_converge_to_templates():
    A = np.array([[0.0, 1.0, 0.0], [2.0, 2.0, 2.0]])
    B = A + 10.0
    X = np.stack([A] * 5 + [B] * 5)
    model = fit_fcm(X, 2, 2.0, [0.5, 0.5], seed=3)
    V = model.centers
    if np.sum((V[0] - A) ** 2) > np.sum((V[1] - A) ** 2):
        V = V[::-1]
    assert np.max(np.abs(V[0] - A)) < 1e-3
    assert np.max(np.abs(V[1] - B)) < 1e-3
    assert model.converged


def test_permutation_leaves_objective():
    rng = np.random.default_rng(11)
    centres = rng.normal(scale=5.0, size=(3, 2, 4))
    X = np.concatenate([c + 0.3 * rng.normal(size=(8, 2, 4)) for c in centres])
    lam = [0.4, 0.6]
    base = fit_fcm(X, 3, 2.0, lam, seed=0, tol=1e-10, max_iter=1000)
    perm = rng.permutation(len(X))
    other = fit_fcm(X[perm], 3, 2.0, lam, seed=0, tol=1e-10, max_iter=1000)
    assert other.objective == pytest.approx(base.objective, abs=1e-6)


def test_returned_objective_is_self_consistent():
    X = random_instance(12, N=30, n=3, q=5)
    lam = [0.2, 0.3, 0.5]
    model = fit_fcm(X, 3, 2.0, lam, seed=1)
    assert model.objective == pytest.approx(
        objective(model.partition, model.centers, X, lam, 2.0), abs=1e-9
    )


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 5), st.sampled_from([1.5, 2.0, 3.0]))
def test_objective_monotone_and_columns_stochastic(seed, c, m):
    X = random_instance(seed)
    c = min(c, len(X))
    lam = np.random.default_rng(seed + 1).dirichlet(np.ones(X.shape[1]))
    sums = []

    def check(it, U, V):
        sums.append(np.max(np.abs(U.sum(axis=0) - 1.0)))
        assert np.all(U >= 0) and np.all(U <= 1)

    model = fit_fcm(X, c, m, lam, seed=seed, callback=check)
    trace = np.array(model.objective_trace)
    assert np.all(np.diff(trace) <= 1e-9)
    assert max(sums) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 4))
def test_uniform_weights_match_standard_fcm(seed, c):
    X = random_instance(seed)
    N, n = X.shape[:2]
    c = min(c, N)
    U0 = initial_partition(c, N, seed)
    flat = X.reshape(N, -1)
    iterates = []
    fit_fcm(X, c, 2.0, np.full(n, 1.0 / n), init_partition=U0, max_iter=25, tol=0.0,
            callback=lambda it, U, V: iterates.append((U.copy(), V.copy())))
    U = U0
    for it, (U_ext, V_ext) in enumerate(iterates[1:], start=1):
        U, V = standard_fcm_step(U, flat, 2.0)
        np.testing.assert_allclose(U_ext, U, atol=1e-9)
        # prototypes returned with iterate k are built from U_k
        um = U ** 2
        V_k = um @ flat / um.sum(axis=1, keepdims=True)
        np.testing.assert_allclose(V_ext.reshape(c, -1), V_k, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000), st.floats(0.01, 50.0))
def test_weight_scale_does_not_move_iterates(seed, alpha):
    X = random_instance(seed)
    N, n = X.shape[:2]
    lam = np.random.default_rng(seed).dirichlet(np.ones(n))
    U_a = U_b = initial_partition(2, N, seed)
    for _ in range(30):
        V_a = update_prototypes(U_a, X, 2.0)
        V_b = update_prototypes(U_b, X, 2.0)
        U_a = update_partition(V_a, X, lam, 2.0)
        U_b = update_partition(V_b, X, alpha * lam, 2.0)
    np.testing.assert_allclose(U_a, U_b, atol=1e-9)
    np.testing.assert_allclose(V_a, V_b, atol=1e-9)


def test_deterministic_given_seed():
    X = random_instance(13)
    a = fit_fcm(X, 3, 2.0, seed=42)
    b = fit_fcm(X, 3, 2.0, seed=42)
    np.testing.assert_array_equal(a.partition, b.partition)
    np.testing.assert_array_equal(a.centers, b.centers)
