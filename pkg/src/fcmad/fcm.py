"""Fuzzy C-Means with a per-variable weighted squared Euclidean distance.

Windows are ``(N, n, width)`` arrays; prototypes share the trailing
``(n, width)`` shape. With uniform weights the algorithm reduces to standard
FCM: memberships depend only on distance ratios, and the prototype update
never sees the weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateClusterError, DimensionError, InvalidConfigError
from .series import SubsequenceSet

SIMPLEX_TOL = 1e-9
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 300
_EMPTY_FLOOR = 1e-300


def as_weight_vector(values, n=None) -> np.ndarray:
    """Validate ``values`` as a point of the probability simplex."""
    lam = np.array(values, dtype=float).reshape(-1)
    if n is not None and lam.size != n:
        raise DimensionError(f"expected {n} weights, got {lam.size}")
    if lam.size == 0 or np.any(~np.isfinite(lam)) or np.any(lam < 0):
        raise InvalidConfigError(f"weights must be finite and nonnegative: {lam}")
    if abs(lam.sum() - 1.0) > SIMPLEX_TOL:
        raise InvalidConfigError(f"weights must sum to 1, got {lam.sum()!r}")
    lam.setflags(write=False)
    return lam


def uniform_weights(n: int) -> np.ndarray:
    return as_weight_vector(np.full(n, 1.0 / n))


def _items(W) -> np.ndarray:
    return W.items if isinstance(W, SubsequenceSet) else np.asarray(W, dtype=float)


def weighted_distance(w, v, weights) -> float:
    """``sum_i weights[i] * ||w[i] - v[i]||^2`` for one window and one prototype."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    lam = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape != v.shape or lam.size != w.shape[0]:
        raise DimensionError(
            f"window {w.shape}, prototype {v.shape} and {lam.size} weights do not agree"
        )
    return float(np.dot(np.sum((w - v) ** 2, axis=1), lam))


def distance_matrix(items, centers, weights) -> np.ndarray:
    """Weighted squared distances, shape ``(c, N)``."""
    items = np.asarray(items, dtype=float)
    centers = np.asarray(centers, dtype=float)
    lam = np.asarray(weights, dtype=float).reshape(-1)
    if items.shape[1:] != centers.shape[1:] or lam.size != items.shape[1]:
        raise DimensionError(
            f"windows {items.shape[1:]}, prototypes {centers.shape[1:]} "
            f"and {lam.size} weights do not agree"
        )
    diff = items[None, :, :, :] - centers[:, None, :, :]
    per_var = np.einsum("cnvq,cnvq->cnv", diff, diff)
    return per_var @ lam


def objective(U, centers, W, weights, m) -> float:
    """Weighted FCM objective ``sum_ij u_ij^m d^2(w_j, v_i)``."""
    D = distance_matrix(_items(W), centers, weights)
    return float(np.sum(np.asarray(U) ** m * D))


def update_prototypes(U, W, m) -> np.ndarray:
    """Membership-weighted means of the windows, one per cluster."""
    items = _items(W)
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != items.shape[0]:
        raise DimensionError(f"partition {U.shape} does not match {items.shape[0]} windows")
    um = U ** m
    mass = um.sum(axis=1)
    empty = np.flatnonzero(mass < _EMPTY_FLOOR)
    if empty.size:
        raise DegenerateClusterError(f"cluster {int(empty[0])} has no membership mass")
    centers = np.tensordot(um, items, axes=(1, 0))
    return centers / mass[:, None, None]


def memberships_from_distances(D, m) -> np.ndarray:
    """Partition matrix from a ``(c, N)`` distance matrix.

    Columns with zero-distance prototypes split membership evenly among them.
    """
    D = np.asarray(D, dtype=float)
    c, N = D.shape
    dmin = D.min(axis=0)
    U = np.empty_like(D)
    zero_cols = dmin <= 0.0
    pos = ~zero_cols
    if np.any(pos):
        # ratios in [0, 1] avoid overflow for tiny distances
        ratio = dmin[pos] / D[:, pos]
        g = ratio ** (1.0 / (m - 1.0))
        U[:, pos] = g / g.sum(axis=0)
    if np.any(zero_cols):
        hits = (D[:, zero_cols] <= 0.0).astype(float)
        U[:, zero_cols] = hits / hits.sum(axis=0)
    return U


def update_partition(V, W, weights, m) -> np.ndarray:
    """Membership update from prototypes under the weighted distance."""
    if m <= 1:
        raise InvalidConfigError(f"fuzzifier must be > 1, got {m}")
    return memberships_from_distances(distance_matrix(_items(W), V, weights), m)


def initial_partition(c: int, N: int, seed) -> np.ndarray:
    """Seeded random partition with columns summing to one."""
    rng = np.random.default_rng(seed)
    U = rng.random((c, N))
    return U / U.sum(axis=0)


@dataclass
class FuzzyModel:
    centers: np.ndarray
    partition: np.ndarray
    weights: np.ndarray
    m: float
    objective: float
    iterations_run: int
    converged: bool
    objective_trace: list = field(default_factory=list, repr=False)

    @property
    def c(self) -> int:
        return self.centers.shape[0]


def fit_fcm(
    W,
    c: int,
    m: float = 2.0,
    weights=None,
    seed=0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    init_partition=None,
    callback=None,
) -> FuzzyModel:
    """Alternate prototype and membership updates until memberships settle.

    Starts from a seeded random partition (or ``init_partition``) and stops
    once the largest membership change falls below ``tol`` or after
    ``max_iter`` sweeps. ``callback(iteration, U, V)`` is invoked after every
    sweep, with iteration 0 being the initial state.
    """
    items = _items(W)
    N, n = items.shape[0], items.shape[1]
    if not 2 <= c <= N:
        raise InvalidConfigError(f"need 2 <= c <= N, got c={c}, N={N}")
    if m <= 1:
        raise InvalidConfigError(f"fuzzifier must be > 1, got {m}")
    if max_iter < 1 or tol < 0:
        raise InvalidConfigError("max_iter must be >= 1 and tol >= 0")
    lam = uniform_weights(n) if weights is None else as_weight_vector(weights, n)

    if init_partition is None:
        U = initial_partition(c, N, seed)
    else:
        U = np.array(init_partition, dtype=float)
        if U.shape != (c, N):
            raise DimensionError(f"initial partition must be {(c, N)}, got {U.shape}")
    V = update_prototypes(U, items, m)
    D = distance_matrix(items, V, lam)
    trace = [float(np.sum(U ** m * D))]
    if callback is not None:
        callback(0, U, V)

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        U_new = memberships_from_distances(D, m)
        V = update_prototypes(U_new, items, m)
        D = distance_matrix(items, V, lam)
        trace.append(float(np.sum(U_new ** m * D)))
        delta = float(np.max(np.abs(U_new - U)))
        U = U_new
        if callback is not None:
            callback(it, U, V)
        if delta < tol:
            converged = True
            break

    return FuzzyModel(
        centers=V,
        partition=U,
        weights=lam,
        m=float(m),
        objective=trace[-1],
        iterations_run=it,
        converged=converged,
        objective_trace=trace,
    )
