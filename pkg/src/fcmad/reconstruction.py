"""Degranulation of windows from prototypes and memberships, and the errors
used both as PSO fitness and as per-window anomaly scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClusterError, DimensionError
from .fcm import distance_matrix


@dataclass
class Reconstruction:
    reconstructed: np.ndarray
    per_subsequence_error: np.ndarray
    total_error: float


def reconstruct(U, V, m) -> np.ndarray:
    """Rebuild each window as the ``u^m``-weighted average of the prototypes.

    This is the stationary point of the weighted degranulation objective for
    any choice of variable weights, so the weights are not needed here.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.ndim != 2 or U.shape[0] != V.shape[0]:
        raise DimensionError(f"partition {U.shape} does not match {V.shape[0]} prototypes")
    um = U ** m
    mass = um.sum(axis=0)
    if np.any(mass <= 0):
        j = int(np.flatnonzero(mass <= 0)[0])
        raise DegenerateClusterError(f"window {j} has zero total membership")
    return np.tensordot(um, V, axes=(0, 0)) / mass[:, None, None]


def degranulation_objective(W_hat, U, V, weights, m) -> float:
    """``sum_ij u_ij^m d^2(w_hat_j, v_i)`` with the weighted distance."""
    return float(np.sum(np.asarray(U) ** m * distance_matrix(W_hat, V, weights)))


def _check(W, W_hat):
    W = np.asarray(getattr(W, "items", W), dtype=float)
    W_hat = np.asarray(W_hat, dtype=float)
    if W.shape != W_hat.shape:
        raise DimensionError(f"shape mismatch: {W.shape} vs {W_hat.shape}")
    return W, W_hat


def anomaly_scores(W, W_hat) -> np.ndarray:
    """Unweighted squared reconstruction error of every window."""
    W, W_hat = _check(W, W_hat)
    diff = (W - W_hat).reshape(W.shape[0], -1)
    return np.einsum("ij,ij->i", diff, diff)


def reconstruction_error(W, W_hat) -> float:
    """Total unweighted squared reconstruction error."""
    return float(np.sum(anomaly_scores(W, W_hat)))


def reconstruct_model(W, model) -> Reconstruction:
    W_hat = reconstruct(model.partition, model.centers, model.m)
    s = anomaly_scores(W, W_hat)
    return Reconstruction(W_hat, s, float(np.sum(s)))
