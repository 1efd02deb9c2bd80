"""Autocorrelation feature space used for shape anomalies.

Each variable row of a window is replaced by its sample autocorrelation
coefficients at lags ``1 .. q-1``. The coefficients are unchanged by an
affine rescaling of the row and only weakly affected by a time shift, so
Euclidean distances in this space compare waveform shape rather than phase.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateWindowError, InvalidSpecError
from .series import SubsequenceSet

_VAR_FLOOR = 1e-12


def _autocorr_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # rows: (..., q) -> coefficients (..., q-1) and the per-row denominator
    q = rows.shape[-1]
    dev = rows - rows.mean(axis=-1, keepdims=True)
    denom = np.sum(dev * dev, axis=-1)
    num = np.empty(rows.shape[:-1] + (q - 1,))
    for e in range(1, q):
        num[..., e - 1] = np.sum(dev[..., e:] * dev[..., :-e], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        coeffs = num / denom[..., None]
    return coeffs, denom


def autocorr(subseq) -> np.ndarray:
    """Autocorrelation coefficients of an ``n x q`` window, shape ``n x (q-1)``.

    Raises :class:`DegenerateWindowError` naming the first variable whose row
    is constant.
    """
    w = np.atleast_2d(np.asarray(subseq, dtype=float))
    if w.shape[1] < 2:
        raise InvalidSpecError("autocorrelation needs windows of length >= 2")
    coeffs, denom = _autocorr_rows(w)
    bad = np.flatnonzero(denom < _VAR_FLOOR)
    if bad.size:
        raise DegenerateWindowError(
            f"variable {int(bad[0])} is constant within the window", variable=int(bad[0])
        )
    return coeffs


def transform_set(subs: SubsequenceSet) -> SubsequenceSet:
    """Map every window of ``subs`` into autocorrelation space.

    Start offsets and the raw window spec are kept so scores stay aligned with
    timestamps.
    """
    if subs.items.shape[2] < 2:
        raise InvalidSpecError("autocorrelation needs windows of length >= 2")
    coeffs, denom = _autocorr_rows(subs.items)
    bad = np.argwhere(denom < _VAR_FLOOR)
    if bad.size:
        j, var = (int(v) for v in bad[0])
        start = int(subs.starts[j])
        raise DegenerateWindowError(
            f"window starting at {start} has constant variable {var}",
            variable=var,
            start_index=start,
        )
    return SubsequenceSet(coeffs, subs.starts, subs.spec)
