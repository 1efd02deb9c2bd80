"""Multivariate series container, z-score normalization and windowing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError

_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class MultiSeries:
    """A ``p x n`` real-valued series, one row per timestamp.

    The value array is copied and made read-only on construction.
    """

    values: np.ndarray
    variable_names: tuple = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise InvalidSpecError(f"series must be 2-D (p x n), got shape {values.shape}")
        p, n = values.shape
        if p < 2:
            raise InvalidSpecError(f"series length must be >= 2, got {p}")
        if n < 1:
            raise InvalidSpecError("series needs at least one variable")
        if not np.all(np.isfinite(values)):
            raise InvalidSpecError("series contains NaN or Inf")
        names = tuple(self.variable_names) or tuple(f"x{i + 1}" for i in range(n))
        if len(names) != n:
            raise InvalidSpecError(f"{len(names)} variable names for {n} columns")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "variable_names", tuple(str(s) for s in names))

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def with_values(self, values) -> "MultiSeries":
        return MultiSeries(values, self.variable_names)


@dataclass(frozen=True)
class WindowSpec:
    q: int
    r: int = 1

    def __post_init__(self):
        if int(self.q) != self.q or int(self.r) != self.r:
            raise InvalidSpecError("window length and stride must be integers")
        if self.q < 1:
            raise InvalidSpecError(f"window length must be >= 1, got {self.q}")
        if self.r < 1:
            raise InvalidSpecError(f"stride must be >= 1, got {self.r}")

    def count(self, p: int) -> int:
        """Number of complete windows over a series of length ``p``."""
        if self.q > p:
            raise InvalidSpecError(f"window length {self.q} exceeds series length {p}")
        return (p - self.q) // self.r + 1


@dataclass(frozen=True)
class SubsequenceSet:
    """``N`` windows stored as an ``(N, n, rows)`` array plus start offsets.

    ``rows`` is ``q`` for raw windows and ``q - 1`` after the
    autocorrelation transform; ``spec`` always refers to the raw windowing.
    """

    items: np.ndarray
    starts: np.ndarray
    spec: WindowSpec

    def __post_init__(self):
        items = np.asarray(self.items, dtype=float)
        starts = np.asarray(self.starts, dtype=np.int64)
        if items.ndim != 3 or starts.shape != (items.shape[0],):
            raise InvalidSpecError("items must be (N, n, width) with one start per item")
        items.setflags(write=False)
        starts.setflags(write=False)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "starts", starts)

    @property
    def N(self) -> int:
        return self.items.shape[0]

    def __len__(self):
        return self.N

    def flat(self) -> np.ndarray:
        """Items flattened to ``(N, n * width)``."""
        return self.items.reshape(self.N, -1)


def zscore_normalize(series: MultiSeries) -> MultiSeries:
    """Standardize every variable to mean 0, population std 1.

    Constant variables (std below 1e-12) map to all zeros.
    """
    x = series.values
    mean = x.mean(axis=0)
    centered = x - mean
    std = np.sqrt(np.mean(centered ** 2, axis=0))
    out = np.zeros_like(x)
    ok = std >= _STD_FLOOR
    out[:, ok] = centered[:, ok] / std[ok]
    return series.with_values(out)


def slide_windows(series: MultiSeries, spec: WindowSpec) -> SubsequenceSet:
    """Cut the series into windows of ``spec.q`` timestamps every ``spec.r`` steps.

    A trailing partial window is dropped.
    """
    count = spec.count(series.p)
    starts = np.arange(count, dtype=np.int64) * spec.r
    # (p, n) -> (N, n, q)
    idx = starts[:, None] + np.arange(spec.q)[None, :]
    items = series.values[idx].transpose(0, 2, 1)
    return SubsequenceSet(items, starts, spec)


def covering_windows(starts, q: int, points) -> np.ndarray:
    """Indices of windows ``[s, s + q)`` that contain any of ``points``."""
    starts = np.asarray(starts)
    pts = np.asarray(sorted(set(int(t) for t in points)), dtype=np.int64)
    if pts.size == 0:
        return np.zeros(0, dtype=np.int64)
    # first point >= start, check it lies before start + q
    pos = np.searchsorted(pts, starts, side="left")
    hit = pos < pts.size
    hit[hit] = pts[pos[hit]] < starts[hit] + q
    return np.flatnonzero(hit)
