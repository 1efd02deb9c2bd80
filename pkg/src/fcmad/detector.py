"""End-to-end detection: normalize, window, cluster with optimized weights,
reconstruct, and score."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import FcmadError, InvalidConfigError, UndefinedIndexError
from .fcm import DEFAULT_MAX_ITER, DEFAULT_TOL, FuzzyModel, as_weight_vector, fit_fcm
from .pso import PsoConfig, PsoResult, optimize_weights
from .reconstruction import anomaly_scores, reconstruct
from .representation import transform_set
from .series import MultiSeries, WindowSpec, covering_windows, slide_windows, zscore_normalize

log = logging.getLogger(__name__)

MODES = ("amplitude", "shape")


@dataclass(frozen=True)
class DetectorConfig:
    """Parameters of one detection run.

    ``weights`` fixes the variable weights and skips the swarm search; leave
    it as ``None`` to optimize them.
    """

    mode: str = "amplitude"
    c: int = 2
    m: float = 2.0
    window: WindowSpec = field(default_factory=lambda: WindowSpec(5, 1))
    pso: PsoConfig = field(default_factory=PsoConfig)
    fcm_tol: float = DEFAULT_TOL
    fcm_max_iter: int = DEFAULT_MAX_ITER
    seed: int = 0
    weights: tuple | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "shape" and self.window.q < 3:
            raise InvalidConfigError("shape mode needs windows of length >= 3")
        if self.m <= 1:
            raise InvalidConfigError(f"fuzzifier must be > 1, got {self.m}")
        if self.c < 2:
            raise InvalidConfigError(f"need at least 2 clusters, got {self.c}")
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(x) for x in self.weights))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = None if self.weights is None else list(self.weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        d = dict(d)
        d["window"] = WindowSpec(**d["window"])
        d["pso"] = PsoConfig(**d["pso"])
        return cls(**d)


@dataclass
class AnomalyScores:
    starts: np.ndarray
    per_subsequence: np.ndarray
    per_point: np.ndarray
    weights_used: np.ndarray
    model: FuzzyModel
    window: WindowSpec
    pso: PsoResult | None = None


def default_stride(q: int) -> int:
    """Stride of 10% of the window length, at least one step."""
    return max(1, int(round(0.1 * q)))


def point_scores(starts, q: int, scores, p: int) -> np.ndarray:
    """Per-timestamp maximum over the windows covering each timestamp."""
    out = np.zeros(p)
    idx = (np.asarray(starts)[:, None] + np.arange(q)[None, :]).ravel()
    np.maximum.at(out, idx, np.repeat(np.asarray(scores, dtype=float), q))
    return out


@contextmanager
def _stage(name):
    try:
        yield
    except FcmadError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def detect(series: MultiSeries, config: DetectorConfig | None = None, workers: int = 1) -> AnomalyScores:
    config = config or DetectorConfig()
    with _stage("normalize"):
        z = zscore_normalize(series)
    with _stage("windowing"):
        windows = slide_windows(z, config.window)
    feats = windows
    if config.mode == "shape":
        with _stage("autocorrelation"):
            feats = transform_set(windows)

    n = series.n
    pso_result = None
    with _stage("weights"):
        if config.weights is not None:
            lam = as_weight_vector(config.weights, n)
        else:
            pso_result = optimize_weights(
                feats,
                config.c,
                config.m,
                config.pso,
                fcm_seed=config.seed,
                fcm_tol=config.fcm_tol,
                fcm_max_iter=config.fcm_max_iter,
                workers=workers,
            )
            lam = pso_result.best_weights
            log.debug("weights %s fitness %.6g", lam, pso_result.best_fitness)

    with _stage("clustering"):
        model = fit_fcm(
            feats, config.c, config.m, lam, seed=config.seed, tol=config.fcm_tol, max_iter=config.fcm_max_iter
        )
    with _stage("reconstruction"):
        s = anomaly_scores(feats, reconstruct(model.partition, model.centers, model.m))
    per_point = point_scores(windows.starts, config.window.q, s, series.p)
    return AnomalyScores(windows.starts, s, per_point, model.weights, model, config.window, pso_result)


def _subsequence_scores(scores) -> np.ndarray:
    return np.asarray(getattr(scores, "per_subsequence", scores), dtype=float)


def confidence_index(scores, anomaly_window_indices) -> float:
    """Mean score of the anomalous windows divided by the mean of all windows."""
    s = _subsequence_scores(scores)
    idx = np.unique(np.asarray(list(anomaly_window_indices), dtype=np.int64))
    if idx.size == 0:
        raise InvalidConfigError("no anomalous windows given")
    if idx[0] < 0 or idx[-1] >= s.size:
        raise InvalidConfigError(f"window index out of range 0..{s.size - 1}")
    mean = s.mean()
    if not mean > 0:
        raise UndefinedIndexError("all anomaly scores are zero")
    return float(s[idx].mean() / mean)


def proxy_confidence_index(scores) -> float:
    """Label-free stand-in: largest window score over the mean score."""
    s = _subsequence_scores(scores)
    mean = s.mean()
    if not mean > 0:
        raise UndefinedIndexError("all anomaly scores are zero")
    return float(s.max() / mean)


@dataclass
class TuneResult:
    c: int
    q: int
    grid: dict
    best: AnomalyScores | None = None

    def rows(self):
        """``(clusters, window, confidence_index)`` sorted by cluster then window."""
        return [(c, q, f) for (c, q), f in sorted(self.grid.items())]


def tune_parameters(
    series: MultiSeries,
    mode: str,
    c_range,
    q_range,
    anomaly_point_labels,
    config: DetectorConfig | None = None,
    stride: int | None = 1,
    workers: int = 1,
) -> TuneResult:
    """Grid search over cluster counts and window lengths by confidence index.

    ``anomaly_point_labels`` is a boolean per-timestamp mask (or an iterable of
    anomalous timestamps). ``stride=None`` uses 10% of each window length.
    Ties go to the smaller cluster count, then the shorter window.
    """
    base = config or DetectorConfig(mode=mode)
    labels = np.asarray(anomaly_point_labels)
    if labels.dtype == bool or (labels.size == series.p and set(np.unique(labels)) <= {0, 1}):
        points = np.flatnonzero(labels.astype(bool))
    else:
        points = labels.astype(np.int64)
    cells = [(int(c), int(q)) for c in c_range for q in q_range]
    if not cells:
        raise InvalidConfigError("empty parameter grid")

    def run(cell):
        c, q = cell
        r = default_stride(q) if stride is None else stride
        cfg = replace(base, mode=mode, c=c, window=WindowSpec(q, r))
        res = detect(series, cfg)
        idx = covering_windows(res.starts, q, points)
        if idx.size == 0:
            raise InvalidConfigError(f"no window covers a labeled point for c={c}, q={q}")
        return confidence_index(res, idx), res

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(run, cells))
    else:
        outs = [run(cell) for cell in cells]

    grid = {cell: f for cell, (f, _) in zip(cells, outs)}
    best_cell = min(cells, key=lambda cq: (-grid[cq], cq[0], cq[1]))
    best = outs[cells.index(best_cell)][1]
    return TuneResult(best_cell[0], best_cell[1], grid, best)
