"""Thresholding, confusion-matrix metrics and baseline detectors."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .detector import AnomalyScores, DetectorConfig, detect, point_scores
from .errors import DimensionError, InvalidConfigError
from .fcm import uniform_weights
from .series import MultiSeries, SubsequenceSet, slide_windows, zscore_normalize


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_labels(cls, pred, truth) -> "ConfusionCounts":
        pred = np.asarray(pred, dtype=bool)
        truth = np.asarray(truth, dtype=bool)
        if pred.shape != truth.shape:
            raise DimensionError(f"prediction {pred.shape} and truth {truth.shape} differ")
        return cls(
            tp=int(np.sum(pred & truth)),
            fp=int(np.sum(pred & ~truth)),
            tn=int(np.sum(~pred & ~truth)),
            fn=int(np.sum(~pred & truth)),
        )


def _ratio(num, den):
    # None marks an undefined metric (zero denominator), never 0
    return None if den == 0 else num / den


@dataclass(frozen=True)
class MetricReport:
    """Detection metrics; a field is ``None`` when its denominator is zero."""

    counts: ConfusionCounts
    accuracy: float | None
    sensitivity: float | None
    specificity: float | None
    precision: float | None
    recall: float | None
    f_measure: float | None
    threshold: float | None = None

    @classmethod
    def from_counts(cls, counts: ConfusionCounts, threshold=None) -> "MetricReport":
        tp, fp, tn, fn = counts.tp, counts.fp, counts.tn, counts.fn
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        if precision is None or recall is None or tp == 0:
            f = None
        else:
            # harmonic mean of precision and recall as one exact division
            f = _ratio(2 * tp, 2 * tp + fp + fn)
        return cls(
            counts=counts,
            accuracy=_ratio(tn + tp, tn + fp + fn + tp),
            sensitivity=_ratio(tp, tp + fn),
            specificity=_ratio(tn, tn + fp),
            precision=precision,
            recall=recall,
            f_measure=f,
            threshold=threshold,
        )

    def table(self) -> str:
        def fmt(v):
            return "undefined" if v is None else f"{v:.6f}"

        lines = [f"{'metric':<12} value"]
        for name in ("accuracy", "sensitivity", "specificity", "f_measure", "precision", "recall"):
            lines.append(f"{name:<12} {fmt(getattr(self, name))}")
        c = self.counts
        lines.append(f"{'threshold':<12} {'n/a' if self.threshold is None else repr(self.threshold)}")
        lines.append(f"{'counts':<12} tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn}")
        return "\n".join(lines)


def binarize(scores, threshold) -> np.ndarray:
    """``True`` (abnormal) where the score strictly exceeds the threshold."""
    if np.isnan(threshold):
        raise InvalidConfigError("threshold must not be NaN")
    return np.asarray(getattr(scores, "per_point", scores), dtype=float) > threshold


def metrics(pred, truth, threshold=None) -> MetricReport:
    return MetricReport.from_counts(ConfusionCounts.from_labels(pred, truth), threshold)


def threshold_candidates(scores) -> np.ndarray:
    """Midpoints between consecutive distinct scores, with infinite sentinels."""
    u = np.unique(np.asarray(scores, dtype=float))
    mids = (u[:-1] + u[1:]) / 2.0
    return np.concatenate(([-np.inf], mids, [np.inf]))


def best_threshold(scores, truth) -> tuple[float, MetricReport]:
    """Accuracy-maximizing threshold over the candidate sweep; ties keep the smallest."""
    s = np.asarray(getattr(scores, "per_point", scores), dtype=float)
    truth = np.asarray(truth, dtype=bool)
    if s.shape != truth.shape:
        raise DimensionError(f"scores {s.shape} and truth {truth.shape} differ")
    cand = threshold_candidates(s)
    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    pos_sorted = truth[order].astype(np.int64)
    # points with score <= t are predicted normal
    below = np.searchsorted(s_sorted, cand, side="right")
    pos_cum = np.concatenate(([0], np.cumsum(pos_sorted)))
    fn = pos_cum[below]
    tn = below - fn
    tp = pos_cum[-1] - fn
    correct = tp + tn
    k = int(np.argmax(correct))  # first maximum == smallest threshold
    t = float(cand[k])
    return t, metrics(binarize(s, t), truth, threshold=t)


def knn_discord_scores(W: SubsequenceSet, exclusion: int | None = None) -> np.ndarray:
    """Squared distance from each window to its nearest non-overlapping neighbor.

    Windows whose starts differ by less than ``exclusion`` (default: the window
    length) are trivial matches and are skipped.
    """
    if W.N < 2:
        raise InvalidConfigError("need at least two windows")
    exclusion = W.spec.q if exclusion is None else int(exclusion)
    X = W.flat()
    starts = W.starts
    out = np.empty(W.N)
    for j in range(W.N):
        allowed = np.abs(starts - starts[j]) >= exclusion
        if not allowed.any():
            raise InvalidConfigError(f"exclusion {exclusion} leaves window {j} without a neighbor")
        diff = X[allowed] - X[j]
        out[j] = np.min(np.einsum("ij,ij->i", diff, diff))
    return out


def knn_detect(series: MultiSeries, window, exclusion: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """1-NN baseline on the normalized series: ``(starts, window scores, point scores)``."""
    W = slide_windows(zscore_normalize(series), window)
    s = knn_discord_scores(W, exclusion)
    return W.starts, s, point_scores(W.starts, window.q, s, series.p)


def detect_standard_fcm(series: MultiSeries, config: DetectorConfig | None = None) -> AnomalyScores:
    """The detector with uniform weights and no swarm search."""
    config = config or DetectorConfig()
    return detect(series, replace(config, weights=tuple(uniform_weights(series.n))))
