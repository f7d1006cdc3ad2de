"""Evaluation and subgroup-fairness mathematics.

Conventions used everywhere:

* sensitivity = recall on the positive class (CI, or depressed), specificity
  = recall on the negative class, UAR = their mean;
* intra-group imbalance delta_g = Sp_g - Se_g, positive when the model is
  conservative (favors the negative class) inside subgroup g;
* inter-group disparity Delta_metric = metric_A - metric_B for an ordered
  pair of groups;
* subgroup AUC is the probability that a random positive outscores a random
  negative within the subgroup, ties counting one half;
* distribution overlap is the summed bin-wise minimum of the two
  class-conditional histogram masses over shared bins.

Metrics undefined for empty class cells surface as explicit ``None`` values
(or errors where a scalar is required); they are never imputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special

from .errors import NumericError, UndefinedMetricError

SIGNIFICANCE_LEVEL = 0.05
DEFAULT_BINS = 30


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    tn: int
    fp: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.tn, self.fp) < 0:
            raise NumericError("confusion counts must be non-negative")

    @property
    def n_positive(self) -> int:
        return self.tp + self.fn

    @property
    def n_negative(self) -> int:
        return self.tn + self.fp


def confusion_from(labels, predictions) -> ConfusionCounts:
    labels = np.asarray(labels).astype(bool)
    predictions = np.asarray(predictions).astype(bool)
    if labels.shape != predictions.shape:
        raise NumericError("labels and predictions differ in length")
    return ConfusionCounts(
        tp=int(np.sum(labels & predictions)),
        fn=int(np.sum(labels & ~predictions)),
        tn=int(np.sum(~labels & ~predictions)),
        fp=int(np.sum(~labels & predictions)),
    )


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    uar: float
    sensitivity: float
    specificity: float


def core_metrics(counts: ConfusionCounts) -> MetricReport:
    """Accuracy, UAR, sensitivity, specificity; errors on empty classes."""
    if counts.n_positive == 0:
        raise UndefinedMetricError("sensitivity undefined: no positive samples")
    if counts.n_negative == 0:
        raise UndefinedMetricError("specificity undefined: no negative samples")
    se = counts.tp / counts.n_positive
    sp = counts.tn / counts.n_negative
    total = counts.n_positive + counts.n_negative
    return MetricReport(
        accuracy=(counts.tp + counts.tn) / total,
        uar=(se + sp) / 2.0,
        sensitivity=se,
        specificity=sp,
    )


@dataclass(frozen=True)
class SubgroupReport:
    dimension: str
    group: str
    n_positive: int
    n_negative: int
    sensitivity: float | None
    specificity: float | None

    @property
    def delta(self) -> float | None:
        """Sp_g - Se_g; None when either side is undefined."""
        if self.sensitivity is None or self.specificity is None:
            return None
        return self.specificity - self.sensitivity


def subgroup_metrics(labels, predictions, mask, dimension: str, group: str) -> SubgroupReport:
    """Per-subgroup recall metrics; absent classes yield None, not zero."""
    mask = np.asarray(mask).astype(bool)
    if not mask.any():
        raise UndefinedMetricError(f"subgroup {dimension}={group} is empty")
    counts = confusion_from(np.asarray(labels)[mask], np.asarray(predictions)[mask])
    se = counts.tp / counts.n_positive if counts.n_positive > 0 else None
    sp = counts.tn / counts.n_negative if counts.n_negative > 0 else None
    return SubgroupReport(dimension, group, counts.n_positive, counts.n_negative, se, sp)


@dataclass(frozen=True)
class TTestResult:
    t: float | None
    p: float | None
    df: int
    degenerate: bool = False
    note: str = ""

    @property
    def significant(self) -> bool:
        return self.p is not None and self.p < SIGNIFICANCE_LEVEL


def paired_ttest(differences) -> TTestResult:
    """Two-sided paired t-test on per-fold differences.

    t = mean / (sd / sqrt(n)) with sample sd (ddof 1) and df = n - 1.
    All-zero differences are the exact null (t = 0, p = 1); zero variance
    around a nonzero mean admits no finite t and is reported as degenerate
    rather than given a fabricated p-value.
    """
    d = np.asarray(differences, dtype=np.float64).reshape(-1)
    if d.size < 2:
        raise NumericError(f"paired t-test needs >= 2 folds, got {d.size}")
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    df = d.size - 1
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, p=1.0, df=df)
        return TTestResult(
            t=None, p=None, df=df, degenerate=True,
            note="degenerate: identical folds with nonzero mean",
        )
    t = mean / (sd / math.sqrt(d.size))
    p = 2.0 * (1.0 - scipy.special.stdtr(df, abs(t)))
    return TTestResult(t=t, p=float(p), df=df)


@dataclass(frozen=True)
class DisparityReport:
    dimension: str
    group_a: str
    group_b: str
    delta_sens: float
    delta_spec: float
    p_sens: float | None = None
    p_spec: float | None = None

    @property
    def significant_sens(self) -> bool:
        return self.p_sens is not None and self.p_sens < SIGNIFICANCE_LEVEL

    @property
    def significant_spec(self) -> bool:
        return self.p_spec is not None and self.p_spec < SIGNIFICANCE_LEVEL


def disparity(report_a: SubgroupReport, report_b: SubgroupReport) -> DisparityReport:
    """Ordered inter-group differences Se_A - Se_B and Sp_A - Sp_B."""
    for r in (report_a, report_b):
        if r.sensitivity is None or r.specificity is None:
            raise UndefinedMetricError(
                f"disparity undefined: {r.dimension}={r.group} has an empty class cell"
            )
    return DisparityReport(
        dimension=report_a.dimension,
        group_a=report_a.group,
        group_b=report_b.group,
        delta_sens=report_a.sensitivity - report_b.sensitivity,
        delta_spec=report_a.specificity - report_b.specificity,
    )


def auc(pos_scores, neg_scores) -> float:
    """P(score_pos > score_neg) + 0.5 P(tie), via midranks."""
    pos = np.asarray(pos_scores, dtype=np.float64).reshape(-1)
    neg = np.asarray(neg_scores, dtype=np.float64).reshape(-1)
    if pos.size == 0 or neg.size == 0:
        raise UndefinedMetricError("AUC undefined: one class has no scores")
    combined = np.concatenate([pos, neg])
    order = np.argsort(combined, kind="mergesort")
    ranks = np.empty(combined.size, dtype=np.float64)
    sorted_vals = combined[order]
    i = 0
    while i < sorted_vals.size:
        j = i
        while j + 1 < sorted_vals.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    rank_sum_pos = float(np.sum(ranks[: pos.size]))
    u = rank_sum_pos - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def auc_subgroup(scores, labels, mask) -> float:
    """Subgroup AUC over continuous scores; labels are positive-class flags."""
    mask = np.asarray(mask).astype(bool)
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=np.float64)
    pos = scores[mask & labels]
    neg = scores[mask & ~labels]
    return auc(pos, neg)


@dataclass(frozen=True)
class ScoreDistribution:
    bin_edges: np.ndarray
    pos_mass: np.ndarray
    neg_mass: np.ndarray

    @property
    def overlap(self) -> float:
        return float(np.sum(np.minimum(self.pos_mass, self.neg_mass)))


def score_distribution(pos_scores, neg_scores, n_bins: int = DEFAULT_BINS) -> ScoreDistribution:
    """Class-conditional histograms over shared bins spanning the pooled range."""
    pos = np.asarray(pos_scores, dtype=np.float64).reshape(-1)
    neg = np.asarray(neg_scores, dtype=np.float64).reshape(-1)
    if pos.size == 0 or neg.size == 0:
        raise UndefinedMetricError("score distribution needs both classes")
    pooled = np.concatenate([pos, neg])
    lo, hi = float(pooled.min()), float(pooled.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, n_bins + 1)
    pos_hist, _ = np.histogram(pos, bins=edges)
    neg_hist, _ = np.histogram(neg, bins=edges)
    return ScoreDistribution(
        bin_edges=edges,
        pos_mass=pos_hist / pos.size,
        neg_mass=neg_hist / neg.size,
    )
