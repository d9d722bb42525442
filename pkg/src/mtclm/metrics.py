"""Prediction and variable-selection metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import kendalltau as _scipy_kendalltau
from scipy.stats import rankdata


@dataclass(frozen=True)
class SelectionMetrics:
    power: float
    fdr: float
    sensitivity: float
    specificity: float


@dataclass(frozen=True)
class MetricsReport:
    auc: float
    f1: float
    accuracy: float
    mae: float
    kendall_tau: float
    power: float = math.nan
    fdr: float = math.nan
    sensitivity: float = math.nan
    specificity: float = math.nan

    def __post_init__(self):
        # NaN marks a metric that does not apply to the method
        for name in ("auc", "f1", "accuracy", "power", "fdr", "sensitivity", "specificity"):
            v = getattr(self, name)
            if not (math.isnan(v) or 0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not (math.isnan(self.mae) or self.mae >= 0):
            raise ValueError(f"mae must be nonnegative, got {self.mae}")
        if not (math.isnan(self.kendall_tau) or -1.0 <= self.kendall_tau <= 1.0):
            raise ValueError(f"kendall_tau must lie in [-1, 1], got {self.kendall_tau}")

    def as_dict(self) -> dict:
        return asdict(self)


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: labels contain a single class")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def f1_score(pred, truth) -> float:
    pred = np.asarray(pred) == 1
    truth = np.asarray(truth) == 1
    tp = np.sum(pred & truth)
    fp = np.sum(pred & ~truth)
    fn = np.sum(~pred & truth)
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 0.0


def _same_length(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def accuracy(pred, truth) -> float:
    pred, truth = _same_length(pred, truth)
    return float(np.mean(pred == truth))


def mae(pred, truth) -> float:
    pred, truth = _same_length(pred, truth)
    return float(np.mean(np.abs(pred.astype(float) - truth.astype(float))))


def _tie_pairs(a) -> float:
    _, counts = np.unique(a, return_counts=True)
    return float(np.sum(counts * (counts - 1) / 2))


def kendall_tau(a, b, variant: str = "b") -> float:
    """Kendall's rank correlation, tie-corrected (``variant="b"``) or plain ``"a"``."""
    a, b = _same_length(a, b)
    if a.size < 2:
        raise ValueError("tau undefined: need at least two observations")
    if np.all(a == a.flat[0]) or np.all(b == b.flat[0]):
        raise ValueError("tau undefined: a vector is constant")
    tau_b = float(_scipy_kendalltau(a, b, variant="b").statistic)
    if variant == "b":
        return tau_b
    if variant == "a":
        n0 = a.size * (a.size - 1) / 2
        return tau_b * math.sqrt((n0 - _tie_pairs(a)) * (n0 - _tie_pairs(b))) / n0
    raise ValueError(f"unknown tau variant {variant!r}")


def _support_metrics(est, true) -> SelectionMetrics:
    if est.shape != true.shape:
        raise ValueError("estimated and true supports differ in length")
    tp = np.sum(est & true)
    fp = np.sum(est & ~true)
    tn = np.sum(~est & ~true)
    n_true = true.sum()
    n_sel = est.sum()
    n_null = (~true).sum()
    power = float(tp / n_true) if n_true else math.nan
    fdr = float(fp / n_sel) if n_sel else 0.0
    spec = float(tn / n_null) if n_null else math.nan
    return SelectionMetrics(power, fdr, power, spec)


def selection_metrics(beta_hat, gamma_hat, beta_support, gamma_support) -> SelectionMetrics:
    """Support recovery pooled over the 2p coefficient positions.

    A coefficient is selected iff it is exactly nonzero. FDR is 0 when
    nothing is selected; power (= sensitivity) is NaN without true signals.
    """
    est = np.concatenate([np.asarray(beta_hat) != 0, np.asarray(gamma_hat) != 0])
    true = np.concatenate([np.asarray(beta_support, dtype=bool),
                           np.asarray(gamma_support, dtype=bool)])
    return _support_metrics(est, true)


def per_task_selection(beta_hat, gamma_hat, beta_support, gamma_support) -> dict:
    """Selection metrics for each task separately and pooled."""
    return {
        "screening": _support_metrics(np.asarray(beta_hat) != 0,
                                      np.asarray(beta_support, dtype=bool)),
        "severity": _support_metrics(np.asarray(gamma_hat) != 0,
                                     np.asarray(gamma_support, dtype=bool)),
        "pooled": selection_metrics(beta_hat, gamma_hat, beta_support, gamma_support),
    }
