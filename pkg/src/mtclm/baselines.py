"""Comparator estimators: L1-penalized logistic regression for screening and
the L1-penalized parallel cumulative logit model over all levels.

Both minimize ``nll/n + lam * ||beta||_1`` by proximal gradient with
backtracking. The CLM is parameterized as
``logit P(Y <= k | x) = intercepts[k] + x @ beta`` for ``k = 0..K-1``, so a
positive coefficient pushes mass toward the healthy end, the same
orientation as the MtCLM screening coefficients. The logistic model is the
``K = 1`` case on the collapsed response ``(y >= 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import OrdinalDataset, ValidationError
from .likelihood import interval_prob_derivs, log_interval_prob
from .predict import clm_proba
from .prox import soft_threshold
from .smooth import LOG_GAP_FLOOR

KINDS = ("logistic_l1", "clm_l1")


@dataclass(frozen=True)
class ProxGradSettings:
    max_iter: int = 5000
    tol: float = 1e-7
    kkt_slack: float = 1e-4


@dataclass(frozen=True)
class BaselineFit:
    kind: str
    intercepts: np.ndarray
    coef: np.ndarray
    lam: float
    converged: bool
    iterations: int
    objective_trace: np.ndarray
    kkt_violation: float
    notes: tuple = field(default=())

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])

    def predict_proba(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        if x.shape[1] != self.coef.size:
            raise ValidationError(f"x has {x.shape[1]} columns, model expects {self.coef.size}")
        return clm_proba(self.intercepts, x @ self.coef)

    def screening_score(self, x) -> np.ndarray:
        """Predicted probability of disease, ``1 - P(Y=0|x)``."""
        return 1.0 - self.predict_proba(x)[:, 0]

    def nll(self, data: OrdinalDataset) -> float:
        """Held-out negative log-likelihood per observation."""
        y = _response(self.kind, data)
        return _ClmProblem(data.x, y, self.intercepts.size).value(self.intercepts, self.coef)


def _response(kind: str, data: OrdinalDataset) -> np.ndarray:
    if kind == "logistic_l1":
        return (data.y >= 1).astype(np.int64)
    if kind == "clm_l1":
        return data.y
    raise ValueError(f"unknown baseline kind {kind!r}")


class _ClmProblem:
    def __init__(self, x, y, n_cuts):
        self.x = x
        self.y = y
        self.n = x.shape[0]
        self.m = n_cuts

    def _bounds(self, thresholds, beta):
        cuts = np.concatenate(([-np.inf], thresholds, [np.inf]))
        u = self.x @ beta
        return cuts[self.y] + u, cuts[self.y + 1] + u

    def value(self, thresholds, beta) -> float:
        lo, hi = self._bounds(thresholds, beta)
        return -float(log_interval_prob(lo, hi).sum()) / self.n

    def value_grad(self, thresholds, beta):
        lo, hi = self._bounds(thresholds, beta)
        f = -float(log_interval_prob(lo, hi).sum()) / self.n
        d_lo, d_hi = interval_prob_derivs(lo, hi)
        m = self.m
        g_cut = (np.bincount(self.y + 1, weights=d_hi, minlength=m + 2)
                 + np.bincount(self.y, weights=d_lo, minlength=m + 2))
        return f, -g_cut[1:m + 1] / self.n, -(self.x.T @ (d_lo + d_hi)) / self.n


def _to_free(t):
    return np.concatenate(([t[0]], np.log(np.diff(t))))


def _to_natural(w):
    return np.cumsum(np.concatenate(([w[0]], np.exp(np.maximum(w[1:], LOG_GAP_FLOOR)))))


def _free_grad(w, g):
    tail = np.cumsum(g[::-1])[::-1]
    out = tail.copy()
    out[1:] = np.where(w[1:] > LOG_GAP_FLOOR, np.exp(w[1:]) * tail[1:], 0.0)
    return out


def cumulative_logits(y, n_levels: int) -> np.ndarray:
    """Logits of the empirical cumulative proportions ``P(Y <= k)``, ``k < n_levels - 1``.

    This is the closed-form intercept-only MLE when every level is observed;
    empty levels get a half-count.
    """
    counts = np.bincount(y, minlength=n_levels).astype(float)
    if np.any(counts == 0):
        counts += 0.5
    cum = np.cumsum(counts)[:-1] / counts.sum()
    return np.log(cum / (1 - cum))


def _prox_grad(x, y, n_levels, lam, settings: ProxGradSettings, init=None):
    problem = _ClmProblem(x, y, n_levels - 1)
    if init is None:
        thresholds = cumulative_logits(y, n_levels)
        beta = np.zeros(x.shape[1])
    else:
        thresholds, beta = (np.array(v, dtype=float) for v in init)
    w = _to_free(thresholds)

    def smooth(w, beta):
        f, gt, gb = problem.value_grad(_to_natural(w), beta)
        return f, _free_grad(w, gt), gb

    f, gw, gb = smooth(w, beta)
    F = f + lam * np.abs(beta).sum()
    trace = [F]
    step = 1.0
    prev = None
    converged = False
    it = 0
    for it in range(1, settings.max_iter + 1):
        g = np.concatenate((gw, gb))
        if prev is not None:
            s = np.concatenate((w, beta)) - prev[0]
            yv = g - prev[1]
            sy = s @ yv
            if sy > 0:
                step = float(np.clip((s @ s) / sy, 1e-6, 1e6))
        while True:
            w_new = w - step * gw
            b_new = soft_threshold(beta - step * gb, step * lam)
            f_new, gw_new, gb_new = smooth(w_new, b_new)
            dw = w_new - w
            db = b_new - beta
            quad = f + gw @ dw + gb @ db + (dw @ dw + db @ db) / (2 * step)
            if np.isfinite(f_new) and f_new <= quad + 1e-12 * abs(f):
                break
            step *= 0.5
            if step < 1e-14:
                break
        mapping = max(np.max(np.abs(dw)), np.max(np.abs(db), initial=0.0)) / step
        prev = (np.concatenate((w, beta)), g)
        w, beta, f, gw, gb = w_new, b_new, f_new, gw_new, gb_new
        trace.append(f + lam * np.abs(beta).sum())
        if mapping <= settings.tol:
            converged = True
            break
        if step < 1e-14:
            break
    zero = beta == 0
    viol = np.abs(gb[zero]) - lam
    kkt = float(max(viol.max(initial=-math.inf), np.max(np.abs(gb[~zero] + lam * np.sign(beta[~zero])),
                                                          initial=-math.inf)))
    return _to_natural(w), beta, converged, it, np.array(trace), kkt


def _check_lambda(lam):
    if not (lam >= 0 and math.isfinite(lam)):
        raise ValidationError(f"lambda must be finite and nonnegative, got {lam}")


def _check_data(data: OrdinalDataset):
    if data.n < 1 or data.p < 1:
        raise ValidationError("empty data")
    if not np.all(np.isfinite(data.x)):
        raise ValidationError("non-finite predictor")
    if np.any((data.y < 0) | (data.y > data.k_max)):
        raise ValidationError("label out of range")


def fit_logistic_l1(data: OrdinalDataset, lam: float, settings: ProxGradSettings | None = None,
                    init=None) -> BaselineFit:
    """Screening-only logistic regression on ``y = 0`` versus ``y >= 1``."""
    _check_lambda(lam)
    _check_data(data)
    y = _response("logistic_l1", data)
    if y.min() == y.max():
        raise ValidationError("logistic baseline needs both healthy and diseased rows")
    settings = settings or ProxGradSettings()
    t, b, conv, it, trace, kkt = _prox_grad(data.x, y, 2, lam, settings, init)
    return BaselineFit("logistic_l1", t, b, lam, conv, it, trace, kkt)


def fit_clm_l1(data: OrdinalDataset, lam: float, settings: ProxGradSettings | None = None,
               init=None) -> BaselineFit:
    """Parallel cumulative logit model over levels ``0..k_max``."""
    _check_lambda(lam)
    _check_data(data)
    if data.k_max < 1:
        raise ValidationError("CLM needs at least two levels")
    settings = settings or ProxGradSettings()
    notes = ()
    if np.any(data.level_counts() == 0):
        notes = ("empty response levels present",)
    t, b, conv, it, trace, kkt = _prox_grad(data.x, data.y, data.k_max + 1, lam, settings, init)
    return BaselineFit("clm_l1", t, b, lam, conv, it, trace, kkt, notes)


def fit_baseline(kind: str, data: OrdinalDataset, lam: float,
                 settings: ProxGradSettings | None = None, init=None) -> BaselineFit:
    if kind == "logistic_l1":
        return fit_logistic_l1(data, lam, settings, init)
    if kind == "clm_l1":
        return fit_clm_l1(data, lam, settings, init)
    raise ValueError(f"unknown baseline kind {kind!r}")
