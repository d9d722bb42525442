"""Negative log-likelihood of the multi-task cumulative logit model and its
analytic gradients.

Both blocks are scaled by ``1/n`` with ``n`` the full dataset size, so
``total_nll = screening_nll + severity_nll``.

Interval probabilities ``sigma(hi) - sigma(lo)`` are evaluated through the
identity ``sigma(hi) - sigma(lo) = sigma(hi) * sigma(-lo) * (1 - exp(lo - hi))``
which stays accurate in the tails and handles the infinite boundary
thresholds without special cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from .data import MtclmParams, OrdinalDataset, ValidationError

LOG_FLOOR = np.log(1e-300)


@dataclass(frozen=True)
class LikelihoodValue:
    screening_nll: float
    severity_nll: float

    @property
    def total_nll(self) -> float:
        return self.screening_nll + self.severity_nll


def _log1mexp(d):
    # log(1 - exp(d)) for d <= 0
    with np.errstate(divide="ignore"):
        return np.log(-np.expm1(d))


def log_interval_prob(lo, hi):
    """``log(sigma(hi) - sigma(lo))``, floored at ``log(1e-300)``."""
    out = log_expit(hi) + log_expit(-lo) + _log1mexp(lo - hi)
    return np.maximum(out, LOG_FLOOR)


def interval_prob_derivs(lo, hi):
    """Partial derivatives of ``log(sigma(hi) - sigma(lo))`` in ``lo`` and ``hi``."""
    log_gap = np.maximum(_log1mexp(lo - hi), LOG_FLOOR)
    d_hi = np.exp(log_expit(-hi) - log_expit(-lo) - log_gap)
    d_lo = -np.exp(log_expit(lo) - log_expit(hi) - log_gap)
    return d_lo, d_hi


def _cuts(thresholds) -> np.ndarray:
    return np.concatenate(([-np.inf], np.asarray(thresholds, dtype=float), [np.inf]))


def _check_dims(data: OrdinalDataset, coef) -> None:
    if np.ndim(coef) != 1 or np.size(coef) != data.p:
        raise ValidationError(f"coefficient length {np.size(coef)} does not match p={data.p}")


def _check_zeta(data: OrdinalDataset, zeta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    if zeta.size != data.k_max - 1:
        raise ValidationError(f"zeta has {zeta.size} entries, expected {data.k_max - 1}")
    if np.any(np.diff(zeta) <= 0):
        raise ValidationError("zeta must be strictly increasing")
    return zeta


def screening_nll(data: OrdinalDataset, alpha: float, beta) -> float:
    _check_dims(data, beta)
    eta = alpha + data.x @ np.asarray(beta, dtype=float)
    healthy = data.y == 0
    ll = np.where(healthy, log_expit(eta), log_expit(-eta))
    return -float(ll.sum()) / data.n


def severity_nll(data: OrdinalDataset, zeta, gamma) -> float:
    """Ordinal CLM part; only rows with ``y >= 1`` contribute."""
    _check_dims(data, gamma)
    zeta = _check_zeta(data, zeta)
    sick = data.y >= 1
    if not sick.any():
        return 0.0
    yk = data.y[sick]
    u = data.x[sick] @ np.asarray(gamma, dtype=float)
    cuts = _cuts(zeta)
    return -float(log_interval_prob(cuts[yk - 1] + u, cuts[yk] + u).sum()) / data.n


def nll(data: OrdinalDataset, params: MtclmParams) -> LikelihoodValue:
    return LikelihoodValue(screening_nll(data, params.alpha, params.beta),
                           severity_nll(data, params.zeta, params.gamma))


def total_nll(data: OrdinalDataset, params: MtclmParams) -> float:
    return nll(data, params).total_nll


def grad_screening(data: OrdinalDataset, alpha: float, beta) -> tuple[float, np.ndarray]:
    _check_dims(data, beta)
    eta = alpha + data.x @ np.asarray(beta, dtype=float)
    r = -((data.y == 0) - expit(eta)) / data.n
    return float(r.sum()), data.x.T @ r


def grad_severity(data: OrdinalDataset, zeta, gamma) -> tuple[np.ndarray, np.ndarray]:
    _check_dims(data, gamma)
    zeta = _check_zeta(data, zeta)
    sick = data.y >= 1
    if not sick.any():
        return np.zeros(zeta.size), np.zeros(data.p)
    yk = data.y[sick]
    u = data.x[sick] @ np.asarray(gamma, dtype=float)
    cuts = _cuts(zeta)
    d_lo, d_hi = interval_prob_derivs(cuts[yk - 1] + u, cuts[yk] + u)
    k = data.k_max
    g_cut = (np.bincount(yk, weights=d_hi, minlength=k + 1)
             + np.bincount(yk - 1, weights=d_lo, minlength=k + 1))
    g_zeta = -g_cut[1:k] / data.n
    g_gamma = -(data.x[sick].T @ (d_lo + d_hi)) / data.n
    return g_zeta, g_gamma


class NllKernel:
    """Precomputed per-dataset arrays for repeated value+gradient evaluation.

    Used by the iterative solvers; skips validation on every call.
    """

    def __init__(self, data: OrdinalDataset):
        self.n = data.n
        self.p = data.p
        self.k_max = data.k_max
        self.x = data.x
        self.healthy = (data.y == 0).astype(float)
        sick = data.y >= 1
        self.xs = data.x[sick]
        self.ys = data.y[sick]

    def screening(self, alpha, beta):
        eta = alpha + self.x @ beta
        f = -(self.healthy * log_expit(eta) + (1 - self.healthy) * log_expit(-eta)).sum() / self.n
        r = -(self.healthy - expit(eta)) / self.n
        return f, r.sum(), self.x.T @ r

    def severity(self, zeta, gamma):
        if self.ys.size == 0:
            return 0.0, np.zeros(self.k_max - 1), np.zeros(self.p)
        u = self.xs @ gamma
        cuts = _cuts(zeta)
        lo = cuts[self.ys - 1] + u
        hi = cuts[self.ys] + u
        f = -log_interval_prob(lo, hi).sum() / self.n
        d_lo, d_hi = interval_prob_derivs(lo, hi)
        k = self.k_max
        g_cut = (np.bincount(self.ys, weights=d_hi, minlength=k + 1)
                 + np.bincount(self.ys - 1, weights=d_lo, minlength=k + 1))
        return f, -g_cut[1:k] / self.n, -(self.xs.T @ (d_lo + d_hi)) / self.n
