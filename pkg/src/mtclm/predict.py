"""Category probabilities and class predictions from fitted parameters."""

from __future__ import annotations

import numpy as np
from scipy.special import expit, log_expit

from .data import MtclmParams, ValidationError
from .likelihood import log_interval_prob


def _design(params_p: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.shape[1] != params_p:
        raise ValidationError(f"x has {x.shape[1]} columns, model expects {params_p}")
    return x


def clm_proba(thresholds, linear_pred) -> np.ndarray:
    """Level probabilities of a cumulative logit model.

    ``logit P(Y <= k) = thresholds[k] + linear_pred`` for ``k < len(thresholds)``.
    Returns an ``(n, len(thresholds) + 1)`` array.
    """
    cuts = np.concatenate(([-np.inf], np.asarray(thresholds, dtype=float), [np.inf]))
    u = np.asarray(linear_pred, dtype=float)[:, None]
    return np.exp(log_interval_prob(cuts[:-1] + u, cuts[1:] + u))


def predict_proba(params: MtclmParams, x) -> np.ndarray:
    """``(n, K+1)`` matrix of ``P(Y = k | x)`` for ``k = 0..K``.

    ``P(Y=0) = sigma(alpha + x beta)`` and, for ``k >= 1``,
    ``P(Y=k) = (1 - P(Y=0)) * [sigma(zeta_k + x gamma) - sigma(zeta_{k-1} + x gamma)]``.
    """
    x = _design(params.p, x)
    eta = params.alpha + x @ params.beta
    sev = clm_proba(params.zeta, x @ params.gamma)
    out = np.empty((x.shape[0], params.k_max + 1))
    out[:, 0] = expit(eta)
    out[:, 1:] = np.exp(log_expit(-eta))[:, None] * sev
    return out


def screen_from_proba(proba, threshold: float = 0.5) -> np.ndarray:
    if not 0 < threshold < 1:
        raise ValidationError(f"threshold must lie in (0, 1), got {threshold}")
    proba = np.asarray(proba, dtype=float)
    # ties at the threshold count as diseased
    return (1.0 - proba[:, 0] >= threshold).astype(np.int64)


def predict_screen(params: MtclmParams, x, threshold: float = 0.5) -> np.ndarray:
    """1 (diseased) where ``1 - P(Y=0|x) >= threshold``, else 0."""
    return screen_from_proba(predict_proba(params, x), threshold)


def class_from_proba(proba) -> np.ndarray:
    # argmax returns the first maximum, i.e. ties go to the lower level
    return np.argmax(np.asarray(proba, dtype=float), axis=1).astype(np.int64)


def predict_class(params: MtclmParams, x) -> np.ndarray:
    return class_from_proba(predict_proba(params, x))
