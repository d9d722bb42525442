"""ADMM estimation of the penalized multi-task cumulative logit model.

Two variants share one loop:

* ``fused``: L1 on each coefficient vector plus ``lambda_f * sum |beta_j - gamma_j|``,
  with auxiliaries ``a = Theta d`` and ``B = Theta`` where ``Theta = (beta gamma)``
  and ``d = (1, -1)``;
* ``group``: L1 plus a row-wise L2 penalty on ``(beta_j, gamma_j)``, with
  auxiliary ``B = Theta`` only.

Each outer iteration minimizes the smooth block ``(alpha, zeta, Theta)`` with
:func:`~mtclm.smooth.minimize_smooth`, applies closed-form thresholding to
the auxiliaries and takes a dual ascent step whose size equals the
corresponding penalty parameter. Reported coefficients come from ``B`` so
thresholded entries are exact zeros.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .data import (AdmmSettings, FitResult, MtclmParams, OrdinalDataset, PenaltyConfig,
                   ValidationError, validate_dataset)
from .likelihood import NllKernel, total_nll
from .prox import group_soft_threshold_rows, soft_threshold
from .smooth import SmoothSolveSettings, minimize_smooth

log = logging.getLogger(__name__)

D = np.array([1.0, -1.0])
# weight on the row-wise L2 penalty actually minimized by fit_group; the
# two-step B-update thresholds rows at sqrt(2) * lambda_g / mu
GROUP_WEIGHT = math.sqrt(2.0)


@dataclass
class AdmmState:
    """Primal, auxiliary and dual variables of one ADMM iterate.

    ``a`` and ``u`` are ``None`` for the group variant.
    """

    alpha: float
    zeta: np.ndarray
    theta: np.ndarray
    b: np.ndarray
    v: np.ndarray
    a: np.ndarray | None = None
    u: np.ndarray | None = None

    def copy(self) -> "AdmmState":
        return AdmmState(self.alpha, self.zeta.copy(), self.theta.copy(), self.b.copy(),
                         self.v.copy(), None if self.a is None else self.a.copy(),
                         None if self.u is None else self.u.copy())

    @property
    def fused(self) -> bool:
        return self.a is not None

    def params(self) -> MtclmParams:
        return MtclmParams(self.alpha, self.b[:, 0], self.zeta, self.b[:, 1])


def intercept_only_params(data: OrdinalDataset, p: int | None = None) -> MtclmParams:
    """Closed-form intercept-only MLE from level frequencies.

    Empty levels get a half-count so the thresholds stay finite and
    strictly increasing; with every level observed this is the exact MLE.
    """
    counts = data.level_counts().astype(float)
    if np.any(counts == 0):
        counts = counts + 0.5
    alpha = math.log(counts[0] / counts[1:].sum())
    cum = np.cumsum(counts[1:])
    frac = cum[:-1] / cum[-1]
    zeta = np.log(frac / (1 - frac))
    p = data.p if p is None else p
    return MtclmParams(alpha, np.zeros(p), zeta, np.zeros(p))


def penalty_value(beta, gamma, penalty: PenaltyConfig, group_weight: float = 1.0) -> float:
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    return (penalty.lambda11 * np.abs(beta).sum() + penalty.lambda12 * np.abs(gamma).sum()
            + penalty.lambda_f * np.abs(beta - gamma).sum()
            + group_weight * penalty.lambda_g * np.hypot(beta, gamma).sum())


def objective_value(data: OrdinalDataset, params: MtclmParams, penalty: PenaltyConfig,
                    group_weight: float = 1.0) -> float:
    """Penalized objective ``nll/n + penalties``.

    ``group_weight`` scales the row-wise L2 term; :func:`fit_group` minimizes
    the objective with ``group_weight=GROUP_WEIGHT``.
    """
    return total_nll(data, params) + penalty_value(params.beta, params.gamma, penalty, group_weight)


def augmented_lagrangian(kernel: NllKernel, state: AdmmState, penalty: PenaltyConfig,
                         settings: AdmmSettings) -> float:
    f1, _, _ = kernel.screening(state.alpha, state.theta[:, 0])
    f2, _, _ = kernel.severity(state.zeta, state.theta[:, 1])
    b = state.b
    mu1 = settings.mu_1
    diff = state.theta - b
    val = (f1 + f2 + penalty.lambda11 * np.abs(b[:, 0]).sum()
           + penalty.lambda12 * np.abs(b[:, 1]).sum()
           + np.sum(state.v * diff) + 0.5 * mu1 * np.sum(diff ** 2))
    if state.fused:
        r = state.theta @ D - state.a
        val += penalty.lambda_f * np.abs(state.a).sum() + state.u @ r + 0.5 * settings.mu_f * r @ r
    else:
        val += GROUP_WEIGHT * penalty.lambda_g * np.linalg.norm(b, axis=1).sum()
    return float(val)


def residuals(state: AdmmState, prev_state: AdmmState, settings: AdmmSettings):
    """Primal/dual residual norms and their stopping thresholds.

    The constraints are stacked as ``A Theta = z`` with ``A Theta = (Theta d, Theta)``
    and ``z = (a, B)`` (just ``B`` for the group variant). Returns
    ``(primal, dual, eps_pri, eps_dual)`` following the usual combined
    absolute/relative rule.
    """
    theta, b = state.theta, state.b
    mu1 = settings.mu_1
    r_sq = np.sum((theta - b) ** 2)
    dual_mat = mu1 * (b - prev_state.b)
    ax_sq = np.sum(theta ** 2)
    z_sq = np.sum(b ** 2)
    aty = state.v.copy()
    m = b.size
    if state.fused:
        td = theta @ D
        r_sq += np.sum((td - state.a) ** 2)
        dual_mat = dual_mat + settings.mu_f * np.outer(state.a - prev_state.a, D)
        ax_sq += td @ td
        z_sq += state.a @ state.a
        aty = aty + np.outer(state.u, D)
        m += state.a.size
    primal = math.sqrt(r_sq)
    dual = float(np.linalg.norm(dual_mat))
    eps_pri = math.sqrt(m) * settings.eps_abs + settings.eps_rel * math.sqrt(max(ax_sq, z_sq))
    eps_dual = math.sqrt(theta.size) * settings.eps_abs + settings.eps_rel * float(np.linalg.norm(aty))
    return primal, dual, eps_pri, eps_dual


def _initial_state(data: OrdinalDataset, fused: bool, init: MtclmParams | None,
                   warm_state: AdmmState | None) -> AdmmState:
    p = data.p
    if warm_state is not None:
        s = warm_state.copy()
        if s.theta.shape != (p, 2) or s.zeta.size != data.k_max - 1:
            raise ValidationError("warm state does not match the data dimensions")
        if fused and not s.fused:
            s.a = s.theta @ D
            s.u = np.zeros(p)
        elif not fused and s.fused:
            s.a = s.u = None
        return s
    params = init if init is not None else intercept_only_params(data)
    if params.p != p or params.k_max != data.k_max:
        raise ValidationError("initial parameters do not match the data dimensions")
    theta = np.column_stack([params.beta, params.gamma])
    state = AdmmState(params.alpha, params.zeta.copy(), theta, theta.copy(), np.zeros((p, 2)))
    if fused:
        state.a = theta @ D
        state.u = np.zeros(p)
    return state


class _SmoothBlock:
    """Smooth part of the augmented Lagrangian over ``(alpha, beta, gamma, zeta)``.

    Flat layout: ``[alpha, beta (p), gamma (p), zeta (K-1)]``.
    """

    def __init__(self, kernel: NllKernel, settings: AdmmSettings):
        self.kernel = kernel
        self.p = kernel.p
        self.settings = settings
        self.ordered = slice(1 + 2 * self.p, 1 + 2 * self.p + kernel.k_max - 1)
        self.state: AdmmState | None = None

    def pack(self, state: AdmmState) -> np.ndarray:
        return np.concatenate(([state.alpha], state.theta[:, 0], state.theta[:, 1], state.zeta))

    def unpack(self, w):
        p = self.p
        return w[0], w[1:1 + p], w[1 + p:1 + 2 * p], w[self.ordered]

    def __call__(self, w):
        st = self.state
        alpha, beta, gamma, zeta = self.unpack(w)
        f1, ga, gb = self.kernel.screening(alpha, beta)
        f2, gz, gg = self.kernel.severity(zeta, gamma)
        mu1 = self.settings.mu_1
        db = beta - st.b[:, 0]
        dg = gamma - st.b[:, 1]
        f = (f1 + f2 + st.v[:, 0] @ db + st.v[:, 1] @ dg
             + 0.5 * mu1 * (db @ db + dg @ dg))
        gb = gb + st.v[:, 0] + mu1 * db
        gg = gg + st.v[:, 1] + mu1 * dg
        if st.fused:
            mf = self.settings.mu_f
            r = beta - gamma - st.a
            f += st.u @ r + 0.5 * mf * r @ r
            gr = st.u + mf * r
            gb = gb + gr
            gg = gg - gr
        return f, np.concatenate(([ga], gb, gg, gz))


def _admm(data: OrdinalDataset, penalty: PenaltyConfig, settings: AdmmSettings,
          smooth: SmoothSolveSettings, init, warm_state, fused: bool) -> FitResult:
    validate_dataset(data)
    kernel = NllKernel(data)
    state = _initial_state(data, fused, init, warm_state)
    block = _SmoothBlock(kernel, settings)
    mu1 = settings.mu_1
    group_thr = GROUP_WEIGHT * penalty.lambda_g / mu1
    weight = 1.0 if fused else GROUP_WEIGHT

    history = deque(maxlen=smooth.memory)
    obj, al, pri, dua = [], [], [], []
    converged = False
    inner_tol = smooth.loose_tol
    for it in range(settings.max_iter):
        prev = state.copy()
        block.state = state
        sol = minimize_smooth(block, block.pack(state), smooth, ordered=block.ordered,
                              grad_tol=inner_tol, history=history)
        alpha, beta, gamma, zeta = block.unpack(sol.x)
        state.alpha = float(alpha)
        state.zeta = zeta.copy()
        state.theta = np.column_stack([beta, gamma])
        if fused:
            state.a = soft_threshold(state.theta @ D + state.u / settings.mu_f,
                                     penalty.lambda_f / settings.mu_f)
        b1 = soft_threshold(beta + state.v[:, 0] / mu1, penalty.lambda11 / mu1)
        b2 = soft_threshold(gamma + state.v[:, 1] / mu1, penalty.lambda12 / mu1)
        b = np.column_stack([b1, b2])
        if not fused and group_thr > 0:
            b = group_soft_threshold_rows(b, group_thr)
        state.b = b
        if fused:
            state.u = state.u + settings.mu_f * (state.theta @ D - state.a)
        state.v = state.v + mu1 * (state.theta - state.b)

        r, s, eps_pri, eps_dual = residuals(state, prev, settings)
        pri.append(r)
        dua.append(s)
        al.append(augmented_lagrangian(kernel, state, penalty, settings))
        params = state.params()
        obj.append(total_nll(data, params) + penalty_value(params.beta, params.gamma, penalty, weight))
        tight = inner_tol <= smooth.grad_tol
        if r <= eps_pri and s <= eps_dual and tight:
            converged = True
            break
        inner_tol = min(smooth.loose_tol, max(smooth.grad_tol, 0.01 * max(r, s)))
    else:
        log.warning("ADMM did not converge in %d iterations (primal %.3g, dual %.3g)",
                    settings.max_iter, pri[-1], dua[-1])

    notes = []
    empty = np.flatnonzero(data.level_counts()[1:] == 0) + 1
    if empty.size:
        notes.append("empty severity levels: " + ",".join(map(str, empty)))
    return FitResult(
        params=state.params(),
        objective_trace=np.array(obj),
        primal_residual_trace=np.array(pri),
        dual_residual_trace=np.array(dua),
        augmented_lagrangian_trace=np.array(al),
        converged=converged,
        iterations=len(obj),
        penalty=penalty,
        admm=settings,
        variant="fused" if fused else "group",
        state=state,
        notes=tuple(notes),
    )


def fit_fused(data: OrdinalDataset, penalty: PenaltyConfig, admm: AdmmSettings | None = None,
              smooth: SmoothSolveSettings | None = None, init: MtclmParams | None = None,
              *, warm_state: AdmmState | None = None) -> FitResult:
    """L1 + fused-lasso estimate. ``penalty.lambda_g`` must be zero.

    Non-convergence is reported through ``FitResult.converged``.
    """
    if penalty.lambda_g != 0:
        raise ValidationError("fit_fused requires lambda_g = 0")
    return _admm(data, penalty, admm or AdmmSettings(), smooth or SmoothSolveSettings(),
                 init, warm_state, fused=True)


def fit_group(data: OrdinalDataset, penalty: PenaltyConfig, admm: AdmmSettings | None = None,
              smooth: SmoothSolveSettings | None = None, init: MtclmParams | None = None,
              *, warm_state: AdmmState | None = None) -> FitResult:
    """L1 + group-lasso estimate. ``penalty.lambda_f`` must be zero.

    Uses ``admm.mu_1`` as the single penalty parameter.
    """
    if penalty.lambda_f != 0:
        raise ValidationError("fit_group requires lambda_f = 0")
    return _admm(data, penalty, admm or AdmmSettings(), smooth or SmoothSolveSettings(),
                 init, warm_state, fused=False)


def fit(data: OrdinalDataset, penalty: PenaltyConfig, admm: AdmmSettings | None = None,
        smooth: SmoothSolveSettings | None = None, init: MtclmParams | None = None,
        *, variant: str | None = None, warm_state: AdmmState | None = None) -> FitResult:
    """Dispatch to :func:`fit_fused` or :func:`fit_group`.

    Without an explicit ``variant``, a positive ``lambda_f`` selects the fused
    solver and everything else (including pure L1) the group solver.
    """
    if variant is None:
        variant = "fused" if penalty.lambda_f > 0 else "group"
    if variant == "fused":
        return fit_fused(data, penalty, admm, smooth, init, warm_state=warm_state)
    if variant == "group":
        return fit_group(data, penalty, admm, smooth, init, warm_state=warm_state)
    raise ValueError(f"unknown variant {variant!r}")


def smooth_gradient(data: OrdinalDataset, params: MtclmParams) -> np.ndarray:
    """Gradient of the unpenalized nll in the flat layout ``[alpha, beta, gamma, zeta]``."""
    k = NllKernel(data)
    _, ga, gb = k.screening(params.alpha, params.beta)
    _, gz, gg = k.severity(params.zeta, params.gamma)
    return np.concatenate(([ga], gb, gg, gz))
