"""K-fold cross-validation over penalty grids, scored by held-out
negative log-likelihood per observation."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import admm as admm_mod
from . import baselines
from .data import AdmmSettings, OrdinalDataset, PenaltyConfig, ValidationError
from .likelihood import total_nll
from .smooth import SmoothSolveSettings

log = logging.getLogger(__name__)

GRID_KINDS = ("l1", "l1_fused", "l1_group")
METHODS = ("mtclm", "logistic_l1", "clm_l1")


def default_grid(kind: str) -> list[PenaltyConfig]:
    """Penalty grids used for the simulation study.

    ``lambda11`` in {0.01, 0.05}, ``lambda12`` in {0.05, 0.1}, and the
    structural strength in {0, 0.01, 0.05} for the fused/group kinds.
    """
    l11 = (0.01, 0.05)
    l12 = (0.05, 0.1)
    struct = (0.0, 0.01, 0.05)
    if kind == "l1":
        return [PenaltyConfig(a, b) for a, b in itertools.product(l11, l12)]
    if kind == "l1_fused":
        return [PenaltyConfig(a, b, lambda_f=c) for a, b, c in itertools.product(l11, l12, struct)]
    if kind == "l1_group":
        return [PenaltyConfig(a, b, lambda_g=c) for a, b, c in itertools.product(l11, l12, struct)]
    raise ValueError(f"unknown grid kind {kind!r}; expected one of {GRID_KINDS}")


def baseline_grid() -> list[PenaltyConfig]:
    """Grid for the single-penalty baselines; the strength sits in ``lambda11``."""
    return [PenaltyConfig(lam) for lam in (0.01, 0.05, 0.1)]


@dataclass(frozen=True)
class CvSpec:
    grid: tuple
    folds: int = 5
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(self.grid))
        if self.folds < 2:
            raise ValidationError("need at least two folds")
        if not self.grid:
            raise ValidationError("empty penalty grid")


@dataclass(frozen=True)
class CvResult:
    grid: tuple
    fold_errors: np.ndarray
    selected_index: int
    refit: object
    fold_ids: np.ndarray
    notes: tuple = field(default=())

    @property
    def mean_errors(self) -> np.ndarray:
        return self.fold_errors.mean(axis=1)

    @property
    def selected(self) -> PenaltyConfig:
        return self.grid[self.selected_index]


def make_folds(y, folds: int, seed: int = 0, stratified: bool = True) -> np.ndarray:
    """Fold id per row.

    Stratified assignment deals each response level round-robin, continuing
    the rotation across levels, so per-level fold counts differ by at most
    one and fold sizes stay balanced.
    """
    y = np.asarray(y)
    if y.size < folds:
        raise ValidationError(f"{y.size} rows cannot fill {folds} folds")
    rng = np.random.default_rng(seed)
    ids = np.empty(y.size, dtype=np.int64)
    groups = [np.flatnonzero(y == lev) for lev in np.unique(y)] if stratified else [np.arange(y.size)]
    offset = 0
    for idx in groups:
        idx = rng.permutation(idx)
        ids[idx] = (offset + np.arange(idx.size)) % folds
        offset = (offset + idx.size) % folds
    return ids


def select_index(mean_errors, grid) -> int:
    """Argmin of the CV error; near-ties go to the larger total penalty."""
    mean_errors = np.asarray(mean_errors, dtype=float)
    best = np.nanmin(mean_errors)
    tol = 1e-12 * max(1.0, abs(best))
    tied = [i for i, e in enumerate(mean_errors) if e <= best + tol]
    return max(tied, key=lambda i: (grid[i].total, -i))


def _fit_one(method, data, penalty, admm, smooth, variant, warm):
    if method == "mtclm":
        return admm_mod.fit(data, penalty, admm, smooth, variant=variant,
                            warm_state=None if warm is None else warm.state)
    init = None if warm is None else (warm.intercepts, warm.coef)
    return baselines.fit_baseline(method, data, penalty.lambda11, init=init)


def _heldout(method, fit, data):
    if method == "mtclm":
        return total_nll(data, fit.params)
    return fit.nll(data)


def kfold_cv(data: OrdinalDataset, spec: CvSpec, admm: AdmmSettings | None = None,
             smooth: SmoothSolveSettings | None = None, *, method: str = "mtclm",
             variant: str | None = None, fold_ids=None) -> CvResult:
    """Cross-validate every grid point, pick the winner and refit on all data.

    For ``method="mtclm"`` the solver variant defaults to fused when any grid
    point has ``lambda_f > 0`` and group otherwise. For the baselines the
    penalty strength is read from ``lambda11``. Within a fold, grid points are
    visited from the heaviest to the lightest total penalty, each warm-started
    from the previous solution. ``fold_ids`` overrides the fold assignment
    (values ``0..folds-1``).
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    grid = spec.grid
    if method == "mtclm" and variant is None:
        variant = "fused" if any(g.lambda_f > 0 for g in grid) else "group"
    if fold_ids is None:
        fold_ids = make_folds(data.y, spec.folds, spec.seed, spec.stratified)
    else:
        fold_ids = np.asarray(fold_ids, dtype=np.int64)
        if fold_ids.shape != (data.n,) or set(np.unique(fold_ids)) != set(range(spec.folds)):
            raise ValidationError(f"fold_ids must label every row with 0..{spec.folds - 1}")
    notes = []
    for k in range(spec.folds):
        train_y = data.y[fold_ids != k]
        if not (np.any(train_y == 0) and np.any(train_y >= 1)):
            raise ValidationError(
                f"fold {k}: training part needs both healthy and diseased rows"
                + ("" if spec.stratified else "; try stratified folds"))
        missing = np.setdiff1d(np.arange(1, data.k_max + 1), train_y)
        if missing.size:
            notes.append(f"fold {k}: training part has no rows at levels {missing.tolist()}")

    order = sorted(range(len(grid)), key=lambda i: -grid[i].total)
    errors = np.full((len(grid), spec.folds), np.nan)
    for k in range(spec.folds):
        train = data.subset(fold_ids != k)
        test = data.subset(fold_ids == k)
        warm = None
        done = {}  # duplicate grid points reuse the fit instead of re-solving
        for i in order:
            if grid[i] in done:
                errors[i, k] = done[grid[i]]
                continue
            fit = _fit_one(method, train, grid[i], admm, smooth, variant, warm)
            if not fit.converged:
                notes.append(f"fold {k}, grid point {i}: solver did not converge")
            errors[i, k] = done[grid[i]] = _heldout(method, fit, test)
            warm = fit
    idx = select_index(errors.mean(axis=1), grid)
    refit = _fit_one(method, data, grid[idx], admm, smooth, variant, None)
    for note in notes:
        log.info(note)
    return CvResult(tuple(grid), errors, idx, refit, fold_ids, tuple(notes))
