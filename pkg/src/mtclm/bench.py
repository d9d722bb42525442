"""Simulation benchmark: tune, fit and score every method on scenario data.

Each replicate draws a training set and an independent test set of the
same size that shares the training set's true coefficients. Results are
tidy rows ``(scenario, method, replicate, metric, value)``.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import AdmmSettings
from .metrics import MetricsReport, accuracy, f1_score, kendall_tau, mae, roc_auc, selection_metrics
from .predict import class_from_proba, predict_proba, screen_from_proba
from .simgen import Scenario, ScenarioSpec, generate, generate_test_set
from .smooth import SmoothSolveSettings
from .tuning import CvSpec, baseline_grid, default_grid, kfold_cv

log = logging.getLogger(__name__)

METHODS = ("mtclm-l1", "mtclm-fused", "mtclm-group", "logistic-l1", "clm-l1")
METRICS = ("auc", "f1", "accuracy", "mae", "kendall_tau", "power", "fdr")
WORKERS_ENV = "MTCLM_WORKERS"

_GRID_KIND = {"mtclm-l1": "l1", "mtclm-fused": "l1_fused", "mtclm-group": "l1_group"}


@dataclass(frozen=True)
class BenchConfig:
    scenarios: tuple = tuple(Scenario)
    methods: tuple = ("mtclm-l1", "mtclm-fused", "mtclm-group", "clm-l1")
    replicates: int = 10
    n: int = 300
    p: int = 75
    rho: float = 0.0
    seed: int = 0
    folds: int = 5
    admm: AdmmSettings = AdmmSettings(mu_f=0.2, mu_1=0.2)
    smooth: SmoothSolveSettings = SmoothSolveSettings()

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        object.__setattr__(self, "scenarios", tuple(Scenario.parse(s) for s in self.scenarios))


def replicate_seeds(seed: int, scenario: Scenario, replicate: int) -> tuple[int, int, int]:
    """(train, test, fold) seeds; shared by all methods of one replicate."""
    ss = np.random.SeedSequence([seed, scenario.number, replicate])
    a, b, c = ss.generate_state(3)
    return int(a), int(b), int(c)


def fit_method(method: str, train, cv_seed: int, folds: int = 5,
               admm: AdmmSettings | None = None, smooth: SmoothSolveSettings | None = None):
    """Tune by CV and refit; returns the :class:`~mtclm.tuning.CvResult`."""
    if method in _GRID_KIND:
        spec = CvSpec(default_grid(_GRID_KIND[method]), folds, cv_seed)
        variant = "fused" if method == "mtclm-fused" else "group"
        return kfold_cv(train, spec, admm, smooth, method="mtclm", variant=variant)
    spec = CvSpec(baseline_grid(), folds, cv_seed)
    return kfold_cv(train, spec, method=method.replace("-", "_"))


def evaluate(method: str, fit, test, truth) -> dict:
    """Test-set metrics for one fitted model (NaN where a metric does not apply)."""
    out = dict.fromkeys(METRICS, math.nan)
    if method.startswith("mtclm"):
        proba = predict_proba(fit.params, test.x)
    else:
        proba = fit.predict_proba(test.x)
    diseased = (test.y >= 1).astype(int)
    out["auc"] = roc_auc(1.0 - proba[:, 0], diseased)
    out["f1"] = f1_score(screen_from_proba(proba), diseased)
    if method != "logistic-l1":
        pred = class_from_proba(proba)
        out["accuracy"] = accuracy(pred, test.y)
        out["mae"] = mae(pred, test.y)
        try:
            out["kendall_tau"] = kendall_tau(pred, test.y)
        except ValueError:
            pass
    if method.startswith("mtclm"):
        sel = selection_metrics(fit.params.beta, fit.params.gamma,
                                truth.beta_support, truth.gamma_support)
        out["power"] = sel.power
        out["fdr"] = sel.fdr
    MetricsReport(**out)  # range checks
    return out


def run_replicate(config: BenchConfig, scenario: Scenario, method: str, replicate: int) -> list:
    train_seed, test_seed, cv_seed = replicate_seeds(config.seed, scenario, replicate)
    spec = ScenarioSpec(scenario, config.n, config.p, config.rho, train_seed)
    try:
        train, truth = generate(spec)
        test = generate_test_set(spec, truth, test_seed)
        cv = fit_method(method, train, cv_seed, config.folds, config.admm, config.smooth)
        values = evaluate(method, cv.refit, test, truth)
    except Exception as exc:  # a failed replicate is recorded, not fatal
        log.warning("%s/%s/%d failed: %s", scenario.value, method, replicate, exc)
        return [(scenario.value, method, replicate, "failed", 1.0)]
    return [(scenario.value, method, replicate, m, values[m]) for m in METRICS]


def _task(args):
    return run_replicate(*args)


def run_bench(config: BenchConfig, workers: int | None = None) -> list:
    """All ``(scenario, method, replicate)`` rows, in deterministic order."""
    tasks = [(config, s, m, r) for s in config.scenarios for m in config.methods
             for r in range(config.replicates)]
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            chunks = list(ex.map(_task, tasks))
    else:
        chunks = [_task(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def summarize(rows) -> dict:
    """Mean of each metric per ``(scenario, method)``, ignoring NaNs."""
    acc: dict = {}
    for scen, method, _, metric, value in rows:
        acc.setdefault((scen, method, metric), []).append(value)
    return {k: float(np.nanmean(v)) if np.any(np.isfinite(v)) else math.nan
            for k, v in acc.items()}
