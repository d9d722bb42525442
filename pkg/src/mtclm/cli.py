"""Command-line interface: ``mtclm {fit,predict,cv,simulate,bench,trace}``.

Exit codes are 0 on success, 1 on runtime failure (including a fit that did
not converge, whose model file is still written) and 2 on usage or
validation errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import admm as admm_mod
from . import baselines
from .bench import METHODS, METRICS, WORKERS_ENV, BenchConfig, run_bench, summarize
from .data import (AdmmSettings, OrdinalDataset, PenaltyConfig, ScalingRecord, ValidationError,
                   read_csv, standardize, validate_dataset, write_csv)
from .model_io import MTCLM_METHODS, from_baseline, from_mtclm, load_model, read_predictors, save_model
from .predict import class_from_proba, screen_from_proba
from .simgen import Scenario, ScenarioSpec, generate
from .smooth import SmoothSolveSettings
from .tuning import CvSpec, baseline_grid, default_grid, kfold_cv

log = logging.getLogger("mtclm")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

_VARIANT = {"mtclm-l1": "group", "mtclm-fused": "fused", "mtclm-group": "group"}
_GRID_KIND = {"mtclm-l1": "l1", "mtclm-fused": "l1_fused", "mtclm-group": "l1_group"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _solver_args(p):
    g = p.add_argument_group("solver")
    g.add_argument("--mu-f", type=float, default=1.0, help="ADMM penalty parameter for the fused constraint")
    g.add_argument("--mu-1", type=float, default=1.0, help="ADMM penalty parameter for the L1 copy")
    g.add_argument("--max-iter", type=int, default=2000)
    g.add_argument("--eps-abs", type=float, default=1e-5)
    g.add_argument("--eps-rel", type=float, default=1e-4)
    g.add_argument("--grad-tol", type=float, default=1e-6, help="inner smooth-solver tolerance")


def _data_args(p):
    p.add_argument("--data", required=True, help="input CSV with a header row")
    p.add_argument("--label", default="y", help="name of the response column (default: y)")
    p.add_argument("--k-max", type=int, default=None, help="highest severity level (default: max label)")
    p.add_argument("--no-standardize", action="store_true",
                   help="fit on raw predictors instead of centered, unit-variance ones")


def _penalty_args(p):
    p.add_argument("--lambda11", type=float, default=0.0, help="L1 strength on screening coefficients")
    p.add_argument("--lambda12", type=float, default=0.0, help="L1 strength on severity coefficients")
    p.add_argument("--lambda-f", type=float, default=0.0, help="fused-lasso strength")
    p.add_argument("--lambda-g", type=float, default=0.0, help="group-lasso strength")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="L1 strength for the logistic-l1 and clm-l1 baselines")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mtclm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit one penalty configuration and write a model JSON")
    _data_args(p)
    p.add_argument("--method", choices=METHODS, default="mtclm-fused")
    _penalty_args(p)
    _solver_args(p)
    p.add_argument("--out", required=True, help="model JSON path")

    p = sub.add_parser("predict", help="predict from a model JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="CSV holding (at least) the model's predictor columns")
    p.add_argument("--threshold", type=float, default=0.5, help="screening cut on P(diseased)")
    p.add_argument("--out", required=True, help="prediction CSV path")

    p = sub.add_parser("cv", help="K-fold cross-validation over a penalty grid")
    _data_args(p)
    p.add_argument("--method", choices=METHODS, default="mtclm-fused")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-stratify", action="store_true")
    _solver_args(p)
    p.add_argument("--out-table", required=True, help="CSV with one row per grid point")
    p.add_argument("--out-selected", required=True, help="JSON with the selected configuration")
    p.add_argument("--out-model", default=None, help="optional model JSON of the refit")

    p = sub.add_parser("simulate", help="draw a scenario dataset and its ground truth")
    p.add_argument("--scenario", required=True, help="1-5 or a name such as 'similar'")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--p", type=int, default=75)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coef-magnitude", choices=("uniform", "fixed"), default="uniform")
    p.add_argument("--out", required=True, help="dataset CSV path")
    p.add_argument("--truth", default=None, help="ground-truth JSON path (default: <out>.truth.json)")

    p = sub.add_parser("bench", help="simulation benchmark writing tidy metric rows")
    p.add_argument("--scenarios", nargs="+", default=[s.value for s in Scenario])
    p.add_argument("--methods", nargs="+", choices=METHODS,
                   default=["mtclm-l1", "mtclm-fused", "mtclm-group", "clm-l1"])
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--p", type=int, default=75)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--mu", type=float, default=0.2, help="ADMM penalty parameter used by every fit")
    p.add_argument("--workers", type=int, default=None, help=f"processes (default: ${WORKERS_ENV} or 1)")
    p.add_argument("--out", required=True, help="tidy CSV: scenario,method,replicate,metric,value")
    p.add_argument("--summary", default=None, help="optional CSV of per-(scenario, method) means")

    p = sub.add_parser("trace", help="per-iteration ADMM trace on scenario-similar data")
    p.add_argument("--method", choices=MTCLM_METHODS, default="mtclm-fused")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--p", type=int, default=75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda1", type=float, default=0.05, help="common L1 strength")
    p.add_argument("--lambda-struct", type=float, default=0.01, help="fused or group strength")
    _solver_args(p)
    p.add_argument("--out", required=True)
    return parser


def _admm_settings(a) -> AdmmSettings:
    return AdmmSettings(a.mu_f, a.mu_1, a.max_iter, a.eps_abs, a.eps_rel)


def _smooth_settings(a) -> SmoothSolveSettings:
    if not a.grad_tol > 0:
        raise ValidationError("--grad-tol must be positive")
    return SmoothSolveSettings(grad_tol=a.grad_tol, loose_tol=max(a.grad_tol, 1e-4))


def _penalty_from_args(a) -> PenaltyConfig:
    """Check method/penalty compatibility; runs before any data is read."""
    structural = {"lambda_f": a.lambda_f, "lambda_g": a.lambda_g}
    l1 = {"lambda11": a.lambda11, "lambda12": a.lambda12}
    if a.method in MTCLM_METHODS:
        if a.lam is not None:
            raise ValidationError(f"--lambda applies to the baselines, not {a.method}; "
                                  "use --lambda11/--lambda12")
        forbidden = {"mtclm-l1": ("lambda_f", "lambda_g"), "mtclm-fused": ("lambda_g",),
                     "mtclm-group": ("lambda_f",)}[a.method]
        for name in forbidden:
            if structural[name] != 0:
                flag = "--" + name.replace("_", "-")
                raise ValidationError(f"{a.method} does not accept {flag} > 0")
        return PenaltyConfig(a.lambda11, a.lambda12, a.lambda_f, a.lambda_g)
    for name, v in {**l1, **structural}.items():
        if v != 0:
            raise ValidationError(f"{a.method} takes its strength from --lambda, not --{name.replace('_', '-')}")
    return PenaltyConfig(0.0 if a.lam is None else a.lam)


def _load_training(a) -> tuple[OrdinalDataset, OrdinalDataset, ScalingRecord]:
    raw = read_csv(a.data, a.label, a.k_max)
    if a.method in MTCLM_METHODS:
        validate_dataset(raw)
    else:
        validate_dataset(raw, min_levels=1)
    if a.no_standardize:
        return raw, raw, ScalingRecord.identity(raw.p)
    data, scaling = standardize(raw)
    return raw, data, scaling


def _fit_once(method, data, penalty, admm, smooth):
    if method in MTCLM_METHODS:
        return admm_mod.fit(data, penalty, admm, smooth, variant=_VARIANT[method])
    return baselines.fit_baseline(method.replace("-", "_"), data, penalty.lambda11)


def _model_from_fit(method, fit, data, scaling, meta):
    if method in MTCLM_METHODS:
        return from_mtclm(method, fit.params, scaling, data.names(), meta)
    return from_baseline(method, fit, scaling, data.names(), data.k_max, meta)


def _diagnostics(fit) -> dict:
    d = {"converged": bool(fit.converged), "iterations": int(fit.iterations),
         "objective": float(fit.objective), "notes": list(fit.notes)}
    if hasattr(fit, "primal_residual_trace") and len(fit.primal_residual_trace):
        d["final_primal_residual"] = float(fit.primal_residual_trace[-1])
        d["final_dual_residual"] = float(fit.dual_residual_trace[-1])
    if hasattr(fit, "kkt_violation"):
        d["kkt_violation"] = float(fit.kkt_violation)
    return d


def cmd_fit(a) -> int:
    penalty = _penalty_from_args(a)
    admm, smooth = _admm_settings(a), _smooth_settings(a)
    _, data, scaling = _load_training(a)
    fit = _fit_once(a.method, data, penalty, admm, smooth)
    meta = {"config": {"data": str(a.data), "label": a.label, "standardized": not a.no_standardize,
                       "penalty": penalty.as_dict(), "admm": admm.as_dict(),
                       "grad_tol": smooth.grad_tol},
            "diagnostics": _diagnostics(fit)}
    save_model(a.out, _model_from_fit(a.method, fit, data, scaling, meta))
    if not fit.converged:
        log.error("solver did not converge after %d iterations; model written with converged=false",
                  fit.iterations)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_predict(a) -> int:
    model = load_model(a.model)
    x = read_predictors(a.data, model.feature_names)
    proba = model.predict_proba(x)
    screen = screen_from_proba(proba, a.threshold)
    cls = class_from_proba(proba)
    with Path(a.out).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row_id", *(f"p{k}" for k in range(proba.shape[1])), "screen", "class"])
        for i in range(proba.shape[0]):
            w.writerow([i, *(repr(float(v)) for v in proba[i]), int(screen[i]), int(cls[i])])
    return EXIT_OK


def cmd_cv(a) -> int:
    if a.method in MTCLM_METHODS:
        grid = default_grid(_GRID_KIND[a.method])
        method, variant = "mtclm", _VARIANT[a.method]
    else:
        grid = baseline_grid()
        method, variant = a.method.replace("-", "_"), None
    spec = CvSpec(grid, a.folds, a.seed, not a.no_stratify)
    admm, smooth = _admm_settings(a), _smooth_settings(a)
    _, data, scaling = _load_training(a)
    res = kfold_cv(data, spec, admm, smooth, method=method, variant=variant)
    with Path(a.out_table).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "lambda11", "lambda12", "lambda_f", "lambda_g", "mean_nll",
                    *(f"fold{k}" for k in range(spec.folds)), "selected"])
        for i, g in enumerate(res.grid):
            w.writerow([i, g.lambda11, g.lambda12, g.lambda_f, g.lambda_g, repr(float(res.mean_errors[i])),
                        *(repr(float(e)) for e in res.fold_errors[i]), int(i == res.selected_index)])
    selected = {"method": a.method, "selected_index": res.selected_index,
                "penalty": res.selected.as_dict(), "mean_nll": float(res.mean_errors[res.selected_index]),
                "folds": spec.folds, "seed": spec.seed, "stratified": spec.stratified,
                "refit": _diagnostics(res.refit), "notes": list(res.notes)}
    Path(a.out_selected).write_text(json.dumps(selected, indent=2))
    if a.out_model:
        meta = {"config": {"data": str(a.data), "label": a.label, "standardized": not a.no_standardize,
                           "penalty": res.selected.as_dict(), "admm": admm.as_dict(),
                           "grad_tol": smooth.grad_tol, "selected_by": "cv"},
                "diagnostics": _diagnostics(res.refit)}
        save_model(a.out_model, _model_from_fit(a.method, res.refit, data, scaling, meta))
    return EXIT_OK if res.refit.converged else EXIT_RUNTIME


def cmd_simulate(a) -> int:
    spec = ScenarioSpec(a.scenario, a.n, a.p, a.rho, a.seed, a.coef_magnitude)
    data, truth = generate(spec)
    write_csv(a.out, data, "y")
    truth_path = a.truth or f"{a.out}.truth.json"
    Path(truth_path).write_text(truth.to_json(spec))
    return EXIT_OK


def cmd_bench(a) -> int:
    if a.replicates < 1:
        raise ValidationError("--replicates must be at least 1")
    mu = AdmmSettings(mu_f=a.mu, mu_1=a.mu)
    config = BenchConfig(tuple(a.scenarios), tuple(a.methods), a.replicates, a.n, a.p, a.rho,
                         a.seed, a.folds, mu)
    # validate the scenario spec once before spawning any work
    for s in config.scenarios:
        ScenarioSpec(s, a.n, a.p, a.rho)
    rows = run_bench(config, a.workers)
    with Path(a.out).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "method", "replicate", "metric", "value"])
        w.writerows(rows)
    if a.summary:
        means = summarize(rows)
        with Path(a.summary).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scenario", "method", "metric", "mean"])
            for (s, m, metric), v in sorted(means.items()):
                if metric in METRICS:
                    w.writerow([s, m, metric, v])
    failed = sum(1 for r in rows if r[3] == "failed")
    if failed:
        log.warning("%d replicate(s) failed; see rows with metric 'failed'", failed)
    return EXIT_OK


def trace_penalty(method: str, lambda1: float, lambda_struct: float) -> PenaltyConfig:
    if method == "mtclm-fused":
        return PenaltyConfig(lambda1, lambda1, lambda_f=lambda_struct)
    if method == "mtclm-group":
        return PenaltyConfig(lambda1, lambda1, lambda_g=lambda_struct)
    return PenaltyConfig(lambda1, lambda1)


def cmd_trace(a) -> int:
    data, _ = generate(ScenarioSpec(Scenario.SIMILAR, a.n, a.p, 0.0, a.seed))
    penalty = trace_penalty(a.method, a.lambda1, a.lambda_struct)
    fit = admm_mod.fit(data, penalty, _admm_settings(a), _smooth_settings(a),
                       variant=_VARIANT[a.method])
    with Path(a.out).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective", "augmented_lagrangian", "primal_residual", "dual_residual"])
        for i in range(fit.iterations):
            w.writerow([i + 1, repr(float(fit.objective_trace[i])),
                        repr(float(fit.augmented_lagrangian_trace[i])),
                        repr(float(fit.primal_residual_trace[i])), repr(float(fit.dual_residual_trace[i]))])
    return EXIT_OK if fit.converged else EXIT_RUNTIME


COMMANDS = {"fit": cmd_fit, "predict": cmd_predict, "cv": cmd_cv, "simulate": cmd_simulate,
            "bench": cmd_bench, "trace": cmd_trace}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"mtclm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        print(f"mtclm {args.command}: runtime error: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
