"""JSON persistence for fitted models.

A model file stores the coefficients on the standardized scale (the scale
the solver worked on) together with the scaling record, so prediction from a
loaded file repeats the in-process arithmetic exactly. Raw-scale
coefficients are stored alongside for reporting. Python's ``json`` writes
floats with ``repr``, which round-trips every double bit for bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import MtclmParams, ScalingRecord, ValidationError
from .predict import clm_proba, predict_proba

SCHEMA_VERSION = 1
MTCLM_METHODS = ("mtclm-l1", "mtclm-fused", "mtclm-group")
BASELINE_METHODS = ("logistic-l1", "clm-l1")


@dataclass(frozen=True)
class SavedModel:
    """A fitted model ready for prediction.

    For MtCLM methods ``coefs`` holds ``alpha``, ``beta``, ``zeta`` and
    ``gamma``; for the baselines it holds ``intercepts`` and ``coef``. Both
    are on the standardized scale described by ``scaling``.
    """

    method: str
    k_max: int
    feature_names: tuple
    scaling: ScalingRecord
    coefs: dict
    meta: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return len(self.feature_names)

    def mtclm_params(self) -> MtclmParams:
        c = self.coefs
        return MtclmParams(c["alpha"], c["beta"], c["zeta"], c["gamma"])

    def predict_proba(self, x) -> np.ndarray:
        xs = self.scaling.transform(x)
        if xs.ndim == 1:
            xs = xs.reshape(1, -1)
        if self.method in MTCLM_METHODS:
            return predict_proba(self.mtclm_params(), xs)
        if xs.shape[1] != self.p:
            raise ValidationError(f"x has {xs.shape[1]} columns, model expects {self.p}")
        return clm_proba(self.coefs["intercepts"], xs @ self.coefs["coef"])

    def original_scale(self) -> dict:
        """Coefficients expressed for unstandardized predictors."""
        if self.method in MTCLM_METHODS:
            raw = self.scaling.params_to_original(self.mtclm_params())
            return {"alpha": raw.alpha, "beta": raw.beta, "zeta": raw.zeta, "gamma": raw.gamma}
        coef = self.coefs["coef"] / self.scaling.scale
        return {"intercepts": self.coefs["intercepts"] - float(self.scaling.center @ coef),
                "coef": coef}

    def selected_variables(self) -> list[dict]:
        """Nonzero coefficients with their task label, in column order."""
        raw = self.original_scale()
        if self.method in MTCLM_METHODS:
            tasks = (("screening", "beta"), ("severity", "gamma"))
        else:
            tasks = (("screening" if self.method == "logistic-l1" else "all_levels", "coef"),)
        out = []
        for task, key in tasks:
            for j in np.flatnonzero(self.coefs[key]):
                out.append({"feature": self.feature_names[j], "index": int(j), "task": task,
                            "coefficient": float(raw[key][j])})
        return out

    def to_dict(self) -> dict:
        def plain(d):
            return {k: (v.tolist() if isinstance(v, np.ndarray) else float(v)) for k, v in d.items()}

        return {
            "schema_version": SCHEMA_VERSION,
            "method": self.method,
            "k_max": self.k_max,
            "feature_names": list(self.feature_names),
            "scaling": self.scaling.as_dict(),
            "coefficients_standardized": plain(self.coefs),
            "coefficients_original": plain(self.original_scale()),
            "selected_variables": self.selected_variables(),
            **self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SavedModel":
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValidationError(f"unsupported model schema_version {version!r}")
        method = d["method"]
        if method not in MTCLM_METHODS + BASELINE_METHODS:
            raise ValidationError(f"unknown method {method!r} in model file")
        coefs = {k: (np.asarray(v, dtype=float) if isinstance(v, list) else float(v))
                 for k, v in d["coefficients_standardized"].items()}
        reserved = {"schema_version", "method", "k_max", "feature_names", "scaling",
                    "coefficients_standardized", "coefficients_original", "selected_variables"}
        meta = {k: v for k, v in d.items() if k not in reserved}
        return cls(method, int(d["k_max"]), tuple(d["feature_names"]),
                   ScalingRecord.from_dict(d["scaling"]), coefs, meta)


def from_mtclm(method: str, params: MtclmParams, scaling: ScalingRecord, feature_names,
               meta: dict | None = None) -> SavedModel:
    coefs = {"alpha": params.alpha, "beta": params.beta, "zeta": params.zeta,
             "gamma": params.gamma}
    return SavedModel(method, params.k_max, tuple(feature_names), scaling, coefs, meta or {})


def from_baseline(method: str, fit, scaling: ScalingRecord, feature_names, k_max: int,
                  meta: dict | None = None) -> SavedModel:
    coefs = {"intercepts": np.asarray(fit.intercepts, dtype=float),
             "coef": np.asarray(fit.coef, dtype=float)}
    return SavedModel(method, k_max, tuple(feature_names), scaling, coefs, meta or {})


def save_model(path, model: SavedModel) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2))


def load_model(path) -> SavedModel:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from None
    try:
        return SavedModel.from_dict(d)
    except KeyError as exc:
        raise ValidationError(f"{path}: model file lacks field {exc}") from None


def read_predictors(path, feature_names) -> np.ndarray:
    """Predictor matrix from a headed CSV, columns picked by name.

    Extra columns (for instance the label) are ignored; missing ones are an
    error. Messages carry the 1-based line number.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        missing = [f for f in feature_names if f not in header]
        if missing:
            raise ValidationError(f"{path}: missing predictor columns {missing}")
        cols = [header.index(f) for f in feature_names]
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValidationError(
                    f"{path}: line {reader.line_num}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(row[c]) for c in cols])
            except ValueError as exc:
                raise ValidationError(f"{path}: line {reader.line_num}: {exc}") from None
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    x = np.array(rows, dtype=float)
    if not np.all(np.isfinite(x)):
        i, j = np.argwhere(~np.isfinite(x))[0]
        raise ValidationError(f"{path}: non-finite value in row {i}, column {feature_names[j]!r}")
    return x
