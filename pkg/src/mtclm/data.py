"""Domain types shared by every estimator, plus dataset validation,
standardization and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ValidationError(ValueError):
    """Raised when a dataset, parameter set or configuration is invalid."""


def _frozen_array(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class OrdinalDataset:
    """Predictor matrix with an ordinal response in ``{0, ..., k_max}``.

    Level 0 means healthy; levels ``1..k_max`` are disease severities.
    ``k_max`` is inferred from ``y`` when omitted. Arrays are copied and
    made read-only.
    """

    x: np.ndarray
    y: np.ndarray
    k_max: int | None = None
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.asarray(self.y)
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.isfinite(y)) or np.any(y != np.round(y)):
                raise ValidationError("labels must be integers")
        object.__setattr__(self, "x", _frozen_array(x))
        object.__setattr__(self, "y", _frozen_array(y, dtype=np.int64))
        if self.k_max is None:
            object.__setattr__(self, "k_max", int(self.y.max()) if self.y.size else 0)
        else:
            object.__setattr__(self, "k_max", int(self.k_max))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def names(self) -> tuple[str, ...]:
        if self.feature_names is not None:
            return self.feature_names
        return tuple(f"x{j + 1}" for j in range(self.p))

    def subset(self, idx) -> "OrdinalDataset":
        return OrdinalDataset(self.x[idx], self.y[idx], self.k_max, self.feature_names)

    def level_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.k_max + 1)


@dataclass(frozen=True)
class MtclmParams:
    """Screening intercept/coefficients and severity thresholds/coefficients.

    The model is ``logit P(Y=0|x) = alpha + x @ beta`` and
    ``logit P(1 <= Y <= k | Y >= 1, x) = zeta[k-1] + x @ gamma``.
    """

    alpha: float
    beta: np.ndarray
    zeta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        beta = _frozen_array(np.ravel(self.beta))
        gamma = _frozen_array(np.ravel(self.gamma))
        zeta = _frozen_array(np.ravel(self.zeta))
        if beta.shape != gamma.shape:
            raise ValidationError("beta and gamma must have the same length")
        if zeta.size < 1:
            raise ValidationError("zeta needs at least one threshold")
        vals = np.concatenate(([self.alpha], beta, zeta, gamma))
        if not np.all(np.isfinite(vals)):
            raise ValidationError("parameters must be finite")
        if np.any(np.diff(zeta) <= 0):
            raise ValidationError("zeta must be strictly increasing")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "zeta", zeta)

    @property
    def p(self) -> int:
        return self.beta.size

    @property
    def k_max(self) -> int:
        return self.zeta.size + 1

    @classmethod
    def zeros(cls, p: int, k_max: int) -> "MtclmParams":
        return cls(0.0, np.zeros(p), np.arange(1.0, k_max), np.zeros(p))


@dataclass(frozen=True)
class PenaltyConfig:
    """Regularization strengths: L1 on beta, L1 on gamma, fused, group."""

    lambda11: float = 0.0
    lambda12: float = 0.0
    lambda_f: float = 0.0
    lambda_g: float = 0.0

    def __post_init__(self):
        for name in ("lambda11", "lambda12", "lambda_f", "lambda_g"):
            v = float(getattr(self, name))
            if not (v >= 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be a finite nonnegative number, got {v}")
            object.__setattr__(self, name, v)
        if self.lambda_f > 0 and self.lambda_g > 0:
            raise ValidationError("lambda_f and lambda_g cannot both be nonzero")

    @property
    def total(self) -> float:
        return self.lambda11 + self.lambda12 + self.lambda_f + self.lambda_g

    def as_dict(self) -> dict:
        return {"lambda11": self.lambda11, "lambda12": self.lambda12,
                "lambda_f": self.lambda_f, "lambda_g": self.lambda_g}


@dataclass(frozen=True)
class AdmmSettings:
    mu_f: float = 1.0
    mu_1: float = 1.0
    max_iter: int = 2000
    eps_abs: float = 1e-5
    eps_rel: float = 1e-4

    def __post_init__(self):
        if not (self.mu_f > 0 and self.mu_1 > 0):
            raise ValidationError("ADMM penalty parameters must be positive")
        if int(self.max_iter) < 1:
            raise ValidationError("max_iter must be positive")
        if not (0 < self.eps_abs <= 1 and 0 < self.eps_rel <= 1):
            raise ValidationError("eps_abs and eps_rel must lie in (0, 1]")
        object.__setattr__(self, "max_iter", int(self.max_iter))

    def as_dict(self) -> dict:
        return {"mu_f": self.mu_f, "mu_1": self.mu_1, "max_iter": self.max_iter,
                "eps_abs": self.eps_abs, "eps_rel": self.eps_rel}


@dataclass(frozen=True)
class FitResult:
    """Output of an ADMM fit.

    Traces hold one entry per outer iteration. ``state`` is the final
    ADMM state and can be passed back as a warm start.
    """

    params: MtclmParams
    objective_trace: np.ndarray
    primal_residual_trace: np.ndarray
    dual_residual_trace: np.ndarray
    augmented_lagrangian_trace: np.ndarray
    converged: bool
    iterations: int
    penalty: PenaltyConfig
    admm: AdmmSettings
    variant: str
    state: object = None
    notes: tuple[str, ...] = field(default=())

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1]) if len(self.objective_trace) else math.nan


def validate_dataset(data: OrdinalDataset, *, min_levels: int = 2) -> None:
    """Raise :class:`ValidationError` naming the first violated invariant.

    ``min_levels`` is the smallest admissible ``k_max``; MtCLM needs 2 so the
    severity model has at least one threshold.
    """
    if data.x.ndim != 2 or data.n < 1 or data.p < 1:
        raise ValidationError("empty data: need at least one row and one predictor")
    if data.y.shape != (data.n,):
        raise ValidationError(f"label vector has length {data.y.size}, expected {data.n}")
    if data.k_max < min_levels:
        raise ValidationError(f"k_max must be at least {min_levels}, got {data.k_max}")
    bad = np.flatnonzero((data.y < 0) | (data.y > data.k_max))
    if bad.size:
        i = bad[0]
        raise ValidationError(
            f"label out of range at row {i}: {data.y[i]} not in 0..{data.k_max}")
    if not np.all(np.isfinite(data.x)):
        i, j = np.argwhere(~np.isfinite(data.x))[0]
        raise ValidationError(f"non-finite predictor at row {i}, column {j}")


@dataclass(frozen=True)
class ScalingRecord:
    """Column centers and scales; ``scale`` is 1 for zero-variance columns."""

    center: np.ndarray
    scale: np.ndarray

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.center) / self.scale

    def params_to_original(self, params: MtclmParams) -> MtclmParams:
        """Map coefficients fitted on standardized predictors to raw-scale ones."""
        beta = params.beta / self.scale
        gamma = params.gamma / self.scale
        return MtclmParams(params.alpha - float(self.center @ beta), beta,
                           params.zeta - float(self.center @ gamma), gamma)

    def as_dict(self) -> dict:
        return {"center": self.center.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingRecord":
        return cls(np.asarray(d["center"], dtype=float), np.asarray(d["scale"], dtype=float))

    @classmethod
    def identity(cls, p: int) -> "ScalingRecord":
        return cls(np.zeros(p), np.ones(p))


def standardize(data: OrdinalDataset) -> tuple[OrdinalDataset, ScalingRecord]:
    """Center every column and scale it to unit (population) standard deviation.

    Zero-variance columns are only centered and get scale 1.
    """
    center = data.x.mean(axis=0)
    sd = data.x.std(axis=0)
    degenerate = sd <= 1e-12 * (1.0 + np.abs(center))
    scale = np.where(degenerate, 1.0, sd)
    record = ScalingRecord(_frozen_array(center), _frozen_array(scale))
    out = OrdinalDataset(record.transform(data.x), data.y, data.k_max, data.feature_names)
    return out, record


def read_csv(path, label: str, k_max: int | None = None) -> OrdinalDataset:
    """Load a dataset from a headed CSV file.

    ``label`` names the response column; every other column must be numeric.
    Errors carry the 1-based line number of the offending row.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label not in header:
            raise ValidationError(f"{path}: label column {label!r} not in header")
        li = header.index(label)
        names = [h for i, h in enumerate(header) if i != li]
        rows, labels = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValidationError(
                    f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
            try:
                lab = float(row[li])
                vals = [float(c) for i, c in enumerate(row) if i != li]
            except ValueError as exc:
                raise ValidationError(f"{path}: line {line}: {exc}") from None
            if not lab.is_integer():
                raise ValidationError(f"{path}: line {line}: label {row[li]!r} is not an integer")
            labels.append(int(lab))
            rows.append(vals)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    x = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return OrdinalDataset(x, np.array(labels, dtype=np.int64), k_max, tuple(names))


def write_csv(path, data: OrdinalDataset, label: str = "y") -> None:
    names = data.names()
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([label, *names])
        for yi, xi in zip(data.y, data.x):
            w.writerow([int(yi), *(repr(float(v)) for v in xi)])
