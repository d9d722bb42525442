"""Scenario-based synthetic data with a screening latent ``Y*`` and a
severity latent ``Y**``.

``Y = 0`` for the half of the rows with the smallest ``Y*``; the remaining
rows are split into levels 1, 2, 3 by the tertiles of ``Y**`` among them
(of ``Y*`` in the parallel scenario). Ground-truth coefficients are stored
in the latent orientation, i.e. a positive entry raises the latent score and
therefore the chance of disease / higher severity. The fitted MtCLM
coefficients estimate their negatives (see :attr:`GroundTruth.model_beta`).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import cholesky, toeplitz

from .data import OrdinalDataset, ValidationError

K_MAX = 3
MIN_P = 18
LEVEL_PROPORTIONS = (0.5, 1 / 6, 1 / 6, 1 / 6)


class Scenario(str, Enum):
    PARALLEL = "parallel"
    IDENTICAL = "identical"
    ALMOST_INVERSE = "almost_inverse"
    SIMILAR = "similar"
    ALMOST_INDEPENDENT = "almost_independent"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, cls):
            return value
        s = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        numbered = {str(i + 1): m for i, m in enumerate(cls)}
        if s in numbered:
            return numbered[s]
        compact = {m.value.replace("_", ""): m for m in cls}
        if s.replace("_", "") in compact:
            return compact[s.replace("_", "")]
        raise ValidationError(f"unknown scenario {value!r}")

    @property
    def number(self) -> int:
        return list(Scenario).index(self) + 1


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: Scenario
    n: int
    p: int
    rho: float = 0.0
    seed: int = 0
    coef_magnitude: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario.parse(self.scenario))
        if self.p < MIN_P:
            raise ValidationError(f"p must be at least {MIN_P}, got {self.p}")
        if self.n < 4:
            raise ValidationError(f"n must be at least 4, got {self.n}")
        if not 0 <= self.rho < 1:
            raise ValidationError(f"rho must lie in [0, 1), got {self.rho}")
        if self.coef_magnitude not in ("uniform", "fixed"):
            raise ValidationError("coef_magnitude must be 'uniform' or 'fixed'")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["scenario"] = self.scenario.value
        return d


@dataclass(frozen=True)
class GroundTruth:
    beta_true: np.ndarray
    gamma_true: np.ndarray
    thresholds: dict
    latent: dict = field(default_factory=dict, repr=False)

    @property
    def beta_support(self) -> np.ndarray:
        return self.beta_true != 0

    @property
    def gamma_support(self) -> np.ndarray:
        return self.gamma_true != 0

    @property
    def model_beta(self) -> np.ndarray:
        return -self.beta_true

    @property
    def model_gamma(self) -> np.ndarray:
        return -self.gamma_true

    def to_json(self, spec: ScenarioSpec) -> str:
        return json.dumps({
            "spec": spec.as_dict(),
            "beta_support": (np.flatnonzero(self.beta_support) + 1).tolist(),
            "gamma_support": (np.flatnonzero(self.gamma_support) + 1).tolist(),
            "beta_signs": np.sign(self.beta_true).astype(int).tolist(),
            "gamma_signs": np.sign(self.gamma_true).astype(int).tolist(),
            "beta_true": self.beta_true.tolist(),
            "gamma_true": self.gamma_true.tolist(),
            "orientation": "latent: positive coefficients raise disease risk/severity; "
                           "fitted MtCLM coefficients estimate the negatives",
            "thresholds": self.thresholds,
        }, indent=2)


def _signs(pos, neg, p):
    s = np.zeros(p, dtype=int)
    s[np.asarray(pos, dtype=int) - 1] = 1
    s[np.asarray(neg, dtype=int) - 1] = -1
    return s


def scenario_support(scenario, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Sign patterns (+1, -1, 0) of the latent screening and severity coefficients.

    Signal indices in the comments are 1-based.
    """
    scenario = Scenario.parse(scenario)
    if p < MIN_P:
        raise ValidationError(f"p must be at least {MIN_P}, got {p}")
    beta = _signs(range(1, 6), range(6, 11), p)
    if scenario in (Scenario.PARALLEL, Scenario.IDENTICAL):
        gamma = beta.copy()
    elif scenario is Scenario.ALMOST_INVERSE:
        gamma = -beta
        gamma[[0, 5]] = beta[[0, 5]]
    elif scenario is Scenario.SIMILAR:
        # 11 and 12 replace 4 (+) and 9 (-), inheriting their signs
        gamma = beta.copy()
        gamma[[3, 8]] = 0
        gamma[10], gamma[11] = 1, -1
    else:
        gamma = _signs([1, 11, 12, 13, 14], [6, 15, 16, 17, 18], p)
    return beta, gamma


def toeplitz_cholesky(p: int, rho: float) -> np.ndarray:
    if rho == 0:
        return np.eye(p)
    return cholesky(toeplitz(rho ** np.arange(p)), lower=True)


def _split_sizes(n: int) -> np.ndarray:
    n0 = int(np.floor(n * LEVEL_PROPORTIONS[0] + 0.5))
    m = n - n0
    q, rem = divmod(m, 3)
    return np.array([n0] + [q + (i < rem) for i in range(3)])


def _rank_levels(score, sizes):
    levels = np.empty(score.size, dtype=np.int64)
    order = np.argsort(score, kind="stable")
    edges = np.concatenate(([0], np.cumsum(sizes)))
    for lev in range(sizes.size):
        levels[order[edges[lev]:edges[lev + 1]]] = lev
    return levels


def _draw_coefficients(spec: ScenarioSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    sb, sg = scenario_support(spec.scenario, spec.p)
    if spec.coef_magnitude == "uniform":
        mb = rng.uniform(0.75, 1.25, size=spec.p)
        mg = mb if spec.scenario is Scenario.PARALLEL else rng.uniform(0.75, 1.25, size=spec.p)
    else:
        value = 0.5 if spec.p < spec.n else 1.0
        mb = mg = np.full(spec.p, value)
    return sb * mb, sg * mg


def _sample(spec: ScenarioSpec, beta, gamma, rng, keep_latent: bool):
    n, p = spec.n, spec.p
    x = rng.standard_normal((n, p)) @ toeplitz_cholesky(p, spec.rho).T
    y_star = x @ beta + rng.logistic(size=n)
    sizes = _split_sizes(n)
    thresholds = {}
    if spec.scenario is Scenario.PARALLEL:
        y_star2 = None
        y = _rank_levels(y_star, sizes)
        srt = np.sort(y_star)
        thresholds["screening"] = [float(srt[c - 1]) for c in np.cumsum(sizes)[:-1]]
    else:
        y_star2 = x @ gamma + rng.logistic(size=n)
        healthy = _rank_levels(y_star, np.array([sizes[0], n - sizes[0]])) == 0
        y = np.zeros(n, dtype=np.int64)
        sick = np.flatnonzero(~healthy)
        y[sick] = 1 + _rank_levels(y_star2[sick], sizes[1:])
        thresholds["screening"] = [float(np.max(y_star[healthy]))]
        srt = np.sort(y_star2[sick])
        thresholds["severity"] = [float(srt[c - 1]) for c in np.cumsum(sizes[1:])[:-1]]
    latent = {"y_star": y_star, "y_star2": y_star2} if keep_latent else {}
    return OrdinalDataset(x, y, K_MAX), GroundTruth(beta, gamma, thresholds, latent)


def generate(spec: ScenarioSpec, keep_latent: bool = False) -> tuple[OrdinalDataset, GroundTruth]:
    """Draw coefficients and one dataset; bit-reproducible given ``spec``."""
    rng = np.random.default_rng(spec.seed)
    beta, gamma = _draw_coefficients(spec, rng)
    return _sample(spec, beta, gamma, rng, keep_latent)


def generate_test_set(spec: ScenarioSpec, truth: GroundTruth, seed: int) -> OrdinalDataset:
    """Independent draw of ``spec.n`` rows sharing the coefficients in ``truth``."""
    rng = np.random.default_rng(seed)
    data, _ = _sample(spec, truth.beta_true, truth.gamma_true, rng, False)
    return data
