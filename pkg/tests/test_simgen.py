import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtclm.data import ValidationError
from mtclm.simgen import (LEVEL_PROPORTIONS, Scenario, ScenarioSpec, generate, generate_test_set,
                          scenario_support)

scenarios = st.sampled_from(list(Scenario))


def _idx(mask):
    return (np.flatnonzero(mask) + 1).tolist()


def test_identical_support():
    b, g = scenario_support("identical", 30)
    assert _idx(b == 1) == [1, 2, 3, 4, 5] and _idx(b == -1) == [6, 7, 8, 9, 10]
    np.testing.assert_array_equal(b, g)


def test_almost_independent_support():
    b, g = scenario_support(5, 30)
    assert _idx(g != 0) == [1, 6, 11, 12, 13, 14, 15, 16, 17, 18]
    assert _idx(b != 0) == list(range(1, 11))


def test_parallel_and_inverse_and_similar():
    b, g = scenario_support("parallel", 20)
    np.testing.assert_array_equal(b, g)
    b, g = scenario_support("almost_inverse", 20)
    assert g[0] == b[0] and g[5] == b[5]
    mask = np.ones(20, bool)
    mask[[0, 5]] = False
    np.testing.assert_array_equal(g[mask], -b[mask])
    b, g = scenario_support("similar", 20)
    assert _idx(g != 0) == [1, 2, 3, 5, 6, 7, 8, 10, 11, 12]
    assert g[10] == 1 and g[11] == -1


def test_scenario_parsing():
    assert Scenario.parse("AlmostIndependent") is Scenario.ALMOST_INDEPENDENT
    assert Scenario.parse("3") is Scenario.ALMOST_INVERSE
    assert Scenario.parse("almost-inverse") is Scenario.ALMOST_INVERSE
    with pytest.raises(ValidationError):
        Scenario.parse("weird")


def test_spec_validation():
    with pytest.raises(ValidationError):
        ScenarioSpec("similar", 100, 10)
    with pytest.raises(ValidationError):
        ScenarioSpec("similar", 100, 20, rho=1.0)
    with pytest.raises(ValidationError):
        ScenarioSpec("similar", 2, 20)
    with pytest.raises(ValidationError):
        ScenarioSpec("similar", 100, 20, coef_magnitude="big")


@settings(max_examples=50)
@given(scenarios, st.integers(4, 400), st.integers(18, 40), st.floats(0, 0.9), st.integers(0, 99999))
def test_category_proportions(scenario, n, p, rho, seed):
    data, _ = generate(ScenarioSpec(scenario, n, p, rho, seed))
    counts = data.level_counts()
    target = n * np.array(LEVEL_PROPORTIONS)
    assert np.all(np.abs(counts - target) <= 1.0)
    assert counts.sum() == n


@settings(max_examples=20)
@given(scenarios, st.integers(0, 99999))
def test_latent_structure_defines_labels(scenario, seed):
    data, truth = generate(ScenarioSpec(scenario, 60, 18, 0.2, seed), keep_latent=True)
    ys = truth.latent["y_star"]
    healthy = data.y == 0
    assert ys[healthy].max() < ys[~healthy].min()
    sev = ys if scenario is Scenario.PARALLEL else truth.latent["y_star2"]
    for k in (1, 2):
        assert sev[data.y == k].max() < sev[data.y == k + 1].min()


def test_reproducible_and_seed_sensitive():
    spec = ScenarioSpec("similar", 50, 20, 0.3, 5)
    a, ta = generate(spec)
    b, tb = generate(spec)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(ta.beta_true, tb.beta_true)
    c, _ = generate(ScenarioSpec("similar", 50, 20, 0.3, 6))
    assert not np.array_equal(a.x, c.x)


@given(scenarios, st.integers(0, 9999))
def test_truth_matches_scenario_support(scenario, seed):
    _, truth = generate(ScenarioSpec(scenario, 20, 25, seed=seed))
    b, g = scenario_support(scenario, 25)
    np.testing.assert_array_equal(np.sign(truth.beta_true), b)
    np.testing.assert_array_equal(np.sign(truth.gamma_true), g)
    mags = np.abs(truth.beta_true[b != 0])
    assert np.all((mags >= 0.75) & (mags <= 1.25))
    np.testing.assert_array_equal(truth.model_beta, -truth.beta_true)


def test_parallel_shares_magnitudes_and_fixed_mode():
    _, t = generate(ScenarioSpec("parallel", 50, 20, seed=1))
    np.testing.assert_array_equal(t.beta_true, t.gamma_true)
    _, t = generate(ScenarioSpec("identical", 50, 20, seed=1, coef_magnitude="fixed"))
    assert set(np.abs(t.beta_true[t.beta_true != 0])) == {0.5}
    _, t = generate(ScenarioSpec("identical", 10, 20, seed=1, coef_magnitude="fixed"))
    assert set(np.abs(t.beta_true[t.beta_true != 0])) == {1.0}


def test_correlation_structure():
    data, _ = generate(ScenarioSpec("identical", 2000, 30, 0.0, 3))
    r = np.corrcoef(data.x, rowvar=False)
    off = r[~np.eye(30, dtype=bool)]
    assert np.max(np.abs(off)) < 4 / np.sqrt(2000)
    data, _ = generate(ScenarioSpec("identical", 20000, 18, 0.6, 3))
    r = np.corrcoef(data.x, rowvar=False)
    assert abs(r[0, 1] - 0.6) < 0.02 and abs(r[0, 2] - 0.36) < 0.02


def test_test_set_shares_coefficients():
    spec = ScenarioSpec("similar", 80, 20, seed=2)
    train, truth = generate(spec)
    test = generate_test_set(spec, truth, 99)
    assert test.n == train.n
    assert not np.array_equal(test.x, train.x)
    np.testing.assert_array_equal(test.level_counts(), train.level_counts())


def test_truth_json():
    spec = ScenarioSpec("almost_independent", 30, 20, seed=1)
    _, truth = generate(spec)
    d = json.loads(truth.to_json(spec))
    assert d["gamma_support"] == [1, 6, 11, 12, 13, 14, 15, 16, 17, 18]
    assert d["spec"]["scenario"] == "almost_independent"
    assert len(d["thresholds"]["severity"]) == 2
