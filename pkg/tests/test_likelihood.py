import math

import mpmath
import numpy as np
import pytest
from conftest import instance
from hypothesis import given
from hypothesis import strategies as st
from oracles import central_diff, naive_nll

from mtclm.data import MtclmParams, OrdinalDataset, ValidationError
from mtclm.likelihood import (NllKernel, grad_screening, grad_severity, log_interval_prob, nll,
                              screening_nll, severity_nll, total_nll)


def _one(y, k_max=3):
    return OrdinalDataset(np.zeros((len(y), 1)), np.array(y), k_max)


def test_screening_hand_values():
    assert screening_nll(_one([0]), 0.0, np.zeros(1)) == pytest.approx(math.log(2), abs=1e-15)
    assert screening_nll(_one([0, 1]), 0.0, np.zeros(1)) == pytest.approx(math.log(2), abs=1e-15)


def test_severity_hand_values():
    z = np.array([0.0, 1.0])
    assert severity_nll(_one([1]), z, np.zeros(1)) == pytest.approx(math.log(2), abs=1e-15)
    expected = -math.log(1 / (1 + math.exp(-1)) - 0.5)
    assert severity_nll(_one([2]), z, np.zeros(1)) == pytest.approx(expected, abs=1e-12)
    # -log(0.2310585786) = 1.46508...
    assert expected == pytest.approx(1.46508, abs=1e-5)
    assert severity_nll(_one([0]), z, np.zeros(1)) == 0.0


def test_gradient_hand_values():
    ga, _ = grad_screening(_one([0]), 0.0, np.zeros(1))
    assert ga == pytest.approx(-0.5)
    ga, _ = grad_screening(_one([0, 1]), 0.0, np.zeros(1))
    assert ga == pytest.approx(0.0)
    gz, gg = grad_severity(_one([0, 0]), np.array([0.0, 1.0]), np.zeros(1))
    assert np.all(gz == 0) and np.all(gg == 0)
    gz, _ = grad_severity(_one([1], k_max=2), np.array([0.0]), np.zeros(1))
    assert gz[0] == pytest.approx(-0.5)


def test_matches_frozen_extended_precision_oracle(frozen):
    for case in frozen["naive_nll"]:
        data, params = instance(case["seed"], case["n"], case["p"])
        v = nll(data, params)
        assert v.screening_nll == pytest.approx(case["screening"], rel=1e-13)
        assert v.severity_nll == pytest.approx(case["severity"], rel=1e-13)


@given(st.integers(0, 10_000), st.floats(0.1, 4.0))
def test_matches_live_extended_precision_oracle(seed, scale):
    data, params = instance(seed, 12, 3, scale=scale)
    scr, sev = naive_nll(data.x, data.y, params.alpha, params.beta, params.zeta, params.gamma)
    v = nll(data, params)
    assert v.screening_nll == pytest.approx(scr, rel=1e-12)
    assert v.severity_nll == pytest.approx(sev, rel=1e-12)


def _flat(params):
    return np.concatenate(([params.alpha], params.beta, params.gamma, params.zeta))


def _unflat(w, p):
    return MtclmParams(w[0], w[1:1 + p], w[1 + 2 * p:], w[1 + p:1 + 2 * p])


@given(st.integers(0, 10_000))
def test_gradients_match_central_differences(seed):
    data, params = instance(seed, 30, 5)
    ga, gb = grad_screening(data, params.alpha, params.beta)
    gz, gg = grad_severity(data, params.zeta, params.gamma)
    analytic = np.concatenate(([ga], gb, gg, gz))
    numeric = central_diff(lambda w: total_nll(data, _unflat(w, data.p)), _flat(params))
    err = np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric)))
    assert err < 1e-6


@given(st.integers(0, 10_000))
def test_kernel_agrees_with_reference_functions(seed):
    data, params = instance(seed, 25, 3)
    k = NllKernel(data)
    f1, ga, gb = k.screening(params.alpha, params.beta)
    f2, gz, gg = k.severity(params.zeta, params.gamma)
    assert f1 == pytest.approx(screening_nll(data, params.alpha, params.beta), rel=1e-14)
    assert f2 == pytest.approx(severity_nll(data, params.zeta, params.gamma), rel=1e-14)
    ra, rb = grad_screening(data, params.alpha, params.beta)
    rz, rg = grad_severity(data, params.zeta, params.gamma)
    np.testing.assert_allclose(np.concatenate(([ga], gb, gz, gg)),
                               np.concatenate(([ra], rb, rz, rg)), rtol=1e-12, atol=1e-15)


@given(st.integers(0, 10_000))
def test_midpoint_convexity(seed):
    data, p1 = instance(seed, 30, 3)
    _, p2 = instance(seed + 1, 30, 3, scale=2.0)
    mid = MtclmParams((p1.alpha + p2.alpha) / 2, (p1.beta + p2.beta) / 2,
                      (p1.zeta + p2.zeta) / 2, (p1.gamma + p2.gamma) / 2)
    assert total_nll(data, mid) <= 0.5 * (total_nll(data, p1) + total_nll(data, p2)) + 1e-9


def test_separability():
    data, params = instance(4, 30, 3)
    v = nll(data, params)
    assert v.total_nll == screening_nll(data, params.alpha, params.beta) + severity_nll(
        data, params.zeta, params.gamma)


@given(st.floats(-500, 500), st.floats(-500, 500), st.floats(0.0, 10.0))
def test_finite_for_extreme_linear_predictors(eta, u, gap):
    data = OrdinalDataset(np.array([[1.0], [1.0], [1.0], [1.0]]), np.array([0, 1, 2, 3]), 3)
    params = MtclmParams(0.0, np.array([eta]), np.array([0.0, gap + 1e-3]), np.array([u]))
    assert np.isfinite(total_nll(data, params))
    gz, gg = grad_severity(data, params.zeta, params.gamma)
    assert np.all(np.isfinite(gz)) and np.all(np.isfinite(gg))


def test_interval_probability_tails():
    lo = np.array([-np.inf, 30.0, -40.0])
    hi = np.array([np.inf, 31.0, -39.0])
    got = log_interval_prob(lo, hi)
    assert got[0] == 0.0
    sig = lambda t: 1 / (1 + mpmath.exp(-t))  # noqa: E731
    exact = [float(mpmath.log(sig(31) - sig(30))), float(mpmath.log(sig(-39) - sig(-40)))]
    np.testing.assert_allclose(got[1:], exact, rtol=1e-9)


def test_dimension_checks():
    data, params = instance(1, 10, 3)
    with pytest.raises(ValidationError):
        screening_nll(data, 0.0, np.zeros(4))
    with pytest.raises(ValidationError):
        severity_nll(data, np.array([1.0, 0.0]), np.zeros(3))
