import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from oracles import brute_auc, brute_tau

from mtclm.metrics import (MetricsReport, accuracy, f1_score, kendall_tau, mae, per_task_selection,
                           roc_auc, selection_metrics)

small_ints = st.lists(st.integers(0, 4), min_size=2, max_size=30)


def test_auc_examples():
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert roc_auc([0.3] * 4, [0, 1, 0, 1]) == 0.5
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    with pytest.raises(ValueError, match="AUC undefined"):
        roc_auc([0.1, 0.2], [1, 1])


def test_f1_examples():
    assert f1_score([1, 0, 1], [1, 0, 1]) == 1.0
    assert f1_score([0, 0, 0], [1, 0, 1]) == 0.0
    assert f1_score([1, 1, 0], [1, 0, 1]) == 0.5


def test_accuracy_mae_examples():
    assert accuracy([0, 1, 2], [0, 1, 2]) == 1.0 and mae([0, 1, 2], [0, 1, 2]) == 0.0
    assert accuracy([1, 2, 3], [0, 1, 2]) == 0.0 and mae([1, 2, 3], [0, 1, 2]) == 1.0
    assert accuracy([0, 2], [1, 0]) == 0.0 and mae([0, 2], [1, 0]) == 1.5
    with pytest.raises(ValueError):
        accuracy([0, 1], [0])


def test_tau_examples():
    a = np.array([0, 1, 2, 3])
    assert kendall_tau(a, a) == pytest.approx(1.0)
    assert kendall_tau(a, a[::-1]) == pytest.approx(-1.0)
    assert kendall_tau(a, [0, 2, 1, 3]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError, match="tau undefined"):
        kendall_tau([1, 1, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        kendall_tau(a, a, variant="c")


def test_frozen_metric_values(frozen):
    for case in frozen["metrics"]:
        assert abs(roc_auc(case["scores"], case["labels"]) - case["auc"]) < 1e-12
        assert abs(kendall_tau(case["a"], case["b"]) - case["tau_b"]) < 1e-12
        assert abs(kendall_tau(case["a"], case["b"], "a") - case["tau_a"]) < 1e-12


@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(0, 1)), min_size=2, max_size=30))
def test_auc_brute_force(pairs):
    s = [p[0] / 2 for p in pairs]
    lab = [p[1] for p in pairs]
    assume(0 < sum(lab) < len(lab))
    assert abs(roc_auc(s, lab) - brute_auc(s, lab)) < 1e-12


@given(st.lists(st.tuples(st.integers(-40, 40), st.integers(0, 1)), min_size=2, max_size=30,
                unique_by=lambda t: t[0]))
def test_auc_complement_and_monotone_invariance(pairs):
    s = np.array([p[0] / 8 for p in pairs])
    lab = np.array([p[1] for p in pairs])
    assume(0 < lab.sum() < lab.size)
    assert roc_auc(s, lab) + roc_auc(-s, lab) == pytest.approx(1.0, abs=1e-12)
    assert roc_auc(np.exp(s), lab) == pytest.approx(roc_auc(s, lab), abs=1e-12)


@given(st.integers(2, 30).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 4), min_size=n, max_size=n),
    st.lists(st.integers(0, 4), min_size=n, max_size=n))))
def test_tau_brute_force_symmetry_relabeling(ab):
    a, b = map(np.array, ab)
    assume(len(set(a)) > 1 and len(set(b)) > 1)
    for v in ("a", "b"):
        assert abs(kendall_tau(a, b, v) - brute_tau(a, b, v)) < 1e-12
    assert kendall_tau(a, b) == pytest.approx(kendall_tau(b, a), abs=1e-12)
    assert kendall_tau(3 * a + 7, b) == pytest.approx(kendall_tau(a, b), abs=1e-12)


def test_selection_examples():
    t = np.array([True, True, False])
    m = selection_metrics(np.array([1.0, 2.0, 0.0]), np.zeros(3), t, np.zeros(3, bool))
    assert m.power == 1.0 and m.fdr == 0.0
    m = selection_metrics(np.zeros(3), np.zeros(3), t, np.zeros(3, bool))
    assert m.power == 0.0 and m.fdr == 0.0
    m = selection_metrics(np.array([0.0, 1.0, 1.0]), np.zeros(3), t, np.zeros(3, bool))
    assert m.power == 0.5 and m.fdr == 0.5


def test_per_task_selection():
    out = per_task_selection(np.array([1.0, 0.0]), np.array([0.0, 3.0]),
                             np.array([True, False]), np.array([True, True]))
    assert out["screening"].power == 1.0 and out["screening"].specificity == 1.0
    assert out["severity"].power == 0.5
    assert out["pooled"].power == pytest.approx(2 / 3)


def test_report_bounds():
    MetricsReport(0.5, 0.5, 0.5, 0.3, -0.2)
    MetricsReport(0.5, 0.5, math.nan, math.nan, math.nan)
    with pytest.raises(ValueError):
        MetricsReport(1.2, 0.5, 0.5, 0.3, 0.0)
    with pytest.raises(ValueError):
        MetricsReport(0.5, 0.5, 0.5, -1.0, 0.0)
    with pytest.raises(ValueError):
        MetricsReport(0.5, 0.5, 0.5, 0.0, 1.5)
