import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from partialnet.classical import EdgeScores
from partialnet.evaluation import (
    RocCurve,
    average_roc,
    compare_engines,
    interpolate_tpr,
    read_points_csv,
    roc_from_labels,
    roc_from_scores,
)
from partialnet.exceptions import UndefinedRateError
from partialnet.simulate import SimConfig, generate_topology


def mann_whitney_auc(scores, labels):
    # lower score ranks as more edge-like, ties count one half
    pos, neg = scores[labels], scores[~labels]
    u = stats.mannwhitneyu(neg, pos, alternative="two-sided").statistic
    return u / (pos.size * neg.size)


@settings(max_examples=60, deadline=None)
@given(
    data=st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=60).filter(
        lambda d: any(b for _, b in d) and not all(b for _, b in d)
    )
)
def test_auc_equals_mann_whitney(data):
    scores = np.array([s for s, _ in data], dtype=float)
    labels = np.array([b for _, b in data])
    curve = roc_from_labels(scores, labels)
    assert curve.auc == pytest.approx(mann_whitney_auc(scores, labels), abs=1e-12)
    assert curve.fpr[0] == 0 and curve.tpr[0] == 0
    assert curve.fpr[-1] == 1 and curve.tpr[-1] == 1
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)


def test_perfect_and_constant_scores():
    labels = np.array([True, True, False, False, False])
    assert roc_from_labels([0.1, 0.2, 0.5, 0.6, 0.9], labels).auc == 1.0
    flat = roc_from_labels(np.full(5, 0.3), labels)
    np.testing.assert_array_equal(flat.fpr, [0, 1])
    np.testing.assert_array_equal(flat.tpr, [0, 1])
    assert flat.auc == 0.5
    with pytest.raises(UndefinedRateError):
        roc_from_labels([0.1, 0.2], [True, True])


def test_direction_flip():
    rng = np.random.default_rng(0)
    s = rng.random(40)
    y = rng.random(40) < 0.3
    assert roc_from_labels(-s, y).auc == pytest.approx(1 - roc_from_labels(s, y).auc, abs=1e-12)


def test_random_scores_auc_near_half():
    tree = generate_topology(SimConfig(p=10, n=5), np.random.default_rng(0))
    rng = np.random.default_rng(1)
    aucs = []
    for _ in range(200):
        a = rng.random((10, 10))
        a = np.triu(a, 1) + np.triu(a, 1).T
        sc = EdgeScores(np.eye(10), a, np.zeros((10, 10)), "classical-p")
        aucs.append(roc_from_scores(sc, tree).auc)
    assert abs(np.mean(aucs) - 0.5) < 0.05


def test_tree_scores_perfect():
    tree = generate_topology(SimConfig(p=7, n=5), np.random.default_rng(3))
    score = np.where(tree.adjacency, 0.01, 0.9)
    np.fill_diagonal(score, 0.0)
    curve = roc_from_scores(EdgeScores(np.eye(7), score, np.zeros((7, 7)), "bayesian-e"), tree, {"seed": 1})
    assert curve.auc == 1.0
    assert curve.meta == {"seed": 1}


def test_interpolation_and_averaging():
    curve = RocCurve(np.array([0.0, 0.0, 0.5, 1.0]), np.array([0.0, 0.4, 0.8, 1.0]), 0.0)
    grid = np.linspace(0, 1, 101)
    t = interpolate_tpr(curve, grid)
    assert t[0] == 0.4  # top of the vertical segment
    assert t[50] == pytest.approx(0.8, abs=1e-12)
    assert t[25] == pytest.approx(0.6, abs=1e-12)
    single = average_roc([curve])
    np.testing.assert_allclose(single.mean_tpr, t, atol=1e-12)

    diag = RocCurve(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 0.5)
    avg = average_roc([diag, diag])
    np.testing.assert_allclose(avg.mean_tpr, avg.fpr_grid, atol=1e-12)
    assert avg.curve_auc == pytest.approx(0.5)

    a = RocCurve(np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 1.0]), 1.0)
    two = average_roc([a, diag])
    assert two.mean_auc == 0.75
    assert two.curve_count == 2
    with pytest.raises(ValueError):
        average_roc([])


def test_csv_round_trip():
    curve = roc_from_labels([0.1, 0.3, 0.2, 0.7], [True, False, True, False])
    fpr, tpr = read_points_csv(curve.to_csv())
    np.testing.assert_array_equal(fpr, curve.fpr)
    np.testing.assert_array_equal(tpr, curve.tpr)


def _curves(aucs, seeds):
    return [RocCurve(np.array([0.0, 1.0]), np.array([0.0, 1.0]), a, {"seed": s}) for a, s in zip(aucs, seeds)]


def test_compare_engines():
    same = compare_engines({"a": _curves([0.7, 0.8], [1, 2]), "b": _curves([0.7, 0.8], [1, 2])})
    assert same["differences"][0]["difference"] == 0
    assert same["differences"][0]["paired"] is True
    gap = compare_engines({"a": _curves([1.0, 1.0], [1, 2]), "b": _curves([0.5, 0.5], [1, 2])})
    assert gap["differences"][0]["difference"] == 0.5
    assert gap["engines"]["a"] == {"mean_auc": 1.0, "se": 0.0, "count": 2}
    unpaired = compare_engines({"a": _curves([0.9, 0.7], [1, 2]), "b": _curves([0.6], [3])})
    d = unpaired["differences"][0]
    assert d["paired"] is False and d["difference"] == pytest.approx(0.2)
    assert d["se"] is None  # one curve has no standard error
