import numpy as np
import pytest

from treesmooth.errors import InvalidInputError, UndefinedMetricError
from treesmooth.metrics import (
    ConfusionMatrix,
    ScoredPredictions,
    balanced_accuracy,
    balanced_accuracy_from_labels,
    roc_auc,
    roc_auc_pairs,
    roc_auc_trapezoid,
    roc_curve,
)


def _both(scores, labels):
    sp = ScoredPredictions(np.asarray(scores, dtype=float), np.asarray(labels))
    return roc_auc_pairs(sp), roc_auc_trapezoid(sp)


class TestBalancedAccuracy:
    def test_perfect(self):
        assert balanced_accuracy_from_labels([0, 1, 1, 0], [0, 1, 1, 0]) == 1.0

    def test_mean_of_recalls(self):
        cm = ConfusionMatrix(tp0=8, fn0=2, tp1=6, fn1=4)
        assert balanced_accuracy(cm) == pytest.approx(0.7)

    def test_all_class_one(self):
        assert balanced_accuracy_from_labels([0, 0, 0, 1], [1, 1, 1, 1]) == pytest.approx(0.5)

    def test_equals_accuracy_on_balanced_data(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            y = np.repeat([0, 1], 20)
            pred = rng.integers(0, 2, size=40)
            assert balanced_accuracy_from_labels(y, pred) == pytest.approx(np.mean(y == pred))

    def test_missing_class(self):
        with pytest.raises(UndefinedMetricError):
            balanced_accuracy_from_labels([1, 1], [1, 0])

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            ConfusionMatrix.from_labels([0, 1], [0])


class TestRocAuc:
    def test_perfect_separation(self):
        assert _both([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == (1.0, 1.0)

    def test_all_ties(self):
        assert _both([0.3] * 6, [0, 1, 0, 1, 1, 0]) == (0.5, 0.5)

    def test_hand_counted_pairs(self):
        pairs, trap = _both([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
        assert pairs == pytest.approx(0.75)
        assert trap == pytest.approx(0.75)

    def test_binary_scores_single_trapezoid(self):
        # ROC points (0,0), (1/3, 2/3), (1,1)
        scores = [1, 1, 0, 1, 0, 0]
        labels = [1, 1, 1, 0, 0, 0]
        expected = 0.5 * (1 / 3) * (2 / 3) + (2 / 3) * (2 / 3 + 1) / 2
        pairs, trap = _both(scores, labels)
        assert trap == pytest.approx(expected)
        assert pairs == pytest.approx(expected)

    def test_estimators_agree(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(2, 200))
            labels = rng.integers(0, 2, size=n)
            labels[0], labels[1] = 0, 1
            scores = rng.integers(0, 21, size=n) / 20.0
            pairs, trap = _both(scores, labels)
            assert abs(pairs - trap) <= 1e-12

    def test_reversed_scores(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            labels = np.array([0, 1] + rng.integers(0, 2, size=40).tolist())
            scores = rng.integers(0, 11, size=42) / 10.0
            assert roc_auc(1.0 - scores, labels) == pytest.approx(1.0 - roc_auc(scores, labels), abs=1e-12)

    def test_complement_symmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            labels = np.array([0, 1] + rng.integers(0, 2, size=40).tolist())
            scores = rng.integers(0, 11, size=42) / 10.0
            assert roc_auc(1.0 - scores, 1 - labels) == pytest.approx(roc_auc(scores, labels), abs=1e-12)

    def test_increasing_transform(self):
        rng = np.random.default_rng(4)
        labels = np.array([0, 1] + rng.integers(0, 2, size=60).tolist())
        scores = rng.uniform(size=62)
        assert roc_auc(scores**3, labels) == roc_auc(scores, labels)

    def test_single_class(self):
        with pytest.raises(UndefinedMetricError):
            roc_auc([0.2, 0.9], [1, 1])

    def test_scores_outside_unit_interval(self):
        with pytest.raises(InvalidInputError):
            roc_auc([0.2, 1.5], [0, 1])

    def test_curve_endpoints(self):
        fpr, tpr = roc_curve(ScoredPredictions(np.array([0.1, 0.4, 0.35, 0.8]), np.array([0, 0, 1, 1])))
        assert (fpr[0], tpr[0]) == (0.0, 0.0)
        assert (fpr[-1], tpr[-1]) == (1.0, 1.0)
        assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
