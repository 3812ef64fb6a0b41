import numpy as np
import pytest

from dmkde import InvalidArgumentError, accuracy, confusion, f1_anomaly, f1_weighted


class TestConfusion:
    def test_perfect_two_sample(self):
        c = confusion([1, 0], [1, 0])
        assert (c.tp, c.tn, c.fp, c.fn) == (1, 1, 0, 0)

    def test_swapped_predictions(self):
        c = confusion([1, 0], [0, 1])
        assert (c.fn, c.fp) == (1, 1)

    def test_hand_count(self):
        c = confusion([0, 0, 0, 1], [0, 0, 1, 1])
        assert (c.tp, c.fp, c.tn, c.fn) == (1, 1, 2, 0)
        assert c.total == 4

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            confusion([0, 1], [0])

    def test_non_binary(self):
        with pytest.raises(InvalidArgumentError):
            confusion([0, 2], [0, 1])

    def test_empty(self):
        with pytest.raises(InvalidArgumentError):
            confusion([], [])


class TestF1Weighted:
    def test_perfect(self):
        assert f1_weighted([0, 1, 1], [0, 1, 1]) == 1.0

    def test_hand_value(self):
        # class 0: P=1, R=2/3, F1=0.8; class 1: P=0.5, R=1, F1=2/3
        # weighted: (3*0.8 + 1*(2/3)) / 4
        value = f1_weighted([0, 0, 0, 1], [0, 0, 1, 1])
        assert value == pytest.approx((3 * 0.8 + 2 / 3) / 4)

    def test_all_normal_predictions(self):
        # class 0: P=3/4, R=1, F1=6/7; class 1 contributes 0
        value = f1_weighted([0, 0, 0, 1], [0, 0, 0, 0])
        assert value == pytest.approx(3 * (6 / 7) / 4)
        assert value == pytest.approx(0.643, abs=0.001)

    def test_label_swap_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            y = rng.integers(0, 2, 30)
            p = rng.integers(0, 2, 30)
            assert f1_weighted(y, p) == pytest.approx(f1_weighted(1 - y, 1 - p))

    def test_equals_f1_anomaly_when_all_class_one(self):
        y = np.ones(10, dtype=int)
        p = np.array([1] * 7 + [0] * 3)
        assert f1_weighted(y, p) == pytest.approx(f1_anomaly(y, p))


class TestF1AnomalyAccuracy:
    def test_perfect(self):
        assert f1_anomaly([0, 1], [0, 1]) == 1.0
        assert accuracy([0, 1], [0, 1]) == 1.0

    def test_hand_values(self):
        y, p = [0, 0, 0, 1], [0, 0, 1, 1]
        assert f1_anomaly(y, p) == pytest.approx(2 / 3)
        assert accuracy(y, p) == 0.75

    def test_zero_division_convention(self):
        assert f1_anomaly([0, 0], [0, 0]) == 0.0

    def test_accuracy_formula(self):
        rng = np.random.default_rng(1)
        y = rng.integers(0, 2, 40)
        p = rng.integers(0, 2, 40)
        c = confusion(y, p)
        assert accuracy(y, p) == (c.tp + c.tn) / 40

    def test_all_in_unit_interval(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            y = rng.integers(0, 2, 15)
            p = rng.integers(0, 2, 15)
            for m in (f1_weighted, f1_anomaly, accuracy):
                assert 0.0 <= m(y, p) <= 1.0
