import numpy as np
import pytest

from blv.errors import DegenerateInputError, LabelRangeError, ShapeMismatchError
from blv.metrics.iou import ConfusionMatrix, confusion, evaluate_predictions, iou_report


class TestConfusion:
    def test_direct_tally(self):
        cm = confusion([0, 1, 1], [0, 1, 0], 2)
        assert cm.cells.tolist() == [[1, 1], [0, 1]]
        assert cm.ignored == 0

    def test_all_ignored(self):
        cm = confusion([0, 1, 1], [255, 255, 255], 2)
        assert not cm.cells.any()
        assert cm.ignored == 3
        assert cm.evaluated == 3

    def test_perfect_is_diagonal(self, rng):
        labels = rng.integers(0, 4, size=200)
        cm = confusion(labels, labels, 4)
        assert np.array_equal(cm.cells, np.diag(np.bincount(labels, minlength=4)))

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            confusion([0, 1], [0, 1, 1], 2)

    def test_prediction_out_of_range(self):
        with pytest.raises(LabelRangeError) as err:
            confusion([0, 7, 1], [0, 1, 1], 2)
        assert err.value.position == 1

    def test_permutation_invariance(self, rng):
        pred = rng.integers(0, 3, size=100)
        gt = rng.integers(0, 3, size=100)
        perm = rng.permutation(100)
        assert np.array_equal(confusion(pred, gt, 3).cells, confusion(pred[perm], gt[perm], 3).cells)

    def test_additivity(self, rng):
        pred = rng.integers(0, 3, size=120)
        gt = rng.integers(0, 3, size=120)
        gt[::7] = 255
        whole = confusion(pred, gt, 3)
        parts = confusion(pred[:50], gt[:50], 3) + confusion(pred[50:], gt[50:], 3)
        assert np.array_equal(whole.cells, parts.cells)
        assert whole.ignored == parts.ignored


class TestIoUReport:
    def test_hand_example(self):
        report = iou_report(ConfusionMatrix(np.array([[1, 1], [0, 1]])), tail_classes=[1])
        assert report.per_class_iou == [0.5, 0.5]
        assert report.miou == 0.5
        assert report.tail_miou == 0.5
        assert report.per_class_recall == [0.5, 1.0]
        assert report.per_class_precision == [1.0, 0.5]

    def test_perfect(self):
        report = iou_report(ConfusionMatrix(np.diag([5, 3, 2])))
        assert report.per_class_iou == [1.0, 1.0, 1.0]
        assert report.miou == 1.0
        assert report.tail_miou is None

    def test_absent_class_is_flagged(self):
        report = evaluate_predictions([0, 0, 1], [0, 0, 1], 3, tail_classes=[2])
        assert report.per_class_iou == [1.0, 1.0, None]
        assert report.undefined_classes == [2]
        assert report.miou == 1.0
        assert report.tail_miou is None

    def test_all_undefined(self):
        with pytest.raises(DegenerateInputError):
            iou_report(ConfusionMatrix(np.zeros((3, 3), dtype=np.int64)))

    def test_bounds(self, rng):
        report = evaluate_predictions(rng.integers(0, 5, size=300), rng.integers(0, 5, size=300), 5)
        assert all(0.0 <= v <= 1.0 for v in report.per_class_iou if v is not None)

    def test_serializable(self):
        report = evaluate_predictions([0, 1, 1], [0, 1, 0], 2, tail_classes=[1])
        assert set(report.to_dict()) >= {"per_class_iou", "miou", "tail_miou", "tail_classes", "per_class_recall"}
