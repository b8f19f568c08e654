"""Confusion counts, per-class F-scores, change maps, and CSV reports."""

import numpy as np
import pytest

import broadchange as bc
from broadchange.errors import DimensionMismatch, LengthMismatch


def _brute_force_scores(truth, predicted):
    """Independent route: precision/recall recomputed from raw vectors."""
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    out = {}
    for positive in (0, 1):
        tp = np.sum((truth == positive) & (predicted == positive))
        fp = np.sum((truth != positive) & (predicted == positive))
        fn = np.sum((truth == positive) & (predicted != positive))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        if precision + recall == 0:
            out[positive] = 0.0
        else:
            out[positive] = 100.0 * 2 * precision * recall / (precision + recall)
    return out[0], out[1], (out[0] + out[1]) / 2


# ---------------------------------------------------------------------------
# confusion


def test_confusion_hand_count():
    counts = bc.confusion([1, 0, 1, 0], [1, 1, 0, 0])
    assert (counts.tp, counts.fp, counts.fn, counts.tn) == (1, 1, 1, 1)
    assert counts.total == 4


def test_confusion_all_positive_and_empty():
    counts = bc.confusion(np.ones(7, np.int64), np.ones(7, np.int64))
    assert (counts.tp, counts.fp, counts.tn, counts.fn) == (7, 0, 0, 0)
    counts = bc.confusion(np.array([], np.int64), np.array([], np.int64))
    assert counts.total == 0


def test_confusion_length_mismatch():
    with pytest.raises(LengthMismatch):
        bc.confusion([1, 0], [1, 0, 1])


# ---------------------------------------------------------------------------
# f_scores


def test_f_scores_hand_value():
    counts = bc.ConfusionCounts(tp=8, fp=2, tn=0, fn=2)
    _, f1, _ = bc.f_scores(counts)
    assert f1 == pytest.approx(80.0, abs=1e-12)


def test_f_scores_perfect_prediction():
    counts = bc.confusion([0, 1, 0, 1], [0, 1, 0, 1])
    f0, f1, afs = bc.f_scores(counts)
    assert f0 == f1 == afs == 100.0


def test_f_scores_all_majority_prediction_zeroes_minority():
    truth = np.array([0] * 250 + [1], dtype=np.int64)
    predicted = np.zeros(251, dtype=np.int64)
    f0, f1, afs = bc.f_scores(bc.confusion(truth, predicted))
    assert f1 == 0.0
    assert f0 > 99.0
    assert afs == pytest.approx(f0 / 2)


def test_f_scores_degenerate_empty_input():
    f0, f1, afs = bc.f_scores(bc.ConfusionCounts(tp=0, fp=0, tn=0, fn=0))
    assert (f0, f1, afs) == (0.0, 0.0, 0.0)


def test_f_scores_match_brute_force_oracle():
    rng = np.random.default_rng(30)
    for _ in range(300):
        n = int(rng.integers(1, 40))
        truth = rng.integers(0, 2, size=n)
        predicted = rng.integers(0, 2, size=n)
        ours = bc.f_scores(bc.confusion(truth, predicted))
        oracle = _brute_force_scores(truth, predicted)
        assert ours == oracle


def test_f_scores_label_swap_symmetry():
    rng = np.random.default_rng(31)
    for _ in range(100):
        n = int(rng.integers(1, 30))
        truth = rng.integers(0, 2, size=n)
        predicted = rng.integers(0, 2, size=n)
        f0, f1, afs = bc.f_scores(bc.confusion(truth, predicted))
        g0, g1, afs_swapped = bc.f_scores(bc.confusion(1 - truth, 1 - predicted))
        assert (g0, g1) == (f1, f0)
        assert afs_swapped == pytest.approx(afs, abs=1e-12)
        assert 0.0 <= f0 <= 100.0 and 0.0 <= f1 <= 100.0
        assert afs == pytest.approx((f0 + f1) / 2, abs=1e-9)


# ---------------------------------------------------------------------------
# render_change_map


def test_render_constant_maps():
    black = bc.render_change_map(np.zeros(12, np.int64), 4, 3)
    white = bc.render_change_map(np.ones(12, np.int64), 4, 3)
    assert black.shape == (3, 4) and white.shape == (3, 4)
    assert black.dtype == np.uint8 and white.dtype == np.uint8
    assert np.all(black == 0) and np.all(white == 255)


def test_render_single_changed_pixel():
    labels = np.zeros(20, np.int64)
    labels[2 * 5 + 3] = 1  # (x=3, y=2) on a 5-wide image
    image = bc.render_change_map(labels, 5, 4)
    assert image[2, 3] == 255
    assert image.sum() == 255


def test_render_accepts_prediction_and_counts_whites():
    rng = np.random.default_rng(32)
    labels = rng.integers(0, 2, size=30).astype(np.int64)
    prediction = bc.Prediction(labels=labels, scores=np.zeros((30, 2)))
    image = bc.render_change_map(prediction, 6, 5)
    assert int(np.count_nonzero(image == 255)) == int(labels.sum())


def test_render_rejects_wrong_size():
    with pytest.raises(DimensionMismatch):
        bc.render_change_map(np.zeros(10, np.int64), 4, 3)


# ---------------------------------------------------------------------------
# sweep_report


def test_sweep_report_empty_is_header_only():
    assert bc.sweep_report([]) == "strategy,ir,layers,compression,afs,f0,f1\n"


def test_sweep_report_reference_row():
    report = bc.EvaluationReport(
        counts=bc.ConfusionCounts(tp=0, fp=0, tn=0, fn=0),
        f0=81.6,
        f1=81.6,
        afs=81.6,
        strategy="smote",
        ir="1:1",
        layers=3,
        compression=0.9,
    )
    text = bc.sweep_report([report])
    assert text.splitlines()[1] == "smote,1:1,3,0.90,81.60,81.60,81.60"


def test_sweep_report_preserves_input_order():
    rows = []
    for i, ir in enumerate(("1:1", "2:1", "10:1")):
        rows.append(
            bc.EvaluationReport(
                counts=bc.ConfusionCounts(tp=i, fp=0, tn=0, fn=0),
                f0=float(i),
                f1=0.0,
                afs=float(i) / 2,
                strategy="randover",
                ir=ir,
                layers=5,
                compression=0.7,
            )
        )
    lines = bc.sweep_report(rows).splitlines()
    assert len(lines) == 4
    assert [line.split(",")[1] for line in lines[1:]] == ["1:1", "2:1", "10:1"]


def test_evaluate_labels_carries_metadata():
    report = bc.evaluate_labels(
        [0, 1, 1], [0, 1, 0], strategy="smote", ir="2:1", layers=3, compression=0.7
    )
    assert report.counts.tp == 1 and report.counts.fn == 1
    assert report.strategy == "smote" and report.ir == "2:1"
    row = bc.format_report_row(report)
    assert row.startswith("smote,2:1,3,0.70,")
