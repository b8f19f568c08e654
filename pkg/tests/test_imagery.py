"""Image loading, color conversion, pattern extraction, splits, scaling."""

import numpy as np
import pytest
from PIL import Image
from skimage import color as skcolor

import broadchange as bc
from broadchange.errors import DecodeError, DimensionMismatch, InsufficientClassSamples


def _save(path, array):
    Image.fromarray(array).save(path, format="PNG")
    return str(path)


def _random_rgb(rng, h, w):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


# ---------------------------------------------------------------------------
# load_image_pair


def test_load_image_pair_reads_equal_sized_pngs(tmp_path):
    rng = np.random.default_rng(0)
    ref = _save(tmp_path / "ref.png", _random_rgb(rng, 6, 8))
    test = _save(tmp_path / "test.png", _random_rgb(rng, 6, 8))
    pair = bc.load_image_pair(ref, test)
    assert (pair.height, pair.width) == (6, 8)
    assert pair.reference.shape == pair.test.shape == (6, 8, 3)


def test_load_image_pair_same_file_twice_is_identity(tmp_path):
    rng = np.random.default_rng(1)
    path = _save(tmp_path / "img.png", _random_rgb(rng, 5, 5))
    pair = bc.load_image_pair(path, path)
    assert np.array_equal(pair.reference, pair.test)


def test_load_image_pair_size_mismatch(tmp_path):
    rng = np.random.default_rng(2)
    a = _save(tmp_path / "a.png", _random_rgb(rng, 4, 4))
    b = _save(tmp_path / "b.png", _random_rgb(rng, 4, 5))
    with pytest.raises(DimensionMismatch):
        bc.load_image_pair(a, b)


def test_load_image_pair_unreadable_file(tmp_path):
    good = _save(tmp_path / "good.png", np.zeros((3, 3, 3), dtype=np.uint8))
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"this is not a png")
    with pytest.raises(DecodeError):
        bc.load_image_pair(good, str(bad))
    with pytest.raises(DecodeError):
        bc.load_image_pair(str(tmp_path / "missing.png"), good)


# ---------------------------------------------------------------------------
# rgb_to_lab


def test_rgb_to_lab_reference_points():
    img = np.array([[[255, 255, 255], [0, 0, 0], [255, 0, 0]]], dtype=np.uint8)
    lab = bc.rgb_to_lab(img)
    white, black, red = lab[0]
    assert abs(white[0] - 100.0) < 1e-3
    assert abs(white[1]) < 1e-2 and abs(white[2]) < 1e-2
    np.testing.assert_allclose(black, [0.0, 0.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(red, [53.24, 80.09, 67.20], atol=0.05)


def test_rgb_to_lab_matches_reference_library():
    rng = np.random.default_rng(3)
    img = _random_rgb(rng, 16, 16)
    ours = bc.rgb_to_lab(img)
    theirs = skcolor.rgb2lab(img)
    np.testing.assert_allclose(ours, theirs, atol=1e-2)


def test_rgb_to_lab_grayscale_is_chromatically_neutral():
    values = np.arange(256, dtype=np.uint8)
    img = np.stack([values, values, values], axis=-1)[None, :, :]
    lab = bc.rgb_to_lab(img)
    assert np.all(np.abs(lab[..., 1]) < 0.5)
    assert np.all(np.abs(lab[..., 2]) < 0.5)
    # white-point constant rounding leaves L a few 1e-6 above 100
    assert lab[..., 0].min() >= 0.0 and lab[..., 0].max() <= 100.0 + 1e-4


# ---------------------------------------------------------------------------
# difference magnitude


def test_difference_magnitude_identical_images_is_zero(tmp_path):
    rng = np.random.default_rng(4)
    img = _random_rgb(rng, 7, 7)
    pair = bc.ImagePair(reference=img, test=img.copy())
    diff = bc.difference_magnitude(pair)
    np.testing.assert_allclose(diff.values, 0.0, atol=1e-12)


def test_lab_difference_hand_values():
    a = np.array([[[50.0, 0.0, 0.0]]])
    b = np.array([[[50.0, 3.0, 4.0]]])
    np.testing.assert_allclose(bc.lab_difference_magnitude(a, b), [[5.0]])
    c = np.array([[[42.0, 1.0, -2.0]]])
    d = np.array([[[42.0 + 7.5, 1.0, -2.0]]])
    np.testing.assert_allclose(bc.lab_difference_magnitude(c, d), [[7.5]])


def test_difference_magnitude_is_symmetric():
    rng = np.random.default_rng(5)
    for _ in range(20):
        ref = _random_rgb(rng, 5, 6)
        test = _random_rgb(rng, 5, 6)
        fwd = bc.difference_magnitude(bc.ImagePair(reference=ref, test=test))
        rev = bc.difference_magnitude(bc.ImagePair(reference=test, test=ref))
        assert np.array_equal(fwd.values, rev.values)
        assert np.all(fwd.values >= 0)


# ---------------------------------------------------------------------------
# binarize_mask


def test_binarize_mask_threshold(tmp_path):
    mask = np.array([[127, 128], [0, 255]], dtype=np.uint8)
    grid = bc.binarize_mask(_save(tmp_path / "mask.png", mask))
    assert grid.labels.tolist() == [[0, 1], [0, 1]]


def test_binarize_mask_constant_masks(tmp_path):
    ones = bc.binarize_mask(_save(tmp_path / "w.png", np.full((4, 4), 255, np.uint8)))
    zeros = bc.binarize_mask(_save(tmp_path / "b.png", np.zeros((4, 4), np.uint8)))
    assert np.all(ones.labels == 1)
    assert np.all(zeros.labels == 0)


def test_binarize_mask_accepts_rgb(tmp_path):
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 255, 255)
    grid = bc.binarize_mask(_save(tmp_path / "rgb.png", rgb))
    assert grid.labels[0, 0] == 1 and grid.labels.sum() == 1


# ---------------------------------------------------------------------------
# pattern extraction


def test_patterns_replicate_padding_hand_case():
    diff = bc.DifferenceImage(values=np.array([[1.0, 2.0], [3.0, 4.0]]))
    patterns = bc.patterns_from_difference(diff)
    assert patterns.shape == (4, 9)
    assert patterns[0].tolist() == [1, 1, 2, 1, 1, 2, 3, 3, 4]


def test_patterns_constant_field():
    diff = bc.DifferenceImage(values=np.full((3, 3), 7.25))
    patterns = bc.patterns_from_difference(diff)
    assert patterns[4].tolist() == [7.25] * 9


def test_pattern_count_equals_pixel_count():
    rng = np.random.default_rng(6)
    for h, w in ((1, 1), (1, 5), (4, 3), (8, 8)):
        diff = bc.DifferenceImage(values=rng.random((h, w)))
        assert bc.patterns_from_difference(diff).shape == (h * w, 9)


def test_pattern_values_come_from_the_source_image():
    rng = np.random.default_rng(7)
    for _ in range(10):
        values = rng.random((5, 4))
        diff = bc.DifferenceImage(values=values)
        patterns = bc.patterns_from_difference(diff)
        source = set(values.reshape(-1).tolist())
        assert set(patterns.reshape(-1).tolist()) <= source


def test_extract_patterns_labels_and_coords():
    rng = np.random.default_rng(8)
    values = rng.random((4, 5))
    labels = (rng.random((4, 5)) > 0.5).astype(np.uint8)
    data = bc.extract_patterns(
        bc.DifferenceImage(values=values), bc.LabelGrid(labels=labels)
    )
    assert len(data) == 20
    assert data.class_count(1) == int(labels.sum())
    assert data.class_count(0) == 20 - int(labels.sum())
    for row in range(20):
        x, y = data.coords[row]
        assert data.labels[row] == labels[y, x]
        assert data.patterns[row, 4] == values[y, x]


def test_extract_patterns_dimension_mismatch():
    diff = bc.DifferenceImage(values=np.zeros((3, 3)))
    grid = bc.LabelGrid(labels=np.zeros((3, 4), dtype=np.uint8))
    with pytest.raises(DimensionMismatch):
        bc.extract_patterns(diff, grid)


# ---------------------------------------------------------------------------
# split_dataset


def _dataset(n0, n1, seed=0):
    rng = np.random.default_rng(seed)
    patterns = rng.random((n0 + n1, 9))
    labels = np.array([0] * n0 + [1] * n1, dtype=np.int64)
    coords = np.stack([np.arange(n0 + n1), np.zeros(n0 + n1, np.int64)], axis=1)
    return bc.LabeledDataset(patterns=patterns, labels=labels, coords=coords)


def test_split_seventy_thirty_counts():
    data = _dataset(100, 10)
    train, test = bc.split_dataset(data, 0.7, 0)
    assert train.class_count(0) == 70 and train.class_count(1) == 7
    assert test.class_count(0) == 30 and test.class_count(1) == 3


def test_split_is_deterministic_and_partitions():
    data = _dataset(40, 9, seed=1)
    for seed in range(5):
        t1, v1 = bc.split_dataset(data, 0.6, seed)
        t2, v2 = bc.split_dataset(data, 0.6, seed)
        assert np.array_equal(t1.patterns, t2.patterns)
        assert np.array_equal(v1.patterns, v2.patterns)
        ids = np.concatenate([t1.coords[:, 0], v1.coords[:, 0]])
        assert sorted(ids.tolist()) == list(range(49))


def test_split_keeps_at_least_one_training_sample_per_class():
    data = _dataset(50, 2, seed=2)
    train, test = bc.split_dataset(data, 0.1, 0)
    assert train.class_count(0) == 5
    assert train.class_count(1) == 1 and test.class_count(1) == 1


def test_split_rejects_singleton_class():
    data = _dataset(50, 1, seed=3)
    with pytest.raises(InsufficientClassSamples):
        bc.split_dataset(data, 0.7, 0)


def test_split_rejects_bad_fraction():
    data = _dataset(5, 5)
    for fraction in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(ValueError):
            bc.split_dataset(data, fraction, 0)


# ---------------------------------------------------------------------------
# standardize


def test_standardize_two_point_column():
    patterns = np.zeros((2, 9))
    patterns[1] = 2.0
    data = bc.LabeledDataset(patterns=patterns, labels=np.array([0, 1]))
    out, _, scaler = bc.standardize(data)
    assert out.patterns[0].tolist() == [-1.0] * 9
    assert out.patterns[1].tolist() == [1.0] * 9
    assert scaler.mean.tolist() == [1.0] * 9
    assert scaler.std.tolist() == [1.0] * 9


def test_standardize_constant_column_becomes_zero():
    data = bc.LabeledDataset(patterns=np.full((5, 9), 3.5), labels=np.zeros(5, np.int64))
    out, _, scaler = bc.standardize(data)
    assert np.all(out.patterns == 0.0)
    assert np.all(scaler.std == 1.0)


def test_standardize_train_statistics_apply_to_others():
    rng = np.random.default_rng(9)
    train = bc.LabeledDataset(patterns=rng.random((30, 9)), labels=np.zeros(30, np.int64))
    other = bc.LabeledDataset(patterns=rng.random((10, 9)), labels=np.ones(10, np.int64))
    train_std, [other_std], scaler = bc.standardize(train, [other])
    np.testing.assert_allclose(train_std.patterns.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(train_std.patterns.std(axis=0), 1.0, atol=1e-9)
    np.testing.assert_allclose(other_std.patterns, scaler.apply(other.patterns))
    assert np.array_equal(other_std.labels, other.labels)
