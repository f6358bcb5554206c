import numpy as np
import pytest

from voxseg import (
    AllZero,
    Axis,
    CropBox,
    CropMode,
    LabelVolume,
    Modality,
    OutOfBounds,
    RangeError,
    ShapeMismatch,
    Volume,
    apply_crop,
    compute_crop_box,
    map_channels_rgb,
    normalize_minmax,
    resample_mask_nearest,
)


def _vol(arr, modality=Modality.OTHER):
    return Volume(np.asarray(arr, dtype=np.float32), modality=modality)


def test_crop_box_bounding_example(rng):
    data = np.zeros((10, 10, 10), dtype=np.float32)
    data[2:8, 2:8, 2:8] = rng.random((6, 6, 6)) + 0.5
    box = compute_crop_box([_vol(data)])
    assert (box.x, box.y, box.z) == ((2, 7), (2, 7), (2, 7))
    assert box.extents == (6, 6, 6)


def test_crop_box_union_over_volumes():
    a = np.zeros((8, 8, 8), dtype=np.float32)
    b = np.zeros((8, 8, 8), dtype=np.float32)
    a[1, 2, 3] = 1.0
    b[6, 5, 4] = 1.0
    box = compute_crop_box([_vol(a), _vol(b)])
    assert (box.x, box.y, box.z) == ((1, 6), (2, 5), (3, 4))


def test_crop_box_all_zero_raises():
    with pytest.raises(AllZero):
        compute_crop_box([_vol(np.zeros((4, 4, 4)))])


def test_crop_modes_share_computation(rng):
    data = np.zeros((9, 9, 9), dtype=np.float32)
    data[3:6, 1:4, 2:7] = 1.0
    vols = [_vol(data)]
    assert compute_crop_box(vols, CropMode.PER_SUBJECT) == compute_crop_box(vols, CropMode.GLOBAL)


def test_crop_preserves_nonzero_multiset(rng):
    for _ in range(25):
        dims = tuple(rng.integers(2, 14, size=3))
        data = np.zeros(dims, dtype=np.float32)
        n = int(rng.integers(1, data.size + 1))
        flat = rng.choice(data.size, size=n, replace=False)
        data.ravel()[flat] = rng.random(n) + 0.001
        vol = _vol(data)
        box = compute_crop_box([vol])
        cropped = apply_crop(vol, box)
        before = np.sort(data[data != 0])
        after = np.sort(cropped.data[cropped.data != 0])
        assert np.array_equal(before, after)


def test_full_box_crop_is_identity(rng):
    vol = _vol(rng.random((4, 5, 6)) + 0.1)
    box = CropBox((0, 3), (0, 4), (0, 5))
    assert apply_crop(vol, box) == vol


def test_crop_out_of_bounds_raises(rng):
    vol = _vol(rng.random((4, 4, 4)))
    with pytest.raises(OutOfBounds):
        apply_crop(vol, CropBox((0, 4), (0, 3), (0, 3)))


def test_crop_label_volume_keeps_source(rng):
    labels = np.zeros((6, 6, 6), dtype=np.uint8)
    labels[2:4, 2:4, 2:4] = 4
    lv = LabelVolume(labels, source="gt")
    out = apply_crop(lv, CropBox((2, 3), (2, 3), (2, 3)))
    assert isinstance(out, LabelVolume)
    assert out.source == "gt"
    assert np.all(out.labels == 4)


def test_normalize_affine_map():
    data = np.linspace(10, 20, 27, dtype=np.float32).reshape(3, 3, 3)
    out = normalize_minmax(_vol(data))
    assert out.data.min() == 0.0
    assert out.data.max() == 1.0
    mid = (np.abs(data - 15.0)).argmin()
    assert np.isclose(out.data.ravel()[mid], 0.5, atol=1e-6)


def test_normalize_constant_volume_is_zero():
    out = normalize_minmax(_vol(np.full((3, 3, 3), 7.0)))
    assert not out.data.any()


def test_normalize_exact_span_and_idempotence(rng):
    for _ in range(20):
        vol = _vol(rng.random(tuple(rng.integers(2, 10, size=3))) * rng.uniform(1, 100) - 5)
        once = normalize_minmax(vol)
        assert float(once.data.min()) == 0.0
        assert float(once.data.max()) == 1.0
        twice = normalize_minmax(once)
        assert np.array_equal(once.data, twice.data)


def test_rgb_mapping_shape_and_channel_copy(rng):
    shape = (4, 4, 2)
    flair = _vol(rng.random(shape), Modality.FLAIR)
    t1 = _vol(rng.random(shape), Modality.T1)
    t1gd = _vol(rng.random(shape), Modality.T1GD)
    slices = map_channels_rgb(flair, t1, t1gd, Axis.AXIAL)
    assert len(slices) == 2
    assert slices[0].pixels.shape == (4, 4, 3)
    k = 1
    assert np.array_equal(slices[k].pixels[..., 0], flair.data[:, :, k])
    assert np.array_equal(slices[k].pixels[..., 1], t1.data[:, :, k])
    assert np.array_equal(slices[k].pixels[..., 2], t1gd.data[:, :, k])


def test_rgb_mapping_respects_axis(rng):
    shape = (3, 5, 7)
    vols = [_vol(rng.random(shape), m) for m in (Modality.FLAIR, Modality.T1, Modality.T1GD)]
    assert len(map_channels_rgb(*vols, Axis.SAGITTAL)) == 3
    assert len(map_channels_rgb(*vols, Axis.CORONAL)) == 5
    assert len(map_channels_rgb(*vols, Axis.AXIAL)) == 7


def test_rgb_mapping_order_override(rng):
    shape = (2, 2, 1)
    flair = _vol(np.full(shape, 0.1), Modality.FLAIR)
    t1 = _vol(np.full(shape, 0.5), Modality.T1)
    t1gd = _vol(np.full(shape, 0.9), Modality.T1GD)
    sl = map_channels_rgb(flair, t1, t1gd, Axis.AXIAL, rgb_order=("T1GD", "FLAIR", "T1"))[0]
    assert sl.pixels[0, 0, 0] == np.float32(0.9)
    assert sl.pixels[0, 0, 1] == np.float32(0.1)
    assert sl.pixels[0, 0, 2] == np.float32(0.5)


def test_rgb_mapping_rejects_bad_inputs(rng):
    good = _vol(rng.random((2, 2, 2)), Modality.FLAIR)
    small = _vol(rng.random((2, 2, 1)), Modality.T1)
    with pytest.raises(ShapeMismatch):
        map_channels_rgb(good, small, _vol(rng.random((2, 2, 2)), Modality.T1GD), Axis.AXIAL)
    out_of_range = _vol(rng.random((2, 2, 2)) + 1.0, Modality.T1)
    with pytest.raises(RangeError):
        map_channels_rgb(good, out_of_range, _vol(rng.random((2, 2, 2)), Modality.T1GD), Axis.AXIAL)


def test_resample_identity_and_blocks():
    mask = np.array([[1, 2], [4, 0]], dtype=np.uint8)
    assert np.array_equal(resample_mask_nearest(mask, 2, 2), mask)
    up = resample_mask_nearest(mask, 4, 4)
    assert up.shape == (4, 4)
    assert np.array_equal(up[:2, :2], np.full((2, 2), 1))
    assert np.array_equal(up[2:, 2:], np.zeros((2, 2)))


def test_resample_never_invents_labels(rng):
    for _ in range(25):
        h, w = rng.integers(1, 20, size=2)
        mask = rng.choice(np.array([0, 1, 2, 4], dtype=np.uint8), size=(h, w))
        th, tw = rng.integers(1, 25, size=2)
        out = resample_mask_nearest(mask, int(th), int(tw))
        assert set(np.unique(out)) <= set(np.unique(mask))
