"""Grid types, resampling, and pooling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scribseg.errors import (
    DimensionMismatchError,
    EmptyBackgroundError,
    EmptyForegroundError,
    InvalidArgumentError,
    NonFiniteValueError,
)
from scribseg.grids import (
    BACKGROUND,
    FOREGROUND,
    FeatureField,
    PatchSaliency,
    RgbImage,
    SaliencyMap,
    ScribbleMask,
    pool_adjoint,
    pool_array,
    pool_to_patches,
    resample_adjoint,
    resample_array,
    resample_bilinear,
    validate_pair,
)

dims = st.integers(min_value=1, max_value=23)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def test_saliency_map_rejects_out_of_range():
    with pytest.raises(InvalidArgumentError):
        SaliencyMap(np.array([[0.0, 1.2]]))
    with pytest.raises(InvalidArgumentError):
        SaliencyMap(np.array([[-0.1]]))


def test_constructors_reject_non_finite():
    with pytest.raises(NonFiniteValueError):
        SaliencyMap(np.array([[np.nan]]))
    with pytest.raises(NonFiniteValueError):
        RgbImage(np.full((2, 2, 3), np.inf))
    with pytest.raises(NonFiniteValueError):
        FeatureField(np.array([[[1.0, np.nan]]]))


def test_saliency_map_is_immutable():
    m = SaliencyMap(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        m.values[0, 0] = 1.0


def test_scribble_mask_label_sets():
    labels = np.zeros((2, 3), dtype=np.int8)
    labels[0, 0] = FOREGROUND
    labels[1, 2] = BACKGROUND
    mask = ScribbleMask(labels)
    assert mask.foreground().sum() == 1
    assert mask.background().sum() == 1
    assert mask.labeled().sum() == 2
    with pytest.raises(InvalidArgumentError):
        ScribbleMask(np.array([[7]], dtype=np.int8))


def test_feature_field_flat_is_row_major():
    v = np.arange(2 * 3 * 4, dtype=np.float64).reshape(2, 3, 4)
    f = FeatureField(v)
    assert np.array_equal(f.flat()[1 * 3 + 2], v[1, 2])


def test_validate_pair():
    image = RgbImage(np.zeros((4, 4, 3)))
    labels = np.zeros((4, 4), dtype=np.int8)
    with pytest.raises(EmptyForegroundError):
        validate_pair(image, ScribbleMask(labels))
    labels[0, 0] = FOREGROUND
    with pytest.raises(EmptyBackgroundError):
        validate_pair(image, ScribbleMask(labels))
    labels[1, 1] = BACKGROUND
    validate_pair(image, ScribbleMask(labels))
    with pytest.raises(DimensionMismatchError):
        validate_pair(image, ScribbleMask(np.zeros((2, 2), dtype=np.int8)))


# ---------------------------------------------------------------------------
# resampling
# ---------------------------------------------------------------------------

def test_resample_2x2_checker_to_single_pixel():
    m = SaliencyMap(np.array([[0.0, 1.0], [0.0, 1.0]]))
    out = resample_bilinear(m, 1, 1)
    assert out.values[0, 0] == 0.5


def test_resample_identity_is_bitwise():
    rng = np.random.default_rng(3)
    m = SaliencyMap(rng.random((5, 7)))
    out = resample_bilinear(m, 5, 7)
    assert np.array_equal(out.values, m.values)


def test_resample_rejects_zero_target():
    m = SaliencyMap(np.zeros((2, 2)))
    with pytest.raises(InvalidArgumentError):
        resample_bilinear(m, 0, 3)


@given(h=dims, w=dims, h2=dims, w2=dims,
       c=st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
@settings(max_examples=60, deadline=None)
def test_resample_round_trip_preserves_constants(h, w, h2, w2, c):
    m = SaliencyMap(np.full((h, w), c))
    back = resample_bilinear(resample_bilinear(m, h2, w2), h, w)
    assert np.array_equal(back.values, np.full((h, w), c))


@given(h=dims, w=dims, h2=dims, w2=dims)
@settings(max_examples=40, deadline=None)
def test_resample_weights_sum_to_one(h, w, h2, w2):
    # a constant map must stay constant under any resize
    m = SaliencyMap(np.full((h, w), 1.0))
    out = resample_bilinear(m, h2, w2)
    np.testing.assert_allclose(out.values, 1.0, rtol=0, atol=1e-15)


def test_resample_adjoint_is_transpose(rng):
    # <R x, y> == <x, R^T y> defines the adjoint used by the gradients
    x = rng.random((6, 9))
    y = rng.random((4, 5))
    rx = resample_array(x, 4, 5)
    aty = resample_adjoint(y, 6, 9)
    assert abs(np.sum(rx * y) - np.sum(x * aty)) < 1e-12


# ---------------------------------------------------------------------------
# pooling
# ---------------------------------------------------------------------------

def test_pool_exact_block_means():
    m = SaliencyMap(np.vstack([np.ones((2, 4)), np.zeros((2, 4))]))
    patches = pool_to_patches(m, 2, 2)
    assert np.array_equal(patches.values, np.array([[1.0, 1.0], [0.0, 0.0]]))


def test_pool_matches_brute_force_block_means(rng):
    vals = rng.random((8, 8))
    patches = pool_to_patches(SaliencyMap(vals), 4, 4)
    oracle = np.empty((4, 4))
    for i in range(4):
        for j in range(4):
            oracle[i, j] = vals[2 * i:2 * i + 2, 2 * j:2 * j + 2].mean()
    np.testing.assert_allclose(patches.values, oracle, rtol=0, atol=1e-15)


@given(h=st.integers(2, 20), w=st.integers(2, 20),
       gh=st.integers(1, 4), gw=st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_pool_constant_preservation(h, w, gh, gw):
    if gh > h or gw > w:
        return
    patches = pool_to_patches(SaliencyMap(np.full((h, w), 0.3)), gh, gw)
    np.testing.assert_allclose(patches.values, 0.3, rtol=0, atol=1e-15)


def test_pool_mean_preserved_when_divisible(rng):
    vals = rng.random((12, 8))
    patches = pool_to_patches(SaliencyMap(vals), 3, 4)
    assert abs(patches.values.mean() - vals.mean()) < 1e-12


def test_pool_rejects_grid_larger_than_map():
    with pytest.raises(InvalidArgumentError):
        pool_to_patches(SaliencyMap(np.zeros((2, 2))), 3, 1)


def test_pool_adjoint_is_transpose(rng):
    for h, w in ((8, 8), (9, 7)):  # divisible and resample-first paths
        x = rng.random((h, w))
        y = rng.random((4, 4))
        px = pool_array(x, 4, 4)
        aty = pool_adjoint(y, h, w)
        assert abs(np.sum(px * y) - np.sum(x * aty)) < 1e-12


def test_patch_saliency_validates_range():
    with pytest.raises(InvalidArgumentError):
        PatchSaliency(np.array([[1.5]]))
