"""Core grid types and resampling primitives.

Everything downstream (losses, affinity, metrics, trainer) works on the
four aligned grids defined here: RGB images, saliency maps, tri-state
scribble masks, and patch-feature fields. All payload arrays are float64
(int8 for mask labels), copied on construction, and frozen read-only so
instances can be shared freely across threads.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyBackgroundError,
    EmptyForegroundError,
    InvalidArgumentError,
    NonFiniteValueError,
)

# Tri-state scribble labels. The on-disk byte convention {0, 128, 255}
# lives in imagefiles; in memory we keep small ints.
UNLABELED = 0
FOREGROUND = 1
BACKGROUND = 2


def _frozen(a, dtype=np.float64):
    out = np.array(a, dtype=dtype, order="C")  # private copy, caller keeps theirs
    out.setflags(write=False)
    return out


def _require_finite(a, what):
    if not np.isfinite(a).all():
        raise NonFiniteValueError(f"{what} contains non-finite values")


def _require_unit_range(a, what):
    if a.size and (a.min() < 0.0 or a.max() > 1.0):
        raise InvalidArgumentError(
            f"{what} values must lie in [0, 1], got range "
            f"[{a.min()}, {a.max()}]")


@dataclass(frozen=True)
class RgbImage:
    """H x W x 3 image with channels in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.pixels, dtype=np.float64)
        if a.ndim != 3 or a.shape[2] != 3:
            raise InvalidArgumentError(
                f"expected (H, W, 3) pixels, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise InvalidArgumentError("image dims must be positive")
        _require_finite(a, "image")
        _require_unit_range(a, "image")
        object.__setattr__(self, "pixels", _frozen(a))

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


@dataclass(frozen=True)
class SaliencyMap:
    """H x W map of foreground probabilities in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.values, dtype=np.float64)
        if a.ndim != 2:
            raise InvalidArgumentError(
                f"expected (H, W) values, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise InvalidArgumentError("map dims must be positive")
        _require_finite(a, "saliency map")
        _require_unit_range(a, "saliency map")
        object.__setattr__(self, "values", _frozen(a))

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class ScribbleMask:
    """H x W tri-state annotation: UNLABELED / FOREGROUND / BACKGROUND."""

    labels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.labels)
        if a.ndim != 2:
            raise InvalidArgumentError(
                f"expected (H, W) labels, got shape {a.shape}")
        if not np.isin(a, (UNLABELED, FOREGROUND, BACKGROUND)).all():
            bad = np.setdiff1d(np.unique(a), (UNLABELED, FOREGROUND, BACKGROUND))
            raise InvalidArgumentError(f"unknown scribble labels {bad.tolist()}")
        object.__setattr__(self, "labels", _frozen(a, dtype=np.int8))

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]

    def foreground(self):
        return self.labels == FOREGROUND

    def background(self):
        return self.labels == BACKGROUND

    def labeled(self):
        return self.labels != UNLABELED


@dataclass(frozen=True)
class FeatureField:
    """grid_h x grid_w x dim patch descriptors (any finite reals)."""

    vectors: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.vectors, dtype=np.float64)
        if a.ndim != 3:
            raise InvalidArgumentError(
                f"expected (grid_h, grid_w, dim) vectors, got shape {a.shape}")
        if min(a.shape) < 1:
            raise InvalidArgumentError("feature grid dims must be positive")
        _require_finite(a, "feature field")
        object.__setattr__(self, "vectors", _frozen(a))

    @property
    def grid_h(self):
        return self.vectors.shape[0]

    @property
    def grid_w(self):
        return self.vectors.shape[1]

    @property
    def dim(self):
        return self.vectors.shape[2]

    def flat(self):
        """(grid_h * grid_w, dim) view, row-major node order."""
        return self.vectors.reshape(-1, self.vectors.shape[2])


@dataclass(frozen=True)
class PatchSaliency:
    """Saliency pooled onto a patch grid, values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.values, dtype=np.float64)
        if a.ndim != 2:
            raise InvalidArgumentError(
                f"expected (grid_h, grid_w) values, got shape {a.shape}")
        _require_finite(a, "patch saliency")
        _require_unit_range(a, "patch saliency")
        object.__setattr__(self, "values", _frozen(a))

    @property
    def grid_h(self):
        return self.values.shape[0]

    @property
    def grid_w(self):
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# bilinear resampling
# ---------------------------------------------------------------------------

def _axis_weights(src_len, dst_len):
    """Half-pixel-center bilinear taps for one axis.

    Returns (i0, i1, w0, w1) with w0 + w1 == 1 per output sample; source
    coordinates are clamped at the borders (edge replication), so constant
    inputs are preserved exactly and identity resizes are bitwise no-ops.
    """
    scale = src_len / dst_len
    x = (np.arange(dst_len, dtype=np.float64) + 0.5) * scale - 0.5
    x = np.clip(x, 0.0, src_len - 1.0)
    i0 = np.floor(x).astype(np.intp)
    i1 = np.minimum(i0 + 1, src_len - 1)
    w1 = x - i0
    w0 = 1.0 - w1
    return i0, i1, w0, w1


def resample_array(a, new_h, new_w):
    """Bilinear resize of a 2-d float array to (new_h, new_w)."""
    if new_h < 1 or new_w < 1:
        raise InvalidArgumentError(
            f"target dims must be positive, got ({new_h}, {new_w})")
    h, w = a.shape
    if (new_h, new_w) == (h, w):
        return a.copy()
    r0, r1, _, rw1 = _axis_weights(h, new_h)
    c0, c1, _, cw1 = _axis_weights(w, new_w)
    # lerp form a0 + w*(a1 - a0): constants survive bitwise, unlike w0*a0 + w1*a1
    rows = a[r0, :] + rw1[:, None] * (a[r1, :] - a[r0, :])
    return rows[:, c0] + cw1[None, :] * (rows[:, c1] - rows[:, c0])


def resample_adjoint(grad_out, src_h, src_w):
    """Adjoint of resample_array: routes output-grid gradients back."""
    new_h, new_w = grad_out.shape
    if (new_h, new_w) == (src_h, src_w):
        return grad_out.copy()
    r0, r1, rw0, rw1 = _axis_weights(src_h, new_h)
    c0, c1, cw0, cw1 = _axis_weights(src_w, new_w)
    cols = np.zeros((new_h, src_w))
    np.add.at(cols.T, c0, (grad_out * cw0[None, :]).T)
    np.add.at(cols.T, c1, (grad_out * cw1[None, :]).T)
    out = np.zeros((src_h, src_w))
    np.add.at(out, r0, cols * rw0[:, None])
    np.add.at(out, r1, cols * rw1[:, None])
    return out


def resample_bilinear(m: SaliencyMap, new_h, new_w) -> SaliencyMap:
    """Resize a saliency map with half-pixel bilinear interpolation."""
    out = resample_array(m.values, new_h, new_w)
    # interpolation of values in [0, 1] stays in [0, 1] up to rounding
    return SaliencyMap(np.clip(out, 0.0, 1.0))


def resample_stack(a, new_h, new_w):
    """Bilinear resize of an (H, W, C) stack, channel by channel."""
    out = np.empty((new_h, new_w, a.shape[2]))
    for c in range(a.shape[2]):
        out[:, :, c] = resample_array(a[:, :, c], new_h, new_w)
    return out


# ---------------------------------------------------------------------------
# patch pooling
# ---------------------------------------------------------------------------

def _divisible_dims(h, w, grid_h, grid_w):
    """Nearest dims divisible by the grid (at least one pixel per block)."""
    nh = max(grid_h, int(round(h / grid_h)) * grid_h)
    nw = max(grid_w, int(round(w / grid_w)) * grid_w)
    return nh, nw


def pool_array(a, grid_h, grid_w):
    h, w = a.shape
    if grid_h < 1 or grid_w < 1:
        raise InvalidArgumentError("grid dims must be positive")
    if grid_h > h or grid_w > w:
        raise InvalidArgumentError(
            f"grid ({grid_h}, {grid_w}) larger than map ({h}, {w})")
    if h % grid_h or w % grid_w:
        nh, nw = _divisible_dims(h, w, grid_h, grid_w)
        a = resample_array(a, nh, nw)
        h, w = nh, nw
    bh, bw = h // grid_h, w // grid_w
    return a.reshape(grid_h, bh, grid_w, bw).mean(axis=(1, 3))


def pool_adjoint(grad_patches, h, w):
    """Adjoint of pool_array for an (h, w) source map."""
    grid_h, grid_w = grad_patches.shape
    nh, nw = h, w
    if h % grid_h or w % grid_w:
        nh, nw = _divisible_dims(h, w, grid_h, grid_w)
    bh, bw = nh // grid_h, nw // grid_w
    spread = np.broadcast_to(
        grad_patches[:, None, :, None] / (bh * bw),
        (grid_h, bh, grid_w, bw)).reshape(nh, nw)
    if (nh, nw) == (h, w):
        return spread.copy()
    return resample_adjoint(spread, h, w)


def pool_to_patches(m: SaliencyMap, grid_h, grid_w) -> PatchSaliency:
    """Block-mean a saliency map onto a patch grid.

    Dims that do not divide evenly are first bilinearly resampled to the
    nearest divisible size.
    """
    return PatchSaliency(pool_array(m.values, grid_h, grid_w))


def validate_pair(image: RgbImage, mask: ScribbleMask):
    """Check an image/scribble pair is usable for supervision."""
    if (image.height, image.width) != (mask.height, mask.width):
        raise DimensionMismatchError(
            f"image ({image.height}, {image.width}) vs "
            f"mask ({mask.height}, {mask.width})")
    if not mask.foreground().any():
        raise EmptyForegroundError("mask has no foreground scribbles")
    if not mask.background().any():
        raise EmptyBackgroundError("mask has no background scribbles")
