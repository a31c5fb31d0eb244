"""Synthetic scenes for desk-scale experiments.

A scene is a textured background with 1..3 geometric objects, a binary
ground-truth union of the objects, scribble strokes strictly inside the
object interiors and the background, and a patch-feature field whose
vectors share a cluster mean per object (plus one background cluster)
with i.i.d. Gaussian noise. Everything is a pure function of the spec
and seed, so the standard benchmark can stay frozen as code.
"""

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.ndimage import binary_dilation, binary_erosion

from .errors import GenerationError
from .grids import (
    BACKGROUND,
    FOREGROUND,
    FeatureField,
    RgbImage,
    SaliencyMap,
    ScribbleMask,
)

BENCHMARK_SEED = 42
BENCHMARK_TRAIN = 50
BENCHMARK_TEST = 20


@dataclass(frozen=True)
class SceneSpec:
    height: int = 64
    width: int = 64
    grid_h: int = 8
    grid_w: int = 8
    feature_dim: int = 16
    num_objects: int = 2
    noise_sigma: float = 0.1
    texture_sigma: float = 0.025
    stroke_length: int = 25
    background_strokes: int = 2


@dataclass(frozen=True)
class SyntheticScene:
    image: RgbImage
    features: FeatureField
    scribbles: ScribbleMask
    gt: SaliencyMap
    spec: SceneSpec
    label: str = "scene"


def _ellipse_mask(h, w, cy, cx, ry, rx):
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    return ((ys - cy) / ry) ** 2 + ((xs - cx) / rx) ** 2 <= 1.0


def _rect_mask(h, w, cy, cx, ry, rx):
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    return (np.abs(ys - cy) <= ry) & (np.abs(xs - cx) <= rx)


def _sample_object(rng, h, w, shrink=0):
    # min radius sits near the feature patch pitch so every object spans
    # several patches; below that the 8x8 grid cannot see it at all.
    # shrink relaxes both bounds when a crowded canvas rejects placements.
    kind = rng.integers(0, 3)
    lo_y, lo_x = max(4, h // 8 - shrink), max(4, w // 8 - shrink)
    ry = int(rng.integers(lo_y, max(lo_y + 1, h // 4 - shrink)))
    rx = int(rng.integers(lo_x, max(lo_x + 1, w // 4 - shrink)))
    cy = int(rng.integers(ry + 2, h - ry - 2))
    cx = int(rng.integers(rx + 2, w - rx - 2))
    if kind == 0:
        return _ellipse_mask(h, w, cy, cx, ry, rx)
    if kind == 1:
        return _rect_mask(h, w, cy, cx, ry, rx)
    # union of the primitive with a shifted overlapping ellipse
    dy = int(rng.integers(-ry // 2, ry // 2 + 1))
    dx = int(rng.integers(-rx // 2, rx // 2 + 1))
    base = _ellipse_mask(h, w, cy, cx, ry, rx)
    other = _ellipse_mask(h, w, np.clip(cy + dy, 3, h - 4),
                          np.clip(cx + dx, 3, w - 4),
                          max(2, ry // 2), max(2, rx // 2))
    return base | other


def _place_objects(rng, spec):
    h, w = spec.height, spec.width
    masks = []
    occupied = np.zeros((h, w), dtype=bool)
    for _ in range(spec.num_objects):
        for attempt in range(200):
            m = _sample_object(rng, h, w, shrink=attempt // 40)
            if m.sum() < 16:
                continue
            if not (binary_dilation(m, iterations=2) & occupied).any():
                masks.append(m)
                occupied |= m
                break
        else:
            raise GenerationError(
                f"could not place {spec.num_objects} objects in "
                f"({h}, {w}) after 200 attempts")
    return masks


def _random_walk(rng, allowed, length):
    """Stroke pixels from a seeded 8-neighbor walk inside a mask."""
    ys, xs = np.nonzero(allowed)
    start = rng.integers(0, len(ys))
    y, x = int(ys[start]), int(xs[start])
    pts = [(y, x)]
    moves = [(-1, -1), (-1, 0), (-1, 1), (0, -1),
             (0, 1), (1, -1), (1, 0), (1, 1)]
    for _ in range(length - 1):
        order = rng.permutation(8)
        for k in order:
            dy, dx = moves[k]
            ny, nx = y + dy, x + dx
            if 0 <= ny < allowed.shape[0] and 0 <= nx < allowed.shape[1] \
                    and allowed[ny, nx]:
                y, x = ny, nx
                pts.append((y, x))
                break
        else:
            break
    return pts


def _stroke_region(mask):
    """Interior of a region; falls back to the region if erosion empties it."""
    interior = binary_erosion(mask, iterations=1)
    return interior if interior.any() else mask


def _patch_owner(masks, spec):
    """Majority owner per patch: 0 = background, k = object k."""
    h, w = spec.height, spec.width
    bh, bw = h // spec.grid_h, w // spec.grid_w
    owner = np.zeros((spec.grid_h, spec.grid_w), dtype=np.intp)
    best = np.zeros((spec.grid_h, spec.grid_w))
    for k, m in enumerate(masks, start=1):
        frac = m[:spec.grid_h * bh, :spec.grid_w * bw].reshape(
            spec.grid_h, bh, spec.grid_w, bw).mean(axis=(1, 3))
        take = frac > np.maximum(best, 0.5)
        owner[take] = k
        best = np.maximum(best, frac)
    return owner


# One orthonormal semantic basis shared by every scene. Scenes differ in
# geometry, appearance, and noise, never in what a feature direction
# means; a model trained across scenes can therefore generalize, the way
# it would over features from one frozen extractor.
_MEANS_SEED = 7


@lru_cache(maxsize=None)
def _cluster_means(dim, count):
    rng = np.random.default_rng(_MEANS_SEED)
    basis, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    means = basis.T[:count].copy()  # row 0 background, row k object k
    means.setflags(write=False)
    return means


def generate_scene(spec: SceneSpec, seed, label="scene") -> SyntheticScene:
    """Deterministically realize one scene from a spec and seed."""
    if spec.num_objects < 1:
        raise GenerationError("a scene needs at least one object")
    if spec.height % spec.grid_h or spec.width % spec.grid_w:
        raise GenerationError(
            f"dims ({spec.height}, {spec.width}) must divide by the "
            f"feature grid ({spec.grid_h}, {spec.grid_w})")
    if spec.num_objects + 1 > spec.feature_dim:
        raise GenerationError("feature dim too small for orthogonal clusters")
    rng = np.random.default_rng(seed)
    h, w = spec.height, spec.width
    masks = _place_objects(rng, spec)
    gt = np.zeros((h, w))
    for m in masks:
        gt[m] = 1.0

    # image: flat-ish colors per region over a low-frequency wave texture
    colors = rng.uniform(0.12, 0.88, size=(spec.num_objects + 1, 3))
    ys = np.arange(h)[:, None] / h
    xs = np.arange(w)[None, :] / w
    wave = 0.04 * np.sin(2 * np.pi * (ys * rng.uniform(1, 3)
                                      + xs * rng.uniform(1, 3)
                                      + rng.uniform()))
    image = np.empty((h, w, 3))
    image[:] = colors[0]
    for k, m in enumerate(masks, start=1):
        image[m] = colors[k]
    image += wave[:, :, None]
    image += rng.normal(0.0, spec.texture_sigma, size=image.shape)
    np.clip(image, 0.0, 1.0, out=image)

    # scribbles: one walk per object interior, a few background walks
    labels = np.zeros((h, w), dtype=np.int8)
    for m in masks:
        for y, x in _random_walk(rng, _stroke_region(m), spec.stroke_length):
            labels[y, x] = FOREGROUND
    bg_region = _stroke_region(gt == 0.0)
    for _ in range(spec.background_strokes):
        for y, x in _random_walk(rng, bg_region, spec.stroke_length):
            labels[y, x] = BACKGROUND

    # features: orthonormal cluster means + component noise, one vector
    # per patch, owned by the majority region
    means = _cluster_means(spec.feature_dim, spec.num_objects + 1)
    owner = _patch_owner(masks, spec)
    vectors = means[owner] + rng.normal(
        0.0, spec.noise_sigma,
        size=(spec.grid_h, spec.grid_w, spec.feature_dim))

    return SyntheticScene(
        image=RgbImage(image),
        features=FeatureField(vectors),
        scribbles=ScribbleMask(labels),
        gt=SaliencyMap(gt),
        spec=spec,
        label=label)


def hflip_scene(scene: SyntheticScene) -> SyntheticScene:
    """Mirror a scene left-right, flipping every aligned grid with it."""
    return SyntheticScene(
        image=RgbImage(scene.image.pixels[:, ::-1]),
        features=FeatureField(scene.features.vectors[:, ::-1, :]),
        scribbles=ScribbleMask(scene.scribbles.labels[:, ::-1]),
        gt=SaliencyMap(scene.gt.values[:, ::-1]),
        spec=scene.spec,
        label=scene.label + "_hflip")


def generate_dataset(seed, n_train, n_test):
    """Spawn (train, test) scene lists from one master seed.

    64x64 scenes, 8x8x16 features, feature noise sigma 0.1; object count
    cycles 1..3. Regenerated deterministically, never stored as data.
    """
    if n_train < 1 or n_test < 0:
        raise GenerationError("need at least one training scene")
    master = np.random.SeedSequence(seed)
    children = master.spawn(n_train + n_test)
    scenes = []
    for i, child in enumerate(children):
        spec = SceneSpec(num_objects=(i % 3) + 1)
        split = "train" if i < n_train else "test"
        scenes.append(generate_scene(spec, child, label=f"{split}_{i:03d}"))
    return scenes[:n_train], scenes[n_train:]


def standard_benchmark():
    """The frozen 50-train / 20-test desk benchmark (seed 42)."""
    return generate_dataset(BENCHMARK_SEED, BENCHMARK_TRAIN, BENCHMARK_TEST)


def planted_field(grid_h=8, grid_w=8, dim=16, sigma=0.1, seed=0):
    """Two-cluster feature field with orthogonal means.

    Returns (FeatureField, flat bool labels). Both clusters are nonempty.
    """
    rng = np.random.default_rng(seed)
    n = grid_h * grid_w
    basis, _ = np.linalg.qr(rng.standard_normal((dim, 2)))
    labels = rng.random(n) < 0.5
    if labels.all() or not labels.any():
        labels[0] = ~labels[0]
    vectors = np.where(labels[:, None], basis.T[0], basis.T[1]) \
        + rng.normal(0.0, sigma, size=(n, dim))
    return FeatureField(vectors.reshape(grid_h, grid_w, dim)), labels
