"""Weak-supervision losses with hand-derived gradients.

Five building blocks, each returning its value together with the exact
gradient of that value so callers never need automatic differentiation:

  partial_cross_entropy  scribble-pixel log loss, averaged over labels
  lsc_loss               bilateral local smoothness over a square window
  ssim / ssc_loss        structural + L1 scale consistency between a
                         downscaled prediction and a prediction at scale
  gsa_loss               global semantic affinity over patch features,
                         factored to O(n * dim) per evaluation
  composite_loss         dominant-head sum plus weighted auxiliary stages

Conventions shared by all terms: predicted probabilities are clipped to
[1e-7, 1 - 1e-7] before logs; ratio denominators below 1e-8 in magnitude
are clamped sign-preservingly; a 0/0 class ratio (an empty foreground or
background) contributes a zero loss term with zero gradient; |.| and
sign(.) take subgradient 0 at ties.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .affinity import EPS_DEN, SimilarityGraph
from .errors import (
    DimensionMismatchError,
    EmptySupervisionError,
    InvalidArgumentError,
)
from .grids import (
    PatchSaliency,
    RgbImage,
    SaliencyMap,
    ScribbleMask,
    pool_adjoint,
    pool_array,
    resample_adjoint,
    resample_array,
)

EPS_CLIP = 1e-7


@dataclass(frozen=True)
class LossResult:
    value: float
    grad: np.ndarray


@dataclass(frozen=True)
class PairLossResult:
    """A loss of two maps, with a gradient for each."""

    value: float
    grad_first: np.ndarray
    grad_second: np.ndarray


@dataclass
class LossWeights:
    """Composite weighting; stage weights apply to auxiliary heads.

    mu is the affinity weight selected by ablation; beta and the stage
    weights are inherited defaults, override them from config when the
    setup changes.
    """

    mu: float = 0.15
    beta: float = 0.3
    alpha_ssc: float = 0.85
    lambda_stage: tuple = (0.8, 0.6, 0.4)


@dataclass
class LscKernelConfig:
    radius: int = 5
    sigma_color: float = 0.1
    sigma_pos: float = 5.0


@dataclass
class SsimConfig:
    window: int = 11
    sigma: float = 1.5
    c1: float = 0.01 ** 2
    c2: float = 0.03 ** 2


# ---------------------------------------------------------------------------
# partial cross entropy
# ---------------------------------------------------------------------------

def partial_cross_entropy(pred: SaliencyMap, mask: ScribbleMask) -> LossResult:
    """Binary log loss over scribbled pixels only, averaged over them.

    Unlabeled pixels contribute nothing and receive zero gradient.
    """
    if (pred.height, pred.width) != (mask.height, mask.width):
        raise DimensionMismatchError(
            f"prediction ({pred.height}, {pred.width}) vs "
            f"mask ({mask.height}, {mask.width})")
    labeled = mask.labeled()
    count = int(labeled.sum())
    if count == 0:
        raise EmptySupervisionError("no labeled pixels to average over")

    v = pred.values
    p = np.clip(v, EPS_CLIP, 1.0 - EPS_CLIP)
    y = mask.foreground().astype(np.float64)
    per_pixel = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    value = float(per_pixel[labeled].sum() / count)

    grad = np.zeros_like(v)
    inside = labeled & (v >= EPS_CLIP) & (v <= 1.0 - EPS_CLIP)
    grad[inside] = -(y[inside] / p[inside]
                     - (1.0 - y[inside]) / (1.0 - p[inside])) / count
    return LossResult(value, grad)


# ---------------------------------------------------------------------------
# local saliency coherence
# ---------------------------------------------------------------------------

def _window_counts(h, w, radius):
    """|K_i| for each pixel: in-bounds window neighbors excluding self."""
    ys = np.arange(h)
    xs = np.arange(w)
    cy = np.minimum(ys, radius) + np.minimum(h - 1 - ys, radius) + 1
    cx = np.minimum(xs, radius) + np.minimum(w - 1 - xs, radius) + 1
    return np.outer(cy, cx).astype(np.float64) - 1.0


def _half_offsets(radius):
    offs = []
    for dy in range(radius + 1):
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx <= 0:
                continue
            offs.append((dy, dx))
    return offs


def _offset_slices(h, w, dy, dx):
    # source pixel i at (y, x), partner j at (y + dy, x + dx)
    if dx >= 0:
        sa = (slice(0, h - dy), slice(0, w - dx))
        sb = (slice(dy, h), slice(dx, w))
    else:
        sa = (slice(0, h - dy), slice(-dx, w))
        sb = (slice(dy, h), slice(0, w + dx))
    return sa, sb


class LscPairKernel:
    """Bilateral pair weights of one image, reusable across evaluations.

    Weight of the ordered pair (i, j) is
    exp(-|I_i - I_j|^2 / (2 s_I^2) - |P_i - P_j|^2 / (2 s_P^2)) / |K_i|,
    and evaluate() averages weight * |S_i - S_j| over all ordered in-window
    pairs. Only the upper half of the offsets is stored; each unordered
    pair carries the sum of its two directed weights.
    """

    def __init__(self, image: RgbImage, cfg: LscKernelConfig = None):
        cfg = cfg or LscKernelConfig()
        h, w = image.height, image.width
        if cfg.radius < 1:
            raise InvalidArgumentError("window radius must be at least 1")
        if cfg.radius >= max(h, w):
            raise InvalidArgumentError(
                f"window radius {cfg.radius} covers the whole "
                f"({h}, {w}) map in every direction")
        if cfg.sigma_color <= 0 or cfg.sigma_pos <= 0:
            raise InvalidArgumentError("kernel bandwidths must be positive")
        self.shape = (h, w)
        counts = _window_counts(h, w, cfg.radius)
        self.pair_count = float(counts.sum())
        inv = 1.0 / counts
        px = image.pixels
        self._terms = []
        for dy, dx in _half_offsets(cfg.radius):
            sa, sb = _offset_slices(h, w, dy, dx)
            dcol = px[sa] - px[sb]
            e = np.exp(-(dcol * dcol).sum(axis=2) / (2.0 * cfg.sigma_color ** 2)
                       - (dy * dy + dx * dx) / (2.0 * cfg.sigma_pos ** 2))
            self._terms.append((sa, sb, e * (inv[sa] + inv[sb])))

    def evaluate(self, values: np.ndarray) -> LossResult:
        if values.shape != self.shape:
            raise DimensionMismatchError(
                f"saliency {values.shape} vs kernel image {self.shape}")
        total = 0.0
        grad = np.zeros(self.shape)
        for sa, sb, wsum in self._terms:
            d = values[sa] - values[sb]
            total += float((wsum * np.abs(d)).sum())
            g = wsum * np.sign(d)
            grad[sa] += g
            grad[sb] -= g
        return LossResult(total / self.pair_count, grad / self.pair_count)


def lsc_loss(pred: SaliencyMap, image: RgbImage,
             cfg: LscKernelConfig = None) -> LossResult:
    """Pair-averaged bilateral smoothness of a saliency map."""
    if (pred.height, pred.width) != (image.height, image.width):
        raise DimensionMismatchError(
            f"prediction ({pred.height}, {pred.width}) vs "
            f"image ({image.height}, {image.width})")
    return LscPairKernel(image, cfg).evaluate(pred.values)


# ---------------------------------------------------------------------------
# structural similarity and scale consistency
# ---------------------------------------------------------------------------

def gaussian_window(size, sigma):
    if size < 1 or size % 2 == 0:
        raise InvalidArgumentError("window size must be odd and positive")
    half = (size - 1) / 2.0
    g1 = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma * sigma))
    g2 = np.outer(g1, g1)
    return g2 / g2.sum()

def _ssim_arrays(x, y, cfg: SsimConfig):
    """SSIM mean plus gradients w.r.t. both inputs."""
    h, w = x.shape
    if h < cfg.window or w < cfg.window:
        raise InvalidArgumentError(
            f"maps ({h}, {w}) smaller than the {cfg.window}x{cfg.window} window")
    g = gaussian_window(cfg.window, cfg.sigma)

    def smooth(a):
        return convolve2d(a, g, mode="valid")

    mu_x, mu_y = smooth(x), smooth(y)
    m2x, m2y, mxy = smooth(x * x), smooth(y * y), smooth(x * y)
    var_x = m2x - mu_x * mu_x
    var_y = m2y - mu_y * mu_y
    cov = mxy - mu_x * mu_y

    a1 = 2.0 * mu_x * mu_y + cfg.c1
    a2 = 2.0 * cov + cfg.c2
    b1 = mu_x * mu_x + mu_y * mu_y + cfg.c1
    b2 = var_x + var_y + cfg.c2
    s = (a1 * a2) / (b1 * b2)
    m = s.size
    value = float(s.sum() / m)

    # per-window partials, then push back through the smoothing adjoint
    ds_da2b2 = a2 / (b1 * b1 * b2)
    ds_dmu_x = 2.0 * (mu_y * b1 - mu_x * a1) * ds_da2b2
    ds_dmu_y = 2.0 * (mu_x * b1 - mu_y * a1) * ds_da2b2
    ds_dvar = -(a1 * a2) / (b1 * b2 * b2)  # same for var_x and var_y
    ds_dcov = 2.0 * a1 / (b1 * b2)

    def spread(field):
        return convolve2d(field / m, g, mode="full")

    gx = (spread(ds_dmu_x - 2.0 * mu_x * ds_dvar - mu_y * ds_dcov)
          + 2.0 * x * spread(ds_dvar) + y * spread(ds_dcov))
    gy = (spread(ds_dmu_y - 2.0 * mu_y * ds_dvar - mu_x * ds_dcov)
          + 2.0 * y * spread(ds_dvar) + x * spread(ds_dcov))
    return value, gx, gy


def ssim(x: SaliencyMap, y: SaliencyMap, cfg: SsimConfig = None) -> float:
    """Mean structural similarity over Gaussian sliding windows."""
    if (x.height, x.width) != (y.height, y.width):
        raise DimensionMismatchError(
            f"maps ({x.height}, {x.width}) vs ({y.height}, {y.width})")
    value, _, _ = _ssim_arrays(x.values, y.values, cfg or SsimConfig())
    return value


def _ssc_arrays(a, b, alpha, cfg):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"maps {a.shape} vs {b.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgumentError(f"alpha must be in [0, 1], got {alpha}")
    sv, gx, gy = _ssim_arrays(a, b, cfg)
    diff = a - b
    l1 = float(np.abs(diff).mean())
    value = alpha * (1.0 - sv) / 2.0 + (1.0 - alpha) * l1
    sgn = np.sign(diff) / diff.size
    grad_a = -(alpha / 2.0) * gx + (1.0 - alpha) * sgn
    grad_b = -(alpha / 2.0) * gy - (1.0 - alpha) * sgn
    return value, grad_a, grad_b


def ssc_loss(down_pred: SaliencyMap, pred_of_down: SaliencyMap,
             alpha=0.85, cfg: SsimConfig = None) -> PairLossResult:
    """Saliency structure consistency between two views of one scene.

    down_pred is the full-resolution prediction resampled down;
    pred_of_down is the prediction made on the downscaled input. The loss
    blends a structural term with an L1 term and is symmetric in its
    inputs; gradients flow to both.
    """
    value, ga, gb = _ssc_arrays(down_pred.values, pred_of_down.values,
                                alpha, cfg or SsimConfig())
    return PairLossResult(value, ga, gb)


# ---------------------------------------------------------------------------
# global semantic affinity
# ---------------------------------------------------------------------------

def _gsa_class_term(a, graph: SimilarityGraph):
    """1 - (sum_ij a_i a_j e_ij) / (sum_ij a_i e_ij) for one class weight a.

    Empty class (0/0) contributes zero value and zero gradient. Returns
    the gradient w.r.t. a.
    """
    # row sums go through the same matmul as the weighted sums so that an
    # all-ones weighting yields num == den bitwise and the loss is exactly 0
    if graph.clamp_negative:
        m = graph.require_matrix()
        ma = m @ a
        m1 = m @ np.ones_like(a)
        num = float(a @ ma)
        den = float(a @ m1)
        dnum = 2.0 * ma
        dden = m1
    else:
        nf = graph.normalized
        u = a @ nf
        wsum = np.ones_like(a) @ nf
        num = float(u @ u)
        den = float(u @ wsum)
        dnum = 2.0 * (nf @ u)
        dden = nf @ wsum
    if abs(num) < EPS_DEN and abs(den) < EPS_DEN:
        return 0.0, np.zeros_like(a)
    if abs(den) >= EPS_DEN:
        value = 1.0 - num / den
        grad = -(dnum * den - num * dden) / (den * den)
    else:
        den_g = EPS_DEN if den >= 0.0 else -EPS_DEN
        value = 1.0 - num / den_g
        grad = -dnum / den_g
    return value, grad


def gsa_loss_flat(s, graph: SimilarityGraph) -> LossResult:
    """GSA loss of a flat [0, 1] weighting over graph nodes."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (graph.n,):
        raise DimensionMismatchError(
            f"saliency over {s.shape} nodes, graph has {graph.n}")
    vf, gf = _gsa_class_term(s, graph)
    vb, gb = _gsa_class_term(1.0 - s, graph)
    return LossResult(vf + vb, gf - gb)


def gsa_loss(patch_pred: PatchSaliency, graph: SimilarityGraph) -> LossResult:
    """Foreground plus background affinity-compactness loss.

    Both class terms share one O(n * dim) factored evaluation; a graph
    built with clamp_negative falls back to its materialized matrix.
    """
    if (patch_pred.grid_h, patch_pred.grid_w) != (graph.grid_h, graph.grid_w):
        raise DimensionMismatchError(
            f"patch grid ({patch_pred.grid_h}, {patch_pred.grid_w}) vs "
            f"graph grid ({graph.grid_h}, {graph.grid_w})")
    flat = gsa_loss_flat(patch_pred.values.reshape(-1), graph)
    return LossResult(flat.value, flat.grad.reshape(patch_pred.values.shape))


def minimize_gsa_pgd(graph: SimilarityGraph, steps=400, step_size=2.0,
                     seed=0):
    """Projected gradient descent on the GSA loss over node weights.

    The uniform 0.5 weighting is an exact stationary point (the class
    terms mirror each other), so the start point carries seeded +-0.01
    symmetry-breaking noise. Returns the final weighting in [0, 1]^n.
    """
    rng = np.random.default_rng(seed)
    s = 0.5 + rng.uniform(-0.01, 0.01, size=graph.n)
    for _ in range(steps):
        step = gsa_loss_flat(s, graph)
        s = np.clip(s - step_size * step.grad, 0.0, 1.0)
    return s


# ---------------------------------------------------------------------------
# composite objective
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompositeInputs:
    """Everything the full objective of one scene needs.

    downscaled_pred is the prediction on the 0.5x input (None disables the
    scale-consistency term); aux holds auxiliary-stage predictions at the
    dominant resolution, outermost stage first.
    """

    image: RgbImage
    scribbles: ScribbleMask
    graph: SimilarityGraph
    dominant: SaliencyMap
    downscaled_pred: SaliencyMap | None = None
    aux: tuple = ()


@dataclass(frozen=True)
class CompositeResult:
    value: float
    grad_dominant: np.ndarray
    grad_downscaled: np.ndarray | None
    grad_aux: tuple
    terms: dict


def composite_loss(inputs: CompositeInputs, weights: LossWeights = None,
                   lsc_cfg: LscKernelConfig = None,
                   ssim_cfg: SsimConfig = None) -> CompositeResult:
    """Dominant-head objective plus weighted auxiliary stages.

    dominant: pce + ssc + beta * lsc + mu * gsa
    stage k:  lambda_k * (pce + beta * lsc + mu * gsa)

    Gradients are returned per head; the ssc and gsa contributions are
    chained through the bilinear-downscale and patch-pool adjoints so
    grad_dominant is the exact total derivative.
    """
    weights = weights or LossWeights()
    ssim_cfg = ssim_cfg or SsimConfig()
    dom = inputs.dominant
    h, w = dom.height, dom.width
    if len(inputs.aux) > len(weights.lambda_stage):
        raise InvalidArgumentError(
            f"{len(inputs.aux)} auxiliary heads but only "
            f"{len(weights.lambda_stage)} stage weights")

    kernel = LscPairKernel(inputs.image, lsc_cfg)
    gh, gw = inputs.graph.grid_h, inputs.graph.grid_w

    def head_terms(pred: SaliencyMap):
        pce = partial_cross_entropy(pred, inputs.scribbles)
        lsc = kernel.evaluate(pred.values)
        pooled = PatchSaliency(pool_array(pred.values, gh, gw))
        gsa = gsa_loss(pooled, inputs.graph)
        value = pce.value + weights.beta * lsc.value + weights.mu * gsa.value
        grad = (pce.grad + weights.beta * lsc.grad
                + weights.mu * pool_adjoint(gsa.grad, h, w))
        return value, grad, pce.value, lsc.value, gsa.value

    dom_value, dom_grad, pce_v, lsc_v, gsa_v = head_terms(dom)

    ssc_v = 0.0
    grad_down = None
    if inputs.downscaled_pred is not None:
        half_h, half_w = max(1, h // 2), max(1, w // 2)
        dp = inputs.downscaled_pred
        if (dp.height, dp.width) != (half_h, half_w):
            raise DimensionMismatchError(
                f"downscaled prediction ({dp.height}, {dp.width}) vs "
                f"expected ({half_h}, {half_w})")
        s_down = resample_array(dom.values, half_h, half_w)
        ssc_v, g_sdown, grad_down = _ssc_arrays(
            s_down, dp.values, weights.alpha_ssc, ssim_cfg)
        dom_value += ssc_v
        dom_grad = dom_grad + resample_adjoint(g_sdown, h, w)

    total = dom_value
    grad_aux = []
    aux_total = 0.0
    for k, pred in enumerate(inputs.aux):
        if (pred.height, pred.width) != (h, w):
            raise DimensionMismatchError(
                f"auxiliary head {k} is ({pred.height}, {pred.width}), "
                f"dominant is ({h}, {w})")
        lam = weights.lambda_stage[k]
        v, g, *_ = head_terms(pred)
        total += lam * v
        aux_total += lam * v
        grad_aux.append(lam * g)

    terms = {"total": total, "pce": pce_v, "ssc": ssc_v, "lsc": lsc_v,
             "gsa": gsa_v, "aux": aux_total}
    return CompositeResult(total, dom_grad, grad_down, tuple(grad_aux), terms)
