"""Desk-scale trainer: a pixel-wise head over RGB + upsampled features.

The head is deliberately tiny (one tanh hidden layer, logistic outputs,
linear auxiliary taps off the hidden layer) so every gradient can be
derived by hand and checked against finite differences end to end. The
optimizer is SGD with momentum, decoupled nothing: plain L2 weight decay
folded into the gradient, and a triangular learning-rate schedule.

Determinism contract: given the same scenes, config, and seed, training
produces bitwise-identical parameters and logs run to run. All
randomness flows from one np.random.default_rng(seed).
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .affinity import build_graph
from .errors import DimensionMismatchError, InvalidArgumentError, TrainingError
from .grids import RgbImage, SaliencyMap, resample_array, resample_stack
from .losses import (
    CompositeInputs,
    LossWeights,
    LscKernelConfig,
    SsimConfig,
    composite_loss,
)
from .metrics import iou_at_adaptive
from .synth import SyntheticScene, hflip_scene

PARAM_ORDER = ("w1", "b1", "w_out", "b_out", "aux_w", "aux_b")


@dataclass
class SaliencyHead:
    """Parameters of the pixel-wise saliency head."""

    w1: np.ndarray      # (input_dim, hidden)
    b1: np.ndarray      # (hidden,)
    w_out: np.ndarray   # (hidden,)
    b_out: np.ndarray   # (1,)
    aux_w: np.ndarray   # (n_aux, hidden)
    aux_b: np.ndarray   # (n_aux,)

    @property
    def input_dim(self):
        return self.w1.shape[0]

    @property
    def n_aux(self):
        return self.aux_w.shape[0]

    def params(self):
        return {name: getattr(self, name) for name in PARAM_ORDER}

    def copy(self):
        return SaliencyHead(**{k: v.copy() for k, v in self.params().items()})


def init_head(input_dim, hidden_width=32, n_aux=1, seed=0) -> SaliencyHead:
    """Seeded hidden projection; zero output layers.

    Zero final layers make the initial prediction exactly 0.5 everywhere,
    which keeps the first epochs reproducible and easy to reason about.
    """
    rng = np.random.default_rng(seed)
    return SaliencyHead(
        w1=rng.normal(0.0, 1.0 / math.sqrt(input_dim),
                      size=(input_dim, hidden_width)),
        b1=np.zeros(hidden_width),
        w_out=np.zeros(hidden_width),
        b_out=np.zeros(1),
        aux_w=np.zeros((n_aux, hidden_width)),
        aux_b=np.zeros(n_aux))


@dataclass
class TrainConfig:
    epochs: int = 40
    batch_size: int = 16
    lr_min: float = 1e-5
    lr_max: float = 5e-3
    momentum: float = 0.9
    weight_decay: float = 5e-4
    warmup_frac: float = 0.1
    seed: int = 0
    input_size: int = 64
    hidden_width: int = 32
    aux_heads: int = 1
    use_ssc: bool = True
    flip_augmentation: bool = True


def triangular_lr(step, total_steps, cfg: TrainConfig) -> float:
    """Linear warmup from lr_min to lr_max, linear decay back to lr_min."""
    if not 0 <= step < total_steps:
        raise InvalidArgumentError(
            f"step {step} outside [0, {total_steps})")
    warmup = max(1, round(cfg.warmup_frac * total_steps))
    span = cfg.lr_max - cfg.lr_min
    if step <= warmup:
        return cfg.lr_min + span * step / warmup
    tail = max(1, total_steps - 1 - warmup)
    return cfg.lr_max - span * (step - warmup) / tail


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------

@dataclass
class SceneBundle:
    """Per-scene tensors shared by every epoch."""

    scene: SyntheticScene
    x_full: np.ndarray          # (h*w, input_dim)
    x_half: np.ndarray          # (hh*ww, input_dim)
    shape: tuple
    half_shape: tuple


def _inputs_for(image_pixels, feature_vectors, h, w):
    up = resample_stack(feature_vectors, h, w)
    rgb = image_pixels if image_pixels.shape[:2] == (h, w) else \
        np.clip(resample_stack(image_pixels, h, w), 0.0, 1.0)
    return np.concatenate(
        [rgb.reshape(h * w, 3), up.reshape(h * w, -1)], axis=1)


def prepare_scene(scene: SyntheticScene) -> SceneBundle:
    h, w = scene.image.height, scene.image.width
    hh, ww = max(1, h // 2), max(1, w // 2)
    return SceneBundle(
        scene=scene,
        x_full=_inputs_for(scene.image.pixels, scene.features.vectors, h, w),
        x_half=_inputs_for(scene.image.pixels, scene.features.vectors, hh, ww),
        shape=(h, w),
        half_shape=(hh, ww))


def _forward(head: SaliencyHead, x):
    hidden = np.tanh(x @ head.w1 + head.b1)
    s_dom = expit(hidden @ head.w_out + head.b_out[0])
    s_aux = expit(hidden @ head.aux_w.T + head.aux_b) if head.n_aux else \
        np.zeros((x.shape[0], 0))
    return hidden, s_dom, s_aux


def predict(head: SaliencyHead, image: RgbImage, features) -> SaliencyMap:
    """Dominant-head saliency of one scene."""
    if head.input_dim != 3 + features.dim:
        raise DimensionMismatchError(
            f"head expects {head.input_dim} input channels, scene provides "
            f"{3 + features.dim}")
    x = _inputs_for(image.pixels, features.vectors,
                    image.height, image.width)
    _, s_dom, _ = _forward(head, x)
    return SaliencyMap(s_dom.reshape(image.height, image.width))


def _zero_grads(head):
    return {k: np.zeros_like(v) for k, v in head.params().items()}


def _backward_head(head, x, hidden, s, upstream, grads, aux_index=None):
    """One logistic output head: route upstream through sigmoid + linears."""
    dz = upstream * s * (1.0 - s)
    if aux_index is None:
        grads["w_out"] += hidden.T @ dz
        grads["b_out"][0] += dz.sum()
        dhidden = dz[:, None] * head.w_out[None, :]
    else:
        grads["aux_w"][aux_index] += hidden.T @ dz
        grads["aux_b"][aux_index] += dz.sum()
        dhidden = dz[:, None] * head.aux_w[aux_index][None, :]
    dz1 = dhidden * (1.0 - hidden * hidden)
    grads["w1"] += x.T @ dz1
    grads["b1"] += dz1.sum(axis=0)


def scene_objective(head: SaliencyHead, bundle: SceneBundle, graph,
                    weights: LossWeights, lsc_cfg=None, ssim_cfg=None,
                    use_ssc=True):
    """Composite loss of one scene plus exact parameter gradients."""
    h, w = bundle.shape
    hidden, s_dom, s_aux = _forward(head, bundle.x_full)
    down = None
    if use_ssc:
        hidden_h, s_half, _ = _forward(head, bundle.x_half)
        down = SaliencyMap(s_half.reshape(bundle.half_shape))

    inputs = CompositeInputs(
        image=bundle.scene.image,
        scribbles=bundle.scene.scribbles,
        graph=graph,
        dominant=SaliencyMap(s_dom.reshape(h, w)),
        downscaled_pred=down,
        aux=tuple(SaliencyMap(s_aux[:, k].reshape(h, w))
                  for k in range(head.n_aux)))
    res = composite_loss(inputs, weights, lsc_cfg, ssim_cfg)

    grads = _zero_grads(head)
    _backward_head(head, bundle.x_full, hidden, s_dom,
                   res.grad_dominant.reshape(-1), grads)
    for k in range(head.n_aux):
        _backward_head(head, bundle.x_full, hidden, s_aux[:, k],
                       res.grad_aux[k].reshape(-1), grads, aux_index=k)
    if use_ssc:
        _backward_head(head, bundle.x_half, hidden_h, s_half,
                       res.grad_downscaled.reshape(-1), grads)
    return res.value, grads, res.terms


# ---------------------------------------------------------------------------
# the training loop
# ---------------------------------------------------------------------------

@dataclass
class EpochLog:
    epoch: int
    lr: float
    total: float
    pce: float
    ssc: float
    lsc: float
    gsa: float
    aux: float
    train_iou: float
    test_iou: float


@dataclass
class TrainResult:
    head: SaliencyHead
    log: list


LOG_COLUMNS = ("epoch", "lr", "total", "pce", "ssc", "lsc", "gsa", "aux",
               "train_iou", "test_iou")


def write_log_csv(log, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOG_COLUMNS)
        for row in log:
            writer.writerow([row.epoch]
                            + [format(getattr(row, k), ".12g")
                               for k in LOG_COLUMNS[1:]])


def _mean_iou(head, scenes):
    if not scenes:
        return float("nan")
    vals = [iou_at_adaptive(predict(head, s.image, s.features), s.gt)
            for s in scenes]
    return float(np.mean(vals))


def train(train_scenes, cfg: TrainConfig = None, weights: LossWeights = None,
          lsc_cfg: LscKernelConfig = None, ssim_cfg: SsimConfig = None,
          test_scenes=()) -> TrainResult:
    """Train the saliency head on synthetic scenes.

    Scenes must share dims equal to cfg.input_size and one feature
    layout. Returns the trained head and one log row per epoch; epoch
    metrics are means over that epoch's scenes.
    """
    cfg = cfg or TrainConfig()
    weights = weights or LossWeights()
    scenes = list(train_scenes)
    if not scenes:
        raise InvalidArgumentError("no training scenes")
    for s in scenes:
        if (s.image.height, s.image.width) != (cfg.input_size, cfg.input_size):
            raise DimensionMismatchError(
                f"scene {s.label} is ({s.image.height}, {s.image.width}), "
                f"config expects ({cfg.input_size}, {cfg.input_size})")

    input_dim = 3 + scenes[0].features.dim
    head = init_head(input_dim, cfg.hidden_width, cfg.aux_heads, cfg.seed)
    velocity = _zero_grads(head)

    # bundles and graphs per scene and orientation, built on first use
    cache = {}

    def bundle_of(idx, flipped):
        key = (idx, flipped)
        if key not in cache:
            scene = hflip_scene(scenes[idx]) if flipped else scenes[idx]
            cache[key] = (prepare_scene(scene), build_graph(scene.features))
        return cache[key]

    rng = np.random.default_rng(cfg.seed)
    steps_per_epoch = math.ceil(len(scenes) / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    log = []
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(scenes))
        flips = rng.random(len(scenes)) < 0.5 if cfg.flip_augmentation \
            else np.zeros(len(scenes), dtype=bool)
        term_sums = {"total": 0.0, "pce": 0.0, "ssc": 0.0, "lsc": 0.0,
                     "gsa": 0.0, "aux": 0.0}
        lr = cfg.lr_min
        for start in range(0, len(scenes), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            lr = triangular_lr(step, total_steps, cfg)
            grads = _zero_grads(head)
            for j, idx in enumerate(batch):
                bundle, graph = bundle_of(int(idx), bool(flips[start + j]))
                value, g, terms = scene_objective(
                    head, bundle, graph, weights, lsc_cfg, ssim_cfg,
                    use_ssc=cfg.use_ssc)
                if not math.isfinite(value):
                    raise TrainingError(
                        f"non-finite loss at step {step} on scene "
                        f"{bundle.scene.label}: terms {terms}")
                for k in grads:
                    grads[k] += g[k]
                for k in term_sums:
                    term_sums[k] += terms[k]
            scale = 1.0 / len(batch)
            params = head.params()
            for k in params:
                g = grads[k] * scale + cfg.weight_decay * params[k]
                velocity[k] = cfg.momentum * velocity[k] + g
                params[k] -= lr * velocity[k]
            step += 1
        n = float(len(scenes))
        log.append(EpochLog(
            epoch=epoch, lr=lr,
            total=term_sums["total"] / n, pce=term_sums["pce"] / n,
            ssc=term_sums["ssc"] / n, lsc=term_sums["lsc"] / n,
            gsa=term_sums["gsa"] / n, aux=term_sums["aux"] / n,
            train_iou=_mean_iou(head, scenes),
            test_iou=_mean_iou(head, test_scenes)))
    return TrainResult(head=head, log=log)


def head_to_arrays(head: SaliencyHead):
    """Flatten parameters into the container array list, fixed order."""
    return [head.params()[k] for k in PARAM_ORDER]


def arrays_to_head(arrays) -> SaliencyHead:
    if len(arrays) != len(PARAM_ORDER):
        raise InvalidArgumentError(
            f"expected {len(PARAM_ORDER)} parameter arrays, got {len(arrays)}")
    return SaliencyHead(**dict(zip(PARAM_ORDER, arrays)))
