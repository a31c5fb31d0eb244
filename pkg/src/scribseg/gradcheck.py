"""Finite-difference verification of every analytic loss gradient.

Central differences with h = 1e-5; a component passes when the absolute
gap stays under 1e-7 or the relative gap under 1e-4. Instance generators
draw saliency values from jittered distinct levels so no two compared
values sit within a kink of |.| or the probability clip; the suite stays
meaningful at any seed and exactly reproducible at a fixed one.
"""

import time
from dataclasses import dataclass

import numpy as np

from .affinity import build_graph
from .grids import FeatureField, RgbImage, SaliencyMap, ScribbleMask
from .losses import (
    CompositeInputs,
    LossWeights,
    LscKernelConfig,
    SsimConfig,
    composite_loss,
    gsa_loss_flat,
    lsc_loss,
    partial_cross_entropy,
    ssc_loss,
)

FD_STEP = 1e-5
REL_TOL = 1e-4
ABS_TOL = 1e-7


def central_difference(f, x, h=FD_STEP):
    """Componentwise (f(x + h e_i) - f(x - h e_i)) / 2h."""
    x = np.array(x, dtype=np.float64)  # writable working copy
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + h
        fplus = f(x)
        xf[i] = orig - h
        fminus = f(x)
        xf[i] = orig
        flat[i] = (fplus - fminus) / (2.0 * h)
    return grad


def compare_grads(analytic, numeric):
    """(worst relative error among non-tiny components, failing count).

    A component fails only when both the absolute gap is >= 1e-7 and the
    relative gap is >= 1e-4; near-zero gradients are judged absolutely.
    """
    a = np.asarray(analytic).reshape(-1)
    n = np.asarray(numeric).reshape(-1)
    err = np.abs(a - n)
    scale = np.maximum(np.abs(a), np.abs(n))
    rel = err / np.maximum(scale, ABS_TOL)
    sizable = err >= ABS_TOL
    bad = sizable & (rel >= REL_TOL)
    worst = float(rel[sizable].max()) if sizable.any() else 0.0
    return worst, int(bad.sum())


def distinct_levels(rng, count, low=0.02, high=0.98):
    """count values with pairwise gaps >= (high-low)/(4*count)."""
    perm = rng.permutation(count)
    jitter = rng.uniform(0.25, 0.75, size=count)
    return low + (high - low) * (perm + jitter) / count


def _random_mask(rng, h, w):
    labels = np.zeros((h, w), dtype=np.int8)
    flat = labels.reshape(-1)
    idx = rng.permutation(h * w)
    n_fg = int(rng.integers(1, max(2, h * w // 8)))
    n_bg = int(rng.integers(1, max(2, h * w // 8)))
    flat[idx[:n_fg]] = 1
    flat[idx[n_fg:n_fg + n_bg]] = 2
    return ScribbleMask(labels)


def _check_pce(rng):
    h, w = int(rng.integers(5, 12)), int(rng.integers(5, 12))
    pred = distinct_levels(rng, h * w).reshape(h, w)
    mask = _random_mask(rng, h, w)
    res = partial_cross_entropy(SaliencyMap(pred), mask)
    fd = central_difference(
        lambda v: partial_cross_entropy(SaliencyMap(v), mask).value, pred)
    return compare_grads(res.grad, fd)


def _check_lsc(rng):
    h, w = int(rng.integers(5, 10)), int(rng.integers(5, 10))
    cfg = LscKernelConfig(radius=2, sigma_color=0.15, sigma_pos=4.0)
    image = RgbImage(rng.random((h, w, 3)))
    pred = distinct_levels(rng, h * w).reshape(h, w)
    res = lsc_loss(SaliencyMap(pred), image, cfg)
    fd = central_difference(
        lambda v: lsc_loss(SaliencyMap(v), image, cfg).value, pred)
    return compare_grads(res.grad, fd)


def _check_ssc(rng):
    h = w = 12
    cfg = SsimConfig(window=5, sigma=1.5)
    pool = distinct_levels(rng, 2 * h * w)
    a = pool[:h * w].reshape(h, w)
    b = pool[h * w:].reshape(h, w)
    res = ssc_loss(SaliencyMap(a), SaliencyMap(b), cfg=cfg)
    fd_a = central_difference(
        lambda v: ssc_loss(SaliencyMap(v), SaliencyMap(b), cfg=cfg).value, a)
    fd_b = central_difference(
        lambda v: ssc_loss(SaliencyMap(a), SaliencyMap(v), cfg=cfg).value, b)
    rel1, bad1 = compare_grads(res.grad_first, fd_a)
    rel2, bad2 = compare_grads(res.grad_second, fd_b)
    return max(rel1, rel2), bad1 + bad2


def _check_gsa(rng):
    gh, gw = int(rng.integers(2, 5)), int(rng.integers(2, 6))
    dim = int(rng.integers(4, 9))
    field = FeatureField(rng.standard_normal((gh, gw, dim)))
    graph = build_graph(field)
    s = distinct_levels(rng, graph.n)
    grad = gsa_loss_flat(s, graph).grad
    fd = central_difference(lambda v: gsa_loss_flat(v, graph).value, s)
    return compare_grads(grad, fd)


def _check_composite(rng):
    h = w = 10
    weights = LossWeights(lambda_stage=(0.8,))
    lsc_cfg = LscKernelConfig(radius=1, sigma_color=0.2, sigma_pos=3.0)
    ssim_cfg = SsimConfig(window=3, sigma=1.0)
    image = RgbImage(rng.random((h, w, 3)))
    mask = _random_mask(rng, h, w)
    field = FeatureField(rng.standard_normal((2, 2, 5)))
    graph = build_graph(field)
    pool = distinct_levels(rng, 2 * h * w + (h // 2) * (w // 2))
    dom = pool[:h * w].reshape(h, w)
    aux = pool[h * w:2 * h * w].reshape(h, w)
    down = pool[2 * h * w:].reshape(h // 2, w // 2)

    def run(d, dn, ax):
        return composite_loss(CompositeInputs(
            image=image, scribbles=mask, graph=graph,
            dominant=SaliencyMap(d), downscaled_pred=SaliencyMap(dn),
            aux=(SaliencyMap(ax),)), weights, lsc_cfg, ssim_cfg)

    res = run(dom, down, aux)
    fd_dom = central_difference(lambda v: run(v, down, aux).value, dom)
    fd_down = central_difference(lambda v: run(dom, v, aux).value, down)
    fd_aux = central_difference(lambda v: run(dom, down, v).value, aux)
    rels = [compare_grads(res.grad_dominant, fd_dom),
            compare_grads(res.grad_downscaled, fd_down),
            compare_grads(res.grad_aux[0], fd_aux)]
    return max(r for r, _ in rels), sum(b for _, b in rels)


CHECKS = {
    "pce": _check_pce,
    "lsc": _check_lsc,
    "ssc": _check_ssc,
    "gsa": _check_gsa,
    "composite": _check_composite,
}


@dataclass
class GradCheckReport:
    name: str
    cases: int
    max_rel: float
    failures: int
    seconds: float

    @property
    def passed(self):
        return self.failures == 0


def run_check(name, cases=100, seed=0) -> GradCheckReport:
    rng = np.random.default_rng([seed, sum(name.encode())])
    worst = 0.0
    failures = 0
    t0 = time.perf_counter()
    for _ in range(cases):
        rel, bad = CHECKS[name](rng)
        worst = max(worst, rel)
        failures += bad
    return GradCheckReport(name, cases, worst, failures,
                           time.perf_counter() - t0)


def run_suite(cases=100, seed=0):
    return [run_check(name, cases, seed) for name in CHECKS]
