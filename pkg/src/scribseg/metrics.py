"""Saliency evaluation metrics and CSV reports.

All threshold sweeps use the 256 integer levels t in {0..255}, binarizing
a prediction as value >= t / 255. Ground truth must be strictly binary;
loaders binarize files before calling in here.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyGroundTruthError,
    InvalidArgumentError,
)
from .grids import SaliencyMap

BETA_SQUARED = 0.3
_EPS = 1e-20
THRESHOLDS = np.arange(256) / 255.0

CSV_COLUMNS = ("image_id", "f_beta", "mae", "e_measure", "iou_adaptive")


@dataclass(frozen=True)
class PerThresholdCurves:
    precision: np.ndarray
    recall: np.ndarray
    e_alignment: np.ndarray


@dataclass(frozen=True)
class MetricReport:
    f_beta: float
    mae: float
    e_measure: float
    iou_adaptive: float
    curves: PerThresholdCurves | None = None


def _check_pair(pred, gt):
    if pred.shape != gt.shape:
        raise DimensionMismatchError(f"pred {pred.shape} vs gt {gt.shape}")
    uniq = np.unique(gt)
    if not np.isin(uniq, (0.0, 1.0)).all():
        raise InvalidArgumentError(
            f"ground truth must be binary, found values {uniq[:8].tolist()}")


def mae(pred: SaliencyMap, gt: SaliencyMap) -> float:
    """Mean absolute error between a prediction and a binary map."""
    _check_pair(pred.values, gt.values)
    return float(np.abs(pred.values - gt.values).mean())


def mean_f_measure(pred: SaliencyMap, gt: SaliencyMap,
                   return_curves=False):
    """F-measure with beta^2 = 0.3 averaged over the 256 threshold levels."""
    p, g = pred.values, gt.values
    _check_pair(p, g)
    gt_pos = float(g.sum())
    if gt_pos == 0.0:
        raise EmptyGroundTruthError(
            "all-background ground truth leaves recall undefined")
    gmask = g == 1.0
    precision = np.empty(256)
    recall = np.empty(256)
    for t in range(256):
        binarized = p >= THRESHOLDS[t]
        tp = float((binarized & gmask).sum())
        precision[t] = tp / (float(binarized.sum()) + _EPS)
        recall[t] = tp / gt_pos
    f = ((1.0 + BETA_SQUARED) * precision * recall
         / (BETA_SQUARED * precision + recall + _EPS))
    value = float(f.mean())
    if return_curves:
        return value, precision, recall
    return value


def e_measure(pred: SaliencyMap, gt: SaliencyMap, return_curves=False):
    """Enhanced alignment measure averaged over the 256 threshold levels.

    Degenerate ground truths follow the constant-map convention of the
    measure's reference implementation: against an all-background gt the
    per-threshold score is the mean of the inverted binary prediction,
    against an all-foreground gt the mean of the binary prediction itself,
    so exact matches score 1 and mistakes are penalized proportionally.
    """
    p, g = pred.values, gt.values
    _check_pair(p, g)
    g_mean = float(g.mean())
    scores = np.empty(256)
    for t in range(256):
        binarized = (p >= THRESHOLDS[t]).astype(np.float64)
        if g_mean == 0.0:
            scores[t] = float((1.0 - binarized).mean())
        elif g_mean == 1.0:
            scores[t] = float(binarized.mean())
        else:
            phi_g = g - g_mean
            phi_s = binarized - binarized.mean()
            align = 2.0 * phi_g * phi_s / (phi_g * phi_g + phi_s * phi_s + _EPS)
            scores[t] = float(((align + 1.0) ** 2 / 4.0).mean())
    value = float(scores.mean())
    if return_curves:
        return value, scores
    return value


def iou(pred_binary: SaliencyMap, gt: SaliencyMap) -> float:
    """Intersection over union of two binary maps; 1 when both are empty."""
    p, g = pred_binary.values, gt.values
    _check_pair(p, g)
    uniq = np.unique(p)
    if not np.isin(uniq, (0.0, 1.0)).all():
        raise InvalidArgumentError(
            f"prediction must be binary for iou, found {uniq[:8].tolist()}")
    inter = float((p * g).sum())
    union = float(np.maximum(p, g).sum())
    if union == 0.0:
        return 1.0
    return inter / union


def adaptive_threshold(pred: SaliencyMap) -> float:
    """Twice the mean saliency, capped at 1."""
    return min(2.0 * float(pred.values.mean()), 1.0)


def iou_at_adaptive(pred: SaliencyMap, gt: SaliencyMap) -> float:
    thr = adaptive_threshold(pred)
    binary = SaliencyMap((pred.values >= thr).astype(np.float64))
    return iou(binary, gt)


def evaluate_pair(pred: SaliencyMap, gt: SaliencyMap,
                  with_curves=False) -> MetricReport:
    """All four scalar metrics of one prediction/ground-truth pair."""
    f, precision, recall = mean_f_measure(pred, gt, return_curves=True)
    e, e_curve = e_measure(pred, gt, return_curves=True)
    curves = PerThresholdCurves(precision, recall, e_curve) if with_curves \
        else None
    return MetricReport(
        f_beta=f,
        mae=mae(pred, gt),
        e_measure=e,
        iou_adaptive=iou_at_adaptive(pred, gt),
        curves=curves)


def evaluate_many(named_pairs):
    """Per-image rows plus a 'mean' aggregate row, sorted by image id.

    named_pairs: iterable of (image_id, pred, gt).
    """
    rows = []
    for image_id, pred, gt in sorted(named_pairs, key=lambda t: t[0]):
        r = evaluate_pair(pred, gt)
        rows.append({"image_id": image_id, "f_beta": r.f_beta, "mae": r.mae,
                     "e_measure": r.e_measure,
                     "iou_adaptive": r.iou_adaptive})
    if not rows:
        raise InvalidArgumentError("no prediction/ground-truth pairs found")
    agg = {"image_id": "mean"}
    for key in CSV_COLUMNS[1:]:
        agg[key] = float(np.mean([r[key] for r in rows]))
    rows.append(agg)
    return rows


def write_report_csv(rows, path):
    """Fixed-column CSV; floats use 12 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([row["image_id"]]
                            + [format(row[k], ".12g") for k in CSV_COLUMNS[1:]])
