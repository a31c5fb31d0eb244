"""Train on the pinned synthetic benchmark, composite loss vs pce-only.

Reproduces the headline ablation: the affinity + consistency + smoothness
terms buy roughly one IoU point over plain partial cross entropy at desk
scale. Deterministic end to end; run twice and diff the output.
"""

import argparse
import time

import numpy as np

from scribseg.losses import LossWeights
from scribseg.synth import standard_benchmark
from scribseg.training import TrainConfig, train


def run_arm(name, train_scenes, test_scenes, cfg, weights):
    t0 = time.perf_counter()
    result = train(train_scenes, cfg, weights, test_scenes=test_scenes)
    dt = time.perf_counter() - t0
    last = result.log[-1]
    print(f"{name:10s} train_iou {last.train_iou:.4f}  "
          f"test_iou {last.test_iou:.4f}  total_loss {last.total:.4f}  "
          f"({dt:.0f}s)")
    return last.test_iou


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--epochs", type=int, default=40)
    ap.add_argument("--lr-max", type=float, default=0.5)
    ap.add_argument("--lr-min", type=float, default=1e-3)
    args = ap.parse_args()

    train_scenes, test_scenes = standard_benchmark()
    print(f"benchmark: {len(train_scenes)} train / {len(test_scenes)} test "
          f"scenes, {args.epochs} epochs")

    base = dict(epochs=args.epochs, lr_max=args.lr_max, lr_min=args.lr_min)
    composite = run_arm("composite", train_scenes, test_scenes,
                        TrainConfig(**base), LossWeights())
    pce_only = run_arm("pce-only", train_scenes, test_scenes,
                       TrainConfig(use_ssc=False, **base),
                       LossWeights(mu=0.0, beta=0.0))
    print(f"delta      {composite - pce_only:+.4f}")


if __name__ == "__main__":
    main()
