"""Command-line interface.

Subcommands: gradcheck, loss-eval, metrics, ncut-compare, synth-gen,
train-demo. Every command accepts --config FILE (flat key=value) plus a
flag per config key; flags override the file. Exit codes: 0 success,
1 runtime failure, 2 usage error (bad flags, missing inputs, malformed
files). Reports printed to stdout are byte-identical for identical
inputs; nothing time- or locale-dependent is ever printed.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import configfile, gradcheck, gvrf, imagefiles, metrics
from .affinity import (
    Bipartition,
    build_graph,
    gsa_set_energy,
    ncut_energy,
    spectral_bipartition,
)
from .errors import ConfigError, FormatError, ScribsegError
from .grids import PatchSaliency, pool_array, resample_bilinear, validate_pair
from .losses import gsa_loss, lsc_loss, minimize_gsa_pgd, partial_cross_entropy, ssc_loss
from .synth import SceneSpec, SyntheticScene, generate_dataset
from .training import head_to_arrays, predict, train, write_log_csv

USAGE_ERRORS = (ConfigError, FormatError, FileNotFoundError,
                NotADirectoryError, IsADirectoryError)


def _fmt(x):
    return format(float(x), ".12g")


def _add_config_flags(parser):
    parser.add_argument("--config", type=Path, default=None,
                        help="key=value config file")
    for key, (parse, default, help_text) in configfile.KEY_SPECS.items():
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key,
                            type=parse, default=None,
                            help=f"{help_text} (default {default})")


def _merged_values(args):
    overrides = {key: getattr(args, key) for key in configfile.KEY_SPECS}
    return configfile.merged(args.config, overrides)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_gradcheck(args):
    reports = gradcheck.run_suite(cases=args.cases, seed=args.seed)
    for r in reports:
        status = "PASS" if r.passed else f"FAIL ({r.failures} components)"
        print(f"{r.name}: cases={r.cases} max_rel={r.max_rel:.6e} {status}")
    return 0 if all(r.passed for r in reports) else 1


def _cmd_loss_eval(args):
    values = _merged_values(args)
    weights = configfile.weights_from(values)
    image = imagefiles.read_image(args.image)
    mask = imagefiles.read_mask(args.mask)
    field = gvrf.read_features(args.features)
    pred = imagefiles.read_saliency(args.pred)
    validate_pair(image, mask)

    graph = build_graph(field, clamp_negative=values["clamp_negative"])
    pce = partial_cross_entropy(pred, mask)
    lsc = lsc_loss(pred, image, configfile.lsc_from(values))
    pooled = PatchSaliency(pool_array(pred.values, field.grid_h, field.grid_w))
    gsa = gsa_loss(pooled, graph)
    total = pce.value + weights.beta * lsc.value + weights.mu * gsa.value
    print(f"pce {_fmt(pce.value)}")
    print(f"lsc {_fmt(lsc.value)}")
    print(f"gsa {_fmt(gsa.value)}")
    if args.pred_down is not None:
        # ssc compares the rescaled full prediction against the network's own
        # prediction on the half-size input; the latter comes from a file here
        pred_of_down = imagefiles.read_saliency(args.pred_down)
        half = resample_bilinear(pred, pred_of_down.height, pred_of_down.width)
        ssc = ssc_loss(half, pred_of_down, alpha=weights.alpha_ssc,
                       cfg=configfile.ssim_from(values))
        total += ssc.value
        print(f"ssc {_fmt(ssc.value)}")
    print(f"total {_fmt(total)}")
    return 0


def _cmd_metrics(args):
    pred_dir, gt_dir = Path(args.pred_dir), Path(args.gt_dir)
    preds = {p.stem: p for p in sorted(pred_dir.iterdir()) if p.is_file()}
    gts = {p.stem: p for p in sorted(gt_dir.iterdir()) if p.is_file()}
    if not preds:
        raise FileNotFoundError(f"no prediction files in {pred_dir}")
    missing = sorted(set(preds) ^ set(gts))
    if missing:
        raise FileNotFoundError(
            f"unpaired prediction/ground-truth stems: {missing[:8]}")
    pairs = [(stem, imagefiles.read_saliency(preds[stem]),
              imagefiles.read_binary_map(gts[stem])) for stem in sorted(preds)]
    rows = metrics.evaluate_many(pairs)
    metrics.write_report_csv(rows, args.out)
    mean = rows[-1]
    print(f"wrote {len(rows)} rows to {args.out}")
    print("mean"
          f" f_beta={_fmt(mean['f_beta'])}"
          f" mae={_fmt(mean['mae'])}"
          f" e_measure={_fmt(mean['e_measure'])}"
          f" iou_adaptive={_fmt(mean['iou_adaptive'])}")
    return 0


def _cmd_ncut_compare(args):
    from .synth import planted_field
    fields = []
    if args.features is not None:
        fields.append(("file", gvrf.read_features(args.features)))
    else:
        for i in range(args.planted):
            field, _ = planted_field(seed=args.seed + i)
            fields.append((f"planted_{i}", field))
    agreements = []
    for name, field in fields:
        graph = build_graph(field, materialize=True)
        spectral = spectral_bipartition(graph)
        s = minimize_gsa_pgd(graph, steps=args.steps,
                             step_size=args.step_size, seed=args.seed)
        mine = s >= 0.5
        agree = float(np.mean(mine == spectral.in_a))
        agree = max(agree, 1.0 - agree)
        agreements.append(agree)
        part = Bipartition(mine)
        print(f"{name}: agreement={agree:.4f}"
              f" ncut={_fmt(ncut_energy(graph, part))}"
              f" gsa_set={_fmt(gsa_set_energy(graph, part))}")
    print(f"mean_agreement {np.mean(agreements):.4f}")
    return 0


def _cmd_synth_gen(args):
    out = Path(args.out_dir)
    for sub in ("images", "masks", "features", "gt"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    train_scenes, test_scenes = generate_dataset(
        args.seed, args.train_count, args.test_count)
    rows = []
    for split, scenes in (("train", train_scenes), ("test", test_scenes)):
        for scene in scenes:
            sid = scene.label
            imagefiles.write_image(scene.image, out / "images" / f"{sid}.png")
            imagefiles.write_mask(scene.scribbles, out / "masks" / f"{sid}.png")
            gvrf.write_features(scene.features, out / "features" / f"{sid}.gvrf")
            imagefiles.write_binary_map(scene.gt, out / "gt" / f"{sid}.png")
            rows.append((sid, split))
    with open(out / "manifest.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("image_id", "split"))
        writer.writerows(rows)
    print(f"wrote {len(rows)} scenes to {out}")
    return 0


def _load_dataset(data_dir):
    data_dir = Path(data_dir)
    manifest = data_dir / "manifest.csv"
    if not manifest.is_file():
        raise FileNotFoundError(f"{manifest} not found; run synth-gen first")
    train_scenes, test_scenes = [], []
    with open(manifest, newline="") as fh:
        for row in csv.DictReader(fh):
            sid, split = row["image_id"], row["split"]
            image = imagefiles.read_image(data_dir / "images" / f"{sid}.png")
            mask = imagefiles.read_mask(data_dir / "masks" / f"{sid}.png")
            field = gvrf.read_features(data_dir / "features" / f"{sid}.gvrf")
            gt = imagefiles.read_binary_map(data_dir / "gt" / f"{sid}.png")
            spec = SceneSpec(
                height=image.height, width=image.width,
                grid_h=field.grid_h, grid_w=field.grid_w,
                feature_dim=field.dim, num_objects=1)
            scene = SyntheticScene(image=image, features=field,
                                   scribbles=mask, gt=gt, spec=spec,
                                   label=sid)
            (train_scenes if split == "train" else test_scenes).append(scene)
    return train_scenes, test_scenes


def _cmd_train_demo(args):
    values = _merged_values(args)
    if args.ablation == "pce-only":
        values.update(mu=0.0, beta=0.0, use_ssc=False)
    cfg = configfile.train_from(values)
    weights = configfile.weights_from(values)
    train_scenes, test_scenes = _load_dataset(args.data_dir)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = train(train_scenes, cfg, weights,
                   lsc_cfg=configfile.lsc_from(values),
                   ssim_cfg=configfile.ssim_from(values),
                   test_scenes=test_scenes)
    write_log_csv(result.log, out / "train_log.csv")
    gvrf.write_params(head_to_arrays(result.head), out / "params.gvrm")
    preds = out / "predictions"
    preds.mkdir(exist_ok=True)
    for scene in test_scenes:
        sal = predict(result.head, scene.image, scene.features)
        imagefiles.write_saliency(sal, preds / f"{scene.label}.png")
    last = result.log[-1]
    print(f"train_iou {_fmt(last.train_iou)}")
    print(f"test_iou {_fmt(last.test_iou)}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="scribseg",
        description="scribble-supervised saliency toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gradcheck",
                       help="finite-difference checks of loss gradients")
    p.add_argument("--cases", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("loss-eval", help="print loss terms for one scene")
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--mask", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--pred-down", type=Path, default=None,
                   help="prediction on the 0.5x input, enables the ssc term")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_loss_eval)

    p = sub.add_parser("metrics", help="evaluate a prediction directory")
    p.add_argument("--pred-dir", type=Path, required=True)
    p.add_argument("--gt-dir", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("ncut-compare",
                       help="agreement of affinity descent with the "
                            "spectral split")
    p.add_argument("--features", type=Path, default=None)
    p.add_argument("--planted", type=int, default=20,
                   help="number of planted two-cluster fields")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--step-size", type=float, default=2.0)
    p.set_defaults(func=_cmd_ncut_compare)

    p = sub.add_parser("synth-gen", help="materialize a synthetic dataset")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--train-count", type=int, default=50)
    p.add_argument("--test-count", type=int, default=20)
    p.set_defaults(func=_cmd_synth_gen)

    p = sub.add_parser("train-demo", help="train the head on a dataset")
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--ablation", choices=("composite", "pce-only"),
                   default="composite")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScribsegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
