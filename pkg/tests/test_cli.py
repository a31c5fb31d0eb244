"""End-to-end CLI behavior: reports, exit codes, determinism."""

import numpy as np
import pytest

from scribseg.cli import main
from scribseg.grids import (
    BACKGROUND,
    FOREGROUND,
    FeatureField,
    RgbImage,
    SaliencyMap,
    ScribbleMask,
)
from scribseg.gvrf import write_features
from scribseg.imagefiles import (
    write_binary_map,
    write_image,
    write_mask,
    write_saliency,
)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------

def test_gradcheck_report_is_deterministic(capsys):
    code_a, out_a, _ = run(capsys, "gradcheck", "--cases", "2", "--seed", "7")
    code_b, out_b, _ = run(capsys, "gradcheck", "--cases", "2", "--seed", "7")
    assert code_a == code_b == 0
    assert out_a == out_b
    for line in out_a.strip().splitlines():
        assert "max_rel=" in line and line.endswith("PASS")


# ---------------------------------------------------------------------------
# loss-eval
# ---------------------------------------------------------------------------

def scene_files(tmp_path, rng):
    image = tmp_path / "image.png"
    mask = tmp_path / "mask.png"
    feats = tmp_path / "feats.gvrf"
    pred = tmp_path / "pred.png"
    pred_down = tmp_path / "pred_down.png"
    write_image(RgbImage(rng.random((16, 16, 3))), image)
    labels = np.zeros((16, 16), dtype=np.int8)
    labels[2, 2:6] = FOREGROUND
    labels[12, 4:9] = BACKGROUND
    write_mask(ScribbleMask(labels), mask)
    write_features(FeatureField(rng.standard_normal((4, 4, 8))), feats)
    write_saliency(SaliencyMap(rng.random((16, 16))), pred)
    write_saliency(SaliencyMap(rng.random((8, 8))), pred_down)
    return image, mask, feats, pred, pred_down


def test_loss_eval_prints_each_term(capsys, tmp_path, rng):
    image, mask, feats, pred, pred_down = scene_files(tmp_path, rng)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("ssim_window = 5\n")
    code, out, _ = run(capsys, "loss-eval", "--image", str(image),
                       "--mask", str(mask), "--features", str(feats),
                       "--pred", str(pred), "--pred-down", str(pred_down),
                       "--config", str(cfg))
    assert code == 0
    lines = dict(line.split(" ", 1) for line in out.strip().splitlines())
    assert set(lines) == {"pce", "lsc", "gsa", "ssc", "total"}
    parts = (float(lines["pce"]) + 0.3 * float(lines["lsc"])
             + 0.15 * float(lines["gsa"]) + float(lines["ssc"]))
    assert abs(float(lines["total"]) - parts) < 1e-10


def test_loss_eval_without_half_prediction(capsys, tmp_path, rng):
    image, mask, feats, pred, _ = scene_files(tmp_path, rng)
    code, out, _ = run(capsys, "loss-eval", "--image", str(image),
                       "--mask", str(mask), "--features", str(feats),
                       "--pred", str(pred))
    assert code == 0
    assert "ssc" not in out


def test_loss_eval_missing_file_is_usage_error(capsys, tmp_path, rng):
    image, mask, feats, pred, _ = scene_files(tmp_path, rng)
    code, _, err = run(capsys, "loss-eval", "--image", str(image),
                       "--mask", str(mask), "--features",
                       str(tmp_path / "absent.gvrf"), "--pred", str(pred))
    assert code == 2
    assert "error:" in err


def test_malformed_config_is_usage_error(capsys, tmp_path, rng):
    image, mask, feats, pred, _ = scene_files(tmp_path, rng)
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("entropy = lots\n")
    code, _, err = run(capsys, "loss-eval", "--image", str(image),
                       "--mask", str(mask), "--features", str(feats),
                       "--pred", str(pred), "--config", str(cfg))
    assert code == 2
    assert "unknown key" in err


def test_unknown_flag_is_usage_error(capsys):
    code, _, _ = run(capsys, "gradcheck", "--bogus")
    assert code == 2


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def test_metrics_on_identical_directories(capsys, tmp_path, rng):
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    for i in range(3):
        g = (rng.random((8, 8)) < 0.4).astype(np.float64)
        g[0, 0] = 1.0
        write_saliency(SaliencyMap(g), pred_dir / f"img_{i}.png")
        write_binary_map(SaliencyMap(g), gt_dir / f"img_{i}.png")
    out_csv = tmp_path / "report.csv"
    code, out, _ = run(capsys, "metrics", "--pred-dir", str(pred_dir),
                       "--gt-dir", str(gt_dir), "--out", str(out_csv))
    assert code == 0
    assert "mae=0 " in out
    assert out_csv.read_text().count("\n") == 5  # header + 3 rows + mean
    mean_line = out.strip().splitlines()[-1]
    f_beta = float(mean_line.split("f_beta=")[1].split(" ")[0])
    assert f_beta > 0.99


def test_metrics_unpaired_stems_is_usage_error(capsys, tmp_path, rng):
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    write_saliency(SaliencyMap(np.ones((4, 4))), pred_dir / "a.png")
    write_binary_map(SaliencyMap(np.ones((4, 4))), gt_dir / "b.png")
    code, _, err = run(capsys, "metrics", "--pred-dir", str(pred_dir),
                       "--gt-dir", str(gt_dir),
                       "--out", str(tmp_path / "r.csv"))
    assert code == 2
    assert "unpaired" in err


def test_metrics_dimension_mismatch_is_runtime_error(capsys, tmp_path, rng):
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    write_saliency(SaliencyMap(np.ones((4, 4))), pred_dir / "a.png")
    write_binary_map(SaliencyMap(np.ones((5, 5))), gt_dir / "a.png")
    code, _, err = run(capsys, "metrics", "--pred-dir", str(pred_dir),
                       "--gt-dir", str(gt_dir),
                       "--out", str(tmp_path / "r.csv"))
    assert code == 1
    assert "error:" in err


# ---------------------------------------------------------------------------
# ncut-compare
# ---------------------------------------------------------------------------

def test_ncut_compare_smoke(capsys):
    argv = ("ncut-compare", "--planted", "2", "--steps", "50")
    code_a, out_a, _ = run(capsys, *argv)
    code_b, out_b, _ = run(capsys, *argv)
    assert code_a == code_b == 0
    assert out_a == out_b
    assert out_a.strip().splitlines()[-1].startswith("mean_agreement ")


# ---------------------------------------------------------------------------
# synth-gen and train-demo
# ---------------------------------------------------------------------------

def test_synth_gen_then_train_demo_round_trip(capsys, tmp_path):
    data = tmp_path / "data"
    code, out, _ = run(capsys, "synth-gen", "--out-dir", str(data),
                       "--seed", "3", "--train-count", "2",
                       "--test-count", "1")
    assert code == 0
    assert (data / "manifest.csv").read_text().startswith("image_id,split\n")
    assert sorted(p.name for p in (data / "features").iterdir()) == \
        ["test_002.gvrf", "train_000.gvrf", "train_001.gvrf"]

    demo_args = ("train-demo", "--data-dir", str(data), "--ablation",
                 "composite", "--epochs", "2", "--hidden-width", "4",
                 "--batch-size", "2")
    out_a = tmp_path / "run_a"
    out_b = tmp_path / "run_b"
    code, report_a, _ = run(capsys, *demo_args, "--out-dir", str(out_a))
    assert code == 0
    assert report_a.startswith("train_iou ")
    assert "test_iou " in report_a
    code, report_b, _ = run(capsys, *demo_args, "--out-dir", str(out_b))
    assert code == 0

    # identical configuration must reproduce every artifact bitwise
    assert report_a == report_b
    for rel in ("train_log.csv", "params.gvrm", "predictions/test_002.png"):
        assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes()


def test_train_demo_without_dataset_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "train-demo", "--data-dir",
                       str(tmp_path / "nowhere"), "--out-dir",
                       str(tmp_path / "out"))
    assert code == 2
    assert "synth-gen" in err
