"""Batch extraction: image directory in, one GVRF file per image out.

Images are resized to a square, pushed through the transformer once in
inference mode, and the selected final-layer tokens are written
unit-L2-normalized. A manifest CSV records what was produced and with
which token source, since that choice is invisible in the files
themselves.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from . import gvrf
from .errors import ExtractError, GridError, ImageReadError
from .vit import PIXEL_MEAN, PIXEL_STD, build_model

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
TOKEN_SOURCES = ("output", "key", "query", "value")


@dataclass(frozen=True)
class ExtractionJob:
    input_dir: Path
    output_dir: Path
    model: str = "dino"      # "dino" downloads weights; "random" is offline
    patch_size: int = 8
    resize: int = 320
    tokens: str = "output"

    def __post_init__(self):
        if self.model not in ("dino", "random"):
            raise ExtractError(f"unknown model '{self.model}'")
        if self.patch_size not in (8, 16):
            raise ExtractError(f"patch size must be 8 or 16, "
                               f"got {self.patch_size}")
        if self.tokens not in TOKEN_SOURCES:
            raise ExtractError(f"unknown token source '{self.tokens}'")
        if self.resize < self.patch_size or self.resize % self.patch_size:
            raise GridError(
                f"resize {self.resize} is not a positive multiple of "
                f"patch size {self.patch_size}")

    @property
    def grid(self):
        side = self.resize // self.patch_size
        return (side, side)


def _load_pixels(path, resize):
    try:
        with Image.open(path) as img:
            img = img.convert("RGB").resize((resize, resize),
                                            Image.Resampling.BILINEAR)
            data = np.asarray(img, dtype=np.float32) / 255.0
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageReadError(f"{path}: {exc}") from exc
    data = (data - np.float32(PIXEL_MEAN)) / np.float32(PIXEL_STD)
    return torch.from_numpy(data.transpose(2, 0, 1)).unsqueeze(0)


def extract_image(model, job: ExtractionJob, path) -> np.ndarray:
    """One image -> (grid_h, grid_w, dim) unit-norm float32 vectors."""
    pixels = _load_pixels(path, job.resize)
    with torch.no_grad():
        tokens = model(pixels)[job.tokens][0].numpy()
    gh, gw = job.grid
    vectors = tokens.reshape(gh, gw, -1).astype(np.float32)
    norms = np.linalg.norm(vectors, axis=2, keepdims=True)
    return vectors / norms


def extract(job: ExtractionJob):
    """Run the whole job; returns the manifest rows that were written."""
    paths = sorted(p for p in Path(job.input_dir).iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise ExtractError(f"no images in {job.input_dir}")
    out = Path(job.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(job.model, job.patch_size, job.grid)

    rows = []
    for path in paths:
        vectors = extract_image(model, job, path)
        gh, gw, dim = vectors.shape
        gvrf.write_features(vectors, out / f"{path.stem}.gvrf")
        rows.append({"image_id": path.stem, "grid": f"{gh}x{gw}",
                     "dim": dim, "model": job.model, "tokens": job.tokens})

    with open(out / "manifest.csv", "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=("image_id", "grid", "dim", "model", "tokens"),
            lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return rows
