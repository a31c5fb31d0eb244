"""PNG/PGM readers and writers for images, masks, and saliency maps.

Byte conventions:

  images    8-bit RGB, channels divided by 255 on load
  masks     8-bit single channel; 0 = unlabeled, 128 = background,
            255 = foreground; anything else is a convention violation
  saliency  8-bit single channel, value / 255 on load; on save values are
            rounded half-up to round(255 * s)
  gt maps   8-bit single channel, binarized at > 127
"""

import numpy as np
from PIL import Image

from .errors import MaskValueError
from .grids import BACKGROUND, FOREGROUND, UNLABELED, RgbImage, SaliencyMap, ScribbleMask

MASK_UNLABELED_BYTE = 0
MASK_BACKGROUND_BYTE = 128
MASK_FOREGROUND_BYTE = 255


def _open_gray(path):
    with Image.open(path) as im:
        if im.mode != "L":
            raise MaskValueError(
                f"{path}: expected an 8-bit single-channel file, got mode "
                f"{im.mode}")
        return np.asarray(im, dtype=np.uint8)


def read_image(path) -> RgbImage:
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return RgbImage(rgb / 255.0)


def write_image(image: RgbImage, path):
    data = np.floor(255.0 * image.pixels + 0.5).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path)


def read_mask(path) -> ScribbleMask:
    raw = _open_gray(path)
    labels = np.full(raw.shape, UNLABELED, dtype=np.int8)
    labels[raw == MASK_BACKGROUND_BYTE] = BACKGROUND
    labels[raw == MASK_FOREGROUND_BYTE] = FOREGROUND
    known = np.isin(raw, (MASK_UNLABELED_BYTE, MASK_BACKGROUND_BYTE,
                          MASK_FOREGROUND_BYTE))
    if not known.all():
        y, x = np.argwhere(~known)[0]
        raise MaskValueError(
            f"{path}: value {int(raw[y, x])} at (row {y}, col {x}) is not "
            f"one of 0/128/255")
    return ScribbleMask(labels)


def write_mask(mask: ScribbleMask, path):
    raw = np.full(mask.labels.shape, MASK_UNLABELED_BYTE, dtype=np.uint8)
    raw[mask.labels == BACKGROUND] = MASK_BACKGROUND_BYTE
    raw[mask.labels == FOREGROUND] = MASK_FOREGROUND_BYTE
    Image.fromarray(raw, mode="L").save(path)


def read_saliency(path) -> SaliencyMap:
    return SaliencyMap(_open_gray(path) / 255.0)


def write_saliency(m: SaliencyMap, path):
    data = np.floor(255.0 * m.values + 0.5).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path)


def read_binary_map(path) -> SaliencyMap:
    """Ground-truth loader: binarizes at the conventional 127 threshold."""
    return SaliencyMap((_open_gray(path) > 127).astype(np.float64))


def write_binary_map(m: SaliencyMap, path):
    data = np.where(m.values > 0.5, 255, 0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path)
