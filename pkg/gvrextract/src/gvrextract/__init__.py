from .errors import (
    ExtractError,
    GridError,
    ImageReadError,
    WeightsUnavailableError,
)
from .extract import ExtractionJob, extract, extract_image
from .vit import build_model, weights_available

__all__ = [
    "ExtractError",
    "ExtractionJob",
    "GridError",
    "ImageReadError",
    "WeightsUnavailableError",
    "build_model",
    "extract",
    "extract_image",
    "weights_available",
]
