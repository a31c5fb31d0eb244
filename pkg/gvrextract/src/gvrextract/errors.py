class ExtractError(Exception):
    """Base class for everything this package raises on purpose."""


class GridError(ExtractError):
    """Resize and patch size do not produce a whole patch grid."""


class ImageReadError(ExtractError):
    """An input file could not be decoded as an image."""


class WeightsUnavailableError(ExtractError):
    """Pretrained weights were requested but could not be downloaded."""
