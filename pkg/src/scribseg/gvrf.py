"""Binary containers: patch-feature files and parameter bundles.

Feature file layout (all integers little-endian):

    bytes 0..3    magic "GVRF"
    bytes 4..7    uint32 version, currently 1
    bytes 8..19   uint32 grid_h, grid_w, dim
    bytes 20..    float32 payload, row-major (patch-row, patch-col, component)

Readers reject anything a writer could not have produced: wrong magic,
unknown version, and payloads that are too short or too long, reporting
byte offsets and expected versus actual lengths.

Parameter bundles ("GVRM") hold an ordered list of float64 arrays with
explicit shapes; same strictness.
"""

import struct

import numpy as np

from .errors import (
    BadMagicError,
    FormatError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .grids import FeatureField

FEATURE_MAGIC = b"GVRF"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<4sIIII")

PARAMS_MAGIC = b"GVRM"
PARAMS_VERSION = 1


def write_features(field: FeatureField, path):
    """Serialize a feature field; components are stored as float32."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION,
                              field.grid_h, field.grid_w, field.dim))
        fh.write(np.ascontiguousarray(
            field.vectors, dtype="<f4").tobytes())


def read_features(path) -> FeatureField:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise TruncatedPayloadError(
            f"{path}: header needs {_HEADER.size} bytes, file has {len(blob)}")
    magic, version, grid_h, grid_w, dim = _HEADER.unpack_from(blob, 0)
    if magic != FEATURE_MAGIC:
        raise BadMagicError(
            f"{path}: magic {magic!r} at byte 0, expected {FEATURE_MAGIC!r}")
    if version != FEATURE_VERSION:
        raise VersionMismatchError(
            f"{path}: version {version} at byte 4, reader understands "
            f"{FEATURE_VERSION}")
    if min(grid_h, grid_w, dim) < 1:
        raise FormatError(
            f"{path}: header declares a zero dimension "
            f"({grid_h}, {grid_w}, {dim})")
    expected = _HEADER.size + 4 * grid_h * grid_w * dim
    if len(blob) != expected:
        raise TruncatedPayloadError(
            f"{path}: expected {expected} bytes for a "
            f"{grid_h}x{grid_w}x{dim} payload, found {len(blob)}")
    payload = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    return FeatureField(payload.reshape(grid_h, grid_w, dim).astype(np.float64))


def write_params(arrays, path):
    """Serialize an ordered list of float64 arrays."""
    parts = [PARAMS_MAGIC, struct.pack("<II", PARAMS_VERSION, len(arrays))]
    for a in arrays:
        a = np.asarray(a, dtype=np.float64)
        parts.append(struct.pack("<I", a.ndim))
        if a.ndim:
            parts.append(struct.pack(f"<{a.ndim}I", *a.shape))
        parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_params(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12:
        raise TruncatedPayloadError(
            f"{path}: bundle header needs 12 bytes, file has {len(blob)}")
    if blob[:4] != PARAMS_MAGIC:
        raise BadMagicError(
            f"{path}: magic {blob[:4]!r} at byte 0, expected {PARAMS_MAGIC!r}")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != PARAMS_VERSION:
        raise VersionMismatchError(
            f"{path}: version {version} at byte 4, reader understands "
            f"{PARAMS_VERSION}")
    offset = 12
    arrays = []
    for i in range(count):
        if offset + 4 > len(blob):
            raise TruncatedPayloadError(
                f"{path}: array {i} rank missing at byte {offset}")
        (ndim,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        if ndim > 8:
            raise FormatError(f"{path}: array {i} declares rank {ndim}")
        if offset + 4 * ndim > len(blob):
            raise TruncatedPayloadError(
                f"{path}: array {i} shape truncated at byte {offset}")
        shape = struct.unpack_from(f"<{ndim}I", blob, offset) if ndim else ()
        offset += 4 * ndim
        size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        nbytes = 8 * size
        if offset + nbytes > len(blob):
            raise TruncatedPayloadError(
                f"{path}: array {i} payload expects {nbytes} bytes at byte "
                f"{offset}, only {len(blob) - offset} remain")
        arrays.append(np.frombuffer(
            blob, dtype="<f8", count=size, offset=offset).reshape(shape).copy())
        offset += nbytes
    if offset != len(blob):
        raise TruncatedPayloadError(
            f"{path}: {len(blob) - offset} trailing bytes after byte {offset}")
    return arrays
