"""GVRF writer.

The consuming kit validates on read; this side only has to produce the
layout exactly: magic "GVRF", uint32 version 1, uint32 grid_h, grid_w,
dim, then row-major float32 components, everything little-endian.
"""

import struct

import numpy as np

MAGIC = b"GVRF"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def write_features(vectors, path):
    """vectors: (grid_h, grid_w, dim) array, any float dtype."""
    vectors = np.asarray(vectors)
    gh, gw, dim = vectors.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, gh, gw, dim))
        fh.write(np.ascontiguousarray(vectors, dtype="<f4").tobytes())
