#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
Byte-level codecs for the two file formats of the command line tools:

* PGM  - NetPBM P5, maxval 255. Masks are stored as {0, 255}, continuous maps
         as round(value * 255).
* CONN - b"CONN1\\n", an ASCII line "<height> <width> 8\\n", then H*W*8
         little-endian float32 values in (y, x, channel) order.

Writers are canonical, so reading and re-writing a canonical file reproduces
it byte for byte.
"""
from typing import Tuple

import numpy as np

from ..itypes import InvalidInput, MalformedFile

PGM_MAGIC = b"P5"
CONN_MAGIC = b"CONN1\n"
_WHITESPACE = (b" ", b"\t", b"\r", b"\n")

def encode_pgm(pixels: np.ndarray) -> bytes:
    p = np.asarray(pixels)
    if p.ndim != 2 or p.size == 0:
        raise InvalidInput(f"PGM pixels must be a non-empty 2-D array, got shape {p.shape}")
    h, w = p.shape
    return f"P5\n{w} {h}\n255\n".encode('ascii') + p.astype(np.uint8).tobytes(order='C')

def _pgm_token(data: bytes, pos: int, path: str, what: str) -> Tuple[int, int]:
    # skip whitespace and '#' comments, then read one decimal integer
    while pos < len(data):
        if data[pos:pos + 1] in _WHITESPACE:
            pos += 1
        elif data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and 48 <= data[pos] <= 57:
        pos += 1
    if pos == start:
        raise MalformedFile(path, start, f"expected {what}")
    return int(data[start:pos]), pos

def decode_pgm(data: bytes, path: str = "<bytes>") -> np.ndarray:
    """Parse a P5 file with maxval 255 into an (H, W) uint8 array"""
    if data[:2] != PGM_MAGIC:
        raise MalformedFile(path, 0, f"bad magic {data[:2]!r}, expected {PGM_MAGIC!r}")
    if data[2:3] not in _WHITESPACE:
        raise MalformedFile(path, 2, "expected whitespace after the magic number")
    width, pos = _pgm_token(data, 2, path, "width")
    width_at = pos
    height, pos = _pgm_token(data, pos, path, "height")
    maxval_at = pos
    maxval, pos = _pgm_token(data, pos, path, "maxval")
    if width < 1 or height < 1:
        raise MalformedFile(path, width_at, f"image size {width}x{height} is empty")
    if maxval != 255:
        raise MalformedFile(path, maxval_at, f"maxval {maxval} not supported, expected 255")
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise MalformedFile(path, pos, "expected a single whitespace byte after maxval")
    pos += 1
    expected = width * height
    if len(data) - pos != expected:
        raise MalformedFile(path, pos, f"expected {expected} payload bytes, found {len(data) - pos}")
    return np.frombuffer(data, dtype=np.uint8, count=expected, offset=pos).reshape(height, width).copy()

def mask_to_pixels(mask: np.ndarray) -> np.ndarray:
    m = np.asarray(mask)
    return np.where(m != 0, 255, 0).astype(np.uint8)

def pixels_to_mask(pixels: np.ndarray, path: str = "<bytes>") -> np.ndarray:
    """{0, 255} -> {0, 1}; any other byte value is rejected"""
    p = np.asarray(pixels)
    bad = int(np.count_nonzero((p != 0) & (p != 255)))
    if bad:
        raise InvalidInput(f"{path}: mask is not binary, {bad} pixel(s) are neither 0 nor 255")
    return (p == 255).astype(np.uint8)

def map_to_pixels(values: np.ndarray) -> np.ndarray:
    """[0, 1] -> round(value * 255), halves rounded up"""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)

def pixels_to_map(pixels: np.ndarray) -> np.ndarray:
    return np.asarray(pixels, dtype=np.float64) / 255.0

def encode_conn(grid: np.ndarray) -> bytes:
    g = np.asarray(grid)
    if g.ndim != 3 or g.shape[2] != 8 or g.size == 0:
        raise InvalidInput(f"connectivity grid must be shaped (H, W, 8), got {g.shape}")
    if not np.all(np.isfinite(g)) or np.any((g < 0) | (g > 1)):
        raise InvalidInput("connectivity grid values must be finite and in [0, 1]")
    h, w, _ = g.shape
    header = CONN_MAGIC + f"{h} {w} 8\n".encode('ascii')
    return header + g.astype('<f4').tobytes(order='C')

def decode_conn(data: bytes, path: str = "<bytes>") -> np.ndarray:
    """Parse a CONN1 file into an (H, W, 8) float32 array"""
    if data[:len(CONN_MAGIC)] != CONN_MAGIC:
        raise MalformedFile(path, 0, f"bad magic {data[:len(CONN_MAGIC)]!r}, expected {CONN_MAGIC!r}")
    pos = len(CONN_MAGIC)
    end = data.find(b"\n", pos)
    if end < 0:
        raise MalformedFile(path, pos, "missing header line")
    fields = data[pos:end].split(b" ")
    try:
        h, w, c = (int(f) for f in fields)
    except ValueError:
        raise MalformedFile(path, pos, f"bad header line {data[pos:end]!r}, expected '<height> <width> 8'")
    if h < 1 or w < 1 or c != 8:
        raise MalformedFile(path, pos, f"bad dimensions {h} {w} {c}")
    pos = end + 1
    expected = 32 * h * w
    if len(data) - pos != expected:
        raise MalformedFile(path, pos, f"expected {expected} payload bytes, found {len(data) - pos}")
    grid = np.frombuffer(data, dtype='<f4', count=h * w * 8, offset=pos).reshape(h, w, 8)
    bad = np.flatnonzero(~np.isfinite(grid) | (grid < 0) | (grid > 1))
    if bad.size:
        raise MalformedFile(path, pos + 4 * int(bad[0]), f"{bad.size} value(s) non-finite or outside [0, 1]")
    return grid.astype(np.float32)
