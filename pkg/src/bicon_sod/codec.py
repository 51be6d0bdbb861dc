#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
Conversion between binary saliency masks and 8-channel connectivity masks.

Channels follow row-major neighbour order. Code stores them 0-based, i.e.
channel ``c`` here is channel ``j = c + 1`` in 1-based notation, and the
opposite channel is ``7 - c`` (``9 - j`` 1-based)::

    c:  0 1 2        offsets (dy, dx)
        3 . 4        0:(-1,-1) 1:(-1,0) 2:(-1,+1) 3:(0,-1)
        5 6 7        4:(0,+1)  5:(+1,-1) 6:(+1,0) 7:(+1,+1)

Out-of-bounds neighbours are reflected back into the image (coordinate -1
maps to 0, H maps to H-1). The same rule is used by bilateral voting and by
the toy model's convolution padding.
"""
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

from .itypes import ConnGrid, EdgeMask, GridKind, InvalidInput, SaliencyMask
from .logger import sys_logger as logger
from .utils import as_binary, as_unit_range, check_grid_shape

DIRECTIONS: Tuple[Tuple[int, int], ...] = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1),           (0, 1),
    (1, -1),  (1, 0),  (1, 1),
)
OPPOSITE: Tuple[int, ...] = tuple(7 - c for c in range(8))

_DY = np.array([d[0] for d in DIRECTIONS])
_DX = np.array([d[1] for d in DIRECTIONS])

def mirror(i: int, n: int) -> int:
    """Reflect a coordinate that is at most one step outside [0, n)"""
    return min(max(i, 0), n - 1)

def mirror_pad(a: np.ndarray, axes: Tuple[int, int] = (0, 1)) -> np.ndarray:
    """Pad two axes of 'a' by one pixel on each side, repeating the border pixels"""
    width = [(0, 0)] * a.ndim
    for ax in axes:
        width[ax] = (1, 1)
    return np.pad(a, width, mode="edge")

def neighbours(a: np.ndarray) -> np.ndarray:
    """Stack the 8 mirrored neighbours of every pixel: (H, W, ...) -> (H, W, ..., 8)"""
    h, w = a.shape[:2]
    p = mirror_pad(a)
    return np.stack([p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] for dy, dx in DIRECTIONS], axis=-1)

def pair_lookup(y: int, x: int, c: int, shape: Sequence[int]) -> Tuple[int, int, int]:
    """Return the location (y', x', c') of the other member of the connectivity
    pair of entry (y, x, c): the mirrored neighbour in direction c, looking back
    through the opposite channel.
    """
    h, w = shape[0], shape[1]
    if not (0 <= y < h and 0 <= x < w):
        raise InvalidInput(f"pixel ({y}, {x}) outside {h}x{w} grid")
    if not 0 <= c < 8:
        raise InvalidInput(f"channel {c} outside 0..7")
    dy, dx = DIRECTIONS[c]
    return mirror(y + dy, h), mirror(x + dx, w), OPPOSITE[c]

@lru_cache(maxsize=32)
def vote_partner_index(height: int, width: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index arrays (py, px, pc), each (H, W, 8), naming the entry that every
    entry is multiplied with by bilateral voting.

    Where the neighbour lies inside the image this is `pair_lookup`. Where it
    lies outside, the mirrored location is not a true neighbour, so the entry
    is paired with itself.
    """
    yy = np.broadcast_to(np.arange(height)[:, None, None], (height, width, 8))
    xx = np.broadcast_to(np.arange(width)[None, :, None], (height, width, 8))
    cc = np.broadcast_to(np.arange(8)[None, None, :], (height, width, 8))
    ny = yy + _DY
    nx = xx + _DX
    inside = (ny >= 0) & (ny < height) & (nx >= 0) & (nx < width)
    py = np.where(inside, ny, yy)
    px = np.where(inside, nx, xx)
    pc = np.where(inside, 7 - cc, cc)
    for a in (py, px, pc):
        a.flags.writeable = False
    return py, px, pc

def partner_values(grid: np.ndarray) -> np.ndarray:
    py, px, pc = vote_partner_index(grid.shape[0], grid.shape[1])
    return grid[py, px, pc]

def is_pair_consistent(grid: ConnGrid) -> bool:
    """True if every entry equals its voting partner"""
    g = np.asarray(grid)
    check_grid_shape(g)
    return bool(np.array_equal(g, partner_values(g)))

def _check_mask(mask) -> np.ndarray:
    m = as_binary(mask, "saliency mask")
    if m.ndim != 2:
        raise InvalidInput(f"saliency mask must be 2-D, got shape {m.shape}")
    return m

def encode_connectivity(mask: SaliencyMask) -> ConnGrid:
    """Turn a binary saliency mask (H, W) into its binary connectivity mask (H, W, 8).

    An entry is 1 iff the pixel and its (mirrored) neighbour in that direction
    are both salient; background pixels get all-zero vectors.
    """
    m = _check_mask(mask)
    grid = (m[:, :, None] & neighbours(m)).astype(np.float64)
    isolated = int(np.count_nonzero(m.astype(bool) & ~grid.any(axis=2)))
    if isolated:
        logger.debug("encode_connectivity: %d isolated salient pixel(s) encode to all-zero vectors", isolated)
    return grid

def count_isolated(mask: SaliencyMask) -> int:
    """Number of salient pixels without any salient (mirrored) 8-neighbour"""
    m = _check_mask(mask)
    return int(np.count_nonzero(m.astype(bool) & ~neighbours(m).any(axis=2)))

def decode_connectivity(grid: ConnGrid) -> SaliencyMask:
    """A pixel is salient iff at least one of its connections is set"""
    g = as_binary(grid, "connectivity grid")
    check_grid_shape(g)
    return g.any(axis=2).astype(np.uint8)

def extract_edge_mask(grid: ConnGrid) -> EdgeMask:
    """Mark pixels whose connectivity vector mixes zeros and ones"""
    g = as_binary(grid, "connectivity grid")
    check_grid_shape(g)
    return (g.min(axis=2) < g.max(axis=2)).astype(np.uint8)

def validate_grid(grid: ConnGrid, kind: GridKind) -> np.ndarray:
    """Check the invariants of a grid of the given kind and return it as float64.

    Every kind must be (H, W, 8) in [0, 1]; binary masks must be binary and
    pair-consistent, Bicon maps pair-consistent.
    """
    if kind == GridKind.BINARY_MASK:
        g = as_binary(grid, "connectivity mask").astype(np.float64)
    else:
        g = as_unit_range(grid, f"{kind.value} grid")
    check_grid_shape(g)
    if kind != GridKind.CONN_MAP and not is_pair_consistent(g):
        raise InvalidInput(f"{kind.value} grid is not pair-consistent")
    return g
