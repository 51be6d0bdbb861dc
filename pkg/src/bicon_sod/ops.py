#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
Bilateral voting and region-guided channel aggregation, each with a forward
evaluation and its vector-Jacobian product.
"""
from typing import Optional

import numpy as np

from .codec import partner_values, vote_partner_index
from .itypes import AggregationMode, ConnGrid, EdgeMask, Gradient, InvalidInput, SaliencyMap
from .utils import as_binary, as_unit_range, check_grid_shape, check_same_shape

def bilateral_vote(conn: ConnGrid) -> ConnGrid:
    """Multiply both members of every connectivity pair and assign the product to both.

    Args:
        conn (ConnGrid): Conn map (H, W, 8) with values in [0, 1]

    Returns:
        ConnGrid: the Bicon map, pair-consistent and elementwise <= conn
    """
    c = as_unit_range(conn, "conn map")
    check_grid_shape(c)
    return c * partner_values(c)

def bilateral_vote_backward(conn: ConnGrid, upstream: Gradient) -> Gradient:
    """Gradient of <upstream, bilateral_vote(conn)> with respect to conn"""
    c = np.asarray(conn, dtype=np.float64)
    u = np.asarray(upstream, dtype=np.float64)
    check_grid_shape(c)
    check_same_shape(c, u, "conn map and upstream gradient")
    py, px, pc = vote_partner_index(c.shape[0], c.shape[1])
    grad = u * c[py, px, pc]
    # each product also depends on the partner entry; border self-pairs add up to 2c
    np.add.at(grad, (py, px, pc), u * c)
    return grad

def aggregate_global(bicon: ConnGrid) -> SaliencyMap:
    """Channel mean at every pixel (the global map)"""
    b = as_unit_range(bicon, "bicon map")
    check_grid_shape(b)
    return b.mean(axis=2)

def _check_edges(b: np.ndarray, edges: EdgeMask) -> np.ndarray:
    e = as_binary(edges, "edge mask")
    if e.shape != b.shape[:2]:
        raise InvalidInput(f"edge mask shape {e.shape} does not match bicon map {b.shape[:2]}")
    return e.astype(bool)

def aggregate_decoupled(bicon: ConnGrid, edges: EdgeMask) -> SaliencyMap:
    """1 - min over channels on edge pixels, channel mean elsewhere (the edge-decoupled map)"""
    b = as_unit_range(bicon, "bicon map")
    check_grid_shape(b)
    e = _check_edges(b, edges)
    return np.where(e, 1.0 - b.min(axis=2), b.mean(axis=2))

def aggregate(bicon: ConnGrid, mode: AggregationMode, edges: Optional[EdgeMask] = None) -> SaliencyMap:
    if mode == AggregationMode.GLOBAL:
        return aggregate_global(bicon)
    if edges is None:
        raise InvalidInput("decoupled aggregation needs an edge mask")
    return aggregate_decoupled(bicon, edges)

def aggregate_backward(
    bicon: ConnGrid,
    edges: Optional[EdgeMask],
    mode: AggregationMode,
    upstream: Gradient,
) -> Gradient:
    """Gradient of <upstream, aggregate(bicon)> with respect to bicon.

    On edge pixels in DECOUPLED mode the whole (negated) upstream value goes to
    the lowest-index channel holding the minimum.
    """
    b = np.asarray(bicon, dtype=np.float64)
    u = np.asarray(upstream, dtype=np.float64)
    check_grid_shape(b)
    if u.shape != b.shape[:2]:
        raise InvalidInput(f"upstream shape {u.shape} does not match bicon map {b.shape[:2]}")
    grad = np.repeat(u[:, :, None] / 8.0, 8, axis=2)
    if mode == AggregationMode.GLOBAL:
        return grad
    if edges is None:
        raise InvalidInput("decoupled aggregation needs an edge mask")
    e = _check_edges(b, edges)
    ys, xs = np.nonzero(e)
    grad[ys, xs, :] = 0.0
    grad[ys, xs, np.argmin(b[ys, xs, :], axis=1)] = -u[ys, xs]
    return grad
