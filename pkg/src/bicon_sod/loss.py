#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
The Bicon loss and its terms. Every term is mean-reduced (per pixel for
single-channel maps, per pixel and channel for 8-channel grids) and comes with
its gradient, so the toy pipeline can chain them by hand.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field
from pydantic.dataclasses import dataclass as pydantic_dataclass

from .codec import extract_edge_mask
from .itypes import AggregationMode, ConnGrid, EdgeMask, Gradient, InvalidInput, LossHookF
from .itypes import NumericalFailure, SaliencyMap, SaliencyMask
from .logger import sys_logger as logger
from .ops import aggregate_backward, aggregate_decoupled, aggregate_global
from .ops import bilateral_vote, bilateral_vote_backward
from .utils import as_binary, as_unit_range, check_grid_shape, check_same_shape

EPS = 1e-7

@pydantic_dataclass(frozen=True)
class LossWeights:
    """Weights of the Conn-map and Bicon-map terms of the consistency loss"""
    w1: float = Field(default=0.8, ge=0.0, le=1.0)
    w2: float = Field(default=0.2, ge=0.0, le=1.0)

    def __str__(self) -> str:
        return f"w1={self.w1:g} w2={self.w2:g}"

@dataclass
class LossMaps:
    """Unreduced, unweighted per-entry BCE surfaces (H, W, 8) of the consistency terms"""
    conmap: np.ndarray
    bimap: np.ndarray

    def per_pixel(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.conmap.mean(axis=2), self.bimap.mean(axis=2)

@dataclass
class LossValue:
    decouple: float = 0.0
    conmap: float = 0.0
    bimap: float = 0.0
    optional: float = 0.0
    # BCE of the saliency-head baseline; zero for connectivity models
    saliency: float = 0.0
    weights: LossWeights = field(default_factory=LossWeights)
    maps: Optional[LossMaps] = field(default=None, repr=False, compare=False)

    @property
    def total(self) -> float:
        return (self.saliency + self.decouple
                + self.weights.w1 * self.conmap + self.weights.w2 * self.bimap
                + self.optional)

    def terms(self) -> Dict[str, float]:
        return dict(decouple=self.decouple, conmap=self.conmap, bimap=self.bimap,
                    optional=self.optional, saliency=self.saliency, total=self.total)

    @classmethod
    def mean(cls, values: Sequence["LossValue"]) -> "LossValue":
        if not values:
            raise InvalidInput("cannot average an empty list of losses")
        n = float(len(values))
        return cls(
            decouple=sum(v.decouple for v in values) / n,
            conmap=sum(v.conmap for v in values) / n,
            bimap=sum(v.bimap for v in values) / n,
            optional=sum(v.optional for v in values) / n,
            saliency=sum(v.saliency for v in values) / n,
            weights=values[0].weights,
        )

#### binary cross entropy

def _bce_inputs(pred, target) -> Tuple[np.ndarray, np.ndarray]:
    p = as_unit_range(pred, "prediction")
    t = as_binary(target, "target").astype(np.float64)
    check_same_shape(p, t, "prediction and target")
    return p, t

def bce_map(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Unreduced BCE with predictions clamped to [EPS, 1 - EPS]"""
    p, t = _bce_inputs(pred, target)
    pc = np.clip(p, EPS, 1.0 - EPS)
    return -np.where(t == 1.0, np.log(pc), np.log(1.0 - pc))

def bce(pred: np.ndarray, target: np.ndarray) -> Tuple[float, Gradient]:
    """Mean-reduced BCE and its gradient with respect to 'pred'.

    The gradient is zero wherever the clamp is active.
    """
    p, t = _bce_inputs(pred, target)
    pc = np.clip(p, EPS, 1.0 - EPS)
    loss = -np.where(t == 1.0, np.log(pc), np.log(1.0 - pc))
    active = (p >= EPS) & (p <= 1.0 - EPS)
    grad = np.where(active, (pc - t) / (pc * (1.0 - pc)), 0.0) / p.size
    return float(loss.mean()), grad

#### optional loss hooks

_LOSS_HOOKS: Dict[str, LossHookF] = {}

def register_loss_hook(name: str, hook: LossHookF) -> None:
    """Register an optional loss term computed on (global map, saliency gt).

    Args:
        name (str): Name used in configs ('optional_loss=<name>')
        hook (LossHookF): Returns the loss value and its gradient w.r.t. the global map
    """
    _LOSS_HOOKS[name] = hook

def get_loss_hook(name: Optional[str]) -> Optional[LossHookF]:
    if not name:
        return None
    hook = _LOSS_HOOKS.get(name)
    if hook is None:
        raise InvalidInput(f"unknown optional loss '{name}' - known: {', '.join(loss_hook_names())}")
    return hook

def loss_hook_names() -> List[str]:
    return sorted(_LOSS_HOOKS.keys())

def _zero_hook(global_map: np.ndarray, saliency_gt: np.ndarray) -> Tuple[float, Gradient]:
    return 0.0, np.zeros_like(global_map, dtype=np.float64)

register_loss_hook('global_bce', bce)
register_loss_hook('zero', _zero_hook)

#### Bicon loss terms

def decouple_loss(bicon: ConnGrid, edges: EdgeMask, saliency_gt: SaliencyMask) -> Tuple[float, Gradient]:
    """BCE between the edge-decoupled map and the saliency ground truth.

    Returns:
        Tuple[float, Gradient]: loss value and its gradient w.r.t. 'bicon'
    """
    gt = as_binary(saliency_gt, "saliency gt")
    e = as_binary(edges, "edge mask")
    check_same_shape(gt, e, "saliency gt and edge mask")
    inconsistent = int(np.count_nonzero((e == 1) & (gt == 0)))
    if inconsistent:
        raise InvalidInput(f"{inconsistent} edge pixel(s) are not salient in the ground truth")
    s = aggregate_decoupled(bicon, e)
    value, grad_s = bce(s, gt)
    return value, aggregate_backward(bicon, e, AggregationMode.DECOUPLED, grad_s)

def connectivity_consistency_loss(
    conn: ConnGrid,
    bicon: ConnGrid,
    conn_gt: ConnGrid,
    weights: Optional[LossWeights] = None,
) -> Tuple[LossValue, Gradient]:
    """w1 * BCE(conn, G_C) + w2 * BCE(bicon, G_C), with the gradient w.r.t. 'conn'.

    'bicon' must be bilateral_vote(conn); the returned LossValue carries the
    unreduced surfaces in 'maps'.
    """
    w = weights or LossWeights()
    c = as_unit_range(conn, "conn map")
    check_grid_shape(c)
    gt = as_binary(conn_gt, "connectivity gt")
    check_same_shape(c, gt, "conn map and connectivity gt")
    conmap, g_conn = bce(c, gt)
    bimap, g_bicon = bce(bicon, gt)
    grad = w.w1 * g_conn + bilateral_vote_backward(c, w.w2 * g_bicon)
    maps = LossMaps(conmap=bce_map(c, gt), bimap=bce_map(bicon, gt))
    return LossValue(conmap=conmap, bimap=bimap, weights=w, maps=maps), grad

def bicon_total_loss(
    conn: ConnGrid,
    conn_gt: ConnGrid,
    saliency_gt: SaliencyMask,
    weights: Optional[LossWeights] = None,
    optional_hook: Optional[LossHookF] = None,
    *,
    decouple: bool = True,
) -> Tuple[LossValue, Gradient]:
    """L_decouple + L_con_const + L_opt and its gradient w.r.t. the Conn map.

    Args:
        conn (ConnGrid): Conn map (H, W, 8) predicted by the model
        conn_gt (ConnGrid): binary connectivity mask of the ground truth
        saliency_gt (SaliencyMask): binary saliency mask (H, W)
        weights (LossWeights, optional): consistency weights [w1=0.8, w2=0.2]
        optional_hook (LossHookF, optional): extra term on the global map
        decouple (bool, optional): include L_decouple [True]

    Raises:
        NumericalFailure: if the loss or its gradient is not finite
    """
    w = weights or LossWeights()
    c = as_unit_range(conn, "conn map")
    check_grid_shape(c)
    gt_c = as_binary(conn_gt, "connectivity gt")
    check_same_shape(c, gt_c, "conn map and connectivity gt")
    gt_s = as_binary(saliency_gt, "saliency gt")
    if gt_s.shape != c.shape[:2]:
        raise InvalidInput(f"saliency gt shape {gt_s.shape} does not match conn map {c.shape[:2]}")

    bicon = bilateral_vote(c)
    conmap, grad_conn = bce(c, gt_c)
    grad_conn = w.w1 * grad_conn
    bimap, grad_bicon = bce(bicon, gt_c)
    grad_bicon = w.w2 * grad_bicon

    value = LossValue(conmap=conmap, bimap=bimap, weights=w)
    if decouple:
        value.decouple, g = decouple_loss(bicon, extract_edge_mask(gt_c), gt_s)
        grad_bicon += g
    if optional_hook is not None:
        optional, g = optional_hook(aggregate_global(bicon), gt_s)
        value.optional = float(optional)
        grad_bicon += aggregate_backward(bicon, None, AggregationMode.GLOBAL, g)
    grad_conn += bilateral_vote_backward(c, grad_bicon)

    if not (np.isfinite(value.total) and np.all(np.isfinite(grad_conn))):
        logger.error("bicon_total_loss: non-finite result %s", value.terms())
        raise NumericalFailure(f"non-finite loss {value.terms()}")
    return value, grad_conn

def saliency_loss(pred: SaliencyMap, saliency_gt: SaliencyMask) -> Tuple[LossValue, Gradient]:
    """BCE on a single-channel saliency map, used by the saliency-head baseline"""
    value, grad = bce(pred, saliency_gt)
    if not np.isfinite(value):
        raise NumericalFailure(f"non-finite saliency loss {value}")
    return LossValue(saliency=value), grad
