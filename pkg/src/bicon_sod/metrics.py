#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
Salient object detection metrics: MAE, adaptive-threshold mean F-measure and
E-measure, plus corpus averaging.
"""
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from pydantic import Field, RootModel
from pydantic.dataclasses import dataclass

from .itypes import InvalidInput, SaliencyMap, SaliencyMask
from .utils import as_binary, as_unit_range, check_same_shape

BETA2 = 0.3
EPS_DIV = 1e-8

@dataclass(frozen=True)
class MetricReport:
    mae: float = Field(ge=0.0)
    f_ave: float = Field(ge=0.0, le=1.0)
    e_m: float = Field(ge=0.0, le=1.0)
    n_images: int = Field(default=1, ge=1)

    def to_dict(self) -> Dict[str, Any]:
        return RootModel(self).model_dump(mode='json')

def _inputs(pred, gt) -> Tuple[np.ndarray, np.ndarray]:
    p = as_unit_range(pred, "prediction")
    g = as_binary(gt, "ground truth")
    check_same_shape(p, g, "prediction and ground truth")
    return p, g.astype(bool)

def mae(pred: SaliencyMap, gt: SaliencyMask) -> float:
    p, g = _inputs(pred, gt)
    return float(np.abs(p - g).mean())

def adaptive_threshold(pred: SaliencyMap) -> float:
    return min(2.0 * float(np.mean(pred)), 1.0)

def binarize_adaptive(pred: SaliencyMap) -> np.ndarray:
    """pred >= min(2 mean, 1); zero-valued pixels are never salient"""
    p = np.asarray(pred, dtype=np.float64)
    return (p >= adaptive_threshold(p)) & (p > 0.0)

def precision_recall(binary: np.ndarray, gt: np.ndarray) -> Tuple[float, float]:
    tp = float(np.count_nonzero(binary & gt))
    fp = float(np.count_nonzero(binary & ~gt))
    fn = float(np.count_nonzero(~binary & gt))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return precision, recall

def f_measure_adaptive(pred: SaliencyMap, gt: SaliencyMask) -> float:
    p, g = _inputs(pred, gt)
    b = binarize_adaptive(p)
    if not b.any() or not g.any():
        return 0.0
    precision, recall = precision_recall(b, g)
    denom = BETA2 * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + BETA2) * precision * recall / denom

def e_measure(pred: SaliencyMap, gt: SaliencyMask) -> float:
    """Enhanced-alignment measure of the adaptively binarised prediction"""
    p, g = _inputs(pred, gt)
    b = binarize_adaptive(p).astype(np.float64)
    gf = g.astype(np.float64)
    if not g.any():
        return float(np.mean(1.0 - b))
    if g.all():
        return float(np.mean(b))
    phi_g = gf - gf.mean()
    phi_b = b - b.mean()
    align = 2.0 * phi_g * phi_b / (phi_g * phi_g + phi_b * phi_b + EPS_DIV)
    enhanced = (1.0 + align) ** 2 / 4.0
    return float(enhanced.mean())

def evaluate(pred: SaliencyMap, gt: SaliencyMask) -> MetricReport:
    return MetricReport(mae=mae(pred, gt), f_ave=f_measure_adaptive(pred, gt), e_m=e_measure(pred, gt))

def evaluate_corpus(pairs: Sequence[Tuple[SaliencyMap, SaliencyMask]]) -> MetricReport:
    """Arithmetic mean of the per-image metrics, summed in list order"""
    if not pairs:
        raise InvalidInput("cannot evaluate an empty corpus")
    reports = [evaluate(p, g) for p, g in pairs]
    return average_reports(reports)

def average_reports(reports: Sequence[MetricReport]) -> MetricReport:
    if not reports:
        raise InvalidInput("cannot average an empty list of reports")
    n = len(reports)
    return MetricReport(
        mae=sum(r.mae for r in reports) / n,
        f_ave=min(sum(r.f_ave for r in reports) / n, 1.0),
        e_m=min(sum(r.e_m for r in reports) / n, 1.0),
        n_images=sum(r.n_images for r in reports),
    )
