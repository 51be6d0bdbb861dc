#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
Central finite differences for checking the hand-written vector-Jacobian
products of the ops, the loss terms and the toy model.
"""
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .logger import sys_logger as logger

DEF_STEP = 1e-5

def numerical_gradient(
    func: Callable[[np.ndarray], float],
    x: np.ndarray,
    step: float = DEF_STEP,
    indices: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Central-difference gradient of the scalar function 'func' at 'x'.

    Args:
        func (Callable[[np.ndarray], float]): scalar function of one array
        x (np.ndarray): evaluation point, not modified
        step (float, optional): finite-difference step [1e-5]
        indices (Sequence[int], optional): flat indices to differentiate; others stay 0

    Returns:
        np.ndarray: gradient estimate shaped like 'x'
    """
    x = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    flat = range(x.size) if indices is None else indices
    for i in flat:
        orig = x.flat[i]
        x.flat[i] = orig + step
        f_plus = func(x)
        x.flat[i] = orig - step
        f_minus = func(x)
        x.flat[i] = orig
        grad.flat[i] = (f_plus - f_minus) / (2.0 * step)
    return grad

def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a||, ||n||), 0 when both vanish"""
    a = np.ravel(analytic)
    n = np.ravel(numeric)
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)

def projection(shape: Tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """Random direction used to turn a tensor-valued op into a scalar one"""
    return rng.standard_normal(shape)

def check_vjp(
    forward: Callable[[np.ndarray], np.ndarray],
    backward: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x: np.ndarray,
    rng: np.random.Generator,
    step: float = DEF_STEP,
) -> float:
    """Relative error between backward(x, r) and the finite-difference gradient of <r, forward(x)>"""
    r = projection(np.shape(forward(x)), rng)
    analytic = backward(x, r)
    numeric = numerical_gradient(lambda z: float(np.sum(r * forward(z))), x, step)
    err = relative_error(analytic, numeric)
    logger.debug("check_vjp: relative error %.3e", err)
    return err
