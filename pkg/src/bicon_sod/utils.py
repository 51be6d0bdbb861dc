#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
import hashlib
import json
from typing import Any, Dict

import numpy as np

from .itypes import InvalidInput, ShapeMismatch

def as_binary(a: Any, what: str = "mask") -> np.ndarray:
    """Return 'a' as a uint8 array of {0, 1}, rejecting anything else"""
    arr = np.asarray(a)
    if arr.size == 0:
        raise InvalidInput(f"{what} is empty")
    bad = np.count_nonzero((arr != 0) & (arr != 1))
    if bad:
        raise InvalidInput(f"{what} is not binary: {bad} value(s) outside {{0, 1}}")
    return arr.astype(np.uint8)

def as_unit_range(a: Any, what: str = "input") -> np.ndarray:
    """Return 'a' as a float64 array, rejecting NaN/Inf and values outside [0, 1]"""
    arr = np.asarray(a, dtype=np.float64)
    if arr.size == 0:
        raise InvalidInput(f"{what} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{what} contains non-finite values")
    bad = np.count_nonzero((arr < 0.0) | (arr > 1.0))
    if bad:
        raise InvalidInput(f"{what} has {bad} value(s) outside [0, 1]")
    return arr

def check_grid_shape(arr: np.ndarray, what: str = "connectivity grid") -> None:
    if arr.ndim != 3 or arr.shape[2] != 8:
        raise InvalidInput(f"{what} must be shaped (H, W, 8), got {arr.shape}")

def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(a.shape, b.shape, what=what)

def json_digest(d: Dict[str, Any]) -> str:
    """sha256 over the canonical (sorted keys) json form of 'd'"""
    js = json.dumps(d, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(js.encode('utf-8')).hexdigest()
