#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

# type
SaliencyMask = np.ndarray   # (H, W) of {0, 1}
SaliencyMap = np.ndarray    # (H, W) in [0, 1]
ConnGrid = np.ndarray       # (H, W, 8) in [0, 1]
EdgeMask = np.ndarray       # (H, W) of {0, 1}
Gradient = np.ndarray       # same shape as the value it differentiates
FilePath = str

# optional loss term: (global map, saliency gt) -> (value, d value / d global map)
LossHookF = Callable[[np.ndarray, np.ndarray], Tuple[float, np.ndarray]]

class GridKind(Enum):
    BINARY_MASK = 'binary'
    CONN_MAP = 'conn'
    BICON_MAP = 'bicon'

class AggregationMode(Enum):
    GLOBAL = 'global'
    DECOUPLED = 'decoupled'

class Variant(Enum):
    CONNECTIVITY = 'connectivity'
    SALIENCY = 'saliency'

class BiconError(Exception):
    pass

class InvalidInput(BiconError, ValueError):
    message: str

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

class ShapeMismatch(InvalidInput):
    shapes: Tuple[Tuple[int, ...], ...]

    def __init__(self, *shapes: Sequence[int], what: str = "inputs"):
        self.shapes = tuple(tuple(s) for s in shapes)
        super().__init__(f"shape mismatch between {what}: {' vs '.join(str(s) for s in self.shapes)}")

class MalformedFile(BiconError):
    path: str
    offset: int
    reason: str

    def __init__(self, path: str, offset: int, reason: str):
        super().__init__(f"{path}: malformed at byte offset {offset}: {reason}")
        self.path = path
        self.offset = offset
        self.reason = reason

class NumericalFailure(BiconError):
    pass

class VariantMismatch(BiconError):
    expected: Variant
    actual: Variant

    def __init__(self, expected: Variant, actual: Variant):
        super().__init__(f"operation needs a '{expected.value}' model, got '{actual.value}'")
        self.expected = expected
        self.actual = actual

class CheckpointMismatch(BiconError):
    pass

class UnpairedFiles(BiconError):
    names: Sequence[str]

    def __init__(self, names: Sequence[str]):
        super().__init__(f"unpaired files: {', '.join(names)}")
        self.names = list(names)

class UsageError(BiconError):
    pass

class ConfigError(UsageError):
    line: Optional[int]

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
