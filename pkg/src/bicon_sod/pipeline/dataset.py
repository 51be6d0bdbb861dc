#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
Seeded synthetic saliency dataset: 1-3 hard-edged rectangles or ellipses,
brighter than a noisy background. Sample 'i' of a dataset with seed 's' only
depends on (s, i).
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..itypes import BiconError, InvalidInput

MIN_AREA = 0.05
MAX_AREA = 0.6
NOISE = 0.1
MIN_CONTRAST = 0.3
MAX_CONTRAST = 0.5
MAX_ATTEMPTS = 1000

@dataclass(frozen=True)
class Shape:
    kind: str   # 'rect' or 'ellipse'
    cy: float
    cx: float
    ry: float   # half height
    rx: float   # half width

    def rasterize(self, size: int) -> np.ndarray:
        yy, xx = np.mgrid[0:size, 0:size]
        if self.kind == 'rect':
            return (np.abs(yy - self.cy) <= self.ry) & (np.abs(xx - self.cx) <= self.rx)
        return ((yy - self.cy) / self.ry) ** 2 + ((xx - self.cx) / self.rx) ** 2 <= 1.0

@dataclass(frozen=True)
class SyntheticSample:
    image: np.ndarray       # (H, W) float64 in [0, 1]
    mask: np.ndarray        # (H, W) uint8 in {0, 1}
    shapes: Tuple[Shape, ...]
    seed: int
    sample_id: int

    @property
    def name(self) -> str:
        return f"s{self.seed}-{self.sample_id:05d}"

def _random_shape(rng: np.random.Generator, size: int) -> Shape:
    kind = 'rect' if rng.integers(2) == 0 else 'ellipse'
    ry = rng.uniform(size / 12.0, size / 4.0)
    rx = rng.uniform(size / 12.0, size / 4.0)
    cy = rng.uniform(ry, size - 1 - ry)
    cx = rng.uniform(rx, size - 1 - rx)
    return Shape(kind, float(cy), float(cx), float(ry), float(rx))

def make_sample(seed: int, sample_id: int, size: int = 64) -> SyntheticSample:
    """Draw sample 'sample_id' of the dataset with 'seed', retrying until the
    salient area fraction is within [MIN_AREA, MAX_AREA]"""
    if size < 3:
        raise InvalidInput(f"image size must be at least 3, got {size}")
    rng = np.random.default_rng([seed, sample_id])
    for _ in range(MAX_ATTEMPTS):
        shapes = tuple(_random_shape(rng, size) for _ in range(int(rng.integers(1, 4))))
        mask = np.zeros((size, size), dtype=bool)
        for s in shapes:
            mask |= s.rasterize(size)
        if MIN_AREA <= mask.mean() <= MAX_AREA:
            break
    else:
        raise BiconError(f"no sample within the area bounds after {MAX_ATTEMPTS} attempts (seed={seed}, id={sample_id})")

    background = rng.uniform(0.1, 0.35)
    contrast = rng.uniform(MIN_CONTRAST, MAX_CONTRAST)
    image = np.where(mask, background + contrast, background)
    image = np.clip(image + rng.uniform(-NOISE, NOISE, size=image.shape), 0.0, 1.0)
    return SyntheticSample(image=image, mask=mask.astype(np.uint8), shapes=shapes,
                           seed=seed, sample_id=sample_id)

def generate_dataset(seed: int, n_train: int, n_test: int, size: int = 64) -> Tuple[List[SyntheticSample], List[SyntheticSample]]:
    """Training samples use ids [0, n_train), held-out samples the next n_test ids"""
    if n_train < 1 or n_test < 1:
        raise InvalidInput(f"dataset sizes must be positive, got n_train={n_train}, n_test={n_test}")
    train = [make_sample(seed, i, size) for i in range(n_train)]
    test = [make_sample(seed, n_train + i, size) for i in range(n_test)]
    return train, test

def stack(samples: Sequence[SyntheticSample]) -> Tuple[np.ndarray, np.ndarray]:
    return np.stack([s.image for s in samples]), np.stack([s.mask for s in samples])
