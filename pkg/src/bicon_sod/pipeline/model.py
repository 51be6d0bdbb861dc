#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
A minimal convolutional model with hand-written backward pass.

    image -> [conv3x3 -> tanh] x 3 -> conv1x1 -> logistic

The connectivity variant ends in 8 output channels, the saliency baseline in
one; everything before the 1x1 head is identical.
"""
from collections import OrderedDict
from typing import Any, Dict, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..codec import mirror_pad
from ..itypes import ConnGrid, InvalidInput, SaliencyMap, Variant, VariantMismatch
from ..ops import aggregate_global, bilateral_vote

Params = Dict[str, np.ndarray]

def logistic(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))

def _mirror_pad_backward(gp: np.ndarray) -> np.ndarray:
    # fold the padded border back onto the pixels it was copied from
    rows = gp[:, 1:-1].copy()
    rows[:, 0] += gp[:, 0]
    rows[:, -1] += gp[:, -1]
    g = rows[:, :, 1:-1].copy()
    g[:, :, 0] += rows[:, :, 0]
    g[:, :, -1] += rows[:, :, -1]
    return g

def conv3x3(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Mirror-padded 3x3 convolution of x (B, H, W, C) with w (C*9, C_out)"""
    bsz, h, wd, c = x.shape
    xp = mirror_pad(x, axes=(1, 2))
    cols = sliding_window_view(xp, (3, 3), axis=(1, 2)).reshape(bsz * h * wd, c * 9)
    out = cols @ w + b
    return out.reshape(bsz, h, wd, -1), cols

def conv3x3_backward(
    cols: np.ndarray, x_shape: Tuple[int, ...], w: np.ndarray, g: np.ndarray, need_input: bool = True,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    bsz, h, wd, c = x_shape
    g2 = g.reshape(-1, g.shape[-1])
    dw = cols.T @ g2
    db = g2.sum(axis=0)
    if not need_input:
        return dw, db, None
    dcols = (g2 @ w.T).reshape(bsz, h, wd, c, 3, 3)
    dxp = np.zeros((bsz, h + 2, wd + 2, c))
    for ky in range(3):
        for kx in range(3):
            dxp[:, ky:ky + h, kx:kx + wd, :] += dcols[..., ky, kx]
    return dw, db, _mirror_pad_backward(dxp)

class ToyModel:
    """Three tanh conv layers and a logistic 1x1 head.

    Args:
        variant (Variant): CONNECTIVITY (8 output channels) or SALIENCY (1)
        hidden (int): width of the hidden layers [16]
        seed (int): seed of the uniform(-k, k), k = 1/sqrt(fan_in), initialisation
    """
    N_CONV = 3

    def __init__(self, variant: Variant = Variant.CONNECTIVITY, hidden: int = 16, seed: int = 0):
        self.variant = variant
        self.hidden = hidden
        self.out_channels = 8 if variant == Variant.CONNECTIVITY else 1
        rng = np.random.default_rng(seed)
        widths = [1] + [hidden] * self.N_CONV
        self.params: Params = OrderedDict()
        for i in range(self.N_CONV):
            fan_in = widths[i] * 9
            k = 1.0 / np.sqrt(fan_in)
            self.params[f"conv{i + 1}.w"] = rng.uniform(-k, k, size=(fan_in, widths[i + 1]))
            self.params[f"conv{i + 1}.b"] = rng.uniform(-k, k, size=(widths[i + 1],))
        # zero head: training starts from 0.5 everywhere
        self.params["head.w"] = np.zeros((hidden, self.out_channels))
        self.params["head.b"] = np.zeros((self.out_channels,))

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> "ToyModel":
        other = ToyModel.__new__(ToyModel)
        other.variant = self.variant
        other.hidden = self.hidden
        other.out_channels = self.out_channels
        other.params = OrderedDict((k, v.copy()) for k, v in self.params.items())
        return other

    def load_params(self, params: Params) -> None:
        for k, v in self.params.items():
            if k not in params or params[k].shape != v.shape:
                raise InvalidInput(f"parameter '{k}' missing or shaped differently")
            self.params[k] = np.array(params[k], dtype=np.float64)

    def forward(self, images: np.ndarray) -> Tuple[np.ndarray, Dict[str, Any]]:
        """images (B, H, W) in [0, 1] -> outputs (B, H, W, out_channels) in (0, 1) plus a backward cache"""
        x = np.asarray(images, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] < 1 or x.shape[2] < 1:
            raise InvalidInput(f"expected images shaped (B, H, W), got {x.shape}")
        a = x[..., None]
        cache: Dict[str, Any] = {}
        for i in range(1, self.N_CONV + 1):
            cache[f"x{i}.shape"] = a.shape
            z, cache[f"cols{i}"] = conv3x3(a, self.params[f"conv{i}.w"], self.params[f"conv{i}.b"])
            a = np.tanh(z)
            cache[f"a{i}"] = a
        out = logistic(a @ self.params["head.w"] + self.params["head.b"])
        cache["out"] = out
        return out, cache

    def backward(self, cache: Dict[str, Any], grad_out: np.ndarray) -> Params:
        """Parameter gradients of <grad_out, forward(images)>"""
        grads: Params = OrderedDict()
        out = cache["out"]
        d_logits = grad_out * out * (1.0 - out)
        a = cache[f"a{self.N_CONV}"]
        grads["head.w"] = a.reshape(-1, self.hidden).T @ d_logits.reshape(-1, self.out_channels)
        grads["head.b"] = d_logits.reshape(-1, self.out_channels).sum(axis=0)
        d_a = d_logits @ self.params["head.w"].T
        for i in range(self.N_CONV, 0, -1):
            a = cache[f"a{i}"]
            d_z = d_a * (1.0 - a * a)
            dw, db, d_a = conv3x3_backward(cache[f"cols{i}"], cache[f"x{i}.shape"],
                                           self.params[f"conv{i}.w"], d_z, need_input=i > 1)
            grads[f"conv{i}.w"] = dw
            grads[f"conv{i}.b"] = db
        return OrderedDict((k, grads[k]) for k in self.params)

    def predict(self, image: np.ndarray) -> np.ndarray:
        """(H, W) image -> (H, W, 8) Conn map, or (H, W) saliency map for the baseline"""
        out, _ = self.forward(np.asarray(image)[None])
        return out[0] if self.variant == Variant.CONNECTIVITY else out[0, :, :, 0]

    def __repr__(self):
        return f"<ToyModel variant={self.variant.value} hidden={self.hidden} params={self.parameter_count()}>"

def infer(model: ToyModel, image: np.ndarray, use_bv: bool = True) -> SaliencyMap:
    """Conn map -> bilateral voting -> channel mean; use_bv=False skips the voting"""
    if model.variant != Variant.CONNECTIVITY:
        raise VariantMismatch(Variant.CONNECTIVITY, model.variant)
    conn: ConnGrid = model.predict(image)
    return aggregate_global(bilateral_vote(conn) if use_bv else conn)

def saliency_map(model: ToyModel, image: np.ndarray, use_bv: bool = True) -> SaliencyMap:
    if model.variant == Variant.SALIENCY:
        return model.predict(image)
    return infer(model, image, use_bv)
