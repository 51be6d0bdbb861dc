#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..cio import LocalIOAdapter
from ..codec import encode_connectivity
from ..config import TrainConfig, config_hash
from ..gradcheck import relative_error
from ..itypes import CheckpointMismatch, MalformedFile, NumericalFailure, Variant
from ..logger import logger
from ..loss import LossValue, bicon_total_loss, get_loss_hook, saliency_loss
from ..metrics import MetricReport, evaluate_corpus
from .dataset import SyntheticSample, stack
from .model import Params, ToyModel, saliency_map

GRADIENT_CHECK_PARAMS = 50
GRADIENT_CHECK_TOLERANCE = 1e-3
GRADIENT_CHECK_CROP = 12

@dataclass
class TrainHistory:
    step_losses: List[float] = field(default_factory=list)
    epoch_losses: List[float] = field(default_factory=list)

class Trainer:
    """Trains a ToyModel with SGD + momentum under the loss selected by 'config'.

    Every run is a pure function of the config: initialisation, dataset and
    the shuffling of epoch 'e' are all derived from 'config.seed'.
    """

    def __init__(self, config: TrainConfig, model: Optional[ToyModel] = None):
        self.config = config
        self.model = model or ToyModel(config.variant, config.hidden, seed=config.seed)
        self.velocity: Params = OrderedDict((k, np.zeros_like(v)) for k, v in self.model.params.items())
        self.epoch = 0
        self.history = TrainHistory()
        self._hook = get_loss_hook(config.optional_loss)

    def reconfigure(self, **changes) -> TrainConfig:
        """Change training settings of a (restored) trainer; the model shape is fixed"""
        config = self.config.replace(**changes)
        if config.variant != self.model.variant or config.hidden != self.model.hidden:
            raise CheckpointMismatch(
                f"cannot change model shape from {self.config.variant.value}/{self.config.hidden} "
                f"to {config.variant.value}/{config.hidden}")
        self._hook = get_loss_hook(config.optional_loss)
        self.config = config
        return config

    #### loss

    def sample_loss(self, out: np.ndarray, mask: np.ndarray) -> Tuple[LossValue, np.ndarray]:
        """Loss of one model output (H, W, C) and its gradient w.r.t. that output"""
        cfg = self.config
        if self.model.variant == Variant.SALIENCY:
            value, grad = saliency_loss(out[:, :, 0], mask)
            return value, grad[:, :, None]
        return bicon_total_loss(out, encode_connectivity(mask), mask, cfg.weights,
                                self._hook, decouple=cfg.use_decouple)

    def loss_and_grads(self, model: ToyModel, images: np.ndarray, masks: np.ndarray) -> Tuple[LossValue, Params]:
        out, cache = model.forward(images)
        grad_out = np.empty_like(out)
        values = []
        n = out.shape[0]
        for i in range(n):
            v, g = self.sample_loss(out[i], masks[i])
            values.append(v)
            grad_out[i] = g / n
        return LossValue.mean(values), model.backward(cache, grad_out)

    #### optimisation

    def step(self, images: np.ndarray, masks: np.ndarray) -> LossValue:
        """One SGD-with-momentum update on a batch; returns the batch-mean loss"""
        value, grads = self.loss_and_grads(self.model, images, masks)
        bad = [k for k, g in grads.items() if not np.all(np.isfinite(g))]
        if not np.isfinite(value.total) or bad:
            logger.error("Trainer#step: non-finite loss %s or gradients in %s", value.terms(), bad)
            raise NumericalFailure(f"non-finite training step: loss={value.total}, gradients={bad}")
        lr = self.config.learning_rate
        mu = self.config.momentum
        for k, g in grads.items():
            v = self.velocity[k]
            v *= mu
            v += g
            self.model.params[k] -= lr * v
        self.history.step_losses.append(value.total)
        return value

    def fit(self, train: Sequence[SyntheticSample],
            on_epoch: Optional[Callable[[int, float], None]] = None) -> TrainHistory:
        """Train until 'config.epochs'; a restored trainer continues where it stopped"""
        cfg = self.config
        if cfg.gradient_check and self.epoch == 0:
            self.verify_gradients(train[0])
        images, masks = stack(train)
        n = len(train)
        while self.epoch < cfg.epochs:
            order = np.random.default_rng([cfg.seed, 1, self.epoch]).permutation(n)
            totals = []
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                totals.append(self.step(images[idx], masks[idx]).total)
            epoch_loss = float(np.mean(totals))
            self.history.epoch_losses.append(epoch_loss)
            self.epoch += 1
            logger.info("epoch %d/%d loss %.6f", self.epoch, cfg.epochs, epoch_loss)
            if on_epoch:
                on_epoch(self.epoch, epoch_loss)
        return self.history

    def verify_gradients(self, sample: SyntheticSample, n_params: int = GRADIENT_CHECK_PARAMS,
                         tolerance: float = GRADIENT_CHECK_TOLERANCE, step: float = 1e-5) -> float:
        """Compare backprop with central differences on a random parameter subset.

        Runs on a crop of 'sample' and on a copy of the model whose head is
        re-randomised, so outputs are not all 0.5 and channel minima don't tie.

        Raises:
            NumericalFailure: if the relative error exceeds 'tolerance'
        """
        rng = np.random.default_rng([self.config.seed, 2])
        probe = self.model.copy()
        k = 1.0 / np.sqrt(probe.hidden)
        probe.params["head.w"] = rng.uniform(-k, k, size=probe.params["head.w"].shape)
        probe.params["head.b"] = rng.uniform(-k, k, size=probe.params["head.b"].shape)
        images = sample.image[None, :GRADIENT_CHECK_CROP, :GRADIENT_CHECK_CROP]
        masks = sample.mask[None, :GRADIENT_CHECK_CROP, :GRADIENT_CHECK_CROP]

        _, grads = self.loss_and_grads(probe, images, masks)
        slots = [(name, i) for name, p in probe.params.items() for i in range(p.size)]
        chosen = rng.choice(len(slots), size=min(n_params, len(slots)), replace=False)
        analytic = np.empty(len(chosen))
        numeric = np.empty(len(chosen))
        for j, s in enumerate(chosen):
            name, i = slots[s]
            p = probe.params[name]
            orig = p.flat[i]
            p.flat[i] = orig + step
            f_plus = self.loss_and_grads(probe, images, masks)[0].total
            p.flat[i] = orig - step
            f_minus = self.loss_and_grads(probe, images, masks)[0].total
            p.flat[i] = orig
            numeric[j] = (f_plus - f_minus) / (2.0 * step)
            analytic[j] = grads[name].flat[i]
        err = relative_error(analytic, numeric)
        if not err <= tolerance:
            logger.error("Trainer#verify_gradients: relative error %.3e exceeds %.1e", err, tolerance)
            raise NumericalFailure(f"model gradient check failed: relative error {err:.3e} > {tolerance:.1e}")
        logger.info("gradient check passed on %d parameters, relative error %.3e", len(chosen), err)
        return err

    #### evaluation

    def evaluate(self, samples: Sequence[SyntheticSample], use_bv: Optional[bool] = None) -> MetricReport:
        bv = self.config.infer_bv if use_bv is None else use_bv
        return evaluate_corpus([(saliency_map(self.model, s.image, bv), s.mask) for s in samples])

    #### checkpoints

    def save(self, io: LocalIOAdapter, name: str) -> str:
        arrays = {}
        for k, v in self.model.params.items():
            arrays[f"p.{k}"] = v
            arrays[f"v.{k}"] = self.velocity[k]
        arrays["h.step_losses"] = np.asarray(self.history.step_losses, dtype=np.float64)
        arrays["h.epoch_losses"] = np.asarray(self.history.epoch_losses, dtype=np.float64)
        meta = dict(config=self.config.to_dict(), config_hash=config_hash(self.config), epoch=self.epoch)
        return io.save_checkpoint(name, arrays, meta)

    @classmethod
    def load(cls, io: LocalIOAdapter, name: str, config: Optional[TrainConfig] = None) -> "Trainer":
        """Restore a trainer; if 'config' is given its hash must match the checkpoint's"""
        arrays, meta = io.load_checkpoint(name)
        try:
            stored = TrainConfig.from_dict(meta["config"])
            stored_hash = meta["config_hash"]
            epoch = int(meta["epoch"])
        except (KeyError, TypeError, ValueError) as err:
            raise MalformedFile(io.input_path(name), 0, f"bad checkpoint metadata: {err}")
        if config_hash(stored) != stored_hash:
            raise CheckpointMismatch(f"checkpoint '{name}' config does not match its recorded hash")
        if config is not None and config_hash(config) != stored_hash:
            raise CheckpointMismatch(
                f"config hash {config_hash(config)[:12]} does not match checkpoint '{name}' ({stored_hash[:12]})")
        trainer = cls(stored)
        trainer.model.load_params({k[2:]: v for k, v in arrays.items() if k.startswith("p.")})
        for k in trainer.velocity:
            if f"v.{k}" in arrays:
                trainer.velocity[k] = np.array(arrays[f"v.{k}"], dtype=np.float64)
        trainer.history = TrainHistory(
            step_losses=[float(x) for x in arrays.get("h.step_losses", [])],
            epoch_losses=[float(x) for x in arrays.get("h.epoch_losses", [])],
        )
        trainer.epoch = epoch
        return trainer
