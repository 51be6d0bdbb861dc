#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
Ablation and comparison harness. Each experiment is a TrainConfig derived from
a base config, trained with the base seed(s) and scored on the held-out set.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import TrainConfig
from ..itypes import InvalidInput, Variant
from ..logger import logger
from ..metrics import MetricReport, average_reports
from .dataset import SyntheticSample, generate_dataset
from .model import ToyModel
from .trainer import Trainer

REPORT_COLUMNS = ['config', 'mae', 'f_ave', 'e_m', 'final_loss']

# name -> TrainConfig fields overriding the base config
ABLATION_PRESETS: Dict[str, Dict[str, Any]] = {
    'base': dict(variant=Variant.SALIENCY, use_decouple=False, optional_loss=''),
    'conn': dict(variant=Variant.CONNECTIVITY, w1=1.0, w2=0.0, use_decouple=False,
                 optional_loss='', infer_bv=False),
    'conn_bv': dict(variant=Variant.CONNECTIVITY, w1=1.0, w2=0.0, use_decouple=False,
                    optional_loss='global_bce', infer_bv=True),
    'conn_bv_rca': dict(variant=Variant.CONNECTIVITY, w1=1.0, w2=0.0, use_decouple=True,
                        optional_loss='', infer_bv=True),
    'bicon': dict(variant=Variant.CONNECTIVITY, w1=0.8, w2=0.2, use_decouple=True,
                  optional_loss='', infer_bv=True),
}

SWEEP_W2 = tuple(round(0.1 * i, 1) for i in range(10))

@dataclass
class AblationRow:
    config: str
    report: MetricReport
    final_loss: float
    epoch_losses: List[float] = field(default_factory=list)

    def to_row(self) -> Dict[str, Any]:
        return dict(config=self.config, mae=self.report.mae, f_ave=self.report.f_ave,
                    e_m=self.report.e_m, final_loss=self.final_loss)

def preset_config(base: TrainConfig, name: str) -> TrainConfig:
    if name not in ABLATION_PRESETS:
        raise InvalidInput(f"unknown ablation preset '{name}' - known: {', '.join(ABLATION_PRESETS)}")
    return base.replace(**ABLATION_PRESETS[name])

def train_and_evaluate(
    config: TrainConfig,
    data: Optional[Tuple[Sequence[SyntheticSample], Sequence[SyntheticSample]]] = None,
) -> Tuple[Trainer, MetricReport]:
    """Train a fresh model under 'config' and score it on the held-out samples"""
    train, test = data or generate_dataset(config.seed, config.n_train, config.n_test, config.image_size)
    trainer = Trainer(config)
    trainer.fit(train)
    return trainer, trainer.evaluate(test)

def _run_rows(named: Sequence[Tuple[str, TrainConfig]], seeds: Sequence[int]) -> List[AblationRow]:
    datasets: Dict[Tuple[int, int, int, int], Any] = {}
    rows = []
    for name, cfg in named:
        reports = []
        curves = []
        for seed in seeds:
            c = cfg.replace(seed=seed)
            key = (seed, c.n_train, c.n_test, c.image_size)
            if key not in datasets:
                datasets[key] = generate_dataset(*key)
            logger.info("ablation: training '%s' with seed %d", name, seed)
            trainer, report = train_and_evaluate(c, datasets[key])
            reports.append(report)
            curves.append(trainer.history.epoch_losses)
        curve = [float(x) for x in np.mean(np.asarray(curves, dtype=np.float64), axis=0)]
        row = AblationRow(config=name, report=average_reports(reports),
                          final_loss=curve[-1], epoch_losses=curve)
        logger.info("ablation: %s mae=%.6f f_ave=%.6f e_m=%.6f", name, row.report.mae,
                    row.report.f_ave, row.report.e_m)
        rows.append(row)
    return rows

def run_ablation(base: TrainConfig, names: Optional[Sequence[str]] = None,
                 seeds: Optional[Sequence[int]] = None) -> List[AblationRow]:
    """One row per preset (all presets by default), averaged over 'seeds' [base.seed]"""
    names = list(names or ABLATION_PRESETS.keys())
    return _run_rows([(n, preset_config(base, n)) for n in names], seeds or [base.seed])

def run_weight_sweep(base: TrainConfig, seeds: Optional[Sequence[int]] = None) -> List[AblationRow]:
    """Full Bicon loss with w2 in 0.0 .. 0.9 and w1 = 1 - w2"""
    named = []
    for w2 in SWEEP_W2:
        cfg = preset_config(base, 'bicon').replace(w1=round(1.0 - w2, 1), w2=w2)
        named.append((f"w2={w2:.1f}", cfg))
    return _run_rows(named, seeds or [base.seed])

def compare_bv(model: ToyModel, samples: Sequence[SyntheticSample]) -> Tuple[MetricReport, MetricReport]:
    """Held-out metrics of a connectivity model with and without bilateral voting"""
    trainer = Trainer(TrainConfig(variant=model.variant, hidden=model.hidden), model)
    return trainer.evaluate(samples, use_bv=True), trainer.evaluate(samples, use_bv=False)

def moving_average(values: Sequence[float], window: int = 10) -> np.ndarray:
    """Trailing means over full windows; shorter series average as a single window"""
    v = np.asarray(values, dtype=np.float64)
    if window < 1:
        raise InvalidInput(f"window must be positive, got {window}")
    if v.size == 0:
        return v
    if v.size < window:
        return np.array([v.mean()])
    return np.convolve(v, np.ones(window) / window, mode='valid')
