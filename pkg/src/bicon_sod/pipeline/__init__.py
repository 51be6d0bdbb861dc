#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
from .dataset import Shape, SyntheticSample, generate_dataset, make_sample, stack
from .model import ToyModel, infer, saliency_map
from .trainer import Trainer, TrainHistory
from .ablation import ABLATION_PRESETS, REPORT_COLUMNS, AblationRow
from .ablation import compare_bv, moving_average, preset_config, run_ablation, run_weight_sweep, train_and_evaluate
