#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#

# read version from installed package

try:  # Python < 3.10 (backport)
    from importlib_metadata import version
except ImportError:
    from importlib.metadata import version

try:
    __version__ = version("bicon_sod")
except Exception:
    __version__ = "unknown"


from .codec import DIRECTIONS, OPPOSITE, pair_lookup, vote_partner_index, is_pair_consistent, validate_grid
from .codec import encode_connectivity, decode_connectivity, extract_edge_mask, count_isolated
from .ops import bilateral_vote, bilateral_vote_backward
from .ops import aggregate, aggregate_global, aggregate_decoupled, aggregate_backward
from .loss import LossWeights, LossValue, LossMaps, bce, bce_map
from .loss import decouple_loss, connectivity_consistency_loss, bicon_total_loss, saliency_loss
from .loss import register_loss_hook, get_loss_hook, loss_hook_names
from .metrics import MetricReport, mae, f_measure_adaptive, e_measure, evaluate, evaluate_corpus
from .config import TrainConfig, load_train_config, config_hash
from .itypes import AggregationMode, Variant, GridKind
from .itypes import BiconError, InvalidInput, ShapeMismatch, MalformedFile, NumericalFailure
from .itypes import VariantMismatch, CheckpointMismatch, UnpairedFiles, UsageError, ConfigError
