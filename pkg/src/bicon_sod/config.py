#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
import dataclasses
import os
from argparse import ArgumentParser, ArgumentTypeError
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, get_type_hints

from dataclass_wizard import JSONWizard

from .cio import LocalIOAdapter
from .itypes import ConfigError, Variant
from .logger import sys_logger as logger
from .loss import LossWeights, loss_hook_names
from .utils import json_digest

DEF_IN_DIR = '.'
DEF_OUT_DIR = '.'

_TRUE = ('true', '1', 'yes', 'on')
_FALSE = ('false', '0', 'no', 'off')

@dataclass
class TrainConfig(JSONWizard):
    """Settings of a toy training run

    Args:
        epochs (int): Passes over the training set [30]
        batch_size (int): Samples per SGD step [8]
        learning_rate (float): SGD step size [0.05]
        momentum (float): SGD momentum [0.9]
        seed (int): Seed for dataset, initialisation and shuffling [0]
        w1 (float): Weight of the Conn-map consistency term [0.8]
        w2 (float): Weight of the Bicon-map consistency term [0.2]
        variant (Variant): Output head, 8-channel connectivity or 1-channel saliency
        n_train (int): Synthetic training samples [512]
        n_test (int): Synthetic held-out samples [128]
        image_size (int): Side length of the square synthetic images [64]
        use_decouple (bool): Include the edge-decoupled loss [True]
        optional_loss (str): Name of a registered optional loss hook, '' for none
        infer_bv (bool): Use bilateral voting when evaluating [True]
        gradient_check (bool): Run the finite-difference gate before training [True]
        hidden (int): Width of the hidden conv layers [16]
    """
    class _(JSONWizard.Meta):
        key_transform_with_dump = 'SNAKE'

    epochs: int = 30
    batch_size: int = 8
    learning_rate: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    w1: float = 0.8
    w2: float = 0.2
    variant: Variant = Variant.CONNECTIVITY
    n_train: int = 512
    n_test: int = 128
    image_size: int = 64
    use_decouple: bool = True
    optional_loss: str = ''
    infer_bv: bool = True
    gradient_check: bool = True
    hidden: int = 16

    def __post_init__(self):
        if isinstance(self.variant, str):
            self.variant = _coerce('variant', Variant, self.variant)
        for name in ('epochs', 'batch_size', 'n_train', 'n_test', 'image_size', 'hidden'):
            if getattr(self, name) < 1:
                raise ConfigError(f"'{name}' must be positive, got {getattr(self, name)}")
        if self.image_size < 3:
            raise ConfigError(f"'image_size' must be at least 3, got {self.image_size}")
        if self.learning_rate < 0:
            raise ConfigError(f"'learning_rate' must not be negative, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"'momentum' must be in [0, 1), got {self.momentum}")
        for name in ('w1', 'w2'):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"'{name}' must be in [0, 1], got {getattr(self, name)}")
        if self.optional_loss and self.optional_loss not in loss_hook_names():
            raise ConfigError(f"unknown optional loss '{self.optional_loss}' - known: {', '.join(loss_hook_names())}")

    @property
    def weights(self) -> LossWeights:
        return LossWeights(w1=self.w1, w2=self.w2)

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

def config_hash(cfg: TrainConfig) -> str:
    return json_digest(cfg.to_dict())

def _field_types() -> Dict[str, Any]:
    hints = get_type_hints(TrainConfig)
    return {f.name: hints[f.name] for f in dataclasses.fields(TrainConfig)}

def parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ValueError(f"'{value}' is not a boolean")

def _coerce(name: str, ftype: Any, raw: str, line: Optional[int] = None) -> Any:
    try:
        if ftype is bool:
            return parse_bool(raw)
        if ftype is Variant:
            return Variant(raw.strip().lower())
        if ftype is str:
            return raw.strip()
        return ftype(raw.strip())
    except ValueError as err:
        raise ConfigError(f"bad value for '{name}': {err}", line)

def read_config_file(path: str) -> Dict[str, Any]:
    """Parse 'key=value' lines ('#' starts a comment) into typed TrainConfig fields"""
    types = _field_types()
    values: Dict[str, Any] = {}
    try:
        with open(path, 'r') as f:
            lines = f.readlines()
    except OSError as err:
        raise ConfigError(f"cannot read config file '{path}': {err}")
    for lineno, line in enumerate(lines, start=1):
        text = line.split('#', 1)[0].strip()
        if not text:
            continue
        if '=' not in text:
            raise ConfigError(f"expected 'key=value', got '{text}'", lineno)
        key, raw = (s.strip() for s in text.split('=', 1))
        key = key.replace('-', '_')
        if key not in types:
            raise ConfigError(f"unknown key '{key}'", lineno)
        values[key] = _coerce(key, types[key], raw, lineno)
    logger.debug("read_config_file: '%s' sets %s", path, sorted(values))
    return values

def load_train_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> TrainConfig:
    """Defaults, then the config file, then every override that is not None"""
    values: Dict[str, Any] = {}
    if path:
        values.update(read_config_file(path))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    try:
        return TrainConfig(**values)
    except TypeError as err:
        raise ConfigError(str(err))

def append_train_arguments(ap: ArgumentParser) -> ArgumentParser:
    """Add one long flag per TrainConfig field, defaulting to None so unset flags don't override"""
    defaults = TrainConfig()
    for name, ftype in _field_types().items():
        flag = f"--{name.replace('_', '-')}"
        default = getattr(defaults, name)
        if isinstance(default, Variant):
            default = default.value
        args: Dict[str, Any] = dict(dest=name, default=None, help=f"[{default}]")
        if ftype is bool:
            args['type'] = parse_bool
            args['metavar'] = 'BOOL'
        elif ftype is Variant:
            args['choices'] = [v.value for v in Variant]
            args['type'] = str
        else:
            args['type'] = ftype
            args['metavar'] = ftype.__name__.upper()
        ap.add_argument(flag, **args)
    return ap

def train_overrides(args: Dict[str, Any]) -> Dict[str, Any]:
    return {name: args.get(name) for name in _field_types()}

@dataclass(init=False)
class Config:
    """Process-level settings of a CLI invocation"""
    IN_DIR: str
    OUT_DIR: str
    LOG_LEVEL: str
    IO_ADAPTER: LocalIOAdapter

    def __init__(self, args: Dict[str, Any]):
        self.IN_DIR = args.pop('in_dir', None) or os.getenv('BICON_IN_DIR', DEF_IN_DIR)
        self.OUT_DIR = args.pop('out_dir', None) or os.getenv('BICON_OUT_DIR', DEF_OUT_DIR)
        self.LOG_LEVEL = args.pop('log_level', None) or os.getenv('BICON_LOG_LEVEL', 'INFO')
        self.IO_ADAPTER = LocalIOAdapter(in_dir=self.IN_DIR, out_dir=self.OUT_DIR)

    @staticmethod
    def add_arguments(ap: ArgumentParser) -> ArgumentParser:
        in_dir_def = os.getenv('BICON_IN_DIR', DEF_IN_DIR)
        out_dir_def = os.getenv('BICON_OUT_DIR', DEF_OUT_DIR)
        ap.add_argument("--in-dir", metavar="DIR",
            help=f"Directory relative input names are resolved against [BICON_IN_DIR={in_dir_def}]",
            type=verify_dir)
        ap.add_argument("--out-dir", metavar="DIR",
            help=f"Directory relative output names are resolved against [BICON_OUT_DIR={out_dir_def}]",
            type=verify_dir)
        ap.add_argument("--log-level", metavar="LEVEL",
            choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
            help="Logging level [BICON_LOG_LEVEL or INFO]")
        return ap

def verify_file(fname):
    if Path(fname).is_file():
        return fname
    else:
        raise ArgumentTypeError(f"Can't find file '{fname}'")

def verify_dir(dname):
    if Path(dname).is_dir():
        return dname
    else:
        raise ArgumentTypeError(f"Can't find directory '{dname}'")
