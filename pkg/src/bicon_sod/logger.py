#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#

import logging as _logging
import os
import sys

# format
DEF_LEVEL = os.getenv('BICON_LOG_LEVEL', 'INFO').upper()
_format = '%(levelname)s %(asctime)s %(name)s %(message)s'
_datefmt = '%Y-%m-%dT%H:%M:%S%z'

_formatter = _logging.Formatter(_format, _datefmt)
_console = _logging.StreamHandler(sys.stdout)
_console.setFormatter(_formatter)
_console.setLevel(_logging.DEBUG)

# training and evaluation progress
logger = _logging.getLogger("pipeline")
logger.setLevel(DEF_LEVEL)
logger.addHandler(_console)
logger.propagate = False

# library internals and file IO
sys_logger = _logging.getLogger("bicon")
sys_logger.setLevel(DEF_LEVEL)
sys_logger.addHandler(_console)
sys_logger.propagate = False

def set_level(level: str) -> None:
    """Set the level of both loggers, e.g. from the '--log-level' flag"""
    level = level.upper()
    logger.setLevel(level)
    sys_logger.setLevel(level)
