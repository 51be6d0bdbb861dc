#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
LocalIOAdapter reads and writes the artifacts of the command line tools
(PGM images, CONN grids, CSV reports, checkpoints) on a standard filesystem.
"""
import json
import os
from os import R_OK, access
from os.path import isfile
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np
from filelock import FileLock

from ..itypes import MalformedFile
from ..logger import sys_logger as logger
from .formats import decode_conn, decode_pgm, encode_conn, encode_pgm
from .formats import map_to_pixels, mask_to_pixels, pixels_to_map, pixels_to_mask
from .report import render_report

_META_KEY = '__meta__'

class LocalIOAdapter:
    """
    An adapter for a standard file system backend.

    Relative names are resolved against 'in_dir' when reading and 'out_dir'
    when writing; absolute paths and 'file://' urls are used as they are.
    """

    def __init__(self, in_dir: str, out_dir: str) -> None:
        self.in_dir = os.path.abspath(in_dir)
        self.out_dir = os.path.abspath(out_dir)

    def _to_path(self, prefix: str, name: str) -> str:
        if name.startswith("file://"):
            path = name[len("file://"):]
        elif os.path.isabs(name):
            path = name
        else:
            path = os.path.join(prefix, name)
        return path

    def input_path(self, name: str) -> str:
        return self._to_path(self.in_dir, name)

    def output_path(self, name: str) -> str:
        return self._to_path(self.out_dir, name)

    def readable_local(self, name: str) -> bool:
        path = self.input_path(name)
        return isfile(path) and access(path, R_OK)

    def read_bytes(self, name: str) -> Tuple[bytes, str]:
        path = self.input_path(name)
        try:
            with open(path, "rb") as f:
                return f.read(), path
        except OSError as err:
            raise MalformedFile(path, 0, f"cannot read file: {err.strerror}")

    def write_bytes(self, name: str, data: bytes) -> str:
        path = self.output_path(name)
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            f.write(data)
        logger.info("Written artifact '%s' to '%s'", name, path)
        return path

    #### images

    def read_pgm(self, name: str) -> np.ndarray:
        data, path = self.read_bytes(name)
        return decode_pgm(data, path)

    def read_mask(self, name: str) -> np.ndarray:
        data, path = self.read_bytes(name)
        return pixels_to_mask(decode_pgm(data, path), path)

    def read_map(self, name: str) -> np.ndarray:
        return pixels_to_map(self.read_pgm(name))

    def write_mask(self, name: str, mask: np.ndarray) -> str:
        return self.write_bytes(name, encode_pgm(mask_to_pixels(mask)))

    def write_map(self, name: str, values: np.ndarray) -> str:
        return self.write_bytes(name, encode_pgm(map_to_pixels(values)))

    #### connectivity grids

    def read_conn(self, name: str) -> np.ndarray:
        data, path = self.read_bytes(name)
        return decode_conn(data, path)

    def write_conn(self, name: str, grid: np.ndarray) -> str:
        return self.write_bytes(name, encode_conn(grid))

    #### reports

    def write_report(self, name: str, columns: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> str:
        return self.write_bytes(name, render_report(columns, rows).encode('utf-8'))

    def list_images(self, dir_name: str) -> List[str]:
        """Sorted names of the '.pgm' files in an input directory"""
        path = Path(self.input_path(dir_name))
        if not path.is_dir():
            raise MalformedFile(str(path), 0, "not a directory")
        return sorted(p.name for p in path.glob("*.pgm") if p.is_file())

    #### checkpoints

    def save_checkpoint(self, name: str, arrays: Mapping[str, np.ndarray], meta: Dict[str, Any]) -> str:
        path = self.output_path(name)
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        payload = dict(arrays)
        payload[_META_KEY] = np.array(json.dumps(meta, sort_keys=True))
        with FileLock(f"{path}.lock"):
            with open(path, "wb") as f:
                np.savez(f, **payload)
        logger.info("Written artifact '%s' to '%s'", name, path)
        return path

    def load_checkpoint(self, name: str) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
        path = self.input_path(name)
        try:
            with np.load(path, allow_pickle=False) as z:
                arrays = {k: z[k] for k in z.files if k != _META_KEY}
                meta = json.loads(str(z[_META_KEY])) if _META_KEY in z.files else None
        except (OSError, ValueError) as err:
            raise MalformedFile(path, 0, f"cannot read checkpoint: {err}")
        if meta is None:
            raise MalformedFile(path, 0, "checkpoint has no metadata record")
        return arrays, meta

    def __repr__(self):
        return f"<LocalIOAdapter in_dir={self.in_dir} out_dir={self.out_dir}>"
