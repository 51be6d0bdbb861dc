#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
from .local_io_adapter import LocalIOAdapter
from .formats import decode_conn, decode_pgm, encode_conn, encode_pgm
from .formats import map_to_pixels, mask_to_pixels, pixels_to_map, pixels_to_mask
from .report import render_report
