#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
import csv
import io
from numbers import Integral, Real
from typing import Any, Mapping, Sequence

def format_value(v: Any) -> str:
    if isinstance(v, (bool, Integral)) or not isinstance(v, Real):
        return str(v)
    return f"{float(v):.6f}"

def render_report(columns: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> str:
    """CSV text with a fixed header row and 6-decimal floats"""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row[c]) for c in columns])
    return buf.getvalue()
