"""Point-cloud CSV ingestion."""
from __future__ import annotations

import csv

import numpy as np

from ..errors import InputError
from ..samplers import PointCloud


def ingest_pointcloud_csv(path, header: bool = False, delimiter: str = ",") -> PointCloud:
    """Read a rectangular numeric CSV, one point per row."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, row in enumerate(reader, 1):
            if header and lineno == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric cell in {row!r}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise InputError(f"{path}:{lineno}: expected {width} columns, found {len(vals)}")
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    pts = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(pts)):
        bad = int(np.nonzero(~np.all(np.isfinite(pts), axis=1))[0][0])
        raise InputError(f"{path}: non-finite value in data row {bad + 1}")
    return PointCloud(pts, "external", 0, None, {"path": str(path)})
