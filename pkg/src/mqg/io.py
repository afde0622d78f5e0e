"""Binary field snapshots (MQG1) and the CSV exports.

MQG1 layout, little-endian: b"MQG1", u32 n, f64 domain_length, then n*n f64
samples in row-major order.
"""

from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .grid import GridSpec, ScalarField

MAGIC = b"MQG1"
_HEADER = struct.Struct("<4sId")


class SnapshotFormatError(ValueError):
    pass


def write_snapshot(path, field: ScalarField) -> Path:
    path = Path(path)
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.n, g.domain_length))
        fh.write(np.ascontiguousarray(field.samples, dtype="<f8").tobytes())
    return path


def read_snapshot(path) -> ScalarField:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("file too short for an MQG1 header")
    magic, n, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    expected = _HEADER.size + 8 * n * n
    if len(data) != expected:
        raise SnapshotFormatError(f"expected {expected} bytes for n={n}, got {len(data)}")
    samples = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, n)
    return ScalarField(GridSpec(n, length), samples.astype(float))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def write_field_csv(path, field: ScalarField) -> Path:
    n = field.grid.n
    rows = ((j, k, field.samples[j, k]) for j in range(n) for k in range(n))
    return write_csv(path, ["x_index", "y_index", "value"], rows)


def read_field_csv(path, domain_length: float = 2 * np.pi) -> ScalarField:
    header, rows = read_csv(path)
    if header != ["x_index", "y_index", "value"]:
        raise SnapshotFormatError(f"unexpected CSV header {header}")
    n = math.isqrt(len(rows))
    if n * n != len(rows):
        raise SnapshotFormatError("CSV does not hold a square grid")
    samples = np.full((n, n), np.nan)
    for j, k, v in rows:
        samples[int(j), int(k)] = float(v)
    if np.isnan(samples).any():
        raise SnapshotFormatError("CSV is missing grid points")
    return ScalarField(GridSpec(n, domain_length), samples)


SERIES_HEADER = [
    "t",
    "l2",
    "hdot_half_alpha",
    "hdot_one",
    "hdot_crit",
    "energy_residual",
    "blowup_integral",
]


def write_series(path, records) -> Path:
    return write_csv(path, SERIES_HEADER, (r.row() for r in records))


def write_block_energies(path, table) -> Path:
    return write_csv(path, ["q", "block_l2", "weighted_2sq"], table)


def write_k_estimate(path, estimate) -> Path:
    return write_csv(path, ["T", "K_value"], estimate.rows())


def write_probe(path, report) -> Path:
    return write_csv(path, ["sample_seed", "q", "ratio"], report.rows())
