"""Tensor-sequence files and detector configuration files.

Binary layout (all little-endian)::

    b"TCPD" | u16 version | u16 order | order x u32 dims | u64 n | n*p float64

CSV comes in a long layout (``t,idx1,...,idxk,value``, 1-based) or, for
vectors, a wide layout (``t,v1,...,vp``).
"""

from __future__ import annotations

import configparser
import csv
import os
import struct
from dataclasses import fields
from pathlib import Path

import numpy as np

from .detector import DetectorConfig
from .screening import ConfigError
from .tensor import Shape, TensorSeq, unflatten_index

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "CONFIG_ENV",
    "FormatError",
    "write_tcpd",
    "read_tcpd",
    "read_csv",
    "write_csv_wide",
    "write_csv_long",
    "read_sequence",
    "RunOptions",
    "parse_config",
    "load_config",
]

MAGIC = b"TCPD"
FORMAT_VERSION = 1
CONFIG_ENV = "TENSORCP_CONFIG"


class FormatError(ValueError):
    """Malformed tensor-sequence file."""


def write_tcpd(path, seq: TensorSeq) -> None:
    dims = seq.shape.dims
    header = MAGIC + struct.pack(f"<HH{len(dims)}IQ", FORMAT_VERSION, len(dims), *dims, seq.n)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(seq.data, dtype="<f8").tobytes())


def _finite_or_raise(arr: np.ndarray, shape: Shape) -> None:
    bad = ~np.isfinite(arr)
    if bad.any():
        t, j = np.argwhere(bad)[0]
        raise FormatError(
            f"non-finite value {arr[t, j]} at row {t + 1} (time), column {j + 1} "
            f"(element {unflatten_index(int(j), shape)}); {int(bad.sum())} such values in total"
        )


def read_tcpd(path) -> TensorSeq:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: not a TCPD file")
    try:
        version, order = struct.unpack_from("<HH", raw, 4)
        if version != FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported TCPD version {version}")
        dims = struct.unpack_from(f"<{order}I", raw, 8)
        (n,) = struct.unpack_from("<Q", raw, 8 + 4 * order)
    except struct.error as exc:
        raise FormatError(f"{path}: truncated header") from exc
    offset = 16 + 4 * order
    try:
        shape = Shape(dims)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    expected = n * shape.size * 8
    payload = len(raw) - offset
    if payload != expected:
        raise FormatError(
            f"{path}: header declares n*p = {n}*{shape.size} values ({expected} bytes), "
            f"payload has {payload} bytes"
        )
    arr = np.frombuffer(raw, dtype="<f8", offset=offset).reshape(n, shape.size)
    _finite_or_raise(arr, shape)
    return TensorSeq(arr.astype(np.float64), shape)


def _read_rows(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError(f"{path}: empty CSV file") from None
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    try:
        body = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric or ragged CSV rows ({exc})") from exc
    if body.ndim != 2 or body.shape[1] != len(header):
        raise FormatError(f"{path}: every row needs {len(header)} fields")
    return header, body


def _int_column(col: np.ndarray, name: str, path) -> np.ndarray:
    if not np.all(np.isfinite(col)) or np.any(col != np.round(col)):
        raise FormatError(f"{path}: column {name} must hold integers")
    return col.astype(np.int64)


def read_csv(path) -> TensorSeq:
    """Read either CSV layout, chosen from the header."""
    header, body = _read_rows(path)
    if not header or header[0] != "t":
        raise FormatError(f"{path}: first column must be 't'")
    if len(header) >= 3 and header[-1] == "value" and all(h.startswith("idx") for h in header[1:-1]):
        return _long(path, header, body)
    if len(header) >= 2 and all(h.startswith("v") for h in header[1:]):
        return _wide(path, header, body)
    raise FormatError(f"{path}: unrecognized CSV header {header}")


def _wide(path, header, body) -> TensorSeq:
    t = _int_column(body[:, 0], "t", path)
    if not np.array_equal(t, np.arange(1, len(t) + 1)):
        raise FormatError(f"{path}: t must run 1..n in order")
    values = body[:, 1:]
    shape = Shape((values.shape[1],))
    _finite_or_raise(values, shape)
    return TensorSeq(values, shape)


def _long(path, header, body) -> TensorSeq:
    order = len(header) - 2
    t = _int_column(body[:, 0], "t", path)
    idx = np.column_stack([_int_column(body[:, c], header[c], path) for c in range(1, order + 1)])
    if t.size == 0:
        raise FormatError(f"{path}: no data rows")
    if t.min() < 1 or idx.min() < 1:
        raise FormatError(f"{path}: t and idx columns are 1-based")
    n = int(t.max())
    shape = Shape(idx.max(axis=0))
    flat = np.ravel_multi_index(tuple((idx - 1).T), shape.dims)
    cell = (t - 1) * shape.size + flat
    if cell.size != n * shape.size or np.unique(cell).size != cell.size:
        raise FormatError(
            f"{path}: expected every (t, index) pair exactly once for n={n}, shape {shape.dims}"
        )
    arr = np.empty(n * shape.size)
    arr[cell] = body[:, -1]
    arr = arr.reshape(n, shape.size)
    _finite_or_raise(arr, shape)
    return TensorSeq(arr, shape)


def write_csv_wide(path, seq: TensorSeq) -> None:
    if seq.shape.order != 1:
        raise ValueError("the wide layout holds vectors only")
    t = np.arange(1, seq.n + 1)[:, None]
    header = "t," + ",".join(f"v{j}" for j in range(1, seq.p + 1))
    np.savetxt(path, np.hstack([t, seq.data]), delimiter=",", header=header, comments="", fmt="%.17g")


def write_csv_long(path, seq: TensorSeq) -> None:
    order = seq.shape.order
    grids = np.indices(seq.shape.dims).reshape(order, -1).T + 1
    rows = []
    for t in range(seq.n):
        tcol = np.full((seq.p, 1), t + 1)
        rows.append(np.hstack([tcol, grids, seq.data[t][:, None]]))
    header = "t," + ",".join(f"idx{m}" for m in range(1, order + 1)) + ",value"
    np.savetxt(path, np.vstack(rows), delimiter=",", header=header, comments="", fmt="%.17g")


def read_sequence(path, shape=None) -> TensorSeq:
    """Dispatch on content: TCPD magic, else CSV.

    ``shape`` reshapes a wide CSV of ``p`` columns into tensors.
    """
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        seq = read_tcpd(path)
    elif Path(path).suffix.lower() in (".tcpd", ".bin"):
        raise FormatError(f"{path}: not a TCPD file")
    else:
        seq = read_csv(path)
    if shape is not None:
        seq = TensorSeq(seq.data, shape)
    return seq


class RunOptions(dict):
    """Non-detector settings from a config file: ``ci.level``, ``ci.paths``, ``seed``."""


_DETECTOR_KEYS = {f.name for f in fields(DetectorConfig)}
_RUN_KEYS = {"ci.level": float, "ci.paths": int, "seed": int}
_EXTRA_KEYS = {"preset"}


def _convert(key: str, value: str):
    if key in ("mode", "ridge_growth", "sfd_pruning", "preset"):
        return value.lower()
    if key in ("structural_mode",):
        return int(value)
    if key == "alpha":
        return None if value.lower() == "auto" else int(value)
    if key == "tau" and value.lower() == "auto":
        return None
    if key == "s" and value.lower() == "auto":
        return None
    return float(value)


def parse_config(text: str, source: str = "<config>") -> tuple[DetectorConfig, RunOptions]:
    """Parse ``key = value`` lines (``#`` comments) into a detector config.

    Unknown keys are rejected. ``preset`` picks the base constant set; the
    remaining keys override it.
    """
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",), interpolation=None
    )
    try:
        parser.read_string("[root]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    items = dict(parser["root"])
    unknown = set(items) - _DETECTOR_KEYS - set(_RUN_KEYS) - _EXTRA_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")
    opts = RunOptions()
    overrides = {}
    try:
        for key, value in items.items():
            value = value.strip()
            if key in _RUN_KEYS:
                opts[key] = _RUN_KEYS[key](value)
            else:
                overrides[key] = _convert(key, value)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    preset = overrides.pop("preset", "recommended")
    mode = overrides.pop("mode", "sfd")
    try:
        config = DetectorConfig.preset(preset, mode, **overrides)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return config, opts


def load_config(path=None) -> tuple[DetectorConfig, RunOptions]:
    """Read a config file from ``path``, else from ``$TENSORCP_CONFIG``.

    With neither, the default configuration is used.
    """
    path = path or os.environ.get(CONFIG_ENV)
    if path is None:
        return DetectorConfig(), RunOptions()
    return parse_config(Path(path).read_text(), source=str(path))
