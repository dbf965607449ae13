"""Plain-text and binary file formats for tensors, Kruskal models and traces.

Text formats print floats with 17 significant digits, which round-trips every
double, so write -> read -> write reproduces the same bytes.
"""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .alm import RunTrace
from .kruskal import KruskalTensor
from .tensor import DenseTensor

__all__ = [
    "FormatError",
    "format_float",
    "dumps_tensor",
    "loads_tensor",
    "read_tensor",
    "write_tensor",
    "dumps_kruskal",
    "loads_kruskal",
    "read_kruskal",
    "write_kruskal",
    "dumps_trace",
    "write_trace",
    "read_trace",
    "TRACE_HEADER",
    "tensor_to_bytes",
    "tensor_from_bytes",
]

PathLike = Union[str, Path]
MAGIC = b"OTNS"
TRACE_HEADER = ("k", "theta", "rel_change", "inner_iters", "rerr", "seconds")


class FormatError(ValueError):
    """Malformed tensor, Kruskal or trace file."""


def format_float(x: float) -> str:
    return "%.17g" % x


def _parse_dims(line: str) -> tuple[int, ...]:
    key, _, rest = line.partition(":")
    if key.strip() != "dims":
        raise FormatError(f"expected 'dims:' line, got {line!r}")
    try:
        dims = tuple(int(t) for t in rest.split())
    except ValueError as exc:
        raise FormatError(f"bad dims line {line!r}") from exc
    if not dims or any(d < 1 for d in dims):
        raise FormatError(f"dims must be positive, got {dims}")
    return dims


def _floats(tokens) -> np.ndarray:
    try:
        vals = np.array([float(t) for t in tokens], dtype=float)
    except ValueError as exc:
        raise FormatError(f"non-numeric value: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise FormatError("values must be finite")
    return vals


# -- tensors ---------------------------------------------------------------

def dumps_tensor(a: DenseTensor) -> str:
    lines = ["tensor v1", "dims: " + " ".join(str(d) for d in a.dims)]
    lines.extend(format_float(v) for v in a.values)
    return "\n".join(lines) + "\n"


def loads_tensor(text: str) -> DenseTensor:
    lines = text.splitlines()
    if len(lines) < 2 or lines[0].strip() != "tensor v1":
        raise FormatError("missing 'tensor v1' header")
    dims = _parse_dims(lines[1])
    vals = _floats(" ".join(lines[2:]).split())
    if vals.size != int(np.prod(dims)):
        raise FormatError(f"expected {int(np.prod(dims))} values, found {vals.size}")
    return DenseTensor.from_values(dims, vals)


def tensor_to_bytes(a: DenseTensor) -> bytes:
    head = MAGIC + struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}Q", *a.dims)
    return head + a.values.astype("<f8").tobytes()


def tensor_from_bytes(buf: bytes) -> DenseTensor:
    if buf[:4] != MAGIC or len(buf) < 8:
        raise FormatError("missing binary tensor magic")
    (n,) = struct.unpack_from("<I", buf, 4)
    end = 8 + 8 * n
    if n < 1 or len(buf) < end:
        raise FormatError("truncated binary header")
    dims = struct.unpack_from(f"<{n}Q", buf, 8)
    count = int(np.prod(dims))
    if len(buf) != end + 8 * count:
        raise FormatError(f"expected {count} values in binary payload")
    vals = np.frombuffer(buf, dtype="<f8", offset=end).astype(float)
    if not np.all(np.isfinite(vals)):
        raise FormatError("values must be finite")
    return DenseTensor.from_values(dims, vals)


def write_tensor(path: PathLike, a: DenseTensor, fmt: str = "text") -> None:
    if fmt == "text":
        Path(path).write_text(dumps_tensor(a))
    elif fmt == "binary":
        Path(path).write_bytes(tensor_to_bytes(a))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_tensor(path: PathLike) -> DenseTensor:
    """Read either format; the binary one is recognized by its magic bytes."""
    buf = Path(path).read_bytes()
    if buf[:4] == MAGIC:
        return tensor_from_bytes(buf)
    try:
        return loads_tensor(buf.decode("ascii"))
    except UnicodeDecodeError as exc:
        raise FormatError("not a tensor file") from exc


# -- Kruskal models --------------------------------------------------------

def dumps_kruskal(k: KruskalTensor) -> str:
    lines = ["kruskal v1", "dims: " + " ".join(str(d) for d in k.dims), f"rank: {k.rank}"]
    if k.weights is not None:
        lines.append("weights: " + " ".join(format_float(v) for v in k.weights))
    for n, f in enumerate(k.factors):
        lines.append(f"mode {n}")
        lines.extend(" ".join(format_float(v) for v in row) for row in f)
    return "\n".join(lines) + "\n"


def loads_kruskal(text: str) -> KruskalTensor:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3 or lines[0].strip() != "kruskal v1":
        raise FormatError("missing 'kruskal v1' header")
    dims = _parse_dims(lines[1])
    key, _, rest = lines[2].partition(":")
    if key.strip() != "rank":
        raise FormatError("expected 'rank:' line")
    try:
        rank = int(rest)
    except ValueError as exc:
        raise FormatError(f"bad rank line {lines[2]!r}") from exc
    if rank < 1:
        raise FormatError("rank must be >= 1")
    pos = 3
    weights = None
    if pos < len(lines) and lines[pos].startswith("weights:"):
        weights = _floats(lines[pos].partition(":")[2].split())
        if weights.size != rank:
            raise FormatError(f"expected {rank} weights, found {weights.size}")
        pos += 1
    factors = []
    for n, d in enumerate(dims):
        if pos >= len(lines) or lines[pos].strip() != f"mode {n}":
            raise FormatError(f"expected 'mode {n}' block")
        rows = lines[pos + 1: pos + 1 + d]
        if len(rows) != d:
            raise FormatError(f"mode {n} block is truncated")
        block = _floats(" ".join(rows).split())
        if block.size != d * rank or any(len(r.split()) != rank for r in rows):
            raise FormatError(f"mode {n} block must be {d} x {rank}")
        factors.append(block.reshape(d, rank))
        pos += 1 + d
    if pos != len(lines):
        raise FormatError("trailing content after the last mode block")
    return KruskalTensor(factors, weights)


def write_kruskal(path: PathLike, k: KruskalTensor) -> None:
    Path(path).write_text(dumps_kruskal(k))


def read_kruskal(path: PathLike) -> KruskalTensor:
    return loads_kruskal(Path(path).read_text())


# -- traces ----------------------------------------------------------------

def dumps_trace(trace: RunTrace, omit_time: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for k, th, rel, inner, rerr, secs in trace.rows():
        w.writerow([k, format_float(th), format_float(rel), inner, format_float(rerr),
                    "" if omit_time else format_float(secs)])
    return buf.getvalue()


def write_trace(path: PathLike, trace: RunTrace, omit_time: bool = False) -> None:
    Path(path).write_text(dumps_trace(trace, omit_time))


def read_trace(path: PathLike) -> RunTrace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != TRACE_HEADER:
            raise FormatError(f"bad trace header {header!r}")
        trace = RunTrace()
        for row in reader:
            k, th, rel, inner, rerr, secs = row
            if int(k) != trace.iterations + 1:
                raise FormatError("trace rows must count up from 1")
            trace.append(float(th), float(rel), int(inner), float(rerr),
                         float(secs) if secs else float("nan"))
    return trace
