"""File formats: schema-tagged CSV/JSON tables and the binary eigenvector cache.

Binary cache layout (little-endian)::

    offset  size  field
    0       8     magic  b"RLPHI0\\x00\\x01"
    8       4     k      int32
    12      4     N      int32
    16      8     count  int64
    24      8     tol    float64
    32      8*count      phi0 values in lexicographic interior order (float64)

Every CSV starts with a ``# ruinlab-schema: <version> <kind>`` comment line and
every JSON document carries ``"schema_version"``; readers refuse other versions.
"""

from __future__ import annotations

import csv
import io as _io
import json
import struct
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from ._validation import ValidationError
from .kernel import KernelOperator, apply
from .simplex import SimplexIndex
from .spectral import DEFAULT_MAX_ITER, DEFAULT_TOL, EigenPair, perron_frobenius

__all__ = [
    "SCHEMA_VERSION",
    "SchemaError",
    "write_csv",
    "read_csv",
    "write_json",
    "read_json",
    "write_eigen_cache",
    "read_eigen_cache",
    "cache_path",
    "cached_perron_frobenius",
    "phi0_rows",
]

SCHEMA_VERSION = 1
CACHE_MAGIC = b"RLPHI0\x00\x01"
_HEADER = struct.Struct("<8siiqd")


class SchemaError(ValidationError):
    """A file carries a missing or unsupported schema version."""


def _csv_header(kind: str) -> str:
    return f"# ruinlab-schema: {SCHEMA_VERSION} {kind}\n"


def write_csv(path: str | Path | None, kind: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Write a schema-tagged CSV; returns the text (also written to ``path`` if given)."""
    buf = _io.StringIO()
    buf.write(_csv_header(kind))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path: str | Path, kind: str | None = None) -> tuple[list[str], list[list[str]]]:
    """Read a schema-tagged CSV, returning ``(columns, rows)`` as strings."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# ruinlab-schema:"):
        raise SchemaError(f"{path}: missing schema header")
    parts = lines[0].split(":", 1)[1].split()
    try:
        version = int(parts[0])
    except (IndexError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed schema header {lines[0]!r}") from exc
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported schema version {version}")
    if kind is not None and (len(parts) < 2 or parts[1] != kind):
        raise SchemaError(f"{path}: expected table kind {kind!r}, found {parts[1:]!r}")
    reader = list(csv.reader(lines[1:]))
    return reader[0], reader[1:]


def write_json(path: str | Path | None, payload: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, **payload}
    text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def read_json(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported schema version {version!r}")
    return doc


def write_eigen_cache(path: str | Path, pair: EigenPair) -> None:
    phi = np.ascontiguousarray(pair.phi0, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, pair.k, pair.N, len(phi), float(pair.tol)))
        fh.write(phi.tobytes())


def read_eigen_cache(path: str | Path) -> tuple[int, int, float, np.ndarray]:
    """Return ``(k, N, tol, phi0)`` from a cache file."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise SchemaError(f"{path}: truncated cache header")
    magic, k, N, count, tol = _HEADER.unpack_from(data)
    if magic != CACHE_MAGIC:
        raise SchemaError(f"{path}: bad magic {magic!r}")
    body = data[_HEADER.size :]
    if len(body) != 8 * count:
        raise SchemaError(f"{path}: expected {count} values, found {len(body) // 8}")
    return k, N, tol, np.frombuffer(body, dtype="<f8").astype(np.float64)


def cache_path(cache_dir: str | Path, k: int, N: int, tol: float) -> Path:
    return Path(cache_dir) / f"phi0_k{k}_N{N}_tol{tol:.1e}.bin"


def cached_perron_frobenius(
    op: KernelOperator,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    cache_dir: str | Path | None = None,
) -> EigenPair:
    """Load ``phi0`` from the cache when present, otherwise compute and store it.

    On a hit, ``beta0`` and the residual are recomputed from the stored vector
    with one application of ``K``.
    """
    if cache_dir is None:
        return perron_frobenius(op, tol=tol, max_iter=max_iter)
    path = cache_path(cache_dir, op.k, op.N, tol)
    if path.exists():
        k, N, stored_tol, phi = read_eigen_cache(path)
        if (k, N) == (op.k, op.N) and len(phi) == op.index.interior_count and stored_tol == tol:
            w = apply(op, phi)
            beta = float(phi @ w)
            residual = float(np.linalg.norm(w - beta * phi))
            if residual <= tol:
                return EigenPair(beta, phi, residual, 0, op.k, op.N, tol, cache_hit=True)
    pair = perron_frobenius(op, tol=tol, max_iter=max_iter)
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    write_eigen_cache(path, pair)
    return pair


def phi0_rows(pair: EigenPair, index: SimplexIndex):
    """Rows ``(index, x_1..x_k, phi0)`` for CSV export."""
    for i, (state, value) in enumerate(zip(index.interior, pair.phi0)):
        yield (i, *map(int, state), float(value))
