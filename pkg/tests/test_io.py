import json
import struct

import numpy as np
import pytest

from ruinlab.io import (
    SCHEMA_VERSION,
    SchemaError,
    cache_path,
    cached_perron_frobenius,
    read_csv,
    read_eigen_cache,
    read_json,
    write_csv,
    write_eigen_cache,
    write_json,
)
from ruinlab.kernel import build_killed_kernel
from ruinlab.simplex import enumerate_interior
from ruinlab.spectral import perron_frobenius


def test_csv_roundtrip(tmp_path):
    p = tmp_path / "t.csv"
    text = write_csv(p, "demo", ["a", "b"], [(1, 0.1), (2, 1 / 3)])
    assert text.splitlines()[0] == f"# ruinlab-schema: {SCHEMA_VERSION} demo"
    cols, rows = read_csv(p, "demo")
    assert cols == ["a", "b"]
    assert float(rows[1][1]) == 1 / 3


def test_csv_rejects_bad_headers(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError):
        read_csv(p)
    p.write_text("# ruinlab-schema: 99 demo\na,b\n")
    with pytest.raises(SchemaError):
        read_csv(p)
    write_csv(p, "demo", ["a"], [])
    with pytest.raises(SchemaError):
        read_csv(p, "other")


def test_json_version(tmp_path):
    p = tmp_path / "m.json"
    write_json(p, {"x": np.float64(1.5), "v": np.arange(3)})
    assert read_json(p)["v"] == [0, 1, 2]
    p.write_text(json.dumps({"schema_version": 2}))
    with pytest.raises(SchemaError):
        read_json(p)


def test_binary_cache_layout(tmp_path):
    op = build_killed_kernel(enumerate_interior(3, 7))
    pair = perron_frobenius(op)
    p = tmp_path / "c.bin"
    write_eigen_cache(p, pair)
    raw = p.read_bytes()
    magic, k, N, count, tol = struct.unpack_from("<8siiqd", raw)
    assert (magic, k, N, count, tol) == (b"RLPHI0\x00\x01", 3, 7, 15, 1e-12)
    assert len(raw) == 32 + 8 * 15
    np.testing.assert_array_equal(np.frombuffer(raw[32:], "<f8"), pair.phi0)
    assert read_eigen_cache(p)[:3] == (3, 7, 1e-12)


def test_binary_cache_corruption(tmp_path):
    p = tmp_path / "c.bin"
    p.write_bytes(b"short")
    with pytest.raises(SchemaError):
        read_eigen_cache(p)
    p.write_bytes(struct.pack("<8siiqd", b"BADMAGIC", 3, 7, 1, 1e-12) + b"\0" * 8)
    with pytest.raises(SchemaError):
        read_eigen_cache(p)
    p.write_bytes(struct.pack("<8siiqd", b"RLPHI0\x00\x01", 3, 7, 5, 1e-12) + b"\0" * 8)
    with pytest.raises(SchemaError):
        read_eigen_cache(p)


def test_cached_solver_hit_and_stale(tmp_path):
    op = build_killed_kernel(enumerate_interior(4, 9))
    first = cached_perron_frobenius(op, cache_dir=tmp_path)
    assert not first.cache_hit and cache_path(tmp_path, 4, 9, 1e-12).exists()
    second = cached_perron_frobenius(op, cache_dir=tmp_path)
    assert second.cache_hit and second.iterations == 0
    assert second.beta0 == pytest.approx(first.beta0, abs=1e-15)
    # a cache whose vector is not an eigenvector is recomputed
    path = cache_path(tmp_path, 4, 9, 1e-12)
    k, N, tol, phi = read_eigen_cache(path)
    path.write_bytes(path.read_bytes()[:32] + np.ones_like(phi).tobytes())
    third = cached_perron_frobenius(op, cache_dir=tmp_path)
    assert not third.cache_hit
