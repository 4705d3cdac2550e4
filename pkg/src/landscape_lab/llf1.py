"""LLF1 binary field files.

Layout::

    bytes 0-3    b"LLF1"
    bytes 4-7    format version, uint32 little-endian
    bytes 8-15   JSON header length in bytes, uint64 little-endian
    JSON header  {"dim", "n_nodes", "lower", "upper", "kind", "byte_length"}
    payload      little-endian float64, row-major (axis 0 slowest);
                 complex values interleaved as (re, im)
"""

import hashlib
import json
import os
import struct
import tempfile

import numpy as np

from .grid import ComplexField, Grid, ScalarField

MAGIC = b"LLF1"
VERSION = 1
_PREFIX = struct.Struct("<4sIQ")


def encode(fld):
    if isinstance(fld, ComplexField):
        kind = "complex"
        payload = np.ascontiguousarray(fld.values, dtype="<c16").tobytes()
    elif isinstance(fld, ScalarField):
        kind = "real"
        payload = np.ascontiguousarray(fld.values, dtype="<f8").tobytes()
    else:
        raise TypeError(f"cannot encode {type(fld).__name__}")
    g = fld.grid
    header = json.dumps({
        "dim": g.dim, "n_nodes": list(g.n_nodes), "lower": list(g.lower),
        "upper": list(g.upper), "kind": kind, "byte_length": len(payload),
    }, sort_keys=True).encode()
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + payload


def decode(data):
    if len(data) < _PREFIX.size:
        raise ValueError("truncated LLF1 file")
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported LLF1 version {version}")
    start = _PREFIX.size
    header = json.loads(data[start:start + hlen])
    payload = data[start + hlen:]
    if len(payload) != header["byte_length"]:
        raise ValueError(f"payload is {len(payload)} bytes, header says {header['byte_length']}")
    grid = Grid(tuple(float(v) for v in header["lower"]), tuple(float(v) for v in header["upper"]),
                tuple(int(n) for n in header["n_nodes"]))
    if header["kind"] == "real":
        vals = np.frombuffer(payload, dtype="<f8").reshape(grid.shape)
        return ScalarField(grid, vals.astype(np.float64))
    if header["kind"] == "complex":
        vals = np.frombuffer(payload, dtype="<c16").reshape(grid.shape)
        return ComplexField(grid, vals.astype(np.complex128))
    raise ValueError(f"unknown value kind {header['kind']!r}")


def atomic_write_bytes(path, data):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field(path, fld):
    """Write ``fld`` atomically; returns the sha256 of the bytes written."""
    data = encode(fld)
    atomic_write_bytes(path, data)
    return hashlib.sha256(data).hexdigest()


def read_field(path):
    with open(path, "rb") as fh:
        return decode(fh.read())
