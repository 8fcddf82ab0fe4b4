"""NPY v1.0 reader/writer and atomic file helpers.

Only little-endian ``<f8`` and ``<f4`` in C order are accepted; ``<f4`` is
widened to float64 on read. Output is always ``<f8``.
"""

import ast
import json
import os
import struct
import tempfile

import numpy as np

from .errors import NpyFormatError

MAGIC = b"\x93NUMPY"
ALIGN = 64
_DTYPES = {"<f8": np.dtype("<f8"), "<f4": np.dtype("<f4")}


def npy_header(shape):
    """Complete v1.0 preamble (magic, version, length, padded dict) for ``<f8``."""
    shape = tuple(int(s) for s in shape)
    body = "{'descr': '<f8', 'fortran_order': False, 'shape': %r, }" % (shape,)
    # magic(6) + version(2) + length(2) + body + padding + '\n' is a multiple of ALIGN.
    pad = -(10 + len(body) + 1) % ALIGN
    text = (body + " " * pad + "\n").encode("latin1")
    return MAGIC + b"\x01\x00" + struct.pack("<H", len(text)) + text


def npy_bytes(t):
    t = np.ascontiguousarray(np.asarray(t, dtype="<f8"))
    return npy_header(t.shape) + t.tobytes(order="C")


def write_npy(path, t):
    """Write ``t`` as NPY v1.0 ``<f8`` C-order, atomically."""
    atomic_write_bytes(path, npy_bytes(t))


def read_npy(path):
    """Read an NPY v1.0 file of ``<f8`` or ``<f4`` data as a float64 array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    return parse_npy(raw)


def parse_npy(raw):
    if len(raw) < 10 or raw[:6] != MAGIC:
        raise NpyFormatError("magic", "file does not start with \\x93NUMPY")
    if raw[6:8] != b"\x01\x00":
        raise NpyFormatError("version", f"unsupported version {raw[6]}.{raw[7]}, need 1.0")
    (hlen,) = struct.unpack("<H", raw[8:10])
    if len(raw) < 10 + hlen:
        raise NpyFormatError("header", "file truncated inside header")
    try:
        header = ast.literal_eval(raw[10:10 + hlen].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise NpyFormatError("header", f"unparseable header: {exc}") from None
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise NpyFormatError("header", "header must have exactly descr, fortran_order, shape")

    descr = header["descr"]
    if descr not in _DTYPES:
        raise NpyFormatError("descr", f"unsupported dtype {descr!r}; need '<f8' or '<f4'")
    if header["fortran_order"] is not False:
        raise NpyFormatError("fortran_order", "Fortran-ordered arrays are not supported")
    shape = header["shape"]
    if (not isinstance(shape, tuple) or not shape
            or not all(isinstance(s, int) and s >= 0 for s in shape)):
        raise NpyFormatError("shape", f"invalid shape {shape!r}")

    dtype = _DTYPES[descr]
    count = int(np.prod(shape))
    data = raw[10 + hlen:]
    if len(data) != count * dtype.itemsize:
        raise NpyFormatError(
            "data", f"expected {count * dtype.itemsize} data bytes, found {len(data)}"
        )
    return np.frombuffer(data, dtype=dtype).astype(np.float64).reshape(shape)


def atomic_write_bytes(path, payload):
    """Write via a temporary file in the same directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj):
    atomic_write_bytes(path, dumps_json(obj).encode("utf-8"))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
