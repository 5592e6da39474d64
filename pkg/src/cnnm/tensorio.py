"""File formats: CNT1 tensors, P5 grayscale images, CSV series, JSON.

CNT1 is a little-endian binary tensor container: the magic bytes ``CNT1``,
a uint32 order n, n uint64 dimensions, then the float64 entries in
first-dimension-fastest order. Mask files use the same container with
values restricted to exactly 0.0 and 1.0.

All writers go through a temp-file-plus-rename so readers never observe a
partially written file.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from contextlib import contextmanager
from importlib import resources

import numpy as np

from .tensors import unvec, vec
from .validation import check_mask

__all__ = [
    "atomic_write",
    "read_cnt1",
    "write_cnt1",
    "read_mask_cnt1",
    "write_mask_cnt1",
    "read_pgm",
    "write_pgm",
    "read_series_csv",
    "write_series_csv",
    "write_rows_csv",
    "write_json",
    "jsonable",
    "load_bundled_image",
]

_MAGIC = b"CNT1"


@contextmanager
def atomic_write(path, mode="wb"):
    """Write to a temp file in the target directory, then rename over path."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, mode) as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_cnt1(path, x):
    """Write a tensor to the CNT1 container."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1)
    with atomic_write(path) as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", x.ndim))
        f.write(struct.pack(f"<{x.ndim}Q", *x.shape))
        f.write(vec(x).astype("<f8").tobytes())


def read_cnt1(path):
    """Read a tensor from the CNT1 container."""
    path = os.fspath(path)
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a CNT1 file (bad magic at offset 0)")
    if len(data) < 8:
        raise ValueError(f"{path}: truncated header at offset {len(data)}")
    (order,) = struct.unpack_from("<I", data, 4)
    if order < 1:
        raise ValueError(f"{path}: tensor order must be >= 1, got {order}")
    header_end = 8 + 8 * order
    if len(data) < header_end:
        raise ValueError(f"{path}: truncated dimension list at offset {len(data)}")
    dims = struct.unpack_from(f"<{order}Q", data, 8)
    if any(d < 1 for d in dims):
        raise ValueError(f"{path}: dimensions must be >= 1, got {dims}")
    count = int(np.prod(dims))
    expected = header_end + 8 * count
    if len(data) != expected:
        raise ValueError(
            f"{path}: expected {expected} bytes for shape {dims}, found {len(data)}"
        )
    flat = np.frombuffer(data, dtype="<f8", offset=header_end, count=count)
    return unvec(flat.astype(np.float64), dims)


def write_mask_cnt1(path, mask):
    write_cnt1(path, check_mask(mask))


def read_mask_cnt1(path):
    mask = read_cnt1(path)
    if not np.all((mask == 0.0) | (mask == 1.0)):
        raise ValueError(f"{os.fspath(path)}: mask values must be exactly 0.0 or 1.0")
    return mask


def write_pgm(path, image):
    """Write a 2-D array with values in [0, 1] as an 8-bit P5 image."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"an image must be 2-D, got order {image.ndim}")
    pixels = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    with atomic_write(path) as f:
        f.write(f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def read_pgm(path):
    """Read an 8-bit P5 image into a 2-D float array scaled to [0, 1]."""
    path = os.fspath(path)
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise ValueError(f"{path}: malformed PGM header near offset {start}")
        fields.append(int(token))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval not in range(1, 256):
        raise ValueError(f"{path}: only 8-bit PGM supported, maxval {maxval}")
    count = width * height
    if len(data) - pos < count:
        raise ValueError(f"{path}: truncated pixel data at offset {len(data)}")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=pos, count=count)
    return pixels.reshape(height, width).astype(np.float64) / float(maxval)


def read_series_csv(path):
    """Read a univariate series: one value per line, optional header line."""
    path = os.fspath(path)
    values = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                if lineno == 1 and not values:
                    continue  # header
                raise ValueError(
                    f"{path}: line {lineno}: cannot parse {text!r} as a number"
                ) from None
    if not values:
        raise ValueError(f"{path}: no numeric values found")
    return np.asarray(values, dtype=np.float64)


def write_series_csv(path, values, header=None):
    with atomic_write(path, "w") as f:
        if header:
            f.write(header + "\n")
        for v in np.asarray(values, dtype=np.float64).ravel():
            f.write(f"{v!r}\n")


def write_rows_csv(path, header, rows):
    """Write rows of mixed scalars with a header line."""
    with atomic_write(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_csv_cell(v) for v in row) + "\n")


def _csv_cell(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def jsonable(obj):
    """Recursively convert to JSON-safe types; non-finite floats become
    the strings "inf", "-inf", "nan"."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


def write_json(path, obj, indent=2):
    with atomic_write(path, "w") as f:
        json.dump(jsonable(obj), f, indent=indent, allow_nan=False)
        f.write("\n")


def load_bundled_image():
    """The grayscale patch shipped with the package, as a [0, 1] array."""
    ref = resources.files("cnnm").joinpath("data/sample_patch.pgm")
    with resources.as_file(ref) as path:
        return read_pgm(path)
