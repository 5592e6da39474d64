"""Input validation helpers shared across the package."""

from __future__ import annotations

import math

import numpy as np


def check_tensor(x, name="x"):
    """Coerce ``x`` to a float64 array of order >= 1 with finite entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.size == 0:
        raise ValueError(f"{name} must contain at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_mask(mask, shape=None, name="mask"):
    """Coerce a sampling indicator to a float64 array of exact 0/1 values.

    Boolean arrays are accepted and converted. When ``shape`` is given the
    indicator must match it.
    """
    arr = np.asarray(mask)
    if arr.dtype == bool:
        arr = arr.astype(np.float64)
    else:
        arr = np.asarray(arr, dtype=np.float64)
        if not np.all((arr == 0.0) | (arr == 1.0)):
            raise ValueError(f"{name} entries must be exactly 0 or 1")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(
            f"{name} shape {arr.shape} does not match data shape {tuple(shape)}"
        )
    return arr


def check_kernel(kernel, shape):
    """Validate a kernel size against a tensor shape; returns a tuple of ints.

    Every kernel dimension must satisfy 1 <= k_j <= m_j. Dimension indices in
    error messages are 1-based.
    """
    kdims = tuple(int(k) for k in np.atleast_1d(np.asarray(kernel, dtype=np.int64)))
    shape = tuple(int(s) for s in shape)
    if len(kdims) != len(shape):
        raise ValueError(
            f"kernel has {len(kdims)} dimensions but the tensor has {len(shape)}"
        )
    for j, (kj, mj) in enumerate(zip(kdims, shape), start=1):
        if not 1 <= kj <= mj:
            raise ValueError(
                f"kernel dimension {j} must satisfy 1 <= k_{j} <= m_{j} = {mj}, got {kj}"
            )
    return kdims


def check_positive(value, name):
    v = float(value)
    if not math.isfinite(v) or v <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return v
