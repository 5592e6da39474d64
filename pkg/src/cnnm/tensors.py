"""Dense order-n tensor primitives: circular shifts, vectorization, masks.

Tensors are plain float64 numpy arrays. The canonical linear order used for
vectorization and file formats is first-dimension-fastest (Fortran order),
and multi-indices exposed to users are 1-based.
"""

from __future__ import annotations

import numpy as np

from .validation import check_mask

__all__ = [
    "circshift",
    "vec",
    "unvec",
    "linear_position",
    "project",
    "complement_mask",
    "full_mask",
    "empty_mask",
    "mask_from_indices",
    "random_mask",
    "tail_mask",
    "mask_count",
    "mask_density",
]


def circshift(x, shift, dim=1):
    """Circularly shift tensor entries by ``shift`` positions along ``dim``.

    ``dim`` is 1-based. A positive shift moves entries toward higher indices
    with wrap-around, so for a vector ``[x1, ..., xm]`` a shift of 1 yields
    ``[xm, x1, ..., x_{m-1}]``. The shift amount is reduced modulo the
    dimension length.
    """
    x = np.asarray(x)
    if not 1 <= dim <= x.ndim:
        raise ValueError(
            f"dimension index {dim} out of range for an order-{x.ndim} tensor"
        )
    return np.roll(x, int(shift), axis=dim - 1)


def vec(x):
    """Vectorize a tensor in first-dimension-fastest order."""
    return np.asarray(x).ravel(order="F")


def unvec(v, shape):
    """Inverse of :func:`vec` for a given shape."""
    v = np.asarray(v)
    shape = tuple(int(s) for s in shape)
    if v.size != int(np.prod(shape)):
        raise ValueError(f"cannot reshape {v.size} entries into shape {shape}")
    return v.reshape(shape, order="F")


def linear_position(index, dims):
    """1-based linear position of a 1-based multi-index.

    Position = 1 + sum_a (i_a - 1) * prod_{b<a} m_b, matching :func:`vec`.
    """
    dims = tuple(int(d) for d in dims)
    index = tuple(int(i) for i in index)
    if len(index) != len(dims):
        raise ValueError(f"index {index} does not match tensor order {len(dims)}")
    pos = 1
    stride = 1
    for a, (i, d) in enumerate(zip(index, dims), start=1):
        if not 1 <= i <= d:
            raise ValueError(f"index entry {a} must lie in 1..{d}, got {i}")
        pos += (i - 1) * stride
        stride *= d
    return pos


def project(x, mask):
    """Orthogonal projection onto the observed entries: entrywise x * mask."""
    x = np.asarray(x, dtype=np.float64)
    mask = check_mask(mask, shape=x.shape)
    return x * mask


def complement_mask(mask):
    """Indicator of the unobserved entries."""
    return 1.0 - check_mask(mask)


def full_mask(shape):
    return np.ones(tuple(int(s) for s in shape), dtype=np.float64)


def empty_mask(shape):
    return np.zeros(tuple(int(s) for s in shape), dtype=np.float64)


def mask_from_indices(shape, indices):
    """Build an indicator from an iterable of 1-based multi-indices."""
    shape = tuple(int(s) for s in shape)
    mask = np.zeros(shape, dtype=np.float64)
    for idx in indices:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        if idx.size != len(shape):
            raise ValueError(f"index {tuple(idx)} does not match tensor order {len(shape)}")
        zero_based = tuple(int(i) - 1 for i in idx)
        for a, (i, d) in enumerate(zip(idx, shape), start=1):
            if not 1 <= i <= d:
                raise ValueError(f"index entry {a} must lie in 1..{d}, got {int(i)}")
        mask[zero_based] = 1.0
    return mask


def random_mask(shape, count=None, density=None, rng=None):
    """Indicator with ``count`` observed positions chosen uniformly without
    replacement (in first-dimension-fastest linear order).

    Exactly one of ``count`` and ``density`` must be given. ``rng`` is a
    :class:`numpy.random.Generator` or an integer seed.
    """
    shape = tuple(int(s) for s in shape)
    m = int(np.prod(shape))
    if (count is None) == (density is None):
        raise ValueError("specify exactly one of count and density")
    if count is None:
        if not 0.0 <= density <= 1.0:
            raise ValueError(f"density must lie in [0, 1], got {density}")
        count = int(round(density * m))
    count = int(count)
    if not 0 <= count <= m:
        raise ValueError(f"count must lie in 0..{m}, got {count}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    flat = np.zeros(m, dtype=np.float64)
    flat[rng.choice(m, size=count, replace=False)] = 1.0
    return unvec(flat, shape)


def tail_mask(shape, observed):
    """Indicator observing the first ``observed`` slices along the last axis.

    This is the forecasting pattern: the trailing slices (the future) are
    wholly missing.
    """
    shape = tuple(int(s) for s in shape)
    observed = int(observed)
    if not 0 <= observed <= shape[-1]:
        raise ValueError(f"observed must lie in 0..{shape[-1]}, got {observed}")
    mask = np.zeros(shape, dtype=np.float64)
    mask[..., :observed] = 1.0
    return mask


def mask_count(mask):
    """Number of observed entries."""
    return int(round(float(np.sum(check_mask(mask)))))


def mask_density(mask):
    """Fraction of observed entries, card(mask) / m."""
    mask = check_mask(mask)
    return mask_count(mask) / mask.size
