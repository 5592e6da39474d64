"""Kernel-size selection via coding length and empirical defaults.

The coding length of the convolution matrix is a smooth surrogate for its
rank: CL(X) = 0.5 (m + k) log det(I + (m / (k theta^2)) A A^T) with
A = conv_matrix(X). Dividing by the kernel element count gives the averaged
coding length (ACL), a proxy for rank/k, the quantity the sampling bounds
depend on; scanning ACL over candidate kernels is a cheap way to pick one
before solving. For forecasting there are also simple empirical defaults:
half the time axis (but longer than the horizon) and a small fixed kernel
on non-time axes.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .convop import gram_matrix
from .validation import check_kernel, check_positive, check_tensor

__all__ = [
    "coding_length",
    "averaged_coding_length",
    "default_theta",
    "select_kernel",
    "scan_kernels",
    "KernelScore",
]


class KernelScore(NamedTuple):
    kernel: tuple
    acl: float


def default_theta(x):
    """Default coding-length scale: 10% of the per-entry RMS of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    rms = float(np.linalg.norm(x)) / np.sqrt(x.size)
    return 0.1 * rms if rms > 0 else 1.0


def coding_length(x, kernel, theta):
    """Coding length of the convolution matrix of ``x`` at scale ``theta``.

    Evaluated through the k-by-k Gram identity
    det(I_m + c A A^T) = det(I_k + c A^T A), with the log-determinant taken
    from a Cholesky factor, so neither the m-by-k matrix nor a raw
    determinant is ever formed. Zero input has coding length 0.
    """
    x = check_tensor(x)
    kdims = check_kernel(kernel, x.shape)
    check_positive(theta, "theta")
    if not x.any():
        return 0.0
    m = x.size
    k = int(np.prod(kdims))
    c = m / (k * theta * theta)
    h = np.eye(k) + c * gram_matrix(x, kdims)
    h = (h + h.T) / 2.0
    try:
        chol = np.linalg.cholesky(h)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("coding-length Gram matrix is not positive definite") from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return 0.5 * (m + k) * logdet


def averaged_coding_length(x, kernel, theta):
    """Coding length divided by the kernel element count."""
    k = int(np.prod(check_kernel(kernel, np.asarray(x).shape)))
    return coding_length(x, kernel, theta) / k


def select_kernel(shape, horizon, alpha=0.5, image_default=13):
    """Empirical kernel choice for forecasting a tensor-valued series.

    The last dimension is the time axis and gets round(alpha * m_n), clamped
    to be larger than the forecast ``horizon`` and at most m_n. Non-time
    dimensions get min(image_default, m_j).
    """
    shape = tuple(int(s) for s in shape)
    horizon = int(horizon)
    m_n = shape[-1]
    if not 0 <= horizon < m_n:
        raise ValueError(
            f"horizon must lie in 0..{m_n - 1} for a time axis of length {m_n},"
            f" got {horizon}"
        )
    if not horizon / m_n < alpha <= 1.0:
        raise ValueError(
            f"alpha must lie in ({horizon / m_n:.4g}, 1] so the kernel spans "
            f"more than the horizon, got {alpha}"
        )
    k_time = int(np.floor(alpha * m_n + 0.5))
    k_time = min(m_n, max(horizon + 1, k_time))
    head = tuple(min(int(image_default), mj) for mj in shape[:-1])
    return head + (k_time,)


def scan_kernels(x, candidates, theta=None):
    """Rank candidate kernels by averaged coding length, ascending.

    Ties break toward the smaller kernel element count (the cheaper solve).
    Returns a list of :class:`KernelScore`.
    """
    x = check_tensor(x)
    candidates = [check_kernel(c, x.shape) for c in candidates]
    if not candidates:
        raise ValueError("candidates must be nonempty")
    if theta is None:
        theta = default_theta(x)
    scored = [
        KernelScore(kernel=c, acl=averaged_coding_length(x, c, theta))
        for c in candidates
    ]
    return sorted(scored, key=lambda e: (e.acl, int(np.prod(e.kernel)), e.kernel))
