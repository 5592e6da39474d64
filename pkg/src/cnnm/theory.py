"""Computable recovery-theory diagnostics.

Deterministic (non-random) sampling patterns are characterized by two
quantities of a matrix X against a 2-D sampling set: isomerism (every
column-indexed row submatrix preserves the rank of X) and the relative
condition number gamma (how well those submatrices condition X). The
sampling thresholds that guarantee exact or near recovery are simple
formulas in the convolution rank and coherence, and the dual diagnostic
evaluates all of these on the convolution matrix of a concrete instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convop import ConvOperator, conv_spectrum
from .tensors import mask_density
from .validation import check_mask, check_tensor

__all__ = [
    "Sampling2D",
    "is_isomeric",
    "relative_condition_number",
    "matrix_coherence",
    "noiseless_sampling_threshold",
    "noisy_recovery_bound",
    "DualDiagnostics",
    "check_dual_isomerism",
]


class Sampling2D:
    """A 2-D sampling set over an m1-by-m2 grid, stored as a boolean mask.

    Rows and columns are the index sets observed in each row and column;
    the transpose swaps the two roles.
    """

    def __init__(self, mask):
        mask = check_mask(mask)
        if mask.ndim != 2:
            raise ValueError(f"a 2-D sampling set needs a matrix mask, got order {mask.ndim}")
        self.mask = mask.astype(bool)
        self.shape = self.mask.shape

    def row_set(self, i):
        """0-based column indices observed in row ``i`` (0-based)."""
        return np.flatnonzero(self.mask[i])

    def column_set(self, j):
        """0-based row indices observed in column ``j`` (0-based)."""
        return np.flatnonzero(self.mask[:, j])

    def transpose(self):
        return Sampling2D(self.mask.T)

    def min_fraction(self):
        """Smallest fraction of observed entries over all rows and columns."""
        row = self.mask.sum(axis=1).min() / self.shape[1]
        col = self.mask.sum(axis=0).min() / self.shape[0]
        return float(min(row, col))

    def density(self):
        return float(self.mask.mean())


def _as_sampling(omega):
    return omega if isinstance(omega, Sampling2D) else Sampling2D(omega)


def _check_nonempty(omega):
    for i in range(omega.shape[0]):
        if omega.row_set(i).size == 0:
            raise ValueError(f"row {i + 1} of the sampling set is empty")
    for j in range(omega.shape[1]):
        if omega.column_set(j).size == 0:
            raise ValueError(f"column {j + 1} of the sampling set is empty")


def is_isomeric(x, omega, two_sided=False, rank_tol=1e-9):
    """Whether every column-indexed row submatrix of ``x`` preserves its rank.

    With ``two_sided`` the same is also required of the transpose against
    the transposed sampling set. Ranks are counted above
    rank_tol * sigma_1(x). Every row and column of the sampling set must be
    nonempty.
    """
    x = np.asarray(x, dtype=np.float64)
    omega = _as_sampling(omega)
    if x.shape != omega.shape:
        raise ValueError(f"matrix shape {x.shape} does not match sampling set {omega.shape}")
    _check_nonempty(omega)
    tol = rank_tol * float(np.linalg.norm(x, 2))
    full_rank = np.linalg.matrix_rank(x, tol=tol)
    for j in range(omega.shape[1]):
        sub = x[omega.column_set(j), :]
        if np.linalg.matrix_rank(sub, tol=tol) != full_rank:
            return False
    if two_sided:
        return is_isomeric(x.T, omega.transpose(), two_sided=False, rank_tol=rank_tol)
    return True


def relative_condition_number(x, omega, two_sided=False, rcond=1e-9):
    """gamma(x) = min over columns j of 1 / ||x @ pinv(x[rows_j, :])||^2.

    ``rows_j`` is the set of rows observed in column j. Values lie in (0, 1]
    when the submatrices span the row space of x. With ``two_sided`` the
    minimum also runs over the transposed problem.
    """
    x = np.asarray(x, dtype=np.float64)
    omega = _as_sampling(omega)
    if x.shape != omega.shape:
        raise ValueError(f"matrix shape {x.shape} does not match sampling set {omega.shape}")
    _check_nonempty(omega)
    gamma = math.inf
    for j in range(omega.shape[1]):
        sub = x[omega.column_set(j), :]
        if not sub.any():
            raise ValueError(f"the submatrix for column {j + 1} is zero")
        norm = float(np.linalg.norm(x @ np.linalg.pinv(sub, rcond=rcond), 2))
        gamma = min(gamma, 1.0 / (norm * norm))
    if two_sided:
        gamma = min(
            gamma,
            relative_condition_number(
                x.T, omega.transpose(), two_sided=False, rcond=rcond
            ),
        )
    return gamma


def matrix_coherence(x, rank_tol=1e-9):
    """Standard matrix coherence: max over both factors of the per-dimension
    normalized largest row norm of the truncated singular factors."""
    x = np.asarray(x, dtype=np.float64)
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        raise ValueError("coherence is undefined for a zero matrix")
    r = int(np.sum(s > rank_tol * s[0]))
    m1, m2 = x.shape
    mu_u = (m1 / r) * float(np.max(np.sum(u[:, :r] ** 2, axis=1)))
    mu_v = (m2 / r) * float(np.max(np.sum(vt[:r, :] ** 2, axis=0)))
    return max(mu_u, mu_v)


def noiseless_sampling_threshold(rank, coherence, m, k):
    """Observed fraction above which exact recovery is guaranteed:
    1 - 0.25 k / (coherence * rank * m), clamped to [0, 1]."""
    if rank < 1 or coherence < 1:
        raise ValueError("rank must be >= 1 and coherence >= 1")
    return float(min(1.0, max(0.0, 1.0 - 0.25 * k / (coherence * rank * m))))


def noisy_recovery_bound(rank, coherence, m, k, epsilon):
    """Sampling threshold and error bound for noisy observations.

    Returns (threshold, bound): above an observed fraction of
    1 - 0.22 k / (coherence * rank * m), any solution fitting the
    observations to within ``epsilon`` in Frobenius norm lies within
    (1 + sqrt(2)) (38 sqrt(k) + 2) epsilon of the target.
    """
    if rank < 1 or coherence < 1:
        raise ValueError("rank must be >= 1 and coherence >= 1")
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    threshold = float(min(1.0, max(0.0, 1.0 - 0.22 * k / (coherence * rank * m))))
    bound = (1.0 + math.sqrt(2.0)) * (38.0 * math.sqrt(k) + 2.0) * epsilon
    return threshold, bound


@dataclass
class DualDiagnostics:
    """Isomerism and conditioning of a concrete completion instance."""

    isomeric: bool
    gamma: float
    rho0: float
    threshold_noiseless: float
    threshold_noisy: float

    def to_dict(self):
        return {
            "isomeric": self.isomeric,
            "gamma": self.gamma,
            "rho0": self.rho0,
            "threshold_noiseless": self.threshold_noiseless,
            "threshold_noisy": self.threshold_noisy,
        }


def check_dual_isomerism(x, kernel, mask, rank_tol=1e-9):
    """Evaluate isomerism and gamma of the convolution matrix of ``x``
    against the convolution sampling set of ``mask``.

    Diagnostic only; it costs an SVD per column set and never gates a solve.
    The sampling thresholds are reported alongside for context.
    """
    x = check_tensor(x)
    mask = check_mask(mask, shape=x.shape)
    op = ConvOperator(x.shape, kernel)
    a = op.matrix(x)
    omega = Sampling2D(op.mask_matrix(mask))
    spectrum = conv_spectrum(x, kernel, rank_tol=rank_tol)
    rho0 = mask_density(mask)
    coherence = max(1.0, spectrum.coherence)
    thr_noiseless = noiseless_sampling_threshold(
        spectrum.rank, coherence, op.m, op.k
    )
    thr_noisy, _ = noisy_recovery_bound(spectrum.rank, coherence, op.m, op.k, 0.0)
    return DualDiagnostics(
        isomeric=is_isomeric(a, omega, two_sided=True, rank_tol=rank_tol),
        gamma=relative_condition_number(a, omega, two_sided=True),
        rho0=rho0,
        threshold_noiseless=thr_noiseless,
        threshold_noisy=thr_noisy,
    )
