"""The circular convolution operator and its spectral quantities.

For an order-n tensor X of shape (m_1, ..., m_n) and a kernel size
(k_1, ..., k_n) with k_j <= m_j, the convolution matrix of X is the m-by-k
matrix (m = prod m_j, k = prod k_j) whose column j is the vectorization of X
circularly shifted by (i_1 - 1, ..., i_n - 1) positions, where the shift
offsets enumerate the kernel grid in first-dimension-fastest order:
j = 1 + sum_a (i_a - 1) * prod_{b<a} k_b.

Circular convolution with any kernel K then factors through this matrix:
vec(X conv K) = conv_matrix(X) @ vec(K). The singular values of the matrix
are the convolution eigenvalues of X; the right singular vectors, reshaped
to the kernel grid, are its convolution eigenvectors (a bank of ordered
filters). Their count above threshold is the convolution rank and their sum
the convolution nuclear norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_kernel, check_mask, check_tensor

__all__ = [
    "DEFAULT_MATRIX_CAP",
    "ConvOperator",
    "ConvSpectrum",
    "conv_apply",
    "conv_matrix",
    "conv_adjoint",
    "conv_mask",
    "conv_spectrum",
    "conv_eigenvectors",
    "gram_matrix",
]

# Refuse to materialize convolution matrices above this many entries.
DEFAULT_MATRIX_CAP = 1 << 26


def _shift_table(shape, kdims, rows=None):
    """Gather table for the convolution matrix.

    Entry (t, j) is the Fortran-order flat position in X holding
    conv_matrix(X)[t, j]. ``rows`` restricts to a subset of row positions.
    """
    m = int(np.prod(shape))
    k = int(np.prod(kdims))
    if rows is None:
        rows = np.arange(m, dtype=np.intp)
    else:
        rows = np.asarray(rows, dtype=np.intp)
    table = np.zeros((rows.size, k), dtype=np.intp)
    cols = np.arange(k, dtype=np.intp)
    row_stride = 1
    col_stride = 1
    for mj, kj in zip(shape, kdims):
        rcoord = (rows // row_stride) % mj
        ccoord = (cols // col_stride) % kj
        table += ((rcoord[:, None] - ccoord[None, :]) % mj) * row_stride
        row_stride *= mj
        col_stride *= kj
    return table


class ConvOperator:
    """Implicit linear map X -> conv_matrix(X) for a fixed shape and kernel.

    Holds the precomputed shift table so repeated forward/adjoint
    applications (as in the completion solvers) cost one gather or scatter
    each. Instances are immutable and safe to share between threads.
    """

    def __init__(self, shape, kernel, max_entries=None):
        self.shape = tuple(int(s) for s in shape)
        self.kernel = check_kernel(kernel, self.shape)
        self.m = int(np.prod(self.shape))
        self.k = int(np.prod(self.kernel))
        if max_entries is not None and self.m * self.k > max_entries:
            raise ValueError(
                f"convolution matrix would hold {self.m * self.k} entries, "
                f"above the cap of {max_entries}; reduce the kernel size "
                f"(currently {'x'.join(map(str, self.kernel))}) or raise the cap"
            )
        self._table = _shift_table(self.shape, self.kernel)

    def matrix(self, x):
        """The m-by-k convolution matrix of ``x``."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.shape:
            raise ValueError(f"tensor shape {x.shape} does not match {self.shape}")
        return x.ravel(order="F")[self._table]

    def adjoint(self, z):
        """Adjoint of :meth:`matrix`: sums the inverse-shifted columns.

        Satisfies <matrix(X), Z> = <X, adjoint(Z)> and
        adjoint(matrix(X)) = k * X.
        """
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.m, self.k):
            raise ValueError(
                f"matrix shape {z.shape} does not match ({self.m}, {self.k})"
            )
        flat = np.bincount(
            self._table.ravel(), weights=z.ravel(), minlength=self.m
        )
        return flat.reshape(self.shape, order="F")

    def mask_matrix(self, mask):
        """Convolution sampling indicator: conv_matrix applied to a 0/1 mask.

        Shifting permutes entries, so the result is again exactly 0/1 valued,
        and every column holds exactly card(mask) ones.
        """
        return self.matrix(check_mask(mask, shape=self.shape))


def conv_apply(x, kernel):
    """Circular convolution of ``x`` with ``kernel``.

    Computed through the FFT; equals conv_matrix(x) @ vec(kernel) reshaped
    back to the tensor grid. The kernel may not exceed the tensor along any
    dimension.
    """
    x = np.asarray(x, dtype=np.float64)
    kern = np.asarray(kernel, dtype=np.float64)
    if kern.ndim != x.ndim:
        raise ValueError(
            f"kernel order {kern.ndim} does not match tensor order {x.ndim}"
        )
    for j, (kj, mj) in enumerate(zip(kern.shape, x.shape), start=1):
        if kj > mj:
            raise ValueError(
                f"kernel is larger than the tensor along dimension {j} ({kj} > {mj})"
            )
    padded = np.zeros(x.shape, dtype=np.float64)
    padded[tuple(slice(0, s) for s in kern.shape)] = kern
    out = np.fft.ifftn(np.fft.fftn(x) * np.fft.fftn(padded))
    return np.ascontiguousarray(out.real)


def conv_matrix(x, kernel, max_entries=DEFAULT_MATRIX_CAP):
    """Materialize the m-by-k convolution matrix of ``x``.

    Refuses to allocate above ``max_entries`` entries; pass ``None`` to
    disable the guard.
    """
    x = np.asarray(x, dtype=np.float64)
    return ConvOperator(x.shape, kernel, max_entries=max_entries).matrix(x)


def conv_adjoint(z, shape, kernel):
    """Adjoint of the convolution-matrix map for the given shape and kernel."""
    return ConvOperator(shape, kernel).adjoint(z)


def conv_mask(mask, kernel):
    """Convolution sampling indicator of a mask (see ConvOperator.mask_matrix)."""
    mask = check_mask(mask)
    return ConvOperator(mask.shape, kernel).mask_matrix(mask)


def gram_matrix(x, kernel):
    """The k-by-k Gram matrix conv_matrix(x).T @ conv_matrix(x).

    Built from the circular autocorrelation of ``x`` (one FFT round trip),
    so it never materializes the m-by-k matrix.
    """
    x = np.asarray(x, dtype=np.float64)
    kdims = check_kernel(kernel, x.shape)
    spec = np.fft.fftn(x)
    acorr = np.fft.ifftn(spec * np.conj(spec)).real.ravel(order="F")
    k = int(np.prod(kdims))
    cols = np.arange(k, dtype=np.intp)
    table = np.zeros((k, k), dtype=np.intp)
    col_stride = 1
    row_stride = 1
    for mj, kj in zip(x.shape, kdims):
        c = (cols // col_stride) % kj
        table += ((c[:, None] - c[None, :]) % mj) * row_stride
        col_stride *= kj
        row_stride *= mj
    return acorr[table]


@dataclass
class ConvSpectrum:
    """Spectral summary of a convolution matrix.

    ``left_vectors`` (m-by-min(m,k)) and ``right_vectors`` (k-by-min(m,k))
    hold orthonormal columns; ``left_vectors`` is None when the matrix was
    too large to materialize and the Gram fallback was used. ``coherence``
    follows the definition (m / rank) * max over the rows of both truncated
    factors; note the m prefactor applies to the k-row right factor as well,
    so for wide gaps between m and k the right factor can dominate. Pass
    ``normalization="per-factor"`` to :func:`conv_spectrum` for the variant
    that weights each factor by its own row count.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray | None
    right_vectors: np.ndarray
    rank: int
    nuclear_norm: float
    coherence: float


def _coherence(u_rownorms_sq, v_rownorms_sq, rank, m, k, normalization):
    if rank == 0:
        return float("nan")
    u = float(np.max(u_rownorms_sq))
    v = float(np.max(v_rownorms_sq))
    if normalization == "literal":
        return (m / rank) * max(u, v)
    if normalization == "per-factor":
        return max((m / rank) * u, (k / rank) * v)
    raise ValueError(f"unknown normalization {normalization!r}")


def _rank_from_singular_values(s, rank_tol):
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def conv_spectrum(
    x,
    kernel,
    rank_tol=1e-9,
    max_entries=DEFAULT_MATRIX_CAP,
    normalization="literal",
):
    """Singular values, rank, nuclear norm and coherence of conv_matrix(x).

    Parameters
    ----------
    x : array
        Input tensor.
    kernel : sequence of int
        Kernel size (k_1, ..., k_n), each k_j <= m_j.
    rank_tol : float
        Rank counts singular values above rank_tol * sigma_1.
    max_entries : int or None
        Materialization cap. Within the cap the matrix is materialized and
        decomposed directly, which resolves singular values down to machine
        precision times sigma_1. Above it a Gram-based fallback is used whose
        small singular values are only accurate to about sqrt(eps) * sigma_1;
        left vectors are not formed in that mode.
    normalization : {"literal", "per-factor"}
        Coherence convention, see :class:`ConvSpectrum`.
    """
    x = check_tensor(x)
    kdims = check_kernel(kernel, x.shape)
    m = x.size
    k = int(np.prod(kdims))
    if max_entries is None or m * k <= max_entries:
        op = ConvOperator(x.shape, kdims)
        a = op.matrix(x)
        try:
            u, s, vt = np.linalg.svd(a, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(
                "singular value decomposition of the convolution matrix failed"
            ) from exc
        v = vt.T
        rank = _rank_from_singular_values(s, rank_tol)
        coh = _coherence(
            np.sum(u[:, :rank] ** 2, axis=1) if rank else np.zeros(1),
            np.sum(v[:, :rank] ** 2, axis=1) if rank else np.zeros(1),
            rank,
            m,
            k,
            normalization,
        )
        return ConvSpectrum(s, u, v, rank, float(np.sum(s)), coh)

    # Gram fallback for matrices above the cap.
    gram = gram_matrix(x, kdims)
    try:
        evals, v = np.linalg.eigh((gram + gram.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            "eigendecomposition of the convolution Gram matrix failed"
        ) from exc
    s = np.sqrt(np.clip(evals[::-1], 0.0, None))
    v = v[:, ::-1]
    rank = _rank_from_singular_values(s, rank_tol)
    if rank == 0:
        return ConvSpectrum(s, None, v, 0, float(np.sum(s)), float("nan"))
    # Row norms of the left factor, streamed in row blocks.
    vr = v[:, :rank] / s[:rank]
    u_rownorms_sq = np.empty(m)
    block = max(1, int(max_entries // k))
    for start in range(0, m, block):
        rows = np.arange(start, min(start + block, m), dtype=np.intp)
        a_block = x.ravel(order="F")[_shift_table(x.shape, kdims, rows=rows)]
        u_rownorms_sq[rows] = np.sum((a_block @ vr) ** 2, axis=1)
    coh = _coherence(
        u_rownorms_sq, np.sum(v[:, :rank] ** 2, axis=1), rank, m, k, normalization
    )
    return ConvSpectrum(s, None, v, rank, float(np.sum(s)), coh)


def conv_eigenvectors(x, kernel, count, max_entries=DEFAULT_MATRIX_CAP):
    """First ``count`` convolution eigenvectors of ``x``, kernel-shaped.

    The i-th output is the i-th right singular vector of the convolution
    matrix reshaped to the kernel grid. Each has unit Frobenius norm, they
    are mutually orthogonal, and the convolution of ``x`` with the i-th one
    has Frobenius norm equal to the i-th convolution eigenvalue.
    """
    x = check_tensor(x)
    kdims = check_kernel(kernel, x.shape)
    k = int(np.prod(kdims))
    count = int(count)
    if not 1 <= count <= k:
        raise ValueError(f"count must lie in 1..{k}, got {count}")
    spectrum = conv_spectrum(x, kdims, max_entries=max_entries)
    vecs = spectrum.right_vectors[:, :count]
    return np.stack(
        [vecs[:, i].reshape(kdims, order="F") for i in range(count)], axis=0
    )
