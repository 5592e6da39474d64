"""Multi-dimensional DFT and sparsity statistics of spectra.

The forward transform is unnormalized (the transform matrix U along each
dimension satisfies U^H U = m I), so the adjoint of the forward map is
m times the inverse transform. At full kernel size the sorted convolution
eigenvalues of a tensor coincide with the sorted magnitudes of this
transform, which is what makes the l1 spectral program a special case of
convolution nuclear norm minimization.
"""

from __future__ import annotations

import numpy as np

__all__ = ["dft", "idft", "fourier_l0", "fourier_l1", "gini"]


def dft(x):
    """Unnormalized multi-dimensional DFT of a real tensor."""
    return np.fft.fftn(np.asarray(x, dtype=np.float64))


def idft(z, imag_tol=1e-9):
    """Inverse DFT back to a real tensor.

    The input must be (numerically) the transform of a real tensor; an
    imaginary residue above ``imag_tol`` times the input norm is an error,
    a smaller one is discarded.
    """
    z = np.asarray(z, dtype=np.complex128)
    out = np.fft.ifftn(z)
    scale = np.linalg.norm(z)
    residue = np.linalg.norm(out.imag)
    if residue > imag_tol * max(scale, np.finfo(np.float64).tiny):
        raise ValueError(
            "spectrum is not conjugate-symmetric: inverse transform has "
            f"imaginary residue {residue:.3e} (norm {scale:.3e})"
        )
    return np.ascontiguousarray(out.real)


def fourier_l0(x, tol=1e-8):
    """Number of spectrum magnitudes above ``tol`` times the largest one."""
    if tol < 0:
        raise ValueError(f"tol must be nonnegative, got {tol}")
    mags = np.abs(dft(x))
    peak = mags.max()
    if peak == 0.0:
        return 0
    return int(np.sum(mags > tol * peak))


def fourier_l1(x):
    """Sum of spectrum magnitudes."""
    return float(np.sum(np.abs(dft(x))))


def gini(values):
    """Gini sparsity index of a nonnegative sequence, in [0, 1].

    With c the entries sorted ascending and N their count,
    G = 1 - 2 * sum_k (c_k / ||c||_1) * ((N - k + 0.5) / N). The index is
    scale invariant, 0 for a flat vector, and approaches 1 for a one-hot
    vector as N grows.
    """
    c = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if c.size == 0 or np.any(c < 0):
        raise ValueError("gini requires a nonempty sequence of nonnegative values")
    total = c.sum()
    if total == 0.0:
        raise ValueError("gini is undefined for an all-zero sequence")
    n = c.size
    weights = (n - np.arange(1, n + 1) + 0.5) / n
    return float(1.0 - 2.0 * np.sum((c / total) * weights))
