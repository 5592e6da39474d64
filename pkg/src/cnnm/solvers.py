"""ADMM solvers for masked tensor recovery.

Three penalized programs share one alternating scheme, differing only in the
splitting transform and its proximal step:

* convolution nuclear norm: min ||conv_matrix(L)||_* + (lam k / 2) ||P(L - M)||_F^2
* spectral l1:              min ||dft(L)||_1       + (lam m / 2) ||P(L - M)||_F^2
* plain nuclear norm:       min ||L||_*            + (lam / 2)   ||P(L - M)||_F^2

where P masks to the observed entries. Each iteration applies the proximal
operator of the regularizer to the transformed iterate, solves the quadratic
subproblem for L (an entrywise division thanks to transform^T transform
being a multiple of the identity), updates the multiplier, and grows the
penalty parameter tau geometrically up to a ceiling.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .convop import ConvOperator
from .validation import check_kernel, check_mask, check_positive, check_tensor

__all__ = [
    "SolverConfig",
    "SolveReport",
    "svt",
    "complex_shrink",
    "solve_cnnm",
    "solve_dftl1",
    "solve_nnm",
]


@dataclass
class SolverConfig:
    """Hyperparameters shared by the ADMM solvers.

    ``lam`` weighs data fidelity (large values pin the observed entries).
    ``tau0`` is the initial penalty; when None it defaults to 1e-4 times the
    splitting scale (kernel element count, tensor size, or 1 depending on
    the solver). ``rng_seed`` is reserved for randomized initialization
    strategies; the default initialization is deterministic and ignores it.
    """

    lam: float = 1000.0
    tau0: float | None = None
    tau_growth: float = 1.05
    tau_max: float = 1e8
    max_iters: int = 500
    primal_tol: float = 1e-8
    change_tol: float = 1e-9
    rng_seed: int = 0
    matrix_budget_bytes: int = 2 << 30

    def validate(self):
        check_positive(self.lam, "lam")
        if self.tau0 is not None:
            check_positive(self.tau0, "tau0")
        if self.tau_growth < 1.0:
            raise ValueError(f"tau_growth must be >= 1, got {self.tau_growth}")
        check_positive(self.tau_max, "tau_max")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        check_positive(self.primal_tol, "primal_tol")
        check_positive(self.change_tol, "change_tol")
        if int(self.matrix_budget_bytes) < 1:
            raise ValueError("matrix_budget_bytes must be positive")
        return self


@dataclass
class SolveReport:
    """Per-run diagnostics.

    ``primal_residuals[i]`` is ||transform(L) - Z||_F / max(1, ||transform(L)||_F)
    after iteration i, ``objective_trace[i]`` the penalized objective with the
    regularizer evaluated at the splitting variable Z.
    """

    iterations: int
    converged: bool
    primal_residuals: list[float] = field(default_factory=list)
    objective_trace: list[float] = field(default_factory=list)
    wall_time_sec: float = 0.0

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "primal_residuals": list(self.primal_residuals),
            "objective_trace": list(self.objective_trace),
            "wall_time_sec": self.wall_time_sec,
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent)


def svt(matrix, threshold):
    """Singular value thresholding, the proximal operator of the nuclear norm.

    Returns U max(S - threshold, 0) V^T; the minimizer of
    threshold * ||Z||_* + 0.5 * ||Z - matrix||_F^2.
    """
    z, _ = _svt_with_norm(matrix, threshold)
    return z


def _svt_with_norm(matrix, threshold):
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    matrix = np.asarray(matrix, dtype=np.float64)
    try:
        u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("singular value decomposition failed in svt") from exc
    s = s - threshold
    keep = int(np.sum(s > 0))
    if keep == 0:
        return np.zeros_like(matrix), 0.0
    z = (u[:, :keep] * s[:keep]) @ vt[:keep]
    return z, float(np.sum(s[:keep]))


def complex_shrink(z, alpha):
    """Entrywise magnitude shrinkage preserving phase.

    Maps each entry with |z| > alpha to (|z| - alpha) / |z| * z and the rest
    to 0; the proximal operator of alpha * ||.||_1 over complex tensors. On
    real input this is ordinary soft thresholding.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    z = np.asarray(z)
    mag = np.abs(z)
    scale = np.maximum(mag - alpha, 0.0) / np.where(mag > 0, mag, 1.0)
    return z * scale


def _admm(m_data, mask, cfg, forward, adjoint, prox, scale):
    """Shared ADMM loop; see the module docstring for the update order."""
    lam = cfg.lam
    tau = cfg.tau0 if cfg.tau0 is not None else 1e-4 * scale
    observed = lam * mask * m_data
    denom_obs = lam * mask
    iterate = mask * m_data
    transformed = forward(iterate)
    dual = np.zeros_like(transformed)

    residuals = []
    objectives = []
    converged = False
    start = time.perf_counter()
    iterations = 0
    for _ in range(int(cfg.max_iters)):
        iterations += 1
        split, split_norm = prox(transformed + dual / tau, 1.0 / tau)
        new_iterate = (adjoint(tau * split - dual) / scale + observed) / (
            denom_obs + tau
        )
        transformed = forward(new_iterate)
        dual = dual + tau * (transformed - split)

        gap = float(np.linalg.norm(transformed - split))
        primal = gap / max(1.0, float(np.linalg.norm(transformed)))
        change = float(np.linalg.norm(new_iterate - iterate)) / max(
            1.0, float(np.linalg.norm(iterate))
        )
        fit = float(np.linalg.norm(mask * (new_iterate - m_data)))
        residuals.append(primal)
        objectives.append(split_norm + 0.5 * lam * scale * fit**2)
        iterate = new_iterate
        if primal <= cfg.primal_tol and change <= cfg.change_tol:
            converged = True
            break
        tau = min(tau * cfg.tau_growth, cfg.tau_max)

    report = SolveReport(
        iterations=iterations,
        converged=converged,
        primal_residuals=residuals,
        objective_trace=objectives,
        wall_time_sec=time.perf_counter() - start,
    )
    return iterate, report


def _prepare(m_data, mask, cfg):
    cfg = (cfg or SolverConfig()).validate()
    m_data = check_tensor(m_data, name="data")
    mask = check_mask(mask, shape=m_data.shape)
    if not mask.any():
        raise ValueError("the sampling mask has no observed entries")
    return m_data, mask, cfg


def solve_cnnm(m_data, mask, kernel, cfg=None):
    """Complete a tensor by convolution nuclear norm minimization.

    Parameters
    ----------
    m_data : array
        Observed tensor; values at unobserved positions are ignored.
    mask : array
        0/1 indicator of the observed entries, same shape as ``m_data``.
    kernel : sequence of int
        Kernel size; the solver's per-iteration cost is dominated by an SVD
        of an m-by-k matrix, k = prod(kernel).
    cfg : SolverConfig, optional

    Returns
    -------
    (tensor, SolveReport)
        The recovered tensor and per-iteration diagnostics. When the
        iteration budget runs out before the tolerances are met the report
        has ``converged=False`` and the last iterate is returned.
    """
    m_data, mask, cfg = _prepare(m_data, mask, cfg)
    kdims = check_kernel(kernel, m_data.shape)
    op = ConvOperator(m_data.shape, kdims)
    needed = op.m * op.k * 8
    if needed > cfg.matrix_budget_bytes:
        raise ValueError(
            f"the {op.m}x{op.k} splitting iterate needs {needed} bytes, above "
            f"the budget of {cfg.matrix_budget_bytes}; reduce the kernel size "
            f"(currently {'x'.join(map(str, kdims))}) or raise "
            "matrix_budget_bytes"
        )
    return _admm(
        m_data,
        mask,
        cfg,
        forward=op.matrix,
        adjoint=op.adjoint,
        prox=_svt_with_norm,
        scale=float(op.k),
    )


def solve_dftl1(m_data, mask, cfg=None):
    """Complete a tensor by l1 minimization of its spectrum.

    Equivalent to :func:`solve_cnnm` with the kernel as large as the tensor,
    but each iteration costs only O(m log m) through the FFT.
    """
    m_data, mask, cfg = _prepare(m_data, mask, cfg)
    m = m_data.size

    def forward(x):
        return np.fft.fftn(x)

    def adjoint(z):
        # The adjoint of the unnormalized transform is m times its inverse;
        # the imaginary residue is an exact zero up to roundoff here because
        # the iterates keep conjugate symmetry.
        return np.fft.ifftn(z).real * m

    def prox(w, alpha):
        z = complex_shrink(w, alpha)
        return z, float(np.sum(np.abs(z)))

    return _admm(
        m_data, mask, cfg, forward=forward, adjoint=adjoint, prox=prox, scale=float(m)
    )


def solve_nnm(m_data, mask, cfg=None):
    """Matrix completion baseline: plain nuclear norm minimization.

    Only defined for order-2 tensors. Minimizes the Tucker-rank surrogate,
    so rows or columns with no observed entry are recovered as zero; that
    failure mode is what the convolution regularizers avoid.
    """
    m_data, mask, cfg = _prepare(m_data, mask, cfg)
    if m_data.ndim != 2:
        raise ValueError(f"nuclear norm baseline expects a matrix, got order {m_data.ndim}")
    return _admm(
        m_data,
        mask,
        cfg,
        forward=lambda x: x,
        adjoint=lambda z: z,
        prox=_svt_with_norm,
        scale=1.0,
    )
