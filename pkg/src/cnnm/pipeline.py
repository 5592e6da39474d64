"""Forecasting drivers, evaluation metrics, and the benchmark harness.

Forecasting reduces to completion: stack the history samples along a new
trailing time axis, append zero-filled slots for the horizon, and mark
everything up to the present as observed. Recovering the stacked tensor
from those entries fills in the future. The phase-transition harness maps
out where that recovery succeeds over tone count and observed fraction for
sinusoid mixtures, under both random and deterministic-tail sampling.
"""

from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .selection import select_kernel
from .solvers import SolverConfig, solve_cnnm, solve_dftl1
from .tensors import mask_count, mask_density, random_mask, tail_mask
from .validation import check_kernel, check_mask

__all__ = [
    "stack_history",
    "ForecastTask",
    "ForecastResult",
    "forecast",
    "psnr_on_mask",
    "make_sine_mixture",
    "PhaseTransitionSpec",
    "PhaseTransitionResult",
    "run_phase_transition",
    "success_thresholds",
    "count_density_monotonicity_violations",
]


def stack_history(history, horizon, history_mask=None):
    """Stack history samples into a tensor with unknown tail slices.

    Parameters
    ----------
    history : sequence of arrays, or array
        p samples of identical shape. A plain array is read with its first
        axis enumerating the samples (so a 1-D array is a univariate
        series). The samples become slices along a new trailing time axis.
    horizon : int
        Number of future slices to append (zero-filled; their values are
        never read through the mask).
    history_mask : optional
        0/1 indicator of which history entries are actually observed, same
        layout as ``history``. Use it when the history itself has gaps.

    Returns
    -------
    (tensor, mask)
        The stacked tensor of shape (*sample_shape, p + horizon) and the
        observation indicator.
    """
    samples = [np.asarray(h, dtype=np.float64) for h in history]
    if not samples:
        raise ValueError("history must contain at least one sample")
    shape0 = samples[0].shape
    for t, s in enumerate(samples, start=1):
        if s.shape != shape0:
            raise ValueError(
                f"history sample {t} has shape {s.shape}, expected {shape0}"
            )
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    p = len(samples)
    stacked = np.stack(samples, axis=-1)
    tensor = np.concatenate(
        [stacked, np.zeros(shape0 + (horizon,))], axis=-1
    )
    mask = tail_mask(tensor.shape, observed=p)
    if history_mask is not None:
        hist = check_mask(np.stack([np.asarray(h) for h in history_mask], axis=-1))
        if hist.shape != stacked.shape:
            raise ValueError(
                f"history mask shape {hist.shape} does not match history {stacked.shape}"
            )
        mask[..., :p] *= hist
    return tensor, mask


@dataclass
class ForecastTask:
    """A forecasting problem: history plus horizon plus solver choices.

    ``kernel`` may be an explicit size or "auto", which picks
    round(alpha * time) on the time axis (clamped above the horizon) and
    min(image_kernel, m_j) on the others. ``method`` is "cnnm" or "dftl1";
    the latter ignores the kernel.
    """

    history: object
    horizon: int
    method: str = "cnnm"
    kernel: object = "auto"
    alpha: float = 0.5
    image_kernel: int = 13
    history_mask: object = None
    config: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class ForecastResult:
    predicted: np.ndarray
    completed: np.ndarray
    report: object
    kernel: tuple | None
    diagnostics: dict


def forecast(task):
    """Solve a :class:`ForecastTask`; returns the recovered tail slices.

    A non-converged solve is not an error: the report carries
    ``converged=False`` and the partial result is returned.
    """
    tensor, mask = stack_history(task.history, task.horizon, task.history_mask)
    method = task.method.lower()
    if method not in ("cnnm", "dftl1"):
        raise ValueError(f"unknown method {task.method!r}, expected cnnm or dftl1")
    kernel = None
    if method == "cnnm":
        if isinstance(task.kernel, str):
            if task.kernel != "auto":
                raise ValueError(f"unknown kernel spec {task.kernel!r}")
            kernel = select_kernel(
                tensor.shape,
                task.horizon,
                alpha=task.alpha,
                image_default=task.image_kernel,
            )
        else:
            kernel = check_kernel(task.kernel, tensor.shape)
        completed, report = solve_cnnm(tensor, mask, kernel, task.config)
    else:
        completed, report = solve_dftl1(tensor, mask, task.config)
    predicted = completed[..., -task.horizon :]
    diagnostics = {
        "method": method,
        "kernel": kernel,
        "rho0": mask_density(mask),
        "shape": tensor.shape,
    }
    return ForecastResult(
        predicted=np.ascontiguousarray(predicted),
        completed=completed,
        report=report,
        kernel=kernel,
        diagnostics=diagnostics,
    )


def psnr_on_mask(truth, estimate, eval_mask):
    """Peak signal-to-noise ratio in dB, restricted to the masked entries.

    The peak is the largest absolute value of ``truth`` over the whole
    tensor; the mean squared error runs over the masked entries only. An
    exact match returns +inf.
    """
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    eval_mask = check_mask(eval_mask, shape=truth.shape, name="eval_mask")
    if estimate.shape != truth.shape:
        raise ValueError(f"estimate shape {estimate.shape} does not match {truth.shape}")
    count = mask_count(eval_mask)
    if count == 0:
        raise ValueError("evaluation mask has no entries")
    peak = float(np.max(np.abs(truth)))
    mse = float(np.sum(eval_mask * (truth - estimate) ** 2)) / count
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / mse))


def make_sine_mixture(m, tones, normalize=True):
    """Sum of the first ``tones`` harmonics: sum_i sin(2 pi t i / m), t=1..m.

    The spectrum has exactly 2 * tones nonzero bins. With ``normalize`` the
    values are scaled to a maximum of 1.
    """
    m = int(m)
    tones = int(tones)
    if tones < 1:
        raise ValueError(f"tones must be >= 1, got {tones}")
    if 2 * tones >= m:
        raise ValueError(
            f"need 2 * tones < m to keep the {2 * tones} spectral bins distinct, got m={m}"
        )
    t = np.arange(1, m + 1, dtype=np.float64)
    x = np.zeros(m)
    for i in range(1, tones + 1):
        x += np.sin(2.0 * np.pi * t * i / m)
    if normalize:
        x /= np.max(x)
    return x


@dataclass
class PhaseTransitionSpec:
    """Grid specification for the sinusoid recovery benchmark.

    For every (tone count, observed fraction) cell a mask is drawn per the
    sampling mode, the chosen solver runs, and the cell counts as a success
    when the PSNR on the missing entries exceeds ``success_psnr`` in every
    trial. Random-mode masks are drawn from a counter-based generator keyed
    by (master_seed, tone index, density index, trial), so grids reproduce
    exactly across platforms. Deterministic-tail mode has a single trial by
    construction.
    """

    m: int = 1000
    tone_counts: tuple = tuple(range(1, 20))
    densities: tuple = tuple(np.round(np.arange(0.05, 0.96, 0.05), 2))
    mode: str = "random"
    trials: int = 1
    success_psnr: float = 50.0
    method: str = "dftl1"
    kernel: tuple | None = None
    master_seed: int = 0
    config: SolverConfig = field(default_factory=SolverConfig)
    threads: int | None = None

    def validate(self):
        if self.mode not in ("random", "deterministic-tail"):
            raise ValueError(
                f"mode must be random or deterministic-tail, got {self.mode!r}"
            )
        if self.method not in ("dftl1", "cnnm"):
            raise ValueError(f"method must be dftl1 or cnnm, got {self.method!r}")
        if int(self.trials) < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        for rho in self.densities:
            if not 0.0 < rho < 1.0:
                raise ValueError(f"densities must lie in (0, 1), got {rho}")
        for a in self.tone_counts:
            if not 1 <= int(a) < self.m / 2:
                raise ValueError(f"tone count {a} invalid for m={self.m}")
        return self

    def to_dict(self):
        d = asdict(self)
        d["tone_counts"] = [int(a) for a in self.tone_counts]
        d["densities"] = [float(r) for r in self.densities]
        d["kernel"] = None if self.kernel is None else [int(k) for k in self.kernel]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "config" in d and isinstance(d["config"], dict):
            d["config"] = SolverConfig(**d["config"])
        for key in ("tone_counts", "densities"):
            if key in d:
                d[key] = tuple(d[key])
        if d.get("kernel") is not None:
            d["kernel"] = tuple(d["kernel"])
        return cls(**d).validate()


@dataclass
class PhaseTransitionResult:
    spec: PhaseTransitionSpec
    success: np.ndarray  # tones x densities, bool
    records: list
    manifest: dict


def _cell_seed_key(master_seed, tone_index, density_index, trial):
    packed = (
        (np.uint64(tone_index) << np.uint64(40))
        ^ (np.uint64(density_index) << np.uint64(20))
        ^ np.uint64(trial)
    )
    return np.array([np.uint64(master_seed), packed], dtype=np.uint64)


def _run_cell(spec, signal, tone_index, density_index):
    m = spec.m
    rho = float(spec.densities[density_index])
    observed = int(round(rho * m))
    trials = 1 if spec.mode == "deterministic-tail" else int(spec.trials)
    psnrs = []
    successes = 0
    for trial in range(trials):
        if spec.mode == "deterministic-tail":
            mask = tail_mask((m,), observed)
        else:
            rng = np.random.Generator(
                np.random.Philox(
                    key=_cell_seed_key(
                        spec.master_seed, tone_index, density_index, trial
                    )
                )
            )
            mask = random_mask((m,), count=observed, rng=rng)
        if spec.method == "dftl1":
            recovered, _ = solve_dftl1(signal, mask, spec.config)
        else:
            kernel = spec.kernel if spec.kernel is not None else (m,)
            recovered, _ = solve_cnnm(signal, mask, kernel, spec.config)
        value = psnr_on_mask(signal, recovered, 1.0 - mask)
        psnrs.append(value)
        if value > spec.success_psnr:
            successes += 1
    return {
        "a": int(spec.tone_counts[tone_index]),
        "rho0": rho,
        "mode": spec.mode,
        "trials": trials,
        "successes": successes,
        "mean_psnr": float(np.mean(psnrs)),
    }


def run_phase_transition(spec):
    """Run the benchmark grid; cells are independent and may run in threads.

    ``spec.threads`` greater than 1 enables a thread pool (cells release the
    GIL inside the numerical kernels); results are merged by cell index so
    the outcome does not depend on scheduling.
    """
    spec = spec.validate()
    signals = {
        int(a): make_sine_mixture(spec.m, int(a)) for a in spec.tone_counts
    }
    cells = [
        (ti, ri)
        for ti in range(len(spec.tone_counts))
        for ri in range(len(spec.densities))
    ]

    def work(cell):
        ti, ri = cell
        return cell, _run_cell(spec, signals[int(spec.tone_counts[ti])], ti, ri)

    results = {}
    threads = spec.threads or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for cell, record in pool.map(work, cells):
                results[cell] = record
    else:
        for cell in cells:
            results[cell] = work(cell)[1]

    success = np.zeros((len(spec.tone_counts), len(spec.densities)), dtype=bool)
    records = []
    for (ti, ri), record in sorted(results.items()):
        success[ti, ri] = record["successes"] == record["trials"]
        records.append(record)
    manifest = {
        "spec": spec.to_dict(),
        "seeding": "Philox keyed by (master_seed, tone_index, density_index, trial)",
        "aggregation": "a cell succeeds when every trial exceeds the PSNR gate",
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
    }
    return PhaseTransitionResult(
        spec=spec, success=success, records=records, manifest=manifest
    )


def success_thresholds(result):
    """Smallest observed fraction that succeeds, per tone count (None if none)."""
    out = []
    for ti in range(len(result.spec.tone_counts)):
        row = result.success[ti]
        hits = np.flatnonzero(row)
        out.append(float(result.spec.densities[hits[0]]) if hits.size else None)
    return out


def count_density_monotonicity_violations(result):
    """Cells where success at some density turns into failure at the next
    higher density, for the same tone count."""
    grid = result.success
    return int(np.sum(grid[:, :-1] & ~grid[:, 1:]))
