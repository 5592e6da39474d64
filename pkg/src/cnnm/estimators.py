"""Estimator front end: completion and forecasting with the sklearn API.

The completers behave like imputers: missing entries are marked by NaN or
an explicit mask, ``fit`` runs the solve, ``transform`` returns the
completed tensor. The forecaster follows fit-then-predict: ``fit`` stores
the history and solves, ``predict`` returns the horizon slices. All of
them expose their hyperparameters through ``get_params``/``set_params`` so
they compose with pipelines, grid search and cloning.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .pipeline import ForecastTask, forecast
from .solvers import SolverConfig, solve_cnnm, solve_dftl1, solve_nnm
from .validation import check_mask

__all__ = ["CNNMCompleter", "DFTL1Completer", "NNMCompleter", "CNNMForecaster"]


def _split_observations(x, mask):
    x = np.asarray(x, dtype=np.float64)
    if mask is None:
        mask = (~np.isnan(x)).astype(np.float64)
    else:
        mask = check_mask(mask, shape=x.shape)
    filled = np.where(mask > 0, x, 0.0)
    if not np.all(np.isfinite(filled)):
        raise ValueError("observed entries contain non-finite values")
    return filled, mask


class _CompleterBase(TransformerMixin, BaseEstimator):
    def __init__(
        self,
        lam=1000.0,
        tau0=None,
        tau_growth=1.05,
        tau_max=1e8,
        max_iters=500,
        primal_tol=1e-8,
        change_tol=1e-9,
    ):
        self.lam = lam
        self.tau0 = tau0
        self.tau_growth = tau_growth
        self.tau_max = tau_max
        self.max_iters = max_iters
        self.primal_tol = primal_tol
        self.change_tol = change_tol

    def _config(self):
        return SolverConfig(
            lam=self.lam,
            tau0=self.tau0,
            tau_growth=self.tau_growth,
            tau_max=self.tau_max,
            max_iters=self.max_iters,
            primal_tol=self.primal_tol,
            change_tol=self.change_tol,
        )

    def _solve(self, x, mask):
        raise NotImplementedError

    def fit(self, X, y=None, mask=None):
        """Solve the completion problem for ``X``; missing entries are NaN
        unless ``mask`` marks them explicitly."""
        filled, mask = _split_observations(X, mask)
        self.tensor_, self.report_ = self._solve(filled, mask)
        self.mask_ = mask
        return self

    def transform(self, X, mask=None):
        """Complete ``X``. Runs a fresh solve with the fitted parameters."""
        filled, mask = _split_observations(X, mask)
        completed, _ = self._solve(filled, mask)
        return completed

    def fit_transform(self, X, y=None, mask=None):
        return self.fit(X, y=y, mask=mask).tensor_


class CNNMCompleter(_CompleterBase):
    """Tensor completion by convolution nuclear norm minimization."""

    def __init__(
        self,
        kernel=None,
        image_kernel=13,
        lam=1000.0,
        tau0=None,
        tau_growth=1.05,
        tau_max=1e8,
        max_iters=500,
        primal_tol=1e-8,
        change_tol=1e-9,
    ):
        super().__init__(
            lam=lam,
            tau0=tau0,
            tau_growth=tau_growth,
            tau_max=tau_max,
            max_iters=max_iters,
            primal_tol=primal_tol,
            change_tol=change_tol,
        )
        self.kernel = kernel
        self.image_kernel = image_kernel

    def _solve(self, x, mask):
        kernel = self.kernel
        if kernel is None:
            kernel = tuple(min(int(self.image_kernel), s) for s in x.shape)
        return solve_cnnm(x, mask, kernel, self._config())


class DFTL1Completer(_CompleterBase):
    """Tensor completion by l1 minimization of the spectrum."""

    def _solve(self, x, mask):
        return solve_dftl1(x, mask, self._config())


class NNMCompleter(_CompleterBase):
    """Matrix completion baseline by plain nuclear norm minimization."""

    def _solve(self, x, mask):
        return solve_nnm(x, mask, self._config())


class CNNMForecaster(BaseEstimator):
    """Forecast future samples of a tensor-valued series.

    ``fit`` takes the history with the first axis enumerating samples (a
    1-D array is a univariate series) and solves the induced completion
    problem; ``predict`` returns the recovered horizon slices, stacked
    along the trailing time axis.
    """

    def __init__(
        self,
        horizon=1,
        method="cnnm",
        kernel="auto",
        alpha=0.5,
        image_kernel=13,
        lam=1000.0,
        tau0=None,
        tau_growth=1.05,
        tau_max=1e8,
        max_iters=500,
        primal_tol=1e-8,
        change_tol=1e-9,
    ):
        self.horizon = horizon
        self.method = method
        self.kernel = kernel
        self.alpha = alpha
        self.image_kernel = image_kernel
        self.lam = lam
        self.tau0 = tau0
        self.tau_growth = tau_growth
        self.tau_max = tau_max
        self.max_iters = max_iters
        self.primal_tol = primal_tol
        self.change_tol = change_tol

    def fit(self, X, y=None, history_mask=None):
        task = ForecastTask(
            history=X,
            horizon=self.horizon,
            method=self.method,
            kernel=self.kernel,
            alpha=self.alpha,
            image_kernel=self.image_kernel,
            history_mask=history_mask,
            config=SolverConfig(
                lam=self.lam,
                tau0=self.tau0,
                tau_growth=self.tau_growth,
                tau_max=self.tau_max,
                max_iters=self.max_iters,
                primal_tol=self.primal_tol,
                change_tol=self.change_tol,
            ),
        )
        result = forecast(task)
        self.forecast_ = result.predicted
        self.completed_ = result.completed
        self.report_ = result.report
        self.kernel_ = result.kernel
        self.diagnostics_ = result.diagnostics
        return self

    def predict(self, X=None):
        if not hasattr(self, "forecast_"):
            raise RuntimeError("call fit before predict")
        return self.forecast_
