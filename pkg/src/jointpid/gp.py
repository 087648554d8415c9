"""Gaussian-process surrogate and the expected-improvement acquisition.

Small, deterministic implementation sized for tuning loops with tens of
observations: squared-exponential kernel with per-axis length scales,
hyperparameters set by maximizing the log marginal likelihood from a
fixed grid of restarts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.special import ndtr

JITTER_START = 1e-8
JITTER_MAX = 1e-4


class NumericalError(RuntimeError):
    """Kernel matrix stayed non-invertible after jitter escalation."""


@dataclass
class SurrogateDataset:
    """Observed (normalized input, objective) pairs plus a noise floor."""

    points: np.ndarray  # shape (n, d), inputs scaled to the unit box
    values: np.ndarray  # shape (n,)
    noise_floor: float = 1e-6

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        if len(self.points) != len(self.values):
            raise ValueError("points and values must have equal length")
        if self.noise_floor < 0:
            raise ValueError("noise_floor must be non-negative")


def _sq_dists(a: np.ndarray, b: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    sa = a / lengthscales
    sb = b / lengthscales
    return (np.sum(sa ** 2, axis=1)[:, None]
            + np.sum(sb ** 2, axis=1)[None, :]
            - 2.0 * sa @ sb.T)


def _kernel(a, b, signal_var, lengthscales):
    return signal_var * np.exp(-0.5 * np.clip(_sq_dists(a, b, lengthscales), 0.0, None))


class GaussianProcess:
    """Zero-mean-on-centered-data GP regressor with an SE kernel."""

    def __init__(self, signal_var: float, lengthscales: np.ndarray,
                 noise_var: float):
        self.signal_var = signal_var
        self.lengthscales = np.asarray(lengthscales, dtype=float)
        self.noise_var = noise_var
        self._x = None
        self._mean_y = 0.0
        self._chol = None
        self._alpha = None

    def _factor(self, K: np.ndarray):
        jitter = JITTER_START
        while True:
            try:
                return cho_factor(K + jitter * np.eye(len(K)), lower=True)
            except np.linalg.LinAlgError:
                jitter *= 10.0
                if jitter > JITTER_MAX:
                    raise NumericalError(
                        "kernel matrix not invertible after jitter escalation")

    def fit(self, x: np.ndarray, y: np.ndarray) -> "GaussianProcess":
        self._x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.asarray(y, dtype=float)
        self._mean_y = float(np.mean(y))
        K = _kernel(self._x, self._x, self.signal_var, self.lengthscales)
        K += self.noise_var * np.eye(len(K))
        self._chol = self._factor(K)
        self._alpha = cho_solve(self._chol, y - self._mean_y)
        return self

    def predict(self, xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Predictive mean and variance at query points."""
        xq = np.atleast_2d(np.asarray(xq, dtype=float))
        ks = _kernel(xq, self._x, self.signal_var, self.lengthscales)
        mean = self._mean_y + ks @ self._alpha
        v = cho_solve(self._chol, ks.T)
        var = self.signal_var - np.sum(ks * v.T, axis=1)
        return mean, np.clip(var, 0.0, None)


def _neg_log_marginal(log_params, x, y, noise_floor):
    d = x.shape[1]
    signal_var = np.exp(log_params[0])
    lengthscales = np.exp(log_params[1:1 + d])
    noise_var = np.exp(log_params[1 + d]) + noise_floor
    n = len(x)
    K = _kernel(x, x, signal_var, lengthscales) + noise_var * np.eye(n)
    try:
        chol = cho_factor(K + JITTER_START * np.eye(n), lower=True)
    except np.linalg.LinAlgError:
        return 1e12
    yc = y - np.mean(y)
    alpha = cho_solve(chol, yc)
    logdet = 2.0 * np.sum(np.log(np.diag(chol[0])))
    nll = 0.5 * yc @ alpha + 0.5 * logdet + 0.5 * n * np.log(2.0 * np.pi)
    return float(nll) if np.isfinite(nll) else 1e12


def gp_fit(data: SurrogateDataset) -> GaussianProcess:
    """Fit kernel hyperparameters by restarted marginal-likelihood ascent.

    Restarts come from a fixed small grid of length scales and noise
    levels, so the fit is deterministic for a given dataset.
    """
    x, y = data.points, data.values
    if len(x) < 2:
        raise ValueError("gp_fit needs at least 2 observations")
    d = x.shape[1]
    y_var = max(float(np.var(y)), 1e-12)

    starts = []
    for ls in (0.1, 0.3, 1.0):
        for nv in (1e-4, 1e-2):
            starts.append(np.concatenate([
                [np.log(y_var)],
                np.full(d, np.log(ls)),
                [np.log(nv * y_var)],
            ]))

    bounds = ([(np.log(y_var * 1e-4), np.log(y_var * 1e4))]
              + [(np.log(1e-3), np.log(1e2))] * d
              + [(np.log(1e-10), np.log(max(y_var, 1e-8)))])

    best = None
    for s0 in starts:
        res = minimize(_neg_log_marginal, s0, args=(x, y, data.noise_floor),
                       method="L-BFGS-B", bounds=bounds)
        if best is None or res.fun < best.fun:
            best = res

    p = best.x
    gp = GaussianProcess(
        signal_var=float(np.exp(p[0])),
        lengthscales=np.exp(p[1:1 + d]),
        noise_var=float(np.exp(p[1 + d]) + data.noise_floor),
    )
    return gp.fit(x, y)


def expected_improvement(mean: np.ndarray, std: np.ndarray,
                         best_value: float) -> np.ndarray:
    """EI for minimization; exactly zero wherever the std vanishes."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    ei = np.zeros_like(mean)
    ok = std > 0
    with np.errstate(over="ignore", under="ignore"):
        z = (best_value - mean[ok]) / std[ok]
        pdf = np.exp(-0.5 * z ** 2) / np.sqrt(2.0 * np.pi)
        ei[ok] = (best_value - mean[ok]) * ndtr(z) + std[ok] * pdf
    return np.clip(ei, 0.0, None)
