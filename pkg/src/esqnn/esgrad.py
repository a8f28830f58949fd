"""Black-box gradient estimators.

``es_gradient`` is the Gaussian search-gradient (evolution strategies)
estimator with isotropic covariance ``sigma**2 * I``::

    grad J(mu) ~= 1 / (lam * sigma**2) * sum_k (z_k - mu) * f(z_k),
    z_k ~ N(mu, sigma**2 I)

``psr_gradient`` and ``fd_gradient`` are deterministic references used to
check it.

Objectives are plain callables. By default they are called once per point
with a 1-D array. Pass ``vectorized=True`` when the callable accepts a 2-D
array of points (one per row) and returns one value per row; the population
is then evaluated in a single call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError, NumericalError

PSR_SHIFT = np.pi / 2


@dataclass(frozen=True)
class EsConfig:
    """Search distribution settings.

    Attributes:
        sigma: standard deviation of the Gaussian perturbations (radians).
        lam: population size, i.e. objective evaluations per estimate.
        seed: seed used when no generator is passed to the estimator.
        mirrored: draw antithetic pairs ``mu +/- sigma * eps``; ``lam`` must
            then be even.
    """

    sigma: float
    lam: int
    seed: int = 0
    mirrored: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if int(self.lam) != self.lam or self.lam < 1:
            raise ConfigurationError(f"lam must be a positive integer, got {self.lam}")
        if self.mirrored and self.lam % 2:
            raise ConfigurationError("mirrored sampling needs an even lam")


def lambda_rule(n_params: int) -> int:
    """Population size ``floor(4 + 3 ln p)``."""
    if n_params < 1:
        raise ConfigurationError("n_params must be positive")
    return int(math.floor(4 + 3 * math.log(n_params)))


def log_derivative_mu(z, mu, sigma: float) -> np.ndarray:
    """Score of the isotropic Gaussian w.r.t. its mean, ``(z - mu) / sigma**2``."""
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    z = np.asarray(z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if z.shape[-1] != mu.shape[-1]:
        raise ValueError(f"dimension mismatch: z has {z.shape[-1]}, mu has {mu.shape[-1]}")
    return (z - mu) / sigma**2


def sample_population(mu, cfg: EsConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw all ``cfg.lam`` search points up front, shape ``(lam, d)``."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    mu = np.asarray(mu, dtype=float)
    if cfg.mirrored:
        eps = rng.standard_normal((cfg.lam // 2, mu.size))
        eps = np.concatenate([eps, -eps])
    else:
        eps = rng.standard_normal((cfg.lam, mu.size))
    return mu + cfg.sigma * eps


def _evaluate(f, points, vectorized):
    if vectorized:
        values = np.asarray(f(points), dtype=float).reshape(-1)
        if values.shape[0] != points.shape[0]:
            raise ValueError(f"vectorized objective returned {values.shape[0]} values for {points.shape[0]} points")
    else:
        values = np.array([np.asarray(f(p), dtype=float).item() for p in points])
    bad = ~np.isfinite(values)
    if bad.any():
        k = int(np.argmax(bad))
        raise NumericalError(f"objective returned {values[k]} at z={points[k].tolist()}", point=points[k])
    return values


def es_gradient(
    f: Callable,
    mu,
    cfg: EsConfig,
    rng: np.random.Generator | None = None,
    vectorized: bool = False,
) -> np.ndarray:
    """Search-gradient estimate of ``grad E[f(z)]`` at ``mu``.

    Args:
        f: objective ``R^d -> R``.
        mu: mean of the search distribution (the current parameters).
        cfg: search distribution and fallback seed.
        rng: random stream to draw from. When omitted a fresh generator is
            seeded from ``cfg.seed``, so repeated calls give identical results.
        vectorized: see module docstring.

    Raises:
        NumericalError: ``f`` returned NaN or inf; the offending point is
            attached.
    """
    mu = np.asarray(mu, dtype=float)
    z = sample_population(mu, cfg, rng)
    values = _evaluate(f, z, vectorized)
    # fixed summation order over the sample index
    return (z - mu).T @ values / (cfg.lam * cfg.sigma**2)


def smoothed_objective(
    f: Callable,
    mu,
    cfg: EsConfig,
    rng: np.random.Generator | None = None,
    vectorized: bool = False,
) -> float:
    """Monte Carlo estimate of ``E[f(z)]`` under the same sampling as ``es_gradient``."""
    z = sample_population(np.asarray(mu, dtype=float), cfg, rng)
    return float(np.mean(_evaluate(f, z, vectorized)))


def psr_gradient(f: Callable, theta, vectorized: bool = False) -> np.ndarray:
    """Parameter-shift gradient, exact for parameters that each enter one Ry gate.

    Component ``k`` is ``(f(theta + pi/2 e_k) - f(theta - pi/2 e_k)) / 2``.
    The result is only meaningful when ``f`` is a projector expectation of
    such a circuit; other objectives get a wrong answer, not an error.
    """
    theta = np.asarray(theta, dtype=float)
    d = theta.size
    shifts = PSR_SHIFT * np.eye(d)
    points = np.concatenate([theta + shifts, theta - shifts])
    values = _evaluate(f, points, vectorized)
    return (values[:d] - values[d:]) / 2


def fd_gradient(f: Callable, x, h: float = 1e-4, vectorized: bool = False) -> np.ndarray:
    """Central finite differences with step ``h``."""
    if not h > 0:
        raise ConfigurationError(f"h must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    d = x.size
    steps = h * np.eye(d)
    points = np.concatenate([x + steps, x - steps])
    values = _evaluate(f, points, vectorized)
    return (values[:d] - values[d:]) / (2 * h)
