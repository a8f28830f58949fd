"""
Search-gradient estimates against the exact parameter-shift gradient
====================================================================

For C(theta) = cos^2(theta / 2) the exact slope at pi/2 is -0.5. The ES
estimate is unbiased for the Gaussian-smoothed cost, whose slope is
-0.5 * exp(-sigma^2 / 2), and its spread shrinks like 1/sqrt(lambda).
"""

import numpy as np

from esqnn.esgrad import EsConfig, es_gradient, psr_gradient
from esqnn.sim import LocalZeroProjector, Ry, expectations, run_batch


def cost(thetas):
    psi = run_batch(1, [Ry(0, np.atleast_2d(thetas)[:, 0])])
    return expectations(psi, [LocalZeroProjector(0)])[:, 0]


theta = [np.pi / 2]
print("parameter shift:", psr_gradient(cost, theta, vectorized=True)[0])

rng = np.random.default_rng(0)
sigma = np.pi / 24
for lam in (10, 100, 1000, 10000):
    runs = [es_gradient(cost, theta, EsConfig(sigma, lam), rng=rng, vectorized=True)[0] for _ in range(200)]
    print(f"lambda={lam:6d}  mean {np.mean(runs):+.4f}  std {np.std(runs):.4f}")

# Antithetic pairs cancel the cost-offset noise term, so far fewer samples suffice.
for lam in (10, 100):
    runs = [es_gradient(cost, theta, EsConfig(sigma, lam, mirrored=True), rng=rng, vectorized=True)[0] for _ in range(200)]
    print(f"mirrored lambda={lam:4d}  mean {np.mean(runs):+.4f}  std {np.std(runs):.4f}")
print("smoothed-cost slope:", -0.5 * np.exp(-sigma**2 / 2))
