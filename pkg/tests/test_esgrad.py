import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from esqnn.esgrad import (
    EsConfig, es_gradient, fd_gradient, lambda_rule, log_derivative_mu, psr_gradient,
    sample_population, smoothed_objective,
)
from esqnn.exceptions import ConfigurationError, NumericalError
from esqnn.sim import LocalZeroProjector, Ry, expectations, run_batch

from oracles import gauss_hermite_expectation, ry_matrix

SIGMA = np.pi / 24


def cos2_half(thetas):
    """Vectorized C(theta) = P(qubit 0 = 0) after Ry(theta)|0>, via the simulator."""
    thetas = np.atleast_2d(thetas)
    psi = run_batch(1, [Ry(0, thetas[:, 0])])
    return expectations(psi, [LocalZeroProjector(0)])[:, 0]


def test_cos2_half_matches_matrix_oracle():
    for t in np.linspace(-3, 3, 7):
        amp = ry_matrix(t) @ np.array([1.0, 0.0])
        assert cos2_half([t])[0] == pytest.approx(amp[0] ** 2, abs=1e-14)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        EsConfig(sigma=0, lam=4)
    with pytest.raises(ConfigurationError):
        EsConfig(sigma=0.1, lam=0)
    with pytest.raises(ConfigurationError):
        EsConfig(sigma=0.1, lam=3, mirrored=True)


@pytest.mark.parametrize("p, lam", [(20, 12), (16, 12), (12, 11), (3, 7), (1, 4), (15, 12)])
def test_lambda_rule(p, lam):
    assert lambda_rule(p) == lam


def test_log_derivative_examples():
    np.testing.assert_array_equal(log_derivative_mu([1.0, 2.0], [1.0, 2.0], 0.3), [0, 0])
    np.testing.assert_array_equal(log_derivative_mu([1.0, 0.0], [0.0, 0.0], 1.0), [1, 0])
    np.testing.assert_allclose(log_derivative_mu([0.5], [0.0], 0.5), [2.0])
    with pytest.raises(ConfigurationError):
        log_derivative_mu([0.0], [0.0], 0.0)


def test_constant_objective_is_mean_zero():
    lam, sigma, c = 10**5, 0.1, 3.0
    g = es_gradient(lambda z: c, np.zeros(3), EsConfig(sigma, lam, seed=1))
    # each component is c / sigma * mean(eps); its standard error is c / (sigma sqrt(lam))
    assert np.all(np.abs(g) < 4 * c / (sigma * np.sqrt(lam)))


def test_linear_objective_slope_one():
    lam, sigma = 10**5, 0.5
    g = es_gradient(lambda z: z[0], [0.0], EsConfig(sigma, lam, seed=2))
    # estimate is mean(eps^2), standard error sqrt(2 / lam)
    assert g[0] == pytest.approx(1.0, abs=4 * np.sqrt(2 / lam))


def test_quadratic_at_zero_is_zero():
    lam, sigma = 10**5, 0.5
    g = es_gradient(lambda z: z[0] ** 2, [0.0], EsConfig(sigma, lam, seed=3))
    # estimate is sigma * mean(eps^3), standard error sigma sqrt(15 / lam)
    assert abs(g[0]) < 4 * sigma * np.sqrt(15 / lam)


def test_circuit_objective_near_closed_form():
    theta = np.pi / 2
    exact = -np.sin(theta) / 2
    assert psr_gradient(cos2_half, [theta], vectorized=True)[0] == pytest.approx(exact, abs=1e-12)
    lam = 10**4
    g = es_gradient(cos2_half, [theta], EsConfig(SIGMA, lam, seed=4), vectorized=True)[0]
    se = 0.5 / (SIGMA * np.sqrt(lam))  # |f| <= 1, f ~ 0.5 near theta
    bias = 0.5 * (1 - np.exp(-SIGMA**2 / 2))
    assert abs(g - exact) <= bias + 3 * se


def test_smoothed_objective_examples():
    assert smoothed_objective(lambda z: 2.5, [0.3, 0.1], EsConfig(0.2, 17)) == 2.5
    m = smoothed_objective(lambda Z: Z[:, 0] ** 2, [0.0], EsConfig(1.0, 10**6, seed=5), vectorized=True)
    assert m == pytest.approx(1.0, abs=4 * np.sqrt(2 / 10**6))


def test_smoothed_circuit_objective_matches_quadrature():
    oracle = gauss_hermite_expectation(lambda t: np.cos(t / 2) ** 2, 0.0, SIGMA)
    lam = 10**5
    est = smoothed_objective(cos2_half, [0.0], EsConfig(SIGMA, lam, seed=6), vectorized=True)
    # spread of f over the search distribution bounds the standard error
    assert est == pytest.approx(oracle, abs=4 * 0.01 / np.sqrt(lam) + 1e-6)


def test_fd_examples():
    assert fd_gradient(lambda z: z[0] ** 2, [3.0], h=1e-4)[0] == pytest.approx(6.0, abs=1e-7)
    np.testing.assert_array_equal(fd_gradient(lambda z: 1.0, [0.1, 0.2]), [0.0, 0.0])
    h = 1e-3
    assert fd_gradient(lambda z: np.sin(z[0]), [0.0], h=h)[0] == pytest.approx(1.0, abs=h**2 / 6 + 1e-12)
    with pytest.raises(ConfigurationError):
        fd_gradient(lambda z: 0.0, [0.0], h=0)


def test_psr_zero_for_unused_parameter():
    f = lambda t: cos2_half(t[:, :1])  # second parameter never enters
    g = psr_gradient(f, [0.4, 1.3], vectorized=True)
    assert g[1] == 0.0


def test_nonfinite_objective_raises_with_point():
    with pytest.raises(NumericalError) as err:
        es_gradient(lambda z: np.nan if z[0] > 0 else 1.0, [0.0], EsConfig(0.1, 50, seed=0))
    assert err.value.point[0] > 0


def test_determinism_bitwise():
    cfg = EsConfig(0.2, 64, seed=123)
    f = lambda Z: np.sin(Z).sum(axis=1)
    a = es_gradient(f, [0.1, 0.2, 0.3], cfg, vectorized=True)
    b = es_gradient(f, [0.1, 0.2, 0.3], cfg, vectorized=True)
    c = es_gradient(lambda z: np.sin(z).sum(), [0.1, 0.2, 0.3], cfg)
    assert a.tobytes() == b.tobytes()
    np.testing.assert_array_equal(a, c)


def test_samples_drawn_before_evaluation():
    cfg = EsConfig(0.3, 8, seed=9)
    seen = []
    es_gradient(lambda z: seen.append(z.copy()) or 0.0, [1.0, -1.0], cfg)
    np.testing.assert_array_equal(np.array(seen), sample_population([1.0, -1.0], cfg))


def test_es_mean_matches_smoothed_fd():
    mu, sigma = 0.7, 0.3
    f = lambda Z: np.sin(Z[:, 0])
    rng = np.random.default_rng(10)
    runs = np.array([es_gradient(f, [mu], EsConfig(sigma, 1000), rng=rng, vectorized=True)[0] for _ in range(200)])
    h = 1e-3
    big = EsConfig(sigma, 10**6, seed=11)  # same seed on both sides: common random numbers
    fd = (smoothed_objective(f, [mu + h], big, vectorized=True) - smoothed_objective(f, [mu - h], big, vectorized=True)) / (2 * h)
    se = runs.std(ddof=1) / np.sqrt(len(runs))
    assert abs(runs.mean() - fd) <= 4 * se


def test_bias_shrinks_with_sigma():
    theta, n_total = np.pi / 2, 10**5
    exact = -0.5
    biases = []
    for sigma in (np.pi / 12, np.pi / 24):
        cfg = EsConfig(sigma, n_total, seed=12, mirrored=True)
        biases.append(abs(es_gradient(cos2_half, [theta], cfg, vectorized=True)[0] - exact))
    assert biases[0] > biases[1]


def test_mirrored_linear_objective_cancels_offset():
    a = np.array([0.7, -1.2, 0.4])
    cfg = EsConfig(0.25, 2, seed=13, mirrored=True)
    g_b = es_gradient(lambda z: a @ z + 5.0, [0.2, 0.1, -0.3], cfg)
    g_0 = es_gradient(lambda z: a @ z, [0.2, 0.1, -0.3], cfg)
    eps = (sample_population([0.2, 0.1, -0.3], cfg)[0] - [0.2, 0.1, -0.3]) / 0.25
    np.testing.assert_allclose(g_b, g_0, atol=1e-12)
    np.testing.assert_allclose(g_b, np.outer(eps, eps) @ a, atol=1e-12)
    # averaged over many pairs the estimate converges to the slope itself
    many = es_gradient(lambda Z: Z @ a + 5.0, [0.2, 0.1, -0.3], EsConfig(0.25, 2 * 10**5, seed=14, mirrored=True), vectorized=True)
    np.testing.assert_allclose(many, a, atol=0.02)


def test_mirrored_population_is_antithetic():
    z = sample_population([1.0, 2.0], EsConfig(0.5, 6, seed=0, mirrored=True))
    np.testing.assert_allclose(z[:3] - [1, 2], -(z[3:] - [1, 2]))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(1, 4), alpha=st.sampled_from([0.5, 2.0, -4.0]))
def test_estimate_linear_in_objective_scale(seed, d, alpha):
    cfg = EsConfig(0.2, 16, seed=seed)
    f = lambda Z: np.cos(Z).sum(axis=1)
    g = es_gradient(f, np.zeros(d), cfg, vectorized=True)
    g_alpha = es_gradient(lambda Z: alpha * f(Z), np.zeros(d), cfg, vectorized=True)
    np.testing.assert_array_equal(g_alpha, alpha * g)
