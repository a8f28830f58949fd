"""Classical and quantum layers together with the loss and the optimizers.

Classical layers are differentiated analytically. Quantum layers are black
boxes: their gradients with respect to both the circuit parameters and the
layer input come from ``esgrad.es_gradient`` (or, in oracle mode, from the
parameter-shift rule).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import esgrad
from .circuits import AnsatzSpec, EncoderSpec, build_ansatz, encoder_circuit
from .esgrad import EsConfig
from .exceptions import ConfigurationError
from .sim import Observable, expectations, run_batch

ACTIVATIONS = ("tanh", "identity")
GRADIENT_METHODS = ("es", "psr")


@dataclass
class LinearLayer:
    """``activation(W @ x + b)`` with ``W`` of shape ``(n_out, n_in)``."""

    W: np.ndarray
    b: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"inconsistent shapes W{self.W.shape}, b{self.b.shape}")

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @property
    def output_dim(self) -> int:
        return self.W.shape[0]

    @property
    def params(self) -> dict:
        return {"W": self.W, "b": self.b}

    @classmethod
    def init_uniform(cls, n_in, n_out, activation, rng):
        """Uniform init in ``[-1/sqrt(n_in), 1/sqrt(n_in)]`` for weights and bias."""
        bound = 1.0 / np.sqrt(n_in)
        W = rng.uniform(-bound, bound, size=(n_out, n_in))
        b = rng.uniform(-bound, bound, size=n_out)
        return cls(W, b, activation)


def _check_dim(x, dim, what):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise ValueError(f"{what} expects input dimension {dim}, got {x.shape[-1]}")
    return x


def linear_forward(layer: LinearLayer, x) -> np.ndarray:
    x = _check_dim(x, layer.input_dim, "linear layer")
    pre = x @ layer.W.T + layer.b
    return np.tanh(pre) if layer.activation == "tanh" else pre


def linear_backward(layer: LinearLayer, x, upstream):
    """Gradients of ``upstream . linear_forward(layer, x)``.

    Returns:
        ``(grad_W, grad_b, grad_x)``.
    """
    x = _check_dim(x, layer.input_dim, "linear layer")
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != (layer.output_dim,):
        raise ValueError(f"upstream must have shape ({layer.output_dim},), got {upstream.shape}")
    g = upstream
    if layer.activation == "tanh":
        g = upstream * (1.0 - np.tanh(layer.W @ x + layer.b) ** 2)
    return np.outer(g, x), g.copy(), layer.W.T @ g


@dataclass
class QuantumLayer:
    """Encoder + ansatz + projector measurements.

    Attributes:
        encoder: how the layer input becomes a quantum state.
        ansatz: layered Ry/CNOT parameterisation.
        theta: ansatz parameters, block-major.
        observables: measured projectors; one output per entry.
        es_params: search distribution for the parameter gradient.
        es_inputs: search distribution for the input gradient.
        input_scale: inputs are multiplied by this before encoding. Input
            gradients are estimated in the scaled (angle) space and chained
            back through the factor.
    """

    encoder: EncoderSpec
    ansatz: AnsatzSpec
    theta: np.ndarray
    observables: Sequence[Observable]
    es_params: EsConfig
    es_inputs: EsConfig
    input_scale: float = 1.0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.encoder.n_qubits != self.ansatz.n_qubits:
            raise ConfigurationError("encoder and ansatz act on different numbers of qubits")
        if self.theta.shape != (self.ansatz.n_params,):
            raise ValueError(f"theta must have length {self.ansatz.n_params}, got shape {self.theta.shape}")
        if not self.observables:
            raise ConfigurationError("a quantum layer needs at least one observable")
        self.observables = tuple(self.observables)

    @property
    def n_qubits(self) -> int:
        return self.ansatz.n_qubits

    @property
    def input_dim(self) -> int:
        return self.encoder.input_dim

    @property
    def output_dim(self) -> int:
        return len(self.observables)

    @property
    def params(self) -> dict:
        return {"theta": self.theta}

    def evaluate(self, angles, theta) -> np.ndarray:
        """Measured outputs for encoder angles and parameters, row by row.

        ``angles`` are already-scaled encoder inputs, shape ``(B, input_dim)``
        or ``(input_dim,)``; ``theta`` is ``(B, n_params)`` or ``(n_params,)``.
        One-dimensional arguments broadcast against the other's batch.
        """
        angles = np.atleast_2d(np.asarray(angles, dtype=float))
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        batch = max(angles.shape[0], theta.shape[0])
        angles = np.broadcast_to(angles, (batch, angles.shape[1]))
        theta = np.broadcast_to(theta, (batch, theta.shape[1]))
        initial, ops = encoder_circuit(self.encoder, angles)
        if initial is not None and initial.shape[0] != batch:
            initial = np.broadcast_to(initial, (batch, initial.shape[1]))
        ops = ops + build_ansatz(theta, self.ansatz)
        psi = run_batch(self.n_qubits, ops, initial=initial, batch_size=batch)
        return expectations(psi, self.observables)


def make_es_configs(n_inputs, n_params, sigma, lam=None, seed=0):
    """Equal-size search distributions for a layer's inputs and parameters.

    With ``lam=None`` the size is the larger of the population rule evaluated
    for the input count and for the parameter count.
    """
    if lam is None:
        lam = max(esgrad.lambda_rule(n_inputs), esgrad.lambda_rule(max(n_params, 1)))
    cfg = EsConfig(sigma=sigma, lam=lam, seed=seed)
    return cfg, cfg


def quantum_forward(layer: QuantumLayer, x) -> np.ndarray:
    """Expectation values for input ``x`` (1-D) or a batch of inputs (2-D)."""
    x = _check_dim(x, layer.input_dim, "quantum layer")
    out = layer.evaluate(layer.input_scale * x, layer.theta)
    return out[0] if x.ndim == 1 else out


def quantum_backward(
    layer: QuantumLayer,
    x,
    upstream,
    rng: np.random.Generator | None = None,
    method: str = "es",
    input_grad: bool = True,
):
    """Parameter and input gradients of ``h = upstream . quantum_forward(layer, x)``.

    The vector output is collapsed into the scalar ``h`` first, so each
    gradient costs one population of ``lam`` circuit evaluations.

    Args:
        layer: the quantum layer.
        x: single (unscaled) input vector.
        upstream: weights on the layer outputs, usually dLoss/dOutput.
        rng: random stream for the ES populations. ``None`` falls back to
            the seeds stored in the layer's ``EsConfig``s.
        method: ``"es"`` or ``"psr"`` (exact oracle; angle encoders only).
        input_grad: skip the input gradient (returned as None) when False.

    Returns:
        ``(grad_theta, grad_x)``.
    """
    if method not in GRADIENT_METHODS:
        raise ConfigurationError(f"method must be one of {GRADIENT_METHODS}, got {method!r}")
    x = _check_dim(x, layer.input_dim, "quantum layer")
    if x.ndim != 1:
        raise ValueError("quantum_backward works on a single input vector")
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != (layer.output_dim,):
        raise ValueError(f"upstream must have shape ({layer.output_dim},), got {upstream.shape}")
    angles = layer.input_scale * x

    def h_theta(thetas):
        return layer.evaluate(angles, thetas) @ upstream

    def h_angles(batch):
        return layer.evaluate(batch, layer.theta) @ upstream

    if method == "psr":
        if not layer.encoder.is_circuit and input_grad:
            raise ConfigurationError(f"parameter shift does not apply to the {layer.encoder.kind!r} encoder")
        grad_theta = esgrad.psr_gradient(h_theta, layer.theta, vectorized=True)
        grad_x = None
        if input_grad:
            if layer.encoder.kind == "qubit":
                # the qubit encoding applies Ry(2x); shift the gate angle, not x
                grad_gate = esgrad.psr_gradient(lambda g: h_angles(g / 2), 2 * angles, vectorized=True)
                grad_angles = 2.0 * grad_gate
            else:
                grad_angles = esgrad.psr_gradient(h_angles, angles, vectorized=True)
            grad_x = layer.input_scale * grad_angles
        return grad_theta, grad_x

    if layer.ansatz.n_params:
        grad_theta = esgrad.es_gradient(h_theta, layer.theta, layer.es_params, rng=rng, vectorized=True)
    else:
        grad_theta = np.zeros(0)
    grad_x = None
    if input_grad:
        grad_angles = esgrad.es_gradient(h_angles, angles, layer.es_inputs, rng=rng, vectorized=True)
        grad_x = layer.input_scale * grad_angles
    return grad_theta, grad_x


def mse_loss(y, y_target) -> float:
    y = np.asarray(y, dtype=float)
    y_target = np.asarray(y_target, dtype=float)
    if y.shape != y_target.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {y_target.shape}")
    return float(np.mean((y - y_target) ** 2))


def mse_grad(y, y_target) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    y_target = np.asarray(y_target, dtype=float)
    if y.shape != y_target.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {y_target.shape}")
    return 2.0 / y.size * (y - y_target)


@dataclass
class Sgd:
    eta: float

    def step(self, params, grad) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        grad = np.asarray(grad, dtype=float)
        if params.shape != grad.shape:
            raise ValueError(f"shape mismatch {params.shape} vs {grad.shape}")
        return params - self.eta * grad


@dataclass
class Adam:
    """Bias-corrected Adam for one parameter array.

    Moments are allocated lazily on the first step.
    """

    eta: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)
    t: int = 0

    def step(self, params, grad) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        grad = np.asarray(grad, dtype=float)
        if params.shape != grad.shape:
            raise ValueError(f"shape mismatch {params.shape} vs {grad.shape}")
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        elif self.m.shape != params.shape:
            raise ValueError(f"optimizer state has shape {self.m.shape}, params {params.shape}")
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.eta * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(kind: str, eta: float):
    if kind == "sgd":
        return Sgd(eta)
    if kind == "adam":
        return Adam(eta)
    raise ConfigurationError(f"unknown optimizer {kind!r}")
