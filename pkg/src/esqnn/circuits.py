"""Data encoders and the layered Ry + CNOT-ladder ansatz.

State encoders (``encode_wavefunction``, ``encode_dense_angle``,
``encode_qubit``) return prepared states directly. Circuit encoders
(``build_input1``, ``build_input2``) and ``build_ansatz`` return op lists.

Every builder accepts either a 1-D input (one circuit) or a 2-D input of
shape ``(batch, dim)``; in the batched case each ``Ry`` carries an array of
per-row angles and the op list can be fed to ``sim.run_batch``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, DegenerateInputError
from .sim import Cnot, Ry, StateVector

ENCODER_KINDS = ("wavefunction", "dense_angle", "qubit", "input1", "input2")


@dataclass(frozen=True)
class EncoderSpec:
    """Which encoder a quantum layer uses and on how many qubits.

    ``rounds`` only matters for ``input1``.
    """

    kind: str
    n_qubits: int
    rounds: int = 1

    def __post_init__(self):
        if self.kind not in ENCODER_KINDS:
            raise ConfigurationError(f"unknown encoder kind {self.kind!r}; expected one of {ENCODER_KINDS}")
        if self.n_qubits < 1:
            raise ConfigurationError("n_qubits must be positive")
        if self.rounds < 1:
            raise ConfigurationError("rounds must be positive")
        if self.kind == "dense_angle" and self.n_qubits < 1:
            raise ConfigurationError("dense angle coding needs at least one qubit")

    @property
    def input_dim(self) -> int:
        if self.kind == "wavefunction":
            return 2**self.n_qubits
        if self.kind == "dense_angle":
            return 2 * self.n_qubits
        if self.kind == "input1":
            return self.rounds * self.n_qubits
        return self.n_qubits

    @property
    def is_circuit(self) -> bool:
        """True when inputs enter as Ry angles (each input feeds exactly one gate)."""
        return self.kind in ("qubit", "input1", "input2")


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    n_blocks: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ConfigurationError("n_qubits must be positive")
        if self.n_blocks < 0:
            raise ConfigurationError("n_blocks must be non-negative")

    @property
    def n_params(self) -> int:
        return self.n_blocks * self.n_qubits


def _angle(a):
    return float(a) if np.ndim(a) == 0 else a


def ry_column(angles) -> list[Ry]:
    """One Ry per qubit; ``angles[..., j]`` rotates qubit ``j``."""
    angles = np.asarray(angles, dtype=float)
    return [Ry(j, _angle(angles[..., j])) for j in range(angles.shape[-1])]


def cnot_ladder(n_qubits: int) -> list[Cnot]:
    return [Cnot(j, j + 1) for j in range(n_qubits - 1)]


def _as_real(x, expected_dim, what):
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] != expected_dim:
        raise ValueError(f"{what} expects input dimension {expected_dim}, got shape {x.shape}")
    return x


def build_input1(x, n_qubits: int, rounds: int) -> list:
    """Alternating Ry columns and CNOT ladders, ending on an Ry column.

    ``x`` supplies ``rounds * n_qubits`` angles consumed column by column.
    """
    if rounds < 1:
        raise ConfigurationError("rounds must be >= 1")
    x = _as_real(x, rounds * n_qubits, "INPUT1")
    ops = []
    for r in range(rounds):
        if r:
            ops += cnot_ladder(n_qubits)
        ops += ry_column(x[..., r * n_qubits:(r + 1) * n_qubits])
    return ops


def build_input2(x, n_qubits: int) -> list:
    x = _as_real(x, n_qubits, "INPUT2")
    return ry_column(x) + cnot_ladder(n_qubits)


def build_ansatz(theta, spec: AnsatzSpec) -> list:
    """``n_blocks`` repetitions of [Ry column, CNOT ladder].

    Parameters are block-major: ``theta[i * n + j]`` rotates qubit ``j`` in
    block ``i``.
    """
    n = spec.n_qubits
    theta = _as_real(theta, spec.n_params, "ansatz") if spec.n_params else np.asarray(theta, dtype=float)
    ops = []
    for i in range(spec.n_blocks):
        ops += ry_column(theta[..., i * n:(i + 1) * n])
        ops += cnot_ladder(n)
    return ops


def _product_state(factors):
    # factors: (..., n, 2) single-qubit amplitudes, qubit 0 first (most significant)
    state = factors[..., 0, :]
    for j in range(1, factors.shape[-2]):
        state = (state[..., :, None] * factors[..., j, None, :]).reshape(*state.shape[:-1], -1)
    return state


def wavefunction_amplitudes(x, n_qubits: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1]
    if n_qubits is None:
        n_qubits = max(1, int(np.ceil(np.log2(dim))))
    if not 1 <= dim <= 2**n_qubits:
        raise ValueError(f"wave function encoder needs 1 <= dim(x) <= {2**n_qubits}, got {dim}")
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise DegenerateInputError("cannot amplitude-encode the zero vector")
    amps = np.zeros(x.shape[:-1] + (2**n_qubits,))
    amps[..., :dim] = x / norm
    return amps


def dense_angle_amplitudes(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] == 0 or x.shape[-1] % 2:
        raise ValueError(f"dense angle coding needs an even, nonzero input dimension, got {x.shape[-1]}")
    pairs = x.reshape(*x.shape[:-1], -1, 2)
    a, b = pairs[..., 0], pairs[..., 1]
    factors = np.stack([np.cos(np.pi * a) + 0j, np.exp(2j * np.pi * b) * np.sin(np.pi * a)], axis=-1)
    return _product_state(factors)


def qubit_amplitudes(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] == 0:
        raise ValueError("qubit encoding needs at least one input")
    return _product_state(np.stack([np.cos(x), np.sin(x)], axis=-1))


def encode_wavefunction(x, n_qubits: int | None = None) -> StateVector:
    """Amplitude encoding ``x / ||x||``, zero-padded to ``2**n_qubits`` entries.

    ``n_qubits`` defaults to the smallest register that holds ``x``.
    """
    amps = wavefunction_amplitudes(np.asarray(x, dtype=float).ravel(), n_qubits)
    return StateVector(int(np.log2(amps.size)), amps)


def encode_dense_angle(x) -> StateVector:
    """Two features per qubit: ``cos(pi a)|0> + exp(2 pi i b) sin(pi a)|1>``."""
    amps = dense_angle_amplitudes(np.asarray(x, dtype=float).ravel())
    return StateVector(int(np.log2(amps.size)), amps)


def encode_qubit(x) -> StateVector:
    """Product state with ``cos(x_j)|0> + sin(x_j)|1>`` on qubit ``j``."""
    amps = qubit_amplitudes(np.asarray(x, dtype=float).ravel())
    return StateVector(int(np.log2(amps.size)), amps)


def encoder_circuit(spec: EncoderSpec, x):
    """Return ``(initial_amplitudes or None, ops)`` for a 1-D or 2-D input.

    Angle-type encoders start from ``|0...0>`` (``initial`` is None); the
    qubit encoding is realised as an Ry column with doubled angles.
    """
    x = _as_real(x, spec.input_dim, spec.kind)
    n = spec.n_qubits
    if spec.kind == "input1":
        return None, build_input1(x, n, spec.rounds)
    if spec.kind == "input2":
        return None, build_input2(x, n)
    if spec.kind == "qubit":
        return None, ry_column(2.0 * x)
    if spec.kind == "wavefunction":
        amps = wavefunction_amplitudes(x, n)
    else:
        amps = dense_angle_amplitudes(x)
    return np.atleast_2d(amps), []
