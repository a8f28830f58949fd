"""Dense statevector simulation for small Ry/CNOT circuits.

Qubit 0 is the most significant bit of the basis index, so the basis state
``|q0 q1 ... q_{n-1}>`` has index ``q0 * 2**(n-1) + ... + q_{n-1}``. This
matches reading circuit wires top to bottom.

Two entry points exist. The single-state API (``new_zero_state``,
``apply_ry``, ``run_circuit``, ``expectation``) works on ``StateVector``
values. The batched API (``run_batch``, ``expectations``) works on 2-D arrays
of shape ``(batch, 2**n)`` and accepts per-row rotation angles; it is what the
layers and gradient estimators use in their inner loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .exceptions import ConfigurationError

MAX_QUBITS = 20
NORM_TOL = 1e-10

Angle = Union[float, np.ndarray]


@dataclass(frozen=True)
class Ry:
    """Rotation ``exp(-i * angle * Y / 2)`` on one qubit.

    ``angle`` may be a 1-D array when the op is used with ``run_batch``;
    row ``b`` of the batch is then rotated by ``angle[b]``.
    """

    qubit: int
    angle: Angle


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError(f"CNOT control and target are both {self.control}")


@dataclass(frozen=True)
class Unitary1q:
    """Arbitrary 2x2 unitary on one qubit (escape hatch for other gates)."""

    qubit: int
    matrix: np.ndarray


CircuitOp = Union[Ry, Cnot, Unitary1q]


@dataclass(frozen=True)
class GlobalProjector:
    """Projector ``|i><i|`` onto computational basis state ``index``."""

    index: int


@dataclass(frozen=True)
class LocalZeroProjector:
    """Projector ``|0><0|`` on ``qubit``, identity on all other qubits."""

    qubit: int


Observable = Union[GlobalProjector, LocalZeroProjector]


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _check_n_qubits(n_qubits):
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")


def _check_qubit(qubit, n_qubits):
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit index {qubit} out of range for {n_qubits} qubits")


def validate_ops(n_qubits: int, ops: Sequence[CircuitOp]) -> None:
    for op in ops:
        if isinstance(op, Cnot):
            _check_qubit(op.control, n_qubits)
            _check_qubit(op.target, n_qubits)
        elif isinstance(op, (Ry, Unitary1q)):
            _check_qubit(op.qubit, n_qubits)
        else:
            raise TypeError(f"unsupported circuit op {op!r}")


@lru_cache(maxsize=None)
def _cnot_permutation(n_qubits, control, target):
    idx = np.arange(2**n_qubits)
    cbit = (idx >> (n_qubits - 1 - control)) & 1
    return idx ^ (cbit << (n_qubits - 1 - target))


@lru_cache(maxsize=None)
def _zero_mask(n_qubits, qubit):
    idx = np.arange(2**n_qubits)
    return ((idx >> (n_qubits - 1 - qubit)) & 1) == 0


def _rotate(psi, n_qubits, qubit, angle):
    # psi: (B, 2**n); view as (B, left, 2, right) so axis 2 is the target bit
    batch = psi.shape[0]
    view = psi.reshape(batch, 2**qubit, 2, 2 ** (n_qubits - qubit - 1))
    half = np.asarray(angle, dtype=float) / 2
    c = np.cos(half)
    s = np.sin(half)
    if c.ndim:
        c = c[:, None, None]
        s = s[:, None, None]
    a0 = view[:, :, 0, :]
    a1 = view[:, :, 1, :]
    out = np.empty_like(view)
    out[:, :, 0, :] = c * a0 - s * a1
    out[:, :, 1, :] = s * a0 + c * a1
    return out.reshape(batch, -1)


def _apply_1q(psi, n_qubits, qubit, matrix):
    batch = psi.shape[0]
    view = psi.reshape(batch, 2**qubit, 2, 2 ** (n_qubits - qubit - 1))
    out = np.einsum("ij,bljr->blir", np.asarray(matrix, dtype=complex), view)
    return out.reshape(batch, -1)


def run_batch(
    n_qubits: int,
    ops: Sequence[CircuitOp],
    initial: np.ndarray | None = None,
    batch_size: int | None = None,
) -> np.ndarray:
    """Apply ``ops`` to a batch of states.

    Args:
        n_qubits: register size.
        ops: gate sequence. ``Ry`` angles may be scalars or arrays of length
            ``batch``.
        initial: starting amplitudes, shape ``(batch, 2**n)``. Defaults to
            ``|0...0>`` repeated ``batch_size`` times.
        batch_size: only used when ``initial`` is omitted.

    Returns:
        Final amplitudes, shape ``(batch, 2**n)``. Stays real-valued when the
        input is real and no ``Unitary1q`` op is present.
    """
    _check_n_qubits(n_qubits)
    validate_ops(n_qubits, ops)
    if initial is None:
        if batch_size is None:
            sizes = [np.size(op.angle) for op in ops if isinstance(op, Ry) and np.ndim(op.angle)]
            batch_size = max(sizes, default=1)
        psi = np.zeros((batch_size, 2**n_qubits))
        psi[:, 0] = 1.0
    else:
        psi = np.array(initial, copy=True)
        if psi.ndim != 2 or psi.shape[1] != 2**n_qubits:
            raise ValueError(f"initial states must have shape (batch, {2**n_qubits}), got {psi.shape}")

    # consecutive CNOTs are folded into one gather
    perm = None
    for op in ops:
        if isinstance(op, Cnot):
            p = _cnot_permutation(n_qubits, op.control, op.target)
            perm = p if perm is None else perm[p]
            continue
        if perm is not None:
            psi = psi[:, perm]
            perm = None
        if isinstance(op, Ry):
            psi = _rotate(psi, n_qubits, op.qubit, op.angle)
        else:
            psi = _apply_1q(psi, n_qubits, op.qubit, op.matrix)
    if perm is not None:
        psi = psi[:, perm]
    return psi


def expectations(amplitudes: np.ndarray, observables: Sequence[Observable]) -> np.ndarray:
    """Exact projector expectation values for a batch of states.

    Returns an array of shape ``(batch, len(observables))``.
    """
    amplitudes = np.atleast_2d(amplitudes)
    n_qubits = int(amplitudes.shape[1]).bit_length() - 1
    probs = amplitudes.real**2 if np.isrealobj(amplitudes) else np.abs(amplitudes) ** 2
    out = np.empty((probs.shape[0], len(observables)))
    for k, obs in enumerate(observables):
        if isinstance(obs, GlobalProjector):
            if not 0 <= obs.index < 2**n_qubits:
                raise IndexError(f"basis index {obs.index} out of range for {n_qubits} qubits")
            out[:, k] = probs[:, obs.index]
        elif isinstance(obs, LocalZeroProjector):
            _check_qubit(obs.qubit, n_qubits)
            out[:, k] = probs[:, _zero_mask(n_qubits, obs.qubit)].sum(axis=1)
        else:
            raise TypeError(f"unsupported observable {obs!r}")
    return out


def new_zero_state(n_qubits: int) -> StateVector:
    _check_n_qubits(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def _single(state, ops):
    out = run_batch(state.n_qubits, ops, initial=state.amplitudes[None, :])
    return StateVector(state.n_qubits, out[0])


def apply_ry(state: StateVector, qubit: int, angle: float) -> StateVector:
    _check_qubit(qubit, state.n_qubits)
    return _single(state, [Ry(qubit, float(angle))])


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    return _single(state, [Cnot(control, target)])


def apply_unitary(state: StateVector, qubit: int, matrix) -> StateVector:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2, 2) or not np.allclose(matrix.conj().T @ matrix, np.eye(2), atol=1e-10):
        raise ValueError("matrix must be a 2x2 unitary")
    return _single(state, [Unitary1q(qubit, matrix)])


def run_circuit(n_qubits: int, ops: Sequence[CircuitOp], initial: StateVector | None = None) -> StateVector:
    """Apply ``ops`` in order, starting from ``|0...0>`` unless ``initial`` is given."""
    if initial is None:
        initial = new_zero_state(n_qubits)
    elif initial.n_qubits != n_qubits:
        raise ValueError(f"initial state has {initial.n_qubits} qubits, circuit has {n_qubits}")
    return _single(initial, list(ops))


def expectation(state: StateVector, obs: Observable) -> float:
    """``Tr[A |psi><psi|]`` for a projector observable ``A``; lies in [0, 1]."""
    return float(expectations(state.amplitudes[None, :], [obs])[0, 0])
