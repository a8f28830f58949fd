"""
Statevectors and projector measurements
=======================================

Build a few small circuits by hand and look at the numbers.
"""

import numpy as np

from esqnn.circuits import AnsatzSpec, build_ansatz, build_input2, encode_wavefunction
from esqnn.sim import Cnot, GlobalProjector, LocalZeroProjector, Ry, expectation, run_circuit

# A single Ry(pi/2) puts qubit 0 in an equal superposition.
psi = run_circuit(1, [Ry(0, np.pi / 2)])
print("Ry(pi/2)|0>           ", np.round(psi.amplitudes.real, 4))

# Ry followed by CNOT gives a Bell pair; qubit 0 is the most significant bit.
bell = run_circuit(2, [Ry(0, np.pi / 2), Cnot(0, 1)])
print("Bell pair amplitudes  ", np.round(bell.amplitudes.real, 4))
print("P(|00>), P(|11>)      ", expectation(bell, GlobalProjector(0)), expectation(bell, GlobalProjector(3)))

# Amplitude encoding puts a normalized 4-vector into two qubits directly.
state = encode_wavefunction([3.0, 0.0, 4.0, 0.0])
print("wavefunction encoding ", state.amplitudes.real)

# A layer circuit: one Ry column of inputs plus an entangling ladder, then
# two blocks of trainable Ry columns and ladders.
n = 3
x = np.full(n, np.pi / 4)
theta = np.random.default_rng(0).uniform(0, 2 * np.pi, 2 * n)
ops = build_input2(x, n) + build_ansatz(theta, AnsatzSpec(n, 2))
out = run_circuit(n, ops)
print("gates in layer circuit", len(ops))
print("local P(q=0) per qubit", [round(expectation(out, LocalZeroProjector(q)), 4) for q in range(n)])
