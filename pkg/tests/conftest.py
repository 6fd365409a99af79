"""Shared fixtures and independent dense-matrix oracles.

The oracles build full 2^n x 2^n operators by explicit bit manipulation
instead of going through the package's tensor kernels.
"""

import numpy as np
import pytest

from qmlforge.circuit import AngleExpr, Circuit, GateKind, gate_matrix

I2 = np.eye(2, dtype=complex)
PAULIS = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def full_operator(u: np.ndarray, qubits, n: int) -> np.ndarray:
    """Embed a k-qubit matrix on ``qubits`` into n qubits (qubit 0 = MSB)."""
    k = len(qubits)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        local_in = 0
        for q in qubits:
            local_in = 2 * local_in + bits[q]
        for local_out in range(2**k):
            amp = u[local_out, local_in]
            if amp == 0:
                continue
            new = list(bits)
            for pos, q in enumerate(qubits):
                new[q] = (local_out >> (k - 1 - pos)) & 1
            row = 0
            for b in new:
                row = 2 * row + b
            out[row, col] += amp
    return out


def dense_unitary(bound) -> np.ndarray:
    n = bound.nqubits
    u = np.eye(2**n, dtype=complex)
    for g in bound.gates:
        u = full_operator(gate_matrix(g.kind, g.angle), g.qubits, n) @ u
    return u


def dense_state(bound) -> np.ndarray:
    psi = np.zeros(2**bound.nqubits, dtype=complex)
    psi[0] = 1.0
    return dense_unitary(bound) @ psi


def pauli_kron(label: str) -> np.ndarray:
    """Kronecker product for a dense label like 'XIZ'."""
    m = np.array([[1.0 + 0j]])
    for ch in label:
        m = np.kron(m, PAULIS[ch])
    return m


def dense_observable(obs) -> np.ndarray:
    n = obs.width
    h = np.zeros((2**n, 2**n), dtype=complex)
    for c, p in obs.terms:
        label = ["I"] * n
        for q, op in p.ops:
            label[q] = op
        h += c * pauli_kron("".join(label))
    return h


def kraus_density(bound, kraus_after_gate) -> np.ndarray:
    """Density evolution with full-space Kraus sums after each gate.

    ``kraus_after_gate(gate)`` returns a list of (qubit, [2x2 Kraus ops]).
    """
    n = bound.nqubits
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1.0
    for g in bound.gates:
        u = full_operator(gate_matrix(g.kind, g.angle), g.qubits, n)
        rho = u @ rho @ u.conj().T
        for q, ops in kraus_after_gate(g):
            new = np.zeros_like(rho)
            for k in ops:
                kf = full_operator(k, (q,), n)
                new += kf @ rho @ kf.conj().T
            rho = new
    return rho


def random_circuit(rng, n, nlayers=2, nparams=None, ninputs=0, share=True) -> Circuit:
    """HardwareEfficient-shaped circuit with random affine angle sharing."""
    ngates = 2 * n * nlayers
    nparams = nparams or ngates
    c = Circuit(n)
    for _ in range(nlayers):
        for kind in (GateKind.RY, GateKind.RZ, GateKind.RX):
            for q in range(n):
                if rng.random() < 0.3 and kind is GateKind.RX:
                    continue
                params = {int(rng.integers(nparams)): float(rng.normal())}
                if share and rng.random() < 0.5:
                    params[int(rng.integers(nparams))] = float(rng.normal())
                inputs = {}
                if ninputs and rng.random() < 0.5:
                    inputs = {int(rng.integers(ninputs)): float(rng.normal())}
                c.add(kind, q, AngleExpr(float(rng.normal()), params, inputs))
        for q in range(n - 1):
            c.add(GateKind.CZ if rng.random() < 0.5 else GateKind.CNOT, (q, q + 1))
    return c


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
