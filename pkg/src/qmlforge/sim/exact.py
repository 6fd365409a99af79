"""Exact statevector and density-matrix simulation, expectations and shot sampling."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..circuit import BoundCircuit, bind
from ..errors import NoisyStatevector, QubitLimitExceeded, WidthMismatch
from ..observables import PauliSum, measurement_groups
from .kernels import apply_1q, apply_matrix, apply_pauli
from .noise import NoiseModel

DEFAULT_MAX_DENSITY_QUBITS = 12


def max_density_qubits() -> int:
    return int(os.environ.get("QMLFORGE_MAX_QUBITS", DEFAULT_MAX_DENSITY_QUBITS))


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    @property
    def nqubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray

    @property
    def nqubits(self) -> int:
        return int(self.rho.shape[0]).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.clip(np.real(np.diag(self.rho)), 0.0, None)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.rho, self.rho)))


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def evolve_statevector(psi: np.ndarray, circuit: BoundCircuit) -> np.ndarray:
    n = circuit.nqubits
    t = psi.reshape((2,) * n)
    for g in circuit.gates:
        t = apply_matrix(t, g.matrix, g.qubits)
    return t.reshape(-1)


def run_statevector(circuit: BoundCircuit, noise: NoiseModel | None = None) -> StateVector:
    if noise:
        raise NoisyStatevector(
            "a noise model needs density-matrix simulation; use run_density"
        )
    return StateVector(evolve_statevector(zero_state(circuit.nqubits), circuit))


def _apply_pauli_mixture(t: np.ndarray, probs, q: int, n: int) -> np.ndarray:
    # 2x2 block form on (row q, column q): X.X swaps A<->D and B<->C, Z.Z flips B, C
    px, py, pz = probs
    p0 = 1.0 - px - py - pz
    t = np.moveaxis(t, (q, n + q), (0, 1))
    a, b, c, d = t[0, 0], t[0, 1], t[1, 0], t[1, 1]
    flip, keep = px + py, p0 + pz
    out = np.empty_like(t)
    out[0, 0] = keep * a + flip * d
    out[1, 1] = keep * d + flip * a
    out[0, 1] = (p0 - pz) * b + (px - py) * c
    out[1, 0] = (p0 - pz) * c + (px - py) * b
    return np.moveaxis(out, (0, 1), (q, n + q))


def _apply_channel(t: np.ndarray, kraus, q: int, n: int) -> np.ndarray:
    out = None
    for k in kraus:
        term = apply_1q(apply_1q(t, k, q), k.conj(), n + q)
        out = term if out is None else out + term
    return out


def evolve_density(
    rho: np.ndarray, circuit: BoundCircuit, noise: NoiseModel | None = None
) -> np.ndarray:
    n = circuit.nqubits
    t = rho.reshape((2,) * (2 * n))
    for g in circuit.gates:
        u = g.matrix
        t = apply_matrix(t, u, g.qubits)
        t = apply_matrix(t, u.conj(), tuple(q + n for q in g.qubits))
        if noise:
            for q, ch in noise.channels_after(g.qubits):
                probs = ch.pauli_probs()
                if probs is not None:
                    t = _apply_pauli_mixture(t, probs, q, n)
                else:
                    t = _apply_channel(t, ch.kraus(), q, n)
    return t.reshape(2**n, 2**n)


def _guard_density(n: int):
    limit = max_density_qubits()
    if n > limit:
        raise QubitLimitExceeded(
            f"density-matrix simulation of {n} qubits exceeds the limit of {limit}; "
            "use the noiseless statevector or MPS backend, or raise QMLFORGE_MAX_QUBITS"
        )


def run_density(circuit: BoundCircuit, noise: NoiseModel | None = None) -> DensityMatrix:
    n = circuit.nqubits
    _guard_density(n)
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1.0
    return DensityMatrix(evolve_density(rho, circuit, noise))


def expectation_exact(state: StateVector | DensityMatrix, obs: PauliSum) -> float:
    if state.nqubits != obs.width:
        raise WidthMismatch(f"{state.nqubits}-qubit state, {obs.width}-qubit observable")
    n = obs.width
    total = 0.0 + 0.0j
    if isinstance(state, StateVector):
        psi = state.amplitudes
        t = psi.reshape((2,) * n)
        for c, p in obs.terms:
            total += c * np.vdot(psi, apply_pauli(t, p.ops).reshape(-1))
    else:
        rho = state.rho.reshape((2,) * (2 * n))
        dim = 2**n
        for c, p in obs.terms:
            total += c * np.trace(apply_pauli(rho, p.ops).reshape(dim, dim))
    if abs(total.imag) > 1e-9:
        raise ArithmeticError(f"non-real expectation value {total}")
    return float(total.real)


def _parity_signs(nqubits: int, mask: int) -> np.ndarray:
    idx = np.arange(2**nqubits, dtype=np.uint64)
    return 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(mask)) & 1)


def counts_from_probabilities(
    probs: np.ndarray, nshots: int, rng: np.random.Generator
) -> np.ndarray:
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    return rng.multinomial(int(nshots), probs / probs.sum())


def sample_counts(
    state: StateVector | DensityMatrix, nshots: int, rng=None
) -> dict[str, int]:
    """Multinomial computational-basis counts keyed by bitstring (qubit 0 first)."""
    if nshots < 1:
        raise ValueError("nshots must be >= 1")
    rng = np.random.default_rng(rng)
    counts = counts_from_probabilities(state.probabilities(), nshots, rng)
    n = state.nqubits
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c}


def expectation_from_counts(counts: np.ndarray, terms, nqubits: int) -> float:
    """Average parity estimate of ``sum coeff * Z-mask`` from a counts vector."""
    total = counts.sum()
    return float(
        sum(c * np.dot(counts, _parity_signs(nqubits, mask)) for c, mask in terms) / total
    )


def estimate_expectation(
    circuit: BoundCircuit,
    obs: PauliSum,
    nshots: int | None = None,
    noise: NoiseModel | None = None,
    rng=None,
) -> float:
    """Expectation of ``obs`` after ``circuit``.

    Without ``nshots`` the analytic value is returned, from the statevector
    when there is no noise and from the density matrix otherwise. With
    ``nshots`` every measurement group is sampled ``nshots`` times after its
    basis change, and the parity averages are combined.
    """
    if circuit.nqubits != obs.width:
        raise WidthMismatch(f"{circuit.nqubits}-qubit circuit, {obs.width}-qubit observable")
    n = circuit.nqubits
    if nshots is None:
        state = run_density(circuit, noise) if noise else run_statevector(circuit)
        return expectation_exact(state, obs)

    rng = np.random.default_rng(rng)
    if noise:
        _guard_density(n)
        base = run_density(circuit, noise).rho
    else:
        base = run_statevector(circuit).amplitudes
    value = 0.0
    for group in measurement_groups(obs):
        change = bind(group.basis_change)
        if noise:
            # measurement rotations are ideal so the estimator targets the analytic value
            probs = np.real(np.diag(evolve_density(base, change)))
        elif len(change):
            probs = np.abs(evolve_statevector(base, change)) ** 2
        else:
            probs = np.abs(base) ** 2
        counts = counts_from_probabilities(probs, nshots, rng)
        value += expectation_from_counts(counts, group.terms, n)
    return float(value)

