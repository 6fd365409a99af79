"""Matrix-product-state circuit execution with SVD truncation.

Tensors have shape ``(chi_left, 2, chi_right)``. Two-qubit gates act on
neighbouring sites; :func:`route_and_run` moves logical qubits with SWAPs and
keeps track of where each one ended up, so observables are permuted rather
than the state being routed back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import PAULI, BoundCircuit, BoundGate, GateKind, gate_matrix
from .errors import NonAdjacentGate, WidthMismatch
from .observables import PauliSum


@dataclass(frozen=True)
class TruncationPolicy:
    """Bond truncation rule.

    Singular values below ``svd_cutoff`` times the largest one are discarded
    first, then at most ``chi_max`` are kept.
    """

    chi_max: int | None = None
    svd_cutoff: float | None = None

    def __post_init__(self):
        if self.chi_max is None and self.svd_cutoff is None:
            raise ValueError("set chi_max, svd_cutoff or both")
        if self.chi_max is not None and self.chi_max < 1:
            raise ValueError("chi_max must be positive")
        if self.svd_cutoff is not None and self.svd_cutoff < 0:
            raise ValueError("svd_cutoff must be >= 0")

    def keep(self, s: np.ndarray) -> int:
        k = len(s)
        if self.svd_cutoff is not None and s[0] > 0:
            k = max(1, int(np.count_nonzero(s > self.svd_cutoff * s[0])))
        if self.chi_max is not None:
            k = min(k, self.chi_max)
        return k


EXACT = TruncationPolicy(svd_cutoff=0.0)


class MPS:
    """Open-boundary MPS with a tracked orthogonality center.

    ``site_of[q]`` is the site currently holding logical qubit ``q``.
    Operations return new objects; tensor arrays are never written in place,
    so copies share unchanged tensors.
    """

    __slots__ = ("tensors", "center", "site_of", "swaps", "discarded_weight")

    def __init__(self, tensors, center=0, site_of=None, swaps=0, discarded_weight=0.0):
        self.tensors = list(tensors)
        self.center = center
        self.site_of = list(range(len(self.tensors))) if site_of is None else list(site_of)
        self.swaps = swaps
        self.discarded_weight = discarded_weight

    @property
    def nqubits(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self) -> MPS:
        return MPS(self.tensors, self.center, self.site_of, self.swaps, self.discarded_weight)

    # -- gauge ---------------------------------------------------------------
    def _move_center(self, site: int):
        ts = self.tensors
        while self.center < site:
            k = self.center
            a = ts[k]
            q, r = np.linalg.qr(a.reshape(-1, a.shape[2]))
            ts[k] = q.reshape(a.shape[0], 2, -1)
            ts[k + 1] = np.tensordot(r, ts[k + 1], axes=(1, 0))
            self.center += 1
        while self.center > site:
            k = self.center
            a = ts[k]
            q, r = np.linalg.qr(a.reshape(a.shape[0], -1).T)
            ts[k] = q.T.reshape(-1, 2, a.shape[2])
            ts[k - 1] = np.tensordot(ts[k - 1], r.T, axes=(2, 0))
            self.center -= 1

    def moved_center(self, site: int) -> MPS:
        out = self.copy()
        out._move_center(site)
        return out

    # -- gate application -----------------------------------------------------
    def _apply_site_1q(self, u: np.ndarray, site: int):
        self.tensors[site] = np.einsum("ij,ajb->aib", u, self.tensors[site])

    def _apply_site_2q(self, u: np.ndarray, left: int, flipped: bool, policy: TruncationPolicy):
        """``u`` acts on (left, left+1), or on (left+1, left) when ``flipped``."""
        u4 = u.reshape(2, 2, 2, 2)
        if flipped:
            u4 = u4.transpose(1, 0, 3, 2)
        self._move_center(left)
        a, b = self.tensors[left], self.tensors[left + 1]
        theta = np.tensordot(a, b, axes=(2, 0))  # (l, s1, s2, r)
        theta = np.einsum("ijkl,akls->aijs", u4, theta)
        chil, chir = theta.shape[0], theta.shape[3]
        uu, s, vh = np.linalg.svd(theta.reshape(chil * 2, 2 * chir), full_matrices=False)
        k = policy.keep(s)
        total = float(np.sum(s**2))
        kept = s[:k]
        self.discarded_weight += total - float(np.sum(kept**2))
        kept = kept / np.linalg.norm(kept) * np.sqrt(total)
        self.tensors[left] = uu[:, :k].reshape(chil, 2, k)
        self.tensors[left + 1] = (kept[:, None] * vh[:k]).reshape(k, 2, chir)
        self.center = left + 1

    def _apply_gate(self, gate: BoundGate, policy: TruncationPolicy):
        """Apply a gate whose qubits are *sites*."""
        if gate.kind.nqubits == 1:
            self._apply_site_1q(gate.matrix, gate.qubits[0])
            return
        s0, s1 = gate.qubits
        if abs(s0 - s1) != 1:
            raise NonAdjacentGate(f"{gate.kind.value} on non-neighbouring sites {s0}, {s1}")
        self._apply_site_2q(gate.matrix, min(s0, s1), s0 > s1, policy)

    # -- measurement ----------------------------------------------------------
    def norm(self) -> float:
        env = np.ones((1, 1), dtype=complex)
        for a in self.tensors:
            env = np.einsum("ab,asc,bsd->cd", env, a.conj(), a)
        return float(np.sqrt(abs(env[0, 0])))

    def to_statevector(self) -> np.ndarray:
        """Dense amplitudes in logical qubit order (qubit 0 most significant)."""
        psi = self.tensors[0]
        for a in self.tensors[1:]:
            psi = np.tensordot(psi, a, axes=(psi.ndim - 1, 0))
        psi = psi.reshape((2,) * self.nqubits)
        psi = np.transpose(psi, self.site_of)
        return psi.reshape(-1)

    def entanglement_entropy(self, bond: int) -> float:
        """Von Neumann entropy across the cut between sites ``bond`` and ``bond+1``."""
        m = self.moved_center(bond)
        a = m.tensors[bond]
        s = np.linalg.svd(a.reshape(-1, a.shape[2]), compute_uv=False)
        p = s**2 / np.sum(s**2)
        p = p[p > 1e-300]
        return float(-np.sum(p * np.log(p)))


def mps_init(n: int) -> MPS:
    if n < 1:
        raise ValueError("n must be >= 1")
    t = np.zeros((1, 2, 1), dtype=complex)
    t[0, 0, 0] = 1.0
    return MPS([t.copy() for _ in range(n)])


def mps_apply(state: MPS, gate: BoundGate, policy: TruncationPolicy = EXACT) -> MPS:
    """Apply a gate given in site indices; the input state is not modified."""
    out = state.copy()
    out._apply_gate(gate, policy)
    return out


def route_and_run(circuit: BoundCircuit, policy: TruncationPolicy = EXACT) -> MPS:
    """Run a circuit on an MPS, inserting SWAPs for distant two-qubit gates.

    The first qubit of a distant gate is swapped towards the second until
    they are neighbours. The final placement is left in ``site_of``.
    """
    state = mps_init(circuit.nqubits)
    site_of = state.site_of
    qubit_at = list(range(circuit.nqubits))
    swap = gate_matrix(GateKind.SWAP)
    for g in circuit.gates:
        if g.kind.nqubits == 1:
            state._apply_site_1q(g.matrix, site_of[g.qubits[0]])
            continue
        a, b = g.qubits
        while abs(site_of[a] - site_of[b]) > 1:
            sa = site_of[a]
            step = 1 if site_of[b] > sa else -1
            state._apply_site_2q(swap, min(sa, sa + step), False, policy)
            other = qubit_at[sa + step]
            qubit_at[sa], qubit_at[sa + step] = other, a
            site_of[a], site_of[other] = sa + step, sa
            state.swaps += 1
        sa, sb = site_of[a], site_of[b]
        state._apply_site_2q(g.matrix, min(sa, sb), sa > sb, policy)
    return state


def mps_expectation(state: MPS, obs: PauliSum) -> float:
    """Sum of Pauli-string expectations by transfer-matrix contraction.

    Only the window between the outermost non-identity factors is contracted;
    the outer parts reduce to the identity because the orthogonality center
    is kept inside that window.
    """
    if obs.width != state.nqubits:
        raise WidthMismatch(f"{state.nqubits}-site MPS, {obs.width}-qubit observable")
    total = 0.0 + 0.0j
    for c, p in obs.terms:
        if not p.ops:
            total += c * state.norm() ** 2
            continue
        sites_ops = {state.site_of[q]: PAULI[name] for q, name in p.ops}
        total += c * _window_expectation(state, sites_ops)
    return float(total.real)


def _window_expectation(state: MPS, sites_ops: dict[int, np.ndarray]) -> complex:
    lo, hi = min(sites_ops), max(sites_ops)
    m = state if lo <= state.center <= hi else state.moved_center(min(max(state.center, lo), hi))
    env = np.eye(m.tensors[lo].shape[0], dtype=complex)
    for k in range(lo, hi + 1):
        a = m.tensors[k]
        op = sites_ops.get(k)
        b = a if op is None else np.einsum("ij,ajb->aib", op, a)
        env = np.einsum("ab,asc,bsd->cd", env, a.conj(), b)
    return np.trace(env)


def mps_sample_bits(state: MPS, nshots: int, rng=None) -> np.ndarray:
    """``(nshots, n)`` array of measured bits in logical qubit order.

    Sites are sampled left to right from conditional marginals, which is
    exact because everything right of the orthogonality center is isometric.
    """
    rng = np.random.default_rng(rng)
    m = state.moved_center(0)
    n = m.nqubits
    samples = np.zeros((nshots, n), dtype=np.int64)
    env = np.ones((nshots, 1), dtype=complex)
    for k, a in enumerate(m.tensors):
        branch = np.einsum("na,asb->nsb", env, a)
        w = np.sum(np.abs(branch) ** 2, axis=2).real
        p1 = w[:, 1] / np.sum(w, axis=1)
        bits = (rng.random(nshots) < p1).astype(np.int64)
        samples[:, k] = bits
        chosen = branch[np.arange(nshots), bits]
        env = chosen / np.linalg.norm(chosen, axis=1, keepdims=True)
    return samples[:, m.site_of]


def mps_sample_counts(state: MPS, nshots: int, rng=None) -> np.ndarray:
    """Counts over all 2**n basis states; only sensible for small n."""
    bits = mps_sample_bits(state, nshots, rng)
    n = bits.shape[1]
    weights = 1 << np.arange(n - 1, -1, -1)
    return np.bincount(bits @ weights, minlength=2**n)


def parity_estimate(bits: np.ndarray, qubits) -> float:
    """Mean of (-1)**(sum of the selected bits) over shots."""
    qubits = list(qubits)
    if not qubits:
        return 1.0
    parity = bits[:, qubits].sum(axis=1) & 1
    return float(np.mean(1 - 2 * parity))
