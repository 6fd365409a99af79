"""Encoders, ansatze, decoders and the model that strings them together."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .circuit import AngleExpr, BoundCircuit, Circuit, GateKind, angle_jacobian, bind, compose
from .errors import NoisyStatevector, UnsupportedBackend, WidthMismatch
from .mps import (
    EXACT,
    TruncationPolicy,
    mps_expectation,
    mps_sample_bits,
    mps_sample_counts,
    parity_estimate,
    route_and_run,
)
from .observables import PauliSum, measurement_groups
from .sim.exact import (
    counts_from_probabilities,
    estimate_expectation,
    run_density,
    run_statevector,
)
from .sim.noise import NoiseModel


class Block:
    """A piece of a circuit structure.

    ``build(param_offset)`` returns the block's circuit with its own
    parameter indices shifted by ``param_offset``. Input indices are shared
    across blocks, so two encoders of the same width upload the same data.
    """

    nqubits: int
    nparams: int = 0
    ninputs: int = 0

    def build(self, param_offset: int = 0) -> Circuit:
        raise NotImplementedError


@dataclass(frozen=True)
class PhaseEncoding(Block):
    """One rotation per encoded qubit; input ``j`` goes to ``qubits[j]``."""

    nqubits: int
    axis: str = "RX"
    qubits: tuple[int, ...] | None = None

    @property
    def targets(self) -> tuple[int, ...]:
        return tuple(range(self.nqubits)) if self.qubits is None else tuple(self.qubits)

    @property
    def ninputs(self) -> int:
        return len(self.targets)

    def build(self, param_offset: int = 0) -> Circuit:
        kind = GateKind.parse(self.axis)
        if not kind.is_rotation:
            raise ValueError(f"encoding axis must be a rotation, got {self.axis}")
        c = Circuit(self.nqubits)
        for j, q in enumerate(self.targets):
            c.add(kind, q, AngleExpr.input(j))
        return c


@dataclass(frozen=True)
class HardwareEfficient(Block):
    """Layers of RY and RZ on every qubit followed by a CZ ladder."""

    nqubits: int
    nlayers: int = 1

    @property
    def nparams(self) -> int:
        return 2 * self.nqubits * self.nlayers

    def build(self, param_offset: int = 0) -> Circuit:
        c = Circuit(self.nqubits)
        k = param_offset
        for _ in range(self.nlayers):
            for kind in (GateKind.RY, GateKind.RZ):
                for q in range(self.nqubits):
                    c.add(kind, q, AngleExpr.param(k))
                    k += 1
            for q in range(self.nqubits - 1):
                c.add(GateKind.CZ, (q, q + 1))
        return c


@dataclass(frozen=True)
class ReuploadingAnsatz(Block):
    """Single-qubit data re-uploading: per layer RX(x0), RY(t), RZ(t')."""

    nlayers: int
    nqubits: int = 1

    def __post_init__(self):
        if self.nlayers < 1:
            raise ValueError("nlayers must be >= 1")

    @property
    def nparams(self) -> int:
        return 2 * self.nlayers

    @property
    def ninputs(self) -> int:
        return 1

    def build(self, param_offset: int = 0) -> Circuit:
        c = Circuit(1)
        for layer in range(self.nlayers):
            c.add(GateKind.RX, 0, AngleExpr.input(0))
            c.add(GateKind.RY, 0, AngleExpr.param(param_offset + 2 * layer))
            c.add(GateKind.RZ, 0, AngleExpr.param(param_offset + 2 * layer + 1))
        return c


def build_reuploading_1q(nlayers: int) -> ReuploadingAnsatz:
    return ReuploadingAnsatz(nlayers)


@dataclass(frozen=True)
class RawBlock(Block):
    circuit: Circuit

    @property
    def nqubits(self) -> int:
        return self.circuit.nqubits

    @property
    def nparams(self) -> int:
        return self.circuit.nparams

    @property
    def ninputs(self) -> int:
        return self.circuit.ninputs

    def build(self, param_offset: int = 0) -> Circuit:
        return self.circuit.shifted(param_offset)


BACKENDS = ("statevector", "density", "mps")


def _resolve_backend(backend, noise):
    if backend is None:
        return "density" if noise else "statevector"
    if backend not in BACKENDS:
        raise UnsupportedBackend(f"unknown backend {backend!r}; choose from {BACKENDS}")
    if noise and backend == "statevector":
        raise NoisyStatevector("noise requested on the statevector backend; use 'density'")
    if noise and backend == "mps":
        raise UnsupportedBackend("the MPS backend does not simulate noise")
    return backend


class Decoder:
    """Turns a bound circuit into classical output."""

    nshots: int | None = None
    noise: NoiseModel | None = None
    backend: str = "statevector"
    policy: TruncationPolicy = EXACT

    def __call__(self, circuit: BoundCircuit, rng=None):
        raise NotImplementedError

    @property
    def analytic(self) -> bool:
        return self.nshots is None


class Expectation(Decoder):
    """Expectation value of a Pauli-sum observable.

    ``backend`` defaults to the density-matrix simulator when a noise model
    is given and to the statevector otherwise. With a ``mitigation``
    configuration every value (predictions and gradient shifts alike) passes
    through a :class:`~qmlforge.mitigation.Mitigator` owned by the decoder.
    """

    def __init__(
        self,
        observable: PauliSum,
        nshots: int | None = None,
        noise: NoiseModel | None = None,
        backend: str | None = None,
        policy: TruncationPolicy | None = None,
        mitigation=None,
    ):
        self.observable = observable
        self.nshots = None if nshots is None else int(nshots)
        self.noise = noise if noise else None
        self.backend = _resolve_backend(backend, self.noise)
        self.policy = policy or EXACT
        self.mitigator = None
        if mitigation is not None:
            from .mitigation import Mitigator, MitigationConfig

            if isinstance(mitigation, dict):
                mitigation = MitigationConfig.from_dict(mitigation)
            self.mitigator = Mitigator(mitigation)

    @property
    def nqubits(self) -> int:
        return self.observable.width

    def raw(self, circuit: BoundCircuit, rng=None) -> float:
        if circuit.nqubits != self.observable.width:
            raise WidthMismatch(
                f"{circuit.nqubits}-qubit circuit, {self.observable.width}-qubit observable"
            )
        if self.backend == "mps":
            if self.nshots is None:
                return mps_expectation(route_and_run(circuit, self.policy), self.observable)
            return _mps_shot_estimate(circuit, self.observable, self.nshots, self.policy, rng)
        return estimate_expectation(circuit, self.observable, self.nshots, self.noise, rng)

    def __call__(self, circuit: BoundCircuit, rng=None) -> float:
        rng = np.random.default_rng(rng)
        value = self.raw(circuit, rng)
        if self.mitigator is not None:
            value = self.mitigator.mitigate(
                value, circuit, self.observable, self.noise, rng, nshots=self.nshots
            )
        return value


def _mps_shot_estimate(circuit, obs, nshots, policy, rng) -> float:
    rng = np.random.default_rng(rng)
    value = 0.0
    for group in measurement_groups(obs):
        state = route_and_run(compose([circuit, bind(group.basis_change)]), policy)
        bits = mps_sample_bits(state, nshots, rng)
        for c, mask in group.terms:
            qubits = [q for q in range(obs.width) if mask >> (obs.width - 1 - q) & 1]
            value += c * parity_estimate(bits, qubits)
    return value


class Probabilities(Decoder):
    """Computational-basis probabilities (empirical frequencies when ``nshots`` is set)."""

    def __init__(
        self,
        nshots: int | None = None,
        noise: NoiseModel | None = None,
        backend: str | None = None,
        policy: TruncationPolicy | None = None,
    ):
        self.nshots = None if nshots is None else int(nshots)
        self.noise = noise if noise else None
        self.backend = _resolve_backend(backend, self.noise)
        self.policy = policy or EXACT

    def __call__(self, circuit: BoundCircuit, rng=None) -> np.ndarray:
        if self.backend == "mps":
            state = route_and_run(circuit, self.policy)
            if self.nshots is not None:
                counts = mps_sample_counts(state, self.nshots, rng)
                return counts / self.nshots
            probs = np.abs(state.to_statevector()) ** 2
        elif self.backend == "density":
            probs = run_density(circuit, self.noise).probabilities()
        else:
            probs = run_statevector(circuit).probabilities()
        if self.nshots is None:
            return probs / probs.sum()
        counts = counts_from_probabilities(probs, self.nshots, np.random.default_rng(rng))
        return counts / self.nshots


def _as_block(part) -> Block:
    if isinstance(part, Block):
        return part
    if isinstance(part, Circuit):
        return RawBlock(part)
    raise TypeError(f"cannot use {type(part).__name__} in a circuit structure")


class QuantumModel:
    """Circuit structure plus decoder, with the trainable parameter vector.

    Parameters of successive blocks occupy consecutive slices of ``params``
    in structure order.
    """

    def __init__(self, circuit_structure, decoder: Decoder, params: Sequence[float] | None = None):
        if isinstance(circuit_structure, (Block, Circuit)):
            circuit_structure = [circuit_structure]
        self.structure = tuple(_as_block(p) for p in circuit_structure)
        if not self.structure:
            raise ValueError("empty circuit structure")
        widths = {b.nqubits for b in self.structure}
        if len(widths) != 1:
            raise WidthMismatch(f"structure mixes widths {sorted(widths)}")
        self.nqubits = widths.pop()
        obs = getattr(decoder, "observable", None)
        if obs is not None and obs.width != self.nqubits:
            raise WidthMismatch(f"{self.nqubits}-qubit circuit, {obs.width}-qubit observable")
        self.decoder = decoder
        self.params = np.zeros(self.nparams) if params is None else np.array(params, dtype=float)
        if self.params.shape != (self.nparams,):
            raise ValueError(f"expected {self.nparams} parameters, got {self.params.shape}")

    @cached_property
    def nparams(self) -> int:
        return sum(b.nparams for b in self.structure)

    @cached_property
    def ninputs(self) -> int:
        return max((b.ninputs for b in self.structure), default=0)

    @cached_property
    def circuit(self) -> Circuit:
        parts, offset = [], 0
        for b in self.structure:
            parts.append(b.build(offset))
            offset += b.nparams
        return compose(parts)

    @cached_property
    def jacobian(self):
        return angle_jacobian(self.circuit, self.nparams, self.ninputs)

    def _inputs(self, x) -> np.ndarray:
        x = np.zeros(0) if x is None else np.atleast_1d(np.asarray(x, dtype=float))
        if x.size != self.ninputs:
            raise WidthMismatch(f"model takes {self.ninputs} inputs, got {x.size}")
        return x

    def bound(self, x=None, params=None) -> BoundCircuit:
        params = self.params if params is None else np.asarray(params, dtype=float).ravel()
        if params.size != self.nparams:
            raise WidthMismatch(f"model has {self.nparams} parameters, got {params.size}")
        return bind(self.circuit, params, self._inputs(x))

    def forward(self, x=None, rng=None, params=None):
        return self.decoder(self.bound(x, params), rng)

    __call__ = forward
