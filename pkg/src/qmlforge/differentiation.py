"""Gradient engines.

Each engine produces derivatives of the decoder output with respect to the
rotation angles of a bound circuit. :meth:`Differentiation.gradient` chains
those with the model's angle Jacobian to get derivatives with respect to the
parameters and the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import PAULI, BoundCircuit
from .errors import UnsupportedBackend, UnsupportedGate
from .models import Expectation, QuantumModel
from .sim.exact import evolve_statevector, zero_state
from .sim.kernels import apply_1q, apply_matrix, apply_pauli


@dataclass(frozen=True)
class Gradient:
    wrt_params: np.ndarray
    wrt_inputs: np.ndarray


class Differentiation:
    """Base class for gradient engines.

    Subclasses implement :meth:`angle_gradient`. The result has one row per
    rotation gate, in circuit order.
    """

    name = "abstract"

    def angle_gradient(self, circuit: BoundCircuit, decoder, rng=None) -> np.ndarray:
        raise NotImplementedError

    def value_and_angle_gradient(self, circuit: BoundCircuit, decoder, rng=None):
        rng = np.random.default_rng(rng)
        value_rng, grad_rng = rng.spawn(2)
        return decoder(circuit, value_rng), self.angle_gradient(circuit, decoder, grad_rng)

    def value_and_gradient(self, model: QuantumModel, x=None, rng=None, params=None):
        value, g = self.value_and_angle_gradient(model.bound(x, params), model.decoder, rng)
        return value, chain(model, g)

    def gradient(self, model: QuantumModel, x=None, rng=None, params=None) -> Gradient:
        g = self.angle_gradient(model.bound(x, params), model.decoder, rng)
        return chain(model, g)


def chain(model: QuantumModel, angle_grad: np.ndarray) -> Gradient:
    jac = model.jacobian
    return Gradient(jac.wrt_params.T @ angle_grad, jac.wrt_inputs.T @ angle_grad)


class ParameterShift(Differentiation):
    """Two evaluations per rotation at angle +/- pi/2.

    Every shifted evaluation goes through the decoder, so shots, noise and
    mitigation apply exactly as for predictions. Each one draws from its own
    random substream.
    """

    name = "psr"
    shift = np.pi / 2

    def angle_gradient(self, circuit, decoder, rng=None):
        for g in circuit.gates:
            if g.kind.is_rotation and g.kind.axis not in "XYZ":
                raise UnsupportedGate(f"no shift rule for {g.kind.value}")
        angles = circuit.angles
        if angles.size == 0:
            return np.zeros(0)
        streams = np.random.default_rng(rng).spawn(2 * angles.size)
        out = []
        for k in range(angles.size):
            plus, minus = angles.copy(), angles.copy()
            plus[k] += self.shift
            minus[k] -= self.shift
            e_plus = decoder(circuit.with_angles(plus), streams[2 * k])
            e_minus = decoder(circuit.with_angles(minus), streams[2 * k + 1])
            out.append(0.5 * (np.asarray(e_plus) - np.asarray(e_minus)))
        return np.array(out)


def _require_exact_statevector(decoder):
    if not isinstance(decoder, Expectation):
        raise UnsupportedBackend("adjoint differentiation needs an Expectation decoder")
    problems = []
    if decoder.nshots is not None:
        problems.append("shots")
    if decoder.noise:
        problems.append("noise")
    if decoder.backend != "statevector":
        problems.append(f"backend={decoder.backend}")
    if decoder.mitigator is not None:
        problems.append("mitigation")
    if problems:
        raise UnsupportedBackend(
            "adjoint differentiation is exact-statevector only; got " + ", ".join(problems)
        )


class Adjoint(Differentiation):
    """Reverse sweep over the gate list with one forward simulation."""

    name = "adjoint"

    def value_and_angle_gradient(self, circuit, decoder, rng=None):
        _require_exact_statevector(decoder)
        n = circuit.nqubits
        shape = (2,) * n
        psi = evolve_statevector(zero_state(n), circuit).reshape(shape)
        lam = np.zeros(shape, dtype=complex)
        for c, p in decoder.observable.terms:
            lam = lam + c * apply_pauli(psi, p.ops)
        value = float(np.real(np.vdot(psi, lam)))
        grads = []
        for g in reversed(circuit.gates):
            u = g.matrix
            udag = u.conj().T
            after = psi
            psi = apply_matrix(psi, udag, g.qubits)
            if g.kind.is_rotation:
                # d/dt exp(-i t P / 2) = (-i P / 2) exp(-i t P / 2)
                d = -0.5j * apply_1q(after, PAULI[g.kind.axis], g.qubits[0])
                grads.append(2.0 * np.real(np.vdot(lam, d)))
            lam = apply_matrix(lam, udag, g.qubits)
        return value, np.array(grads[::-1])

    def angle_gradient(self, circuit, decoder, rng=None):
        return self.value_and_angle_gradient(circuit, decoder, rng)[1]


class FiniteDifference(Differentiation):
    """Central differences; meant as a test oracle on analytic backends."""

    name = "finite_diff"

    def __init__(self, h: float = 1e-5):
        self.h = h

    @staticmethod
    def _check(decoder):
        if decoder.nshots is not None:
            raise UnsupportedBackend("finite differences need an analytic decoder")

    def angle_gradient(self, circuit, decoder, rng=None):
        self._check(decoder)
        angles = circuit.angles
        out = []
        for k in range(angles.size):
            plus, minus = angles.copy(), angles.copy()
            plus[k] += self.h
            minus[k] -= self.h
            e_plus = np.asarray(decoder(circuit.with_angles(plus), rng))
            e_minus = np.asarray(decoder(circuit.with_angles(minus), rng))
            out.append((e_plus - e_minus) / (2 * self.h))
        return np.array(out)

    def gradient(self, model, x=None, rng=None, params=None):
        """Differences taken on the parameters and inputs directly."""
        self._check(model.decoder)
        params = np.array(model.params if params is None else params, dtype=float)
        x = model._inputs(x).copy()

        def f(p, xx):
            return np.asarray(model.forward(xx, rng, params=p))

        gp = []
        for i in range(params.size):
            e = np.zeros_like(params)
            e[i] = self.h
            gp.append((f(params + e, x) - f(params - e, x)) / (2 * self.h))
        gx = []
        for j in range(x.size):
            e = np.zeros_like(x)
            e[j] = self.h
            gx.append((f(params, x + e) - f(params, x - e)) / (2 * self.h))
        return Gradient(np.array(gp), np.array(gx))


ENGINES: dict[str, type[Differentiation]] = {
    "psr": ParameterShift,
    "adjoint": Adjoint,
    "finite_diff": FiniteDifference,
}


def register_engine(name: str, cls: type[Differentiation]) -> None:
    if not issubclass(cls, Differentiation):
        raise TypeError("engines must subclass Differentiation")
    ENGINES[name] = cls


def get_engine(name: str | Differentiation) -> Differentiation:
    if isinstance(name, Differentiation):
        return name
    try:
        return ENGINES[name]()
    except KeyError:
        raise ValueError(f"unknown differentiation engine {name!r}; known: {sorted(ENGINES)}")


def grad_psr(model, x=None, rng=None, params=None) -> Gradient:
    return ParameterShift().gradient(model, x, rng, params)


def grad_adjoint(model, x=None, rng=None, params=None) -> Gradient:
    return Adjoint().gradient(model, x, rng, params)


def grad_fd(model, x=None, h: float = 1e-5, params=None) -> Gradient:
    return FiniteDifference(h).gradient(model, x, None, params)
