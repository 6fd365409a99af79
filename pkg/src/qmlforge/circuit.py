"""Gates, circuits with affine angle expressions, binding and the angle Jacobian.

A :class:`Circuit` is symbolic: every rotation carries an :class:`AngleExpr`
that is an affine function of model parameters and data inputs. Binding it
against concrete vectors yields a :class:`BoundCircuit` that the simulators
consume. Since the angle map is affine, its Jacobian is read off the weights
directly.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import IndexOutOfRange, MissingAngle, UnexpectedAngle, WidthMismatch


class GateKind(enum.Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    X = "X"
    Y = "Y"
    Z = "Z"
    H = "H"
    S = "S"
    SDG = "Sdg"
    CNOT = "CNOT"
    CZ = "CZ"
    SWAP = "SWAP"

    @property
    def is_rotation(self) -> bool:
        return self in _ROTATION_AXIS

    @property
    def nqubits(self) -> int:
        return 2 if self in (GateKind.CNOT, GateKind.CZ, GateKind.SWAP) else 1

    @property
    def axis(self) -> str:
        """Pauli generator of a rotation gate ("X", "Y" or "Z")."""
        return _ROTATION_AXIS[self]

    @classmethod
    def parse(cls, name: str | GateKind) -> GateKind:
        if isinstance(name, GateKind):
            return name
        key = name.upper()
        for kind in cls:
            if kind.value.upper() == key or kind.name == key:
                return kind
        if key == "CX":
            return cls.CNOT
        raise ValueError(f"unknown gate kind {name!r}")


_ROTATION_AXIS = {GateKind.RX: "X", GateKind.RY: "Y", GateKind.RZ: "Z"}

_SQ2 = 1 / np.sqrt(2)
PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_FIXED = {
    GateKind.X: PAULI["X"],
    GateKind.Y: PAULI["Y"],
    GateKind.Z: PAULI["Z"],
    GateKind.H: np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.SDG: np.array([[1, 0], [0, -1j]], dtype=complex),
    GateKind.CNOT: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    GateKind.CZ: np.diag([1, 1, 1, -1]).astype(complex),
    GateKind.SWAP: np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}
for _m in _FIXED.values():
    _m.setflags(write=False)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """exp(-i angle P / 2) for the Pauli ``axis``."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "Z":
        return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]])
    raise ValueError(f"not a Pauli axis: {axis!r}")


def gate_matrix(kind: GateKind | str, angle: float | None = None) -> np.ndarray:
    """Unitary of a gate; 2x2 for single-qubit kinds, 4x4 for two-qubit kinds.

    Two-qubit matrices use the basis ordering |q0 q1> with the first listed
    qubit as the most significant bit (so CNOT's first qubit is the control).
    """
    kind = GateKind.parse(kind)
    if kind.is_rotation:
        if angle is None:
            raise MissingAngle(f"{kind.value} requires an angle")
        return rotation_matrix(kind.axis, float(angle))
    if angle is not None:
        raise UnexpectedAngle(f"{kind.value} takes no angle")
    return _FIXED[kind]


@dataclass(frozen=True)
class AngleExpr:
    """``constant + sum(w_i * params[i]) + sum(v_j * inputs[j])``."""

    constant: float = 0.0
    params: Mapping[int, float] = field(default_factory=dict)
    inputs: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(
            self, "params", {int(k): float(v) for k, v in self.params.items() if v != 0}
        )
        object.__setattr__(
            self, "inputs", {int(k): float(v) for k, v in self.inputs.items() if v != 0}
        )

    @classmethod
    def param(cls, index: int, weight: float = 1.0, constant: float = 0.0) -> AngleExpr:
        return cls(constant, {index: weight})

    @classmethod
    def input(cls, index: int, weight: float = 1.0, constant: float = 0.0) -> AngleExpr:
        return cls(constant, {}, {index: weight})

    def evaluate(self, params: Sequence[float], inputs: Sequence[float]) -> float:
        value = self.constant
        for i, w in self.params.items():
            if not 0 <= i < len(params):
                raise IndexOutOfRange(f"parameter index {i} not in vector of length {len(params)}")
            value += w * params[i]
        for j, v in self.inputs.items():
            if not 0 <= j < len(inputs):
                raise IndexOutOfRange(f"input index {j} not in vector of length {len(inputs)}")
            value += v * inputs[j]
        return float(value)

    def shifted(self, param_offset: int = 0, input_offset: int = 0) -> AngleExpr:
        return AngleExpr(
            self.constant,
            {i + param_offset: w for i, w in self.params.items()},
            {j + input_offset: v for j, v in self.inputs.items()},
        )

    def to_dict(self) -> dict:
        return {
            "c": self.constant,
            "params": {str(k): v for k, v in sorted(self.params.items())},
            "inputs": {str(k): v for k, v in sorted(self.inputs.items())},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> AngleExpr:
        return cls(
            d.get("c", 0.0),
            {int(k): v for k, v in d.get("params", {}).items()},
            {int(k): v for k, v in d.get("inputs", {}).items()},
        )


def _check_targets(kind: GateKind, qubits: tuple[int, ...], nqubits: int):
    if len(qubits) != kind.nqubits:
        raise ValueError(f"{kind.value} acts on {kind.nqubits} qubit(s), got {qubits}")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"{kind.value} targets must be distinct, got {qubits}")
    for q in qubits:
        if not 0 <= q < nqubits:
            raise WidthMismatch(f"qubit {q} out of range for a {nqubits}-qubit circuit")


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    angle: AngleExpr | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind.parse(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind.is_rotation and self.angle is None:
            raise MissingAngle(f"{self.kind.value} requires an angle expression")
        if not self.kind.is_rotation and self.angle is not None:
            raise UnexpectedAngle(f"{self.kind.value} takes no angle")


@dataclass(frozen=True)
class BoundGate:
    kind: GateKind
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind.parse(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind.is_rotation and self.angle is None:
            raise MissingAngle(f"{self.kind.value} requires an angle")
        if not self.kind.is_rotation and self.angle is not None:
            raise UnexpectedAngle(f"{self.kind.value} takes no angle")

    @property
    def matrix(self) -> np.ndarray:
        return gate_matrix(self.kind, self.angle)


class _GateList:
    """Behaviour shared by symbolic and bound circuits."""

    __slots__ = ("nqubits", "gates")
    _gate_type: type

    def __init__(self, nqubits: int, gates: Iterable = ()):
        if int(nqubits) < 1:
            raise ValueError("a circuit needs at least one qubit")
        self.nqubits = int(nqubits)
        gates = tuple(gates)
        for g in gates:
            if not isinstance(g, self._gate_type):
                raise TypeError(f"expected {self._gate_type.__name__}, got {type(g).__name__}")
            _check_targets(g.kind, g.qubits, self.nqubits)
        self.gates = gates

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.nqubits == other.nqubits
            and self.gates == other.gates
        )

    def __add__(self, other):
        return compose([self, other])

    def __repr__(self):
        return f"{type(self).__name__}(nqubits={self.nqubits}, gates={len(self.gates)})"

    @property
    def parametric_indices(self) -> list[int]:
        """Positions (in ``gates``) of the rotation gates."""
        return [k for k, g in enumerate(self.gates) if g.kind.is_rotation]


class Circuit(_GateList):
    """Ordered gate list with symbolic angles.

    Gates can be appended with :meth:`add`, which returns ``self`` for chaining
    during construction; once handed to a model the circuit is treated as
    immutable.
    """

    __slots__ = ()
    _gate_type = Gate

    def add(self, kind, qubits, angle: AngleExpr | float | None = None) -> Circuit:
        if isinstance(qubits, int):
            qubits = (qubits,)
        if angle is not None and not isinstance(angle, AngleExpr):
            angle = AngleExpr(float(angle))
        gate = Gate(GateKind.parse(kind), tuple(qubits), angle)
        _check_targets(gate.kind, gate.qubits, self.nqubits)
        self.gates = self.gates + (gate,)
        return self

    @property
    def angles(self) -> list[AngleExpr]:
        return [g.angle for g in self.gates if g.angle is not None]

    @property
    def nparams(self) -> int:
        """One past the largest referenced parameter index."""
        return 1 + max((i for a in self.angles for i in a.params), default=-1)

    @property
    def ninputs(self) -> int:
        return 1 + max((j for a in self.angles for j in a.inputs), default=-1)

    def shifted(self, param_offset: int = 0, input_offset: int = 0) -> Circuit:
        return Circuit(
            self.nqubits,
            [
                Gate(g.kind, g.qubits, g.angle.shifted(param_offset, input_offset))
                if g.angle is not None
                else g
                for g in self.gates
            ],
        )

    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            entry = {"kind": g.kind.value, "qubits": list(g.qubits)}
            if g.angle is not None:
                entry["angle"] = g.angle.to_dict()
            gates.append(entry)
        return {"nqubits": self.nqubits, "gates": gates}

    @classmethod
    def from_dict(cls, d: Mapping) -> Circuit:
        return cls(
            d["nqubits"],
            [
                Gate(
                    GateKind.parse(g["kind"]),
                    tuple(g["qubits"]),
                    AngleExpr.from_dict(g["angle"]) if "angle" in g else None,
                )
                for g in d["gates"]
            ],
        )

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> Circuit:
        return cls.from_dict(json.loads(text))


class BoundCircuit(_GateList):
    """Circuit with every angle resolved to a number."""

    __slots__ = ()
    _gate_type = BoundGate

    @property
    def angles(self) -> np.ndarray:
        return np.array([g.angle for g in self.gates if g.angle is not None], dtype=float)

    def with_angles(self, angles: Sequence[float]) -> BoundCircuit:
        """Copy with the rotation angles replaced, in gate order."""
        angles = list(angles)
        if len(angles) != len(self.parametric_indices):
            raise ValueError(
                f"expected {len(self.parametric_indices)} angles, got {len(angles)}"
            )
        it = iter(angles)
        return BoundCircuit(
            self.nqubits,
            [
                BoundGate(g.kind, g.qubits, float(next(it))) if g.kind.is_rotation else g
                for g in self.gates
            ],
        )


def compose(parts: Sequence[Circuit] | Sequence[BoundCircuit]) -> Circuit | BoundCircuit:
    """Concatenate circuits of equal width in list order."""
    parts = list(parts)
    if not parts:
        raise ValueError("compose needs at least one circuit")
    cls = type(parts[0])
    width = parts[0].nqubits
    for p in parts:
        if type(p) is not cls:
            raise TypeError("cannot mix symbolic and bound circuits")
        if p.nqubits != width:
            raise WidthMismatch(f"cannot compose {width}-qubit and {p.nqubits}-qubit circuits")
    return cls(width, [g for p in parts for g in p.gates])


def bind(
    circuit: Circuit, params: Sequence[float] = (), inputs: Sequence[float] = ()
) -> BoundCircuit:
    params = np.asarray(params, dtype=float).ravel()
    inputs = np.asarray(inputs, dtype=float).ravel()
    return BoundCircuit(
        circuit.nqubits,
        [
            BoundGate(g.kind, g.qubits, g.angle.evaluate(params, inputs))
            if g.angle is not None
            else BoundGate(g.kind, g.qubits)
            for g in circuit.gates
        ],
    )


@dataclass(frozen=True)
class AngleJacobian:
    """Derivatives of the rotation angles w.r.t. parameters and inputs.

    Row ``k`` belongs to the ``k``-th rotation gate of the circuit.
    """

    wrt_params: np.ndarray
    wrt_inputs: np.ndarray

    @property
    def nangles(self) -> int:
        return self.wrt_params.shape[0]


def angle_jacobian(
    circuit: Circuit, nparams: int | None = None, ninputs: int | None = None
) -> AngleJacobian:
    angles = circuit.angles
    nparams = circuit.nparams if nparams is None else nparams
    ninputs = circuit.ninputs if ninputs is None else ninputs
    jp = np.zeros((len(angles), nparams))
    jx = np.zeros((len(angles), ninputs))
    for k, a in enumerate(angles):
        for i, w in a.params.items():
            jp[k, i] = w
        for j, v in a.inputs.items():
            jx[k, j] = v
    jp.setflags(write=False)
    jx.setflags(write=False)
    return AngleJacobian(jp, jx)
