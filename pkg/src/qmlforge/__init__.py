"""Differentiable quantum machine learning on simulated backends.

The public surface re-exported here covers circuits, observables, the
exact and MPS simulators, models, gradient engines, error mitigation and
training loops.
"""

from .circuit import AngleExpr, BoundCircuit, Circuit, GateKind, angle_jacobian, bind, compose
from .differentiation import Adjoint, FiniteDifference, ParameterShift, get_engine
from .mitigation import MitigationConfig, Mitigator
from .models import (
    Expectation,
    HardwareEfficient,
    PhaseEncoding,
    Probabilities,
    QuantumModel,
    RawBlock,
    ReuploadingAnsatz,
)
from .mps import MPS, TruncationPolicy, mps_expectation, route_and_run
from .observables import PauliString, PauliSum, parse_pauli_sum, sum_z, tfim, xxz
from .sim import (
    Depolarizing,
    NoiseModel,
    PauliChannel,
    estimate_expectation,
    expectation_exact,
    run_density,
    run_statevector,
)
from .training import Adam, train_regression, train_vqe

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "Adjoint",
    "AngleExpr",
    "BoundCircuit",
    "Circuit",
    "Depolarizing",
    "Expectation",
    "FiniteDifference",
    "GateKind",
    "HardwareEfficient",
    "MPS",
    "MitigationConfig",
    "Mitigator",
    "NoiseModel",
    "ParameterShift",
    "PauliChannel",
    "PauliString",
    "PauliSum",
    "PhaseEncoding",
    "Probabilities",
    "QuantumModel",
    "RawBlock",
    "ReuploadingAnsatz",
    "TruncationPolicy",
    "angle_jacobian",
    "bind",
    "compose",
    "estimate_expectation",
    "expectation_exact",
    "get_engine",
    "mps_expectation",
    "parse_pauli_sum",
    "route_and_run",
    "run_density",
    "run_statevector",
    "sum_z",
    "tfim",
    "train_regression",
    "train_vqe",
    "xxz",
]
