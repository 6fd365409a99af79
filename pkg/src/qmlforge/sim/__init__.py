from .exact import (
    DensityMatrix,
    StateVector,
    estimate_expectation,
    expectation_exact,
    run_density,
    run_statevector,
    sample_counts,
)
from .noise import Channel, Depolarizing, NoiseModel, NoiseRule, PauliChannel

__all__ = [
    "Channel",
    "DensityMatrix",
    "Depolarizing",
    "NoiseModel",
    "NoiseRule",
    "PauliChannel",
    "StateVector",
    "estimate_expectation",
    "expectation_exact",
    "run_density",
    "run_statevector",
    "sample_counts",
]
