"""Clifford data regression and the real-time mitigator.

Training circuits are produced by snapping every rotation angle of the
target circuit to a neighbouring multiple of pi/2, which turns each rotation
into a Clifford gate. Their exact expectations come from noiseless
statevector simulation; pairing them with noisy estimates gives the data for
a linear fit ``exact ~ a * noisy + b``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .circuit import BoundCircuit
from .errors import DegenerateFitWarning
from .observables import PauliSum
from .sim.exact import estimate_expectation, expectation_exact, run_statevector
from .sim.noise import NoiseModel

log = logging.getLogger(__name__)

HALF_PI = np.pi / 2
METHODS = ("CDR",)


@dataclass(frozen=True)
class MitigationConfig:
    min_iterations: int = 100
    threshold: float = 0.01
    method: str = "CDR"
    method_kwargs: dict = field(
        default_factory=lambda: {"n_training_samples": 50, "nshots": 10000}
    )

    def __post_init__(self):
        if self.min_iterations < 1:
            raise ValueError("min_iterations must be >= 1")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown mitigation method {self.method!r}")
        if self.n_training_samples < 2:
            raise ValueError("n_training_samples must be >= 2")

    @property
    def n_training_samples(self) -> int:
        return int(self.method_kwargs.get("n_training_samples", 50))

    @property
    def nshots(self) -> int | None:
        n = self.method_kwargs.get("nshots")
        return None if n is None else int(n)

    @classmethod
    def from_dict(cls, d: dict) -> MitigationConfig:
        return cls(
            int(d["min_iterations"]),
            float(d["threshold"]),
            d.get("method", "CDR"),
            dict(d.get("method_kwargs", {})),
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MitigationMap:
    slope: float = 1.0
    intercept: float = 0.0
    fitted_at_call: int = 0

    def __call__(self, raw: float, bound: float | None = None) -> float:
        value = self.slope * raw + self.intercept
        if bound is not None:
            value = float(np.clip(value, -bound, bound))
        return float(value)


def snap_angle(angle: float, rng: np.random.Generator) -> float:
    """Snap to one of the two nearest multiples of pi/2.

    The nearer multiple wins with probability ``1 - d / (pi/2)``.
    """
    k = np.floor(angle / HALF_PI)
    frac = angle / HALF_PI - k  # distance to the lower multiple, in units of pi/2
    if frac > 0 and rng.random() < frac:
        k += 1
    return float(k * HALF_PI)


def sample_clifford_variant(circuit: BoundCircuit, rng=None) -> BoundCircuit:
    rng = np.random.default_rng(rng)
    return circuit.with_angles([snap_angle(a, rng) for a in circuit.angles])


def fit_ols(x, y) -> tuple[float, float] | None:
    """Least-squares line y = a x + b; ``None`` when x has no spread."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx <= 1e-12 * max(1.0, len(x)):
        return None
    a = np.sum((x - xm) * (y - ym)) / sxx
    return float(a), float(ym - a * xm)


def cdr_training_data(
    circuit: BoundCircuit,
    obs: PauliSum,
    noise: NoiseModel | None,
    n_training_samples: int,
    nshots: int | None,
    rng=None,
) -> tuple[np.ndarray, np.ndarray]:
    """(noisy, exact) expectation pairs over sampled Clifford variants."""
    rng = np.random.default_rng(rng)
    noisy, exact = [], []
    for _ in range(n_training_samples):
        variant = sample_clifford_variant(circuit, rng)
        exact.append(expectation_exact(run_statevector(variant), obs))
        noisy.append(estimate_expectation(variant, obs, nshots, noise, rng))
    return np.array(noisy), np.array(exact)


def fit_map(
    circuit: BoundCircuit,
    obs: PauliSum,
    noise: NoiseModel | None,
    n_training_samples: int = 50,
    nshots: int | None = 10000,
    rng=None,
    fitted_at_call: int = 0,
) -> MitigationMap:
    noisy, exact = cdr_training_data(circuit, obs, noise, n_training_samples, nshots, rng)
    fit = fit_ols(noisy, exact)
    if fit is None:
        warnings.warn(
            "Clifford training data has no spread; using the identity map",
            DegenerateFitWarning,
            stacklevel=2,
        )
        return MitigationMap(1.0, 0.0, fitted_at_call)
    return MitigationMap(fit[0], fit[1], fitted_at_call)


class Mitigator:
    """Applies a cached mitigation map and refreshes it when it drifts.

    Every call counts as one decoding call. After ``min_iterations`` calls
    since the last check, one fresh Clifford variant of the current circuit
    is evaluated; if its mitigated noisy value misses the exact one by more
    than ``threshold`` the map is refitted.
    """

    def __init__(self, config: MitigationConfig):
        self.config = config
        self.map: MitigationMap | None = None
        self.calls_since_check = 0
        self.total_calls = 0
        self.checks = 0
        self.refits = 0
        self.fits = 0

    def _fit(self, circuit, obs, noise, rng):
        self.map = fit_map(
            circuit,
            obs,
            noise,
            self.config.n_training_samples,
            self.config.nshots,
            rng,
            fitted_at_call=self.total_calls,
        )
        self.fits += 1

    def check(self, circuit, obs, noise, rng) -> bool:
        """Return True when the cached map is still within threshold."""
        variant = sample_clifford_variant(circuit, rng)
        exact = expectation_exact(run_statevector(variant), obs)
        noisy = estimate_expectation(variant, obs, self.config.nshots, noise, rng)
        self.checks += 1
        return abs(self.map(noisy) - exact) <= self.config.threshold

    def mitigate(
        self,
        raw: float,
        circuit: BoundCircuit,
        obs: PauliSum,
        noise: NoiseModel | None,
        rng=None,
        nshots: int | None = None,
    ) -> float:
        rng = np.random.default_rng(rng)
        if self.map is None:
            self._fit(circuit, obs, noise, rng)
        self.total_calls += 1
        self.calls_since_check += 1
        if self.calls_since_check >= self.config.min_iterations:
            self.calls_since_check = 0
            if not self.check(circuit, obs, noise, rng):
                log.info("mitigation map stale at call %d; refitting", self.total_calls)
                self._fit(circuit, obs, noise, rng)
                self.refits += 1
        return self.map(raw, obs.norm_bound)


def mitigate(state: Mitigator, raw: float, context, rng=None) -> float:
    """Functional form: ``context`` is ``(circuit, obs, noise)``."""
    circuit, obs, noise = context[:3]
    return state.mitigate(raw, circuit, obs, noise, rng)
