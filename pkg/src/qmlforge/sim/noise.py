"""Single-qubit Kraus channels and gate-attached noise models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..circuit import PAULI


class Channel:
    """Completely positive trace-preserving map on one qubit."""

    def kraus(self) -> list[np.ndarray]:
        raise NotImplementedError

    def bloch_factors(self) -> tuple[float, float, float]:
        """Contraction factors applied to (<X>, <Y>, <Z>)."""
        raise NotImplementedError

    def scaled(self, factor: float) -> Channel:
        raise NotImplementedError

    def pauli_probs(self) -> tuple[float, float, float] | None:
        """(px, py, pz) when the channel is a Pauli mixture, else None."""
        return None


def _check_prob(name, p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name}={p} is not a probability")


@dataclass(frozen=True)
class PauliChannel(Channel):
    """rho -> (1 - px - py - pz) rho + px X rho X + py Y rho Y + pz Z rho Z."""

    px: float = 0.0
    py: float = 0.0
    pz: float = 0.0

    def __post_init__(self):
        for name in ("px", "py", "pz"):
            _check_prob(name, getattr(self, name))
        if self.px + self.py + self.pz > 1.0 + 1e-15:
            raise ValueError("px + py + pz exceeds 1")

    def kraus(self):
        p0 = max(0.0, 1.0 - self.px - self.py - self.pz)
        ops = [np.sqrt(p0) * PAULI["I"]]
        for p, name in ((self.px, "X"), (self.py, "Y"), (self.pz, "Z")):
            if p > 0:
                ops.append(np.sqrt(p) * PAULI[name])
        return ops

    def bloch_factors(self):
        px, py, pz = self.px, self.py, self.pz
        return (1 - 2 * (py + pz), 1 - 2 * (px + pz), 1 - 2 * (px + py))

    def scaled(self, factor):
        return PauliChannel(self.px * factor, self.py * factor, self.pz * factor)

    def pauli_probs(self):
        return (self.px, self.py, self.pz)


@dataclass(frozen=True)
class Depolarizing(Channel):
    """rho -> (1 - p) rho + p I / 2."""

    p: float = 0.0

    def __post_init__(self):
        _check_prob("p", self.p)

    def kraus(self):
        ops = [np.sqrt(1 - 0.75 * self.p) * PAULI["I"]]
        if self.p > 0:
            ops += [np.sqrt(self.p / 4) * PAULI[name] for name in "XYZ"]
        return ops

    def bloch_factors(self):
        return (1 - self.p,) * 3

    def scaled(self, factor):
        return Depolarizing(self.p * factor)

    def pauli_probs(self):
        return (self.p / 4,) * 3


@dataclass(frozen=True)
class NoiseRule:
    channel: Channel
    qubits: frozenset[int] | None = None  # None means every qubit


@dataclass(frozen=True)
class NoiseModel:
    """Channels applied after each gate.

    After a gate acts on ``targets``, every rule applies its channel to each
    target qubit that passes the rule's filter. Idle qubits stay untouched.
    """

    rules: tuple[NoiseRule, ...] = field(default_factory=tuple)

    def add(self, channel: Channel, qubits: Iterable[int] | int | None = None) -> NoiseModel:
        if isinstance(qubits, int):
            qubits = [qubits]
        flt = None if qubits is None else frozenset(int(q) for q in qubits)
        return NoiseModel(self.rules + (NoiseRule(channel, flt),))

    def __bool__(self):
        return bool(self.rules)

    def channels_after(self, targets: tuple[int, ...]) -> list[tuple[int, Channel]]:
        out = []
        for rule in self.rules:
            for q in targets:
                if rule.qubits is None or q in rule.qubits:
                    out.append((q, rule.channel))
        return out

    def scaled(self, factor: float) -> NoiseModel:
        """Every channel probability multiplied by ``factor``."""
        return NoiseModel(tuple(NoiseRule(r.channel.scaled(factor), r.qubits) for r in self.rules))

    @classmethod
    def uniform(cls, channel: Channel) -> NoiseModel:
        return cls().add(channel)
