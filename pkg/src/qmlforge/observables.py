"""Pauli strings, weighted Pauli sums and the Hamiltonians used in the experiments."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping

import numpy as np

from .circuit import PAULI, Circuit, GateKind
from .errors import WidthMismatch


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis; identity factors are left out."""

    ops: tuple[tuple[int, str], ...]
    width: int

    def __init__(self, ops: Mapping[int, str] | Iterable[tuple[int, str]], width: int):
        items = dict(ops.items() if isinstance(ops, Mapping) else ops)
        clean = []
        for q, p in sorted(items.items()):
            p = p.upper()
            if p not in ("I", "X", "Y", "Z"):
                raise ValueError(f"unknown Pauli {p!r}")
            if not 0 <= q < width:
                raise WidthMismatch(f"qubit {q} outside a width-{width} string")
            if p != "I":
                clean.append((int(q), p))
        object.__setattr__(self, "ops", tuple(clean))
        object.__setattr__(self, "width", int(width))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.ops)

    @property
    def is_diagonal(self) -> bool:
        return all(p == "Z" for _, p in self.ops)

    def label(self) -> str:
        return "".join(f"{p}{q}" for q, p in self.ops) or "I"

    def to_matrix(self) -> np.ndarray:
        factors = dict(self.ops)
        return reduce(np.kron, [PAULI[factors.get(q, "I")] for q in range(self.width)])


class PauliSum:
    """Real-weighted sum of Pauli strings on a fixed number of qubits.

    Strings that appear more than once are merged by adding their
    coefficients; terms whose coefficient cancels to zero are dropped.
    """

    __slots__ = ("terms", "width")

    def __init__(self, terms: Iterable[tuple[float, PauliString]], width: int):
        merged: dict[tuple, float] = {}
        for coeff, ps in terms:
            if ps.width != width:
                raise WidthMismatch(f"term of width {ps.width} in a width-{width} sum")
            merged[ps.ops] = merged.get(ps.ops, 0.0) + float(np.real(coeff))
        self.width = int(width)
        self.terms = tuple(
            (c, PauliString(ops, width)) for ops, c in merged.items() if c != 0.0
        )

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other):
        if not isinstance(other, PauliSum) or other.width != self.width:
            return NotImplemented
        return dict((p.ops, c) for c, p in self.terms) == dict(
            (p.ops, c) for c, p in other.terms
        )

    def __add__(self, other: PauliSum) -> PauliSum:
        if other.width != self.width:
            raise WidthMismatch("cannot add Pauli sums of different widths")
        return PauliSum(self.terms + other.terms, self.width)

    def __mul__(self, scalar: float) -> PauliSum:
        return PauliSum([(scalar * c, p) for c, p in self.terms], self.width)

    __rmul__ = __mul__

    def __repr__(self):
        return f"PauliSum({self.to_text()!r}, width={self.width})"

    @property
    def norm_bound(self) -> float:
        """Sum of absolute coefficients; bounds |<H>| for every state."""
        return float(sum(abs(c) for c, _ in self.terms))

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.width
        out = np.zeros((dim, dim), dtype=complex)
        for c, p in self.terms:
            out += c * p.to_matrix()
        return out

    def to_text(self) -> str:
        parts = []
        for c, p in self.terms:
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign} {abs(c)!r}*{p.label()}")
        text = " ".join(parts) or "0"
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    @classmethod
    def from_text(cls, text: str, width: int | None = None) -> PauliSum:
        return parse_pauli_sum(text, width)


_NUMBER = re.compile(r"(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)")
_BODY = re.compile(r"(?:[IXYZ]\d+)+|I")
_FACTOR = re.compile(r"([IXYZ])(\d+)")


def parse_pauli_sum(text: str, width: int | None = None) -> PauliSum:
    """Parse ``"-1*Z0 - 1*Z1 + 0.5*X0X1"``.

    Whitespace is insignificant and ``*`` between coefficient and string is
    optional. A bare number is a multiple of the identity. When ``width`` is
    not given it is inferred from the largest qubit index.
    """
    src = re.sub(r"\s+", "", text)
    # split on +/- that are not part of an exponent
    pieces = re.split(r"(?<![eE])([+-])", src)
    raw = []
    sign = 1.0
    for k, piece in enumerate(pieces):
        if piece in ("+", "-"):
            sign = -sign if piece == "-" else sign
            continue
        if not piece:
            if k not in (0, len(pieces) - 1) and pieces[k - 1] not in ("+", "-"):
                raise ValueError(f"cannot parse Pauli sum {text!r}")
            continue
        coeff, rest = 1.0, piece
        m = _NUMBER.match(rest)
        if m:
            coeff, rest = float(m.group(1)), rest[m.end():]
            rest = rest[1:] if rest.startswith("*") else rest
        if rest and not _BODY.fullmatch(rest):
            raise ValueError(f"cannot parse term {piece!r} in {text!r}")
        if not m and not rest:
            raise ValueError(f"empty term in {text!r}")
        factors = [(int(q), p) for p, q in _FACTOR.findall(rest)]
        if len({q for q, _ in factors}) != len(factors):
            raise ValueError(f"repeated qubit in term {piece!r}")
        raw.append((sign * coeff, factors))
        sign = 1.0
    if not raw:
        raise ValueError("empty Pauli sum")
    if width is None:
        width = 1 + max((q for _, f in raw for q, _ in f), default=0)
    return PauliSum([(c, PauliString(f, width)) for c, f in raw], width)


def sum_z(n: int) -> PauliSum:
    """-sum_k Z_k."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return PauliSum([(-1.0, PauliString({k: "Z"}, n)) for k in range(n)], n)


def tfim_terms(n: int, h: float) -> list[tuple[float, PauliString]]:
    """Unmerged terms of the periodic transverse-field Ising chain."""
    if n < 2:
        raise ValueError("n must be >= 2")
    terms = [(-1.0, PauliString({j: "Z", (j + 1) % n: "Z"}, n)) for j in range(n)]
    terms += [(-float(h), PauliString({j: "X"}, n)) for j in range(n)]
    return terms


def tfim(n: int, h: float) -> PauliSum:
    """H = -sum_j (Z_j Z_{j+1} + h X_j) with periodic wrap."""
    return PauliSum(tfim_terms(n, h), n)


def xxz_terms(n: int, delta: float) -> list[tuple[float, PauliString]]:
    if n < 2:
        raise ValueError("n must be >= 2")
    terms = []
    for j in range(n):
        k = (j + 1) % n
        terms.append((1.0, PauliString({j: "X", k: "X"}, n)))
        terms.append((1.0, PauliString({j: "Y", k: "Y"}, n)))
        terms.append((float(delta), PauliString({j: "Z", k: "Z"}, n)))
    return terms


def xxz(n: int, delta: float) -> PauliSum:
    """Periodic XXZ chain sum_j (X_j X_{j+1} + Y_j Y_{j+1} + delta Z_j Z_{j+1})."""
    if not -1.0 < delta <= 1.0:
        warnings.warn(f"XXZ anisotropy {delta} outside (-1, 1]", stacklevel=2)
    return PauliSum(xxz_terms(n, delta), n)


@dataclass(frozen=True)
class MeasurementGroup:
    """Qubit-wise commuting terms measured in one basis.

    ``terms`` holds ``(coefficient, mask)`` pairs. After running
    ``basis_change`` every term is diagonal, and its value on basis state
    ``b`` is ``(-1) ** popcount(b & mask)``, with qubit 0 as the most
    significant bit of ``b``.
    """

    basis_change: Circuit
    terms: tuple[tuple[float, int], ...]
    basis: tuple[tuple[int, str], ...]


def qubit_mask(qubits: Iterable[int], width: int) -> int:
    mask = 0
    for q in qubits:
        mask |= 1 << (width - 1 - q)
    return mask


def measurement_groups(obs: PauliSum) -> list[MeasurementGroup]:
    """Greedy first-fit grouping of qubit-wise commuting terms."""
    groups: list[tuple[dict[int, str], list]] = []
    for coeff, ps in obs.terms:
        for basis, members in groups:
            if all(basis.get(q, p) == p for q, p in ps.ops):
                basis.update(ps.ops)
                members.append((coeff, ps))
                break
        else:
            groups.append((dict(ps.ops), [(coeff, ps)]))

    out = []
    for basis, members in groups:
        change = Circuit(obs.width)
        for q, p in sorted(basis.items()):
            if p == "X":
                change.add(GateKind.H, q)
            elif p == "Y":
                change.add(GateKind.SDG, q).add(GateKind.H, q)
        terms = tuple((c, qubit_mask(ps.support, obs.width)) for c, ps in members)
        out.append(MeasurementGroup(change, terms, tuple(sorted(basis.items()))))
    return out
