"""Experiment and benchmark configuration: schema, validation and builders.

Configs are single JSON documents. A top-level ``"_doc"`` string is allowed
for comments and is carried through round trips untouched.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .circuit import Circuit
from .errors import ConfigError
from .mitigation import MitigationConfig
from .models import (
    Expectation,
    HardwareEfficient,
    PhaseEncoding,
    QuantumModel,
    RawBlock,
    ReuploadingAnsatz,
)
from .mps import TruncationPolicy
from .observables import PauliSum, parse_pauli_sum, sum_z, tfim, xxz
from .sim.noise import Depolarizing, NoiseModel, PauliChannel
from .training import TARGET_SCALE

_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_BLOCK = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["phase_encoding", "hardware_efficient", "reuploading", "raw"]},
        "nlayers": {"type": "integer", "minimum": 1},
        "axis": {"enum": ["RX", "RY", "RZ"]},
        "qubits": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "circuit": {"type": "object"},
    },
    "additionalProperties": False,
}
_OBSERVABLE = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["sum_z", "tfim", "xxz"]},
                "h": {"type": "number"},
                "delta": {"type": "number"},
            },
            "additionalProperties": False,
        },
    ]
}
_MITIGATION = {
    "type": ["object", "null"],
    "required": ["min_iterations", "threshold", "method", "method_kwargs"],
    "properties": {
        "min_iterations": {"type": "integer", "minimum": 1},
        "threshold": {"type": "number", "exclusiveMinimum": 0},
        "method": {"enum": ["CDR"]},
        "method_kwargs": {
            "type": "object",
            "required": ["n_training_samples", "nshots"],
            "properties": {
                "n_training_samples": {"type": "integer", "minimum": 2},
                "nshots": {"type": ["integer", "null"], "minimum": 1},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

EXPERIMENT_SCHEMA = {
    "type": "object",
    "required": ["task", "model", "optimizer", "epochs"],
    "properties": {
        "_doc": {"type": "string"},
        "task": {"enum": ["regression", "vqe"]},
        "model": {
            "type": "object",
            "required": ["nqubits", "structure"],
            "properties": {
                "nqubits": {"type": "integer", "minimum": 1},
                "structure": {"type": "array", "minItems": 1, "items": _BLOCK},
                "observable": _OBSERVABLE,
                "init_range": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": 2,
                    "maxItems": 2,
                },
            },
            "additionalProperties": False,
        },
        "backend": {
            "type": "object",
            "properties": {
                "type": {"enum": ["statevector", "density", "mps"]},
                "chi_max": {"type": ["integer", "null"], "minimum": 1},
                "svd_cutoff": {"type": ["number", "null"], "minimum": 0},
            },
            "additionalProperties": False,
        },
        "noise": {
            "type": ["object", "null"],
            "required": ["type"],
            "properties": {
                "type": {"enum": ["pauli", "depolarizing"]},
                "p": _PROB,
                "px": _PROB,
                "py": _PROB,
                "pz": _PROB,
                "qubits": {"type": ["array", "null"], "items": {"type": "integer", "minimum": 0}},
            },
            "additionalProperties": False,
        },
        "shots": {"type": ["integer", "null"], "minimum": 1},
        "mitigation": _MITIGATION,
        "differentiation": {"enum": ["psr", "adjoint", "finite_diff"]},
        "optimizer": {
            "type": "object",
            "required": ["lr"],
            "properties": {"name": {"enum": ["adam"]}, "lr": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "epochs": {"type": "integer", "minimum": 0},
        "runs": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "data": {
            "type": ["object", "null"],
            "properties": {
                "npoints": {"type": "integer", "minimum": 1},
                "xmin": {"type": "number"},
                "xmax": {"type": "number"},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

BENCH_SCHEMA = {
    "type": "object",
    "required": ["qubits"],
    "properties": {
        "_doc": {"type": "string"},
        "qubits": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
        "nlayers": {"type": "integer", "minimum": 1},
        "engines": {
            "type": "array",
            "items": {"enum": ["psr", "adjoint", "finite_diff"]},
            "minItems": 1,
        },
        "epochs": {"type": "integer", "minimum": 1},
        "repeats": {"type": "integer", "minimum": 1},
        "threads": {"type": "integer", "minimum": 1},
        "warmup": {"type": "boolean"},
        "lr": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}


def _validate(doc: Any, schema: dict):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config field '{path}': {err.message}", field=path)


@dataclass
class ExperimentConfig:
    task: str
    model: dict
    optimizer: dict
    epochs: int
    backend: dict = field(default_factory=lambda: {"type": "statevector"})
    noise: dict | None = None
    shots: int | None = None
    mitigation: dict | None = None
    differentiation: str = "psr"
    runs: int = 1
    seed: int = 0
    data: dict | None = None
    _doc: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        _validate(doc, EXPERIMENT_SCHEMA)
        d = json.loads(json.dumps(doc))
        d.setdefault("backend", {"type": "statevector"})
        d["backend"].setdefault("type", "statevector")
        d["backend"].setdefault("chi_max", None)
        d["backend"].setdefault("svd_cutoff", None)
        d["optimizer"].setdefault("name", "adam")
        model = d["model"]
        if "observable" not in model:
            model["observable"] = {"type": "sum_z"} if d["task"] == "vqe" else "Z0"
        model.setdefault("init_range", [-math.pi, math.pi])
        if d["task"] == "regression":
            data = d.get("data") or {}
            data.setdefault("npoints", 30)
            data.setdefault("xmin", 0.0)
            data.setdefault("xmax", 2 * math.pi)
            data.setdefault("scale", TARGET_SCALE)
            d["data"] = data
        cfg = cls(**{k: v for k, v in d.items()})
        cfg.check()
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["_doc"] is None:
            del d["_doc"]
        return d

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})", field="<root>") from exc
        return cls.from_dict(doc)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def check(self):
        """Cross-field invariants the schema cannot express."""
        backend = self.backend["type"]
        noisy = bool(self.noise)
        if noisy and backend != "density":
            raise ConfigError(
                f"noise requires backend 'density' (got '{backend}'); "
                "the statevector and MPS backends are noiseless",
                field="backend.type",
            )
        if self.differentiation == "adjoint":
            bad = [
                name
                for name, on in (
                    ("noise", noisy),
                    ("shots", self.shots is not None),
                    ("mitigation", self.mitigation is not None),
                )
                if on
            ]
            if bad or backend != "statevector":
                bad = bad or ["backend.type"]
                raise ConfigError(
                    "adjoint differentiation requires noiseless, shot-free statevector "
                    f"simulation; offending: {', '.join(bad)}",
                    field=bad[0],
                )
        if self.differentiation == "finite_diff" and self.shots is not None:
            raise ConfigError("finite_diff needs analytic expectations", field="shots")
        if backend == "mps" and self.backend["chi_max"] is None and self.backend["svd_cutoff"] is None:
            raise ConfigError("mps backend needs chi_max or svd_cutoff", field="backend")
        kinds = [b["type"] for b in self.model["structure"]]
        if "reuploading" in kinds and self.model["nqubits"] != 1:
            raise ConfigError("reuploading blocks are single-qubit", field="model.nqubits")
        try:
            self.build_observable()
            self.build_model()
        except ConfigError:
            raise
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"invalid model block: {exc}", field="model") from exc

    # -- builders ------------------------------------------------------------
    def build_observable(self) -> PauliSum:
        n = self.model["nqubits"]
        spec = self.model["observable"]
        if isinstance(spec, str):
            return parse_pauli_sum(spec, n)
        if spec["type"] == "sum_z":
            return sum_z(n)
        if spec["type"] == "tfim":
            return tfim(n, spec.get("h", 0.5))
        return xxz(n, spec.get("delta", 0.5))

    def build_noise(self) -> NoiseModel | None:
        if not self.noise:
            return None
        nz = self.noise
        if nz["type"] == "pauli":
            ch = PauliChannel(nz.get("px", 0.0), nz.get("py", 0.0), nz.get("pz", 0.0))
        else:
            ch = Depolarizing(nz.get("p", 0.0))
        return NoiseModel().add(ch, nz.get("qubits"))

    def build_policy(self) -> TruncationPolicy | None:
        if self.backend["type"] != "mps":
            return None
        return TruncationPolicy(self.backend["chi_max"], self.backend["svd_cutoff"])

    def build_structure(self) -> list:
        n = self.model["nqubits"]
        blocks = []
        for b in self.model["structure"]:
            kind = b["type"]
            if kind == "phase_encoding":
                qubits = b.get("qubits")
                blocks.append(
                    PhaseEncoding(n, b.get("axis", "RX"), None if qubits is None else tuple(qubits))
                )
            elif kind == "hardware_efficient":
                blocks.append(HardwareEfficient(n, b.get("nlayers", 1)))
            elif kind == "reuploading":
                blocks.append(ReuploadingAnsatz(b.get("nlayers", 1)))
            else:
                blocks.append(RawBlock(Circuit.from_dict(b["circuit"])))
        return blocks

    def build_decoder(self) -> Expectation:
        mitigation = None
        if self.mitigation is not None:
            mitigation = MitigationConfig.from_dict(self.mitigation)
        return Expectation(
            self.build_observable(),
            nshots=self.shots,
            noise=self.build_noise(),
            backend=self.backend["type"],
            policy=self.build_policy(),
            mitigation=mitigation,
        )

    def build_model(self) -> QuantumModel:
        return QuantumModel(self.build_structure(), self.build_decoder())


@dataclass
class BenchConfig:
    qubits: list[int]
    nlayers: int = 2
    engines: list[str] = field(default_factory=lambda: ["psr", "adjoint"])
    epochs: int = 10
    repeats: int = 5
    threads: int = 1
    warmup: bool = True
    lr: float = 0.1
    seed: int = 0
    _doc: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> BenchConfig:
        _validate(doc, BENCH_SCHEMA)
        return cls(**json.loads(json.dumps(doc)))

    @classmethod
    def load(cls, path) -> BenchConfig:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})", field="<root>") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["_doc"] is None:
            del d["_doc"]
        return d
