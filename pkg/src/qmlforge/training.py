"""Adam, losses and the full-batch training loops for regression and VQE."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .differentiation import Differentiation, get_engine
from .models import QuantumModel

TARGET_SCALE = 1.1


def target_function(x):
    """sin^2(x) - 0.3 cos(x); its maximum modulus is 1.0225."""
    x = np.asarray(x, dtype=float)
    return np.sin(x) ** 2 - 0.3 * np.cos(x)


def regression_dataset(npoints=30, xmin=0.0, xmax=2 * np.pi, scale=TARGET_SCALE):
    """Uniform grid and targets divided by ``scale`` to fit in [-1, 1]."""
    x = np.linspace(xmin, xmax, npoints)
    return x, target_function(x) / scale


@dataclass
class Adam:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0

    def step(self, theta, grad) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        grad = np.asarray(grad, dtype=float)
        if theta.shape != grad.shape:
            raise ValueError(f"parameter shape {theta.shape} vs gradient shape {grad.shape}")
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def adam_step(state: Adam, theta, grad) -> np.ndarray:
    return state.step(theta, grad)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    wall_ms: float
    refit: bool
    seed: int
    energy: float | None = None

    def to_dict(self) -> dict:
        d = {"epoch": self.epoch, "loss": self.loss}
        if self.energy is not None:
            d["energy"] = self.energy
        d.update(wall_ms=self.wall_ms, refit=self.refit, seed=self.seed)
        return d


@dataclass
class TrainingRun:
    task: str
    seed: int
    initial_params: np.ndarray
    params: np.ndarray
    initial_loss: float
    final_loss: float
    records: list[EpochRecord] = field(default_factory=list)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])


def _refits(model) -> int:
    mit = getattr(model.decoder, "mitigator", None)
    return 0 if mit is None else mit.refits


def init_params(nparams: int, rng, low=-np.pi, high=np.pi) -> np.ndarray:
    return np.random.default_rng(rng).uniform(low, high, nparams)


class _Evaluator:
    """Loss and gradient for one task on one model."""

    def __init__(self, model: QuantumModel, engine: Differentiation, x=None, y=None):
        self.model = model
        self.engine = engine
        self.x = x
        self.y = y

    def loss(self, params, rng) -> float:
        if self.x is None:
            return float(self.model.forward(None, rng, params=params))
        streams = rng.spawn(len(self.x))
        preds = np.array(
            [self.model.forward([xi], s, params=params) for xi, s in zip(self.x, streams)]
        )
        return float(np.mean((preds - self.y) ** 2))

    def loss_and_grad(self, params, rng):
        if self.x is None:
            value, g = self.engine.value_and_gradient(self.model, None, rng, params)
            return float(value), g.wrt_params
        n = len(self.x)
        streams = rng.spawn(n)
        loss, grad = 0.0, np.zeros_like(params)
        for xi, yi, s in zip(self.x, self.y, streams):
            pred, g = self.engine.value_and_gradient(self.model, [xi], s, params)
            loss += (pred - yi) ** 2 / n
            grad += 2.0 * (pred - yi) / n * g.wrt_params
        return float(loss), grad


def evaluate_repeated(evaluator: _Evaluator, params, rng, repeats: int) -> np.ndarray:
    streams = np.random.default_rng(rng).spawn(repeats)
    return np.array([evaluator.loss(params, s) for s in streams])


def optimize(
    model: QuantumModel,
    engine: Differentiation | str,
    epochs: int,
    lr: float,
    seed: int,
    x=None,
    y=None,
    init=None,
    final_repeats: int | None = None,
    init_range=(-np.pi, np.pi),
    clock=time.perf_counter,
) -> TrainingRun:
    """Full-batch Adam training.

    Each record holds the loss at the parameters *before* that epoch's
    update. ``initial_loss`` and ``final_loss`` use the same evaluation
    stream, so a run with no epochs reports them equal; for stochastic
    decoders they are medians of ``final_repeats`` evaluations.
    """
    engine = get_engine(engine)
    init_ss, train_ss, eval_ss = np.random.SeedSequence(seed).spawn(3)
    if init is None:
        params = init_params(model.nparams, np.random.default_rng(init_ss), *init_range)
    else:
        params = np.array(init, dtype=float)
    initial = params.copy()
    evaluator = _Evaluator(model, engine, x, y)
    task = "vqe" if x is None else "regression"
    repeats = final_repeats or (1 if model.decoder.analytic else 20)

    initial_loss = float(
        np.median(evaluate_repeated(evaluator, params, np.random.default_rng(eval_ss), repeats))
    )
    opt = Adam(lr=lr)
    train_rng = np.random.default_rng(train_ss)
    records = []
    for epoch in range(epochs):
        before = _refits(model)
        t0 = clock()
        loss, grad = evaluator.loss_and_grad(params, train_rng)
        params = opt.step(params, grad)
        wall_ms = (clock() - t0) * 1e3
        records.append(
            EpochRecord(
                epoch=epoch,
                loss=loss,
                wall_ms=wall_ms,
                refit=_refits(model) > before,
                seed=seed,
                energy=loss if task == "vqe" else None,
            )
        )
    if epochs == 0:
        final_loss = initial_loss
    else:
        final_loss = float(
            np.median(
                evaluate_repeated(evaluator, params, np.random.default_rng(eval_ss), repeats)
            )
        )
    return TrainingRun(task, seed, initial, params, initial_loss, final_loss, records)


def train_regression(model, epochs=50, lr=0.2, seed=0, engine="adjoint", data=None, **kw):
    x, y = regression_dataset() if data is None else data
    return optimize(model, engine, epochs, lr, seed, x=x, y=y, **kw)


def train_vqe(model, epochs=50, lr=0.1, seed=0, engine="adjoint", **kw):
    return optimize(model, engine, epochs, lr, seed, **kw)
