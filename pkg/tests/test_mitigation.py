import warnings

import numpy as np
import pytest

from qmlforge.circuit import AngleExpr, Circuit, bind
from qmlforge.differentiation import grad_psr
from qmlforge.errors import DegenerateFitWarning
from qmlforge.mitigation import (
    MitigationConfig,
    MitigationMap,
    Mitigator,
    cdr_training_data,
    fit_map,
    fit_ols,
    mitigate,
    sample_clifford_variant,
    snap_angle,
)
from qmlforge.models import Expectation, QuantumModel, build_reuploading_1q
from qmlforge.observables import parse_pauli_sum, sum_z
from qmlforge.sim import Depolarizing, NoiseModel, estimate_expectation

HALF_PI = np.pi / 2
Z0 = parse_pauli_sum("Z0", 1)


def test_config_validation_and_round_trip():
    d = {"min_iterations": 500, "threshold": 0.2, "method": "CDR", "method_kwargs": {"n_training_samples": 100, "nshots": 10000}}
    cfg = MitigationConfig.from_dict(d)
    assert cfg.to_dict() == d
    assert cfg.n_training_samples == 100 and cfg.nshots == 10000
    for bad in (
        {**d, "min_iterations": 0},
        {**d, "threshold": 0.0},
        {**d, "method": "ZNE"},
        {**d, "method_kwargs": {"n_training_samples": 1, "nshots": 10}},
    ):
        with pytest.raises(ValueError):
            MitigationConfig.from_dict(bad)


def test_snap_examples():
    rng = np.random.default_rng(0)
    assert all(snap_angle(HALF_PI, rng) == pytest.approx(HALF_PI) for _ in range(200))
    draws = np.array([snap_angle(np.pi / 4, rng) for _ in range(4000)])
    assert set(np.round(draws / HALF_PI).astype(int)) == {0, 1}
    assert np.mean(draws > 0.1) == pytest.approx(0.5, abs=0.03)


def test_snap_probability_proportional_to_proximity():
    rng = np.random.default_rng(1)
    a = 0.3 * HALF_PI + 2 * np.pi
    draws = np.array([snap_angle(a, rng) for _ in range(20000)])
    lower = np.isclose(draws, 2 * np.pi)
    assert lower.mean() == pytest.approx(0.7, abs=0.015)
    neg = np.array([snap_angle(-0.25 * HALF_PI, rng) for _ in range(20000)])
    assert np.isclose(neg, 0.0).mean() == pytest.approx(0.75, abs=0.015)


def test_variant_angles_are_clifford():
    rng = np.random.default_rng(2)
    c = bind(Circuit(2).add("RX", 0, 0.3).add("CNOT", (0, 1)).add("RZ", 1, -2.2).add("RY", 0, 5.0))
    for _ in range(50):
        v = sample_clifford_variant(c, rng)
        k = v.angles / HALF_PI
        np.testing.assert_allclose(k, np.round(k), atol=1e-12)
        assert [(g.kind, g.qubits) for g in v.gates] == [(g.kind, g.qubits) for g in c.gates]


def test_fit_ols_synthetic():
    y_exact = np.linspace(-1, 1, 17)
    a, b = fit_ols(0.9 * y_exact, y_exact)
    assert a == pytest.approx(1 / 0.9, abs=1e-9) and b == pytest.approx(0.0, abs=1e-9)
    x = np.array([0.1, 0.4, 0.7, 1.3])
    y = 2.5 * x - 0.3
    assert fit_ols(x, y) == pytest.approx((2.5, -0.3), abs=1e-12)
    assert fit_ols([0.2, 0.2, 0.2], [1, 0, -1]) is None


def test_degenerate_fit_falls_back_to_identity():
    # All-Z observable on a circuit whose Clifford variants all give <Z> = 1 -> zero spread
    c = bind(Circuit(1).add("RZ", 0, 0.4))
    with pytest.warns(DegenerateFitWarning):
        m = fit_map(c, Z0, None, 10, None, np.random.default_rng(0))
    assert (m.slope, m.intercept) == (1.0, 0.0)


def test_fit_recovers_depolarizing_contraction():
    # Product circuit: every qubit sees 4 noisy gates, so <Z_q> contracts by (1-p)^4
    n, p = 3, 0.05
    c = Circuit(n)
    rng = np.random.default_rng(3)
    for _ in range(2):
        for kind in ("RY", "RX"):
            for q in range(n):
                c.add(kind, q, float(rng.uniform(-np.pi, np.pi)))
    noise = NoiseModel.uniform(Depolarizing(p))
    b = bind(c)
    f = (1 - p) ** 4
    # analytic contraction oracle from the density simulator
    assert estimate_expectation(b, sum_z(n), noise=noise) == pytest.approx(f * estimate_expectation(b, sum_z(n)), abs=1e-12)
    m = fit_map(b, sum_z(n), noise, 100, 10_000, np.random.default_rng(4))
    assert m.slope == pytest.approx(1 / f, rel=0.1)
    assert abs(m.intercept) < 0.05


def test_noiseless_fit_is_identity():
    rng = np.random.default_rng(5)
    c = bind(build_reuploading_1q(3).build(), rng.uniform(-3, 3, 6), [0.4])
    noisy, exact = cdr_training_data(c, Z0, None, 60, 10_000, rng)
    m = fit_map(c, Z0, None, 60, 20_000, np.random.default_rng(6))
    assert abs(m.slope - 1) < 0.05 and abs(m.intercept) < 0.02
    assert np.max(np.abs(noisy - exact)) < 0.05


def test_map_application_and_clamp():
    ident = MitigationMap()
    assert ident(0.3) == 0.3
    assert MitigationMap(1.25, 0.0)(0.9, bound=1.0) == 1.0
    assert MitigationMap(1.25, 0.0)(-0.9, bound=1.0) == -1.0


def _reuploading_context(seed, p=0.01, L=4):
    rng = np.random.default_rng(seed)
    circuit = bind(build_reuploading_1q(L).build(), rng.uniform(-np.pi, np.pi, 2 * L), [rng.uniform(0, 2 * np.pi)])
    return circuit, NoiseModel.uniform(Depolarizing(p))


def test_stationary_noise_no_refits():
    circuit, noise = _reuploading_context(0)
    cfg = MitigationConfig(5, 0.2, "CDR", {"n_training_samples": 50, "nshots": 10_000})
    mit = Mitigator(cfg)
    rng = np.random.default_rng(1)
    raw = estimate_expectation(circuit, Z0, noise=noise)
    for _ in range(100):
        mit.mitigate(raw, circuit, Z0, noise, rng)
    assert mit.fits == 1 and mit.refits == 0
    assert mit.checks == 100 // 5


@pytest.mark.parametrize("total,min_it", [(0, 3), (7, 3), (12, 4), (25, 1)])
def test_call_accounting(total, min_it):
    circuit, noise = _reuploading_context(2)
    mit = Mitigator(MitigationConfig(min_it, 0.5, "CDR", {"n_training_samples": 4, "nshots": None}))
    rng = np.random.default_rng(0)
    for _ in range(total):
        mit.mitigate(0.1, circuit, Z0, noise, rng)
        assert mit.calls_since_check < min_it
    assert mit.checks == total // min_it
    assert mit.total_calls == total
    assert (mit.map is not None) == (total > 0)


def test_drift_triggers_refit():
    circuit, noise = _reuploading_context(3, p=0.05)
    cfg = MitigationConfig(20, 0.05, "CDR", {"n_training_samples": 30, "nshots": None})
    mit = Mitigator(cfg)
    rng = np.random.default_rng(0)
    for call in range(400):
        current = noise if call < 100 else noise.scaled(4)
        mit.mitigate(0.0, circuit, Z0, current, rng)
    assert mit.refits >= 1


def test_mitigation_reduces_bias_on_reuploading():
    better = 0
    for seed in range(100):
        circuit, noise = _reuploading_context(100 + seed)
        exact = estimate_expectation(circuit, Z0)
        noisy = estimate_expectation(circuit, Z0, noise=noise)
        m = fit_map(circuit, Z0, noise, 100, None, np.random.default_rng(seed))
        better += abs(m(noisy, 1.0) - exact) < abs(noisy - exact)
    assert better >= 90


def test_decoder_mitigates_predictions_and_gradients():
    noise = NoiseModel.uniform(Depolarizing(0.01))
    cfg = {"min_iterations": 1000, "threshold": 0.2, "method": "CDR", "method_kwargs": {"n_training_samples": 20, "nshots": None}}
    dec = Expectation(Z0, noise=noise, mitigation=cfg)
    m = QuantumModel([build_reuploading_1q(2)], dec)
    grad_psr(m, [0.3], np.random.default_rng(0), params=np.ones(4))
    # 6 rotations (encodings included) -> 12 shifted evaluations, one decoding call each
    assert dec.mitigator.total_calls == 12
    m.forward([0.3], 0, params=np.ones(4))
    assert dec.mitigator.total_calls == 13


def test_functional_form_matches_method():
    circuit, noise = _reuploading_context(4)
    cfg = MitigationConfig(3, 0.2, "CDR", {"n_training_samples": 10, "nshots": None})
    a, b = Mitigator(cfg), Mitigator(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFitWarning)
        va = [mitigate(a, 0.4, (circuit, Z0, noise, cfg), np.random.default_rng(s)) for s in range(5)]
        vb = [b.mitigate(0.4, circuit, Z0, noise, np.random.default_rng(s)) for s in range(5)]
    assert va == vb


def test_fit_deterministic_given_seed():
    circuit, noise = _reuploading_context(5)
    m1 = fit_map(circuit, Z0, noise, 20, 1000, np.random.default_rng(9))
    m2 = fit_map(circuit, Z0, noise, 20, 1000, np.random.default_rng(9))
    assert m1 == m2


def test_symbolic_angles_untouched_by_variants():
    c = Circuit(1).add("RY", 0, AngleExpr.param(0))
    b = bind(c, [0.2])
    v = sample_clifford_variant(b, 0)
    assert b.angles[0] == pytest.approx(0.2)
    assert v.angles[0] in (0.0, pytest.approx(HALF_PI))
