import math

import numpy as np
import pytest

from pos_sde import InvalidDiffusion, InvalidInput, OptimizerConfig, power_observables
from pos_sde import rng
from pos_sde.dynamic import (
    combined_step,
    euler_step,
    ideal_moment_changes,
    individual_residuals,
    individual_step,
    integrate,
)
from pos_sde.models import OuParams, SdeModel, constant_drift, ornstein_uhlenbeck, ou_exact_moments
from pos_sde.stats import normal_moments, raw_moments


def _model(drift, diff):
    return SdeModel("test", 1, 1, drift, lambda X: np.broadcast_to(diff(X)[:, :, None], (X.shape[0], 1, 1)))


def _ensemble(N, stream=0, mean=1.0, std=0.1):
    return mean + std * rng.normals(0, stream, 0, (N, 1), rng.INITIAL)


def test_euler_step_example():
    X = np.array([[1.0], [2.0]])
    out = euler_step(X, constant_drift(0.5, 0.5), 0.1, np.array([0.2, -0.2]))
    np.testing.assert_allclose(out[:, 0], [1.0 + 0.05 + 0.1, 2.0 + 0.05 - 0.1])


def test_euler_rejects_bad_input():
    with pytest.raises(InvalidInput):
        euler_step(np.ones(3), constant_drift(), 0.0, np.zeros(3))
    with pytest.raises(InvalidInput):
        euler_step(np.ones(3), constant_drift(), 0.1, np.zeros(4))


def test_ideal_changes_zero_dt_is_current_moments():
    X = _ensemble(100)
    obs = power_observables(4)
    np.testing.assert_allclose(ideal_moment_changes(X, constant_drift(), obs, 0.0), raw_moments(X[:, 0], 4), rtol=1e-15)


def test_ideal_changes_pure_diffusion_second_moment():
    X = _ensemble(100)
    model = _model(lambda X: np.zeros_like(X), lambda X: np.full(X.shape, 0.3))
    c = ideal_moment_changes(X, model, power_observables(2), 0.01)
    assert c[1] == pytest.approx(np.mean(X**2) + 0.09 * 0.01, rel=1e-14)


def test_ideal_changes_termwise_expansion():
    # <x^m> + dt <m a x^(m-1) + m(m-1)/2 b^2 x^(m-2)> for constant a, b
    X = _ensemble(200)[:, 0]
    a, b, dt = 0.5, 0.5, 1e-3
    c = ideal_moment_changes(X, constant_drift(a, b), power_observables(6), dt)
    for m in range(1, 7):
        gen = m * a * X ** (m - 1) + 0.5 * m * (m - 1) * b**2 * X ** max(m - 2, 0)
        assert c[m - 1] == pytest.approx(np.mean(X**m + dt * gen), rel=1e-13)


def test_combined_step_without_noise_or_drift_is_identity():
    X = _ensemble(50)
    model = _model(lambda X: np.zeros_like(X), lambda X: np.zeros_like(X))
    Xn, rep = combined_step(X, model, power_observables(4), 1e-2, np.zeros(50))
    np.testing.assert_array_equal(Xn, X)
    assert rep.iterations == 0


def test_combined_step_hits_targets():
    N, dt = 1000, 1e-4
    obs = power_observables(6)
    X = _ensemble(N)
    dW = math.sqrt(dt) * rng.normals(0, 0, 0, (N, 1))
    model = constant_drift()
    c = ideal_moment_changes(X, model, obs, dt)
    Xn, rep = combined_step(X, model, obs, dt, dW)
    err = np.abs(raw_moments(Xn[:, 0], 6) - c)
    assert np.all(err <= 1e-10 * np.abs(c))
    assert rep.converged and rep.distance > 0


def test_individual_mean_only_removes_noise_mean():
    N, dt = 64, 0.1
    X = _ensemble(N)
    dW = math.sqrt(dt) * rng.normals(0, 0, 0, (N, 1))
    model = constant_drift(0.5, 0.5)
    Xn, rep = individual_step(X, model, power_observables(1), dt, dW)
    dV = 0.5 * dW[:, 0]
    np.testing.assert_allclose(Xn[:, 0], X[:, 0] + 0.05 + dV - dV.mean(), atol=1e-15)
    assert rep.iterations == 1


def test_individual_second_moment_conditions():
    N, dt, b = 500, 0.1, 0.5
    X = _ensemble(N)
    dW = math.sqrt(dt) * rng.normals(0, 1, 0, (N, 1))
    Xn, _ = individual_step(X, constant_drift(0.0, b), power_observables(2), dt, dW)
    dV = Xn[:, 0] - X[:, 0]
    assert abs(dV.mean()) < 1e-14
    # second moment condition: <2 x dV + dV^2 - b^2 dt> = 0
    assert abs(np.mean(2 * X[:, 0] * dV)) < 1e-14
    assert abs(np.mean(dV**2 - b**2 * dt)) < 1e-14


def test_individual_step_near_machine_precision():
    N, dt = 1000, 0.1
    obs = power_observables(6)
    X = _ensemble(N)
    dW = math.sqrt(dt) * rng.normals(0, 2, 0, (N, 1))
    _, rep = individual_step(X, constant_drift(), obs, dt, dW)
    assert np.all(rep.residuals / math.sqrt(dt / N) <= 1e-12)


def test_negative_diffusion_diagonal_rejected(monkeypatch):
    # D = B B^T cannot go negative for real B, so corrupt the contraction that forms it
    import pos_sde.dynamic as dyn

    einsum = np.einsum

    def corrupted(spec, *ops, **kw):
        out = einsum(spec, *ops, **kw)
        return -1.0 - np.abs(out) if spec == "niq,njq->nij" else out

    monkeypatch.setattr(dyn.np, "einsum", corrupted)
    with pytest.raises(InvalidDiffusion):
        individual_step(_ensemble(10), constant_drift(), power_observables(2), 0.1, np.zeros(10))


def test_residuals_hold_at_every_step_of_integration():
    N, T, n_steps = 500, 1.0, 20
    dt = T / n_steps
    obs = power_observables(4)
    p = OuParams()
    model = ornstein_uhlenbeck(p)
    X0 = _ensemble(N, mean=p.init_mean, std=p.init_std)
    bad = []

    def check(k, X, rep):
        if rep.residuals.max() > 1e-12 * math.sqrt(dt):
            bad.append((k, rep.residuals.max()))

    integrate(model, X0, T, n_steps, "individual", obs, callback=check)
    assert not bad


def test_integration_is_deterministic():
    model = ornstein_uhlenbeck()
    X0 = _ensemble(200)
    obs = power_observables(3)
    runs = [integrate(model, X0, 1.0, 10, "combined", obs, seed=7, stream=2).final for _ in range(2)]
    assert runs[0].tobytes() == runs[1].tobytes()
    other = integrate(model, X0, 1.0, 10, "combined", obs, seed=7, stream=3).final
    assert other.tobytes() != runs[0].tobytes()


def test_zero_drift_and_diffusion_keeps_snapshots_constant():
    model = _model(lambda X: np.zeros_like(X), lambda X: np.zeros_like(X))
    X0 = _ensemble(40)
    for method in ("euler", "combined", "individual"):
        res = integrate(model, X0, 1.0, 5, method, power_observables(3), record_times=np.linspace(0, 1, 6))
        first = res.snapshots[0].values
        for s in res.snapshots[1:]:
            assert s.values == pytest.approx(first, rel=1e-14, abs=1e-15)


def test_ou_euler_mean_within_clt_band():
    p = OuParams()
    N = 10**5
    X0 = _ensemble(N, mean=p.init_mean, std=p.init_std)
    res = integrate(ornstein_uhlenbeck(p), X0, 1.0, 1000, "euler")
    raw, _ = ou_exact_moments(p, 1.0, 2)
    assert raw[0] == pytest.approx(1.315712, abs=1e-6)
    sd = math.sqrt(raw[1] - raw[0] ** 2)
    assert abs(res.snapshots[-1].values["m1"] - raw[0]) < 3 * sd / math.sqrt(N)


def test_methods_agree_without_noise():
    model = _model(lambda X: 0.3 - 0.7 * X, lambda X: np.zeros_like(X))
    X0 = _ensemble(100)
    euler = integrate(model, X0, 0.5, 10, "euler").final
    # the noise optimization has nothing to do
    indiv = integrate(model, X0, 0.5, 10, "individual", power_observables(4)).final
    assert np.abs(indiv - euler).max() <= 1e-12
    # a linear observable's target is the Euler mean exactly
    comb = integrate(model, X0, 0.5, 10, "combined", power_observables(1)).final
    assert np.abs(comb - euler).max() <= 1e-12


def test_noiseless_combined_correction_is_second_order():
    model = _model(lambda X: 0.3 - 0.7 * X, lambda X: np.zeros_like(X))
    X = _ensemble(100)
    obs = power_observables(4)
    gaps = []
    for dt in (1e-2, 1e-3):
        Xn, _ = combined_step(X, model, obs, dt, np.zeros(100))
        gaps.append(np.abs(Xn - euler_step(X, model, dt, np.zeros(100))).max())
    assert gaps[1] < gaps[0] / 50


def test_integrate_validation():
    model = ornstein_uhlenbeck()
    with pytest.raises(InvalidInput):
        integrate(model, np.ones(5), 0.0, 10)
    with pytest.raises(InvalidInput):
        integrate(model, np.ones(5), 1.0, 0)
    with pytest.raises(InvalidInput):
        integrate(model, np.ones(5), 1.0, 5, "combined")
    with pytest.raises(InvalidInput):
        integrate(model, np.ones(5), 1.0, 5, "milstein")


def test_step_index_attached_to_failures():
    # eight moments with four samples cannot be matched
    model = ornstein_uhlenbeck()
    X0 = _ensemble(4)
    with pytest.raises(Exception) as info:
        integrate(model, X0, 1.0, 5, "combined", power_observables(8, normal_moments(8)), cfg=OptimizerConfig(i_max=5))
    assert getattr(info.value, "step", None) == 0


def test_individual_residual_function():
    X = _ensemble(30)
    dV = rng.normals(0, 0, 1, (30, 1))
    D = np.full((30, 1, 1), 0.2)
    e1, e2 = individual_residuals(X, dV, power_observables(2), D)
    assert e1[0] == pytest.approx(dV.mean())
    assert e2[0] == 0.0
    assert e2[1] == pytest.approx(np.mean(dV**2 - 0.2))
