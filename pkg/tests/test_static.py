import numpy as np
import pytest

from pos_sde import (
    Divergence,
    InvalidInput,
    NonConvergence,
    OptimizerConfig,
    SingularGram,
    optimize_initial,
    power_observables,
)
from pos_sde import rng
from pos_sde.static import least_norm_step, newton_project
from pos_sde.stats import normal_moments, normalized_static_error


def _draw(N, stream=0):
    return rng.normals(0, stream, 0, N, rng.INITIAL)


def test_mean_only_is_one_exact_shift():
    X0 = _draw(50)
    obs = power_observables(1, [0.25])
    X, rep = optimize_initial(X0, obs)
    np.testing.assert_allclose(X[:, 0], X0 + (0.25 - X0.mean()), atol=1e-15)
    assert rep.iterations == 1
    assert abs(X.mean() - 0.25) < 1e-15


def test_already_exact_ensemble_is_untouched():
    X0 = np.array([-1.0, 1.0])
    obs = power_observables(2, [0.0, 1.0])
    X, rep = optimize_initial(X0, obs)
    assert rep.iterations == 0
    assert rep.distance == 0.0
    np.testing.assert_array_equal(X[:, 0], X0)


def test_normal_ensemble_reaches_error_floor():
    obs = power_observables(6, normal_moments(6))
    X, rep = optimize_initial(_draw(1000), obs)
    R = normalized_static_error(X, normal_moments(6), 1.0)
    assert np.all(R <= 1e-12)
    assert 2 <= rep.iterations <= 8
    assert 1e-3 < rep.distance < 0.2
    assert rep.converged


def test_unconstrained_higher_moments_not_degraded():
    obs = power_observables(6, normal_moments(6))
    before, after = [], []
    for s in range(20):
        X0 = _draw(1000, s)
        X, _ = optimize_initial(X0, obs)
        before.append(normalized_static_error(X0, normal_moments(8), 1.0)[6:])
        after.append(normalized_static_error(X, normal_moments(8), 1.0)[6:])
    assert np.all(np.mean(after, axis=0) <= 1.5 * np.mean(before, axis=0))


@pytest.mark.parametrize("precondition", [True, False])
def test_scale_invariance_iterate_by_iterate(precondition):
    X0 = _draw(400, 3)
    targets = normal_moments(5)
    c = np.array([3.0, -0.2, 7.5, 1e-3, 40.0])
    a = power_observables(5, targets)
    b = power_observables(5).rescaled(c).with_targets(c * targets)
    for k in range(1, 5):
        cfg = OptimizerConfig(i_max=k, precondition=precondition)
        iterates = []
        for obs in (a, b):
            try:
                X, _ = newton_project(X0, obs, obs.targets, cfg)
            except NonConvergence as exc:
                X = exc.ensemble
            iterates.append(X)
        scale = np.linalg.norm(iterates[0])
        assert np.linalg.norm(iterates[0] - iterates[1]) <= 1e-12 * scale


def test_small_ensemble_divergence_is_reported():
    # eight moments of a normal cannot be matched by three samples
    obs = power_observables(8, normal_moments(8))
    failures = 0
    for s in range(10):
        try:
            optimize_initial(_draw(3, s), obs)
        except (Divergence, NonConvergence) as exc:
            assert exc.ensemble is not None and exc.report is not None
            failures += 1
    assert failures == 10


def test_backtrack_resample_uses_fresh_draws():
    obs = power_observables(4, normal_moments(4))
    calls = []

    def resample(k):
        calls.append(k)
        return _draw(2000, 100 + k)

    # an outlier-dominated draw diverges; the fresh one converges
    bad = np.concatenate((np.full(6, 40.0), np.zeros(4)))
    with pytest.raises(Divergence):
        optimize_initial(bad, obs)
    X, rep = optimize_initial(bad, obs, OptimizerConfig(divergence_policy="backtrack-resample"), resample)
    assert calls == [1]
    assert rep.restarts == 1
    assert np.all(normalized_static_error(X, normal_moments(4), 1.0) <= 1e-10)


def test_restart_budget_is_bounded():
    obs = power_observables(4, normal_moments(4))
    bad = np.concatenate((np.full(6, 40.0), np.zeros(4)))
    calls = []

    def resample(k):
        calls.append(k)
        return bad

    cfg = OptimizerConfig(divergence_policy="backtrack-resample", max_restarts=3)
    with pytest.raises(Divergence) as info:
        optimize_initial(bad, obs, cfg, resample)
    assert calls == [1, 2, 3]
    assert info.value.report.restarts == 3


def test_fail_policy_propagates_divergence():
    obs = power_observables(8, normal_moments(8))
    with pytest.raises((Divergence, NonConvergence)):
        optimize_initial(_draw(3), obs, OptimizerConfig(divergence_policy="fail"), lambda k: _draw(3, k))


def test_singular_gram_without_svd_fallback():
    J = np.array([[1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(SingularGram):
        least_norm_step(J, np.array([1.0, 2.0]), OptimizerConfig(svd_fallback=False))
    dx, used = least_norm_step(J, np.array([1.0, 2.0]), OptimizerConfig())
    assert used
    np.testing.assert_allclose(J @ dx, [1.0, 2.0], atol=1e-12)


def test_config_validation():
    with pytest.raises(InvalidInput):
        OptimizerConfig(eta=0)
    with pytest.raises(InvalidInput):
        OptimizerConfig(i_max=0)
    with pytest.raises(InvalidInput):
        OptimizerConfig(divergence_policy="retry")


def test_missing_targets_rejected():
    with pytest.raises(InvalidInput):
        optimize_initial(_draw(10), power_observables(2))


def test_two_dimensional_ensemble():
    from pos_sde.models import laser_observables

    obs = laser_observables()
    X0 = np.sqrt(0.5) * rng.normals(0, 0, 0, (4096, 2), rng.INITIAL)
    X, rep = optimize_initial(X0, obs)
    assert np.abs(obs.mean(X) - obs.targets).max() < 1e-13
    assert rep.converged
