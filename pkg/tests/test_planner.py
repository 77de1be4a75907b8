import math

import numpy as np
import pytest

from pos_sde import InvalidInput
from pos_sde.planner import effective_order, optimal_split, optimum_error, total_error
from pos_sde.summary import slope_fit


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 4.0])
def test_error_ratio_at_real_optimum(p):
    plan = optimal_split(p, 0.7, 1.3, 10**7)
    assert plan.error_ratio == pytest.approx(1 / (2 * p), rel=1e-14)


def test_example_split():
    plan = optimal_split(1, 1, 1, 10**6)
    assert (plan.n_samples, plan.n_steps) == (6300, 158)
    assert plan.n_samples * plan.n_steps <= 10**6
    assert plan.n_samples_real == pytest.approx(10**4 * 0.5 ** (2 / 3))


def test_predicted_error_is_the_sum_at_the_optimum():
    plan = optimal_split(1.5, 2.0, 0.5, 10**8)
    assert plan.predicted_error == pytest.approx(plan.trunc_error + plan.sampling_error, rel=1e-13)
    assert plan.predicted_error == pytest.approx(optimum_error(1.5, 2.0, 0.5, 10**8), rel=1e-13)


def test_optimum_is_a_local_minimum_of_the_continuous_model():
    p, c, s, N = 1.0, 1.0, 1.0, 10**6
    plan = optimal_split(p, c, s, N)
    ns0 = plan.n_samples_real
    for f in np.linspace(0.8, 1.2, 41):
        ns = ns0 * f
        assert total_error(p, c, s, ns, N / ns) >= plan.predicted_error * (1 - 1e-14)


def test_rounded_plan_beats_other_rounding_of_the_same_optimum():
    p, c, s, N = 1.0, 1.0, 1.0, 10**6
    plan = optimal_split(p, c, s, N)
    for ns in (math.floor(plan.n_samples_real), math.ceil(plan.n_samples_real)):
        assert plan.rounded_error <= total_error(p, c, s, ns, N // ns)


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_error_scaling_with_budget(p):
    Ns = [10**k for k in range(4, 10)]
    errs = [optimal_split(p, 1.0, 1.0, N).predicted_error for N in Ns]
    fit = slope_fit(Ns, errs)
    assert fit.slope == pytest.approx(-p / (2 * p + 1), abs=1e-9)


def test_effective_order():
    assert effective_order(1) == pytest.approx(1 / 3)
    assert effective_order(2) == pytest.approx(0.4)
    assert effective_order(math.inf) == 0.5


@pytest.mark.parametrize(
    "args",
    [(0, 1, 1, 100), (1, -1, 1, 100), (1, 1, 0, 100), (1, 1, 1, 0), (1, 1, 1, 10.5), (1, 1, 1, True), (math.inf, 1, 1, 100), ("x", 1, 1, 10)],
)
def test_invalid_inputs(args):
    with pytest.raises(InvalidInput):
        optimal_split(*args)


def test_tiny_budget():
    plan = optimal_split(1, 1, 1, 1)
    assert plan.n_samples == 1 and plan.n_steps == 1
