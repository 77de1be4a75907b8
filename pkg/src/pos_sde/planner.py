"""Budget planning for the split between ensemble size and step count.

The error model is ``eps(N_S, N_T) = c * N_T**-p + sigma * N_S**-0.5`` under
the budget ``N_S * N_T <= N``.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

from .errors import InvalidInput


@dataclass(frozen=True)
class ResourcePlan:
    """Optimal split of a step budget.

    ``n_samples_real`` and ``n_steps_real`` are the continuous optimum;
    ``n_samples`` and ``n_steps`` the integer plan actually proposed.
    ``trunc_error`` and ``sampling_error`` are the two error terms at the
    continuous optimum, ``predicted_error`` their sum.
    """

    order: float
    trunc_const: float
    sample_sigma: float
    budget: int
    n_samples: int
    n_steps: int
    n_samples_real: float
    n_steps_real: float
    trunc_error: float
    sampling_error: float
    predicted_error: float
    rounded_error: float

    @property
    def error_ratio(self) -> float:
        """Truncation over sampling error at the continuous optimum."""
        return self.trunc_error / self.sampling_error


def _positive(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise InvalidInput(f"{name} must be a real number") from None
    if not (math.isfinite(v) and v > 0):
        raise InvalidInput(f"{name} must be finite and positive, got {value!r}")
    return v


def total_error(p: float, c: float, sigma: float, n_samples: float, n_steps: float) -> float:
    """Truncation plus sampling error for a given split."""
    return c * n_steps ** (-p) + sigma / math.sqrt(n_samples)


def optimum_error(p: float, c: float, sigma: float, N: float) -> float:
    """Total modelled error at the continuous optimum.

    Equals ``(2p c sigma**(2p) / N**p)**(1/(2p+1)) * (1 + 1/(2p))``.
    """
    k = 2.0 * p + 1.0
    return (2.0 * p * c * sigma ** (2.0 * p) / N**p) ** (1.0 / k) * (1.0 + 1.0 / (2.0 * p))


def effective_order(p: float) -> float:
    """Best attainable exponent of the total error in the budget, p/(2p+1)."""
    if isinstance(p, (int, float)) and p == math.inf:
        return 0.5
    p = _positive("p", p)
    return p / (2.0 * p + 1.0)


def optimal_split(p: float, c: float, sigma: float, N: int) -> ResourcePlan:
    """Split a budget of ``N`` sample-steps to minimise the total error.

    The continuous optimum is rounded to whichever of the two neighbouring
    sample counts gives the smaller modelled error, with
    ``N_T = floor(N / N_S)``.

    Examples
    --------
    >>> plan = optimal_split(1, 1, 1, 10**6)
    >>> plan.n_samples, plan.n_steps
    (6300, 158)
    """
    p = _positive("p", p)
    c = _positive("c", c)
    sigma = _positive("sigma", sigma)
    if isinstance(N, bool) or not isinstance(N, numbers.Integral) or N < 1:
        raise InvalidInput(f"budget N must be a positive integer, got {N!r}")
    N = int(N)
    if math.isinf(p):
        raise InvalidInput("p must be finite")

    k = 2.0 * p + 1.0
    base = sigma / (2.0 * p * c)
    ns_real = N ** (2.0 * p / k) * base ** (2.0 / k)
    nt_real = N ** (1.0 / k) * base ** (-2.0 / k)
    eps_t = c * nt_real ** (-p)
    eps_s = sigma / math.sqrt(ns_real)
    predicted = optimum_error(p, c, sigma, N)

    best = None
    for ns in {math.floor(ns_real), math.ceil(ns_real)}:
        ns = min(max(1, int(ns)), N)
        nt = max(1, N // ns)
        err = total_error(p, c, sigma, ns, nt)
        if best is None or err < best[0] or (err == best[0] and ns < best[1]):
            best = (err, ns, nt)
    err, ns, nt = best
    return ResourcePlan(
        order=p,
        trunc_const=c,
        sample_sigma=sigma,
        budget=N,
        n_samples=ns,
        n_steps=nt,
        n_samples_real=ns_real,
        n_steps_real=nt_real,
        trunc_error=eps_t,
        sampling_error=eps_s,
        predicted_error=predicted,
        rounded_error=err,
    )
