"""Benchmark SDE models and their exact or quadrature reference values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.integrate

from .errors import InvalidInput
from .observables import MonomialObservables, cross_moment_observables
from .stats import cumulants_from_moments, normal_moment, raw_from_central


@dataclass(frozen=True)
class SdeModel:
    """Ito SDE ``dx = a(x) dt + b(x) dw`` evaluated on whole ensembles.

    ``drift`` maps an (N, dim) array to (N, dim); ``diffusion`` maps it to
    (N, dim, noise_dim).
    """

    label: str
    dim: int
    noise_dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]

    def diffusion_matrix(self, X: np.ndarray) -> np.ndarray:
        B = self.diffusion(X)
        return np.einsum("niq,njq->nij", B, B)


def _constant_diffusion(value: float, dim: int):
    eye = value * np.eye(dim)

    def diffusion(X):
        return np.broadcast_to(eye, (X.shape[0], dim, dim))

    return diffusion


def constant_drift(a: float = 0.5, b: float = 0.5) -> SdeModel:
    """Constant drift, additive noise; the one-step synthetic benchmark."""
    return SdeModel(
        f"constant(a={a},b={b})", 1, 1,
        lambda X: np.full_like(X, a),
        _constant_diffusion(b, 1),
    )


@dataclass(frozen=True)
class OuParams:
    f: float = 1.0
    g: float = 0.2
    b: float = 0.5
    init_mean: float = 0.5
    init_std: float = 0.1


def ornstein_uhlenbeck(p: OuParams = OuParams()) -> SdeModel:
    """``dx = (f - g x) dt + b dw``."""
    return SdeModel(
        f"ou(f={p.f},g={p.g},b={p.b})", 1, 1,
        lambda X: p.f - p.g * X,
        _constant_diffusion(p.b, 1),
    )


def cubic_drift() -> SdeModel:
    """``dx = (x - x^3) dt + dw``."""
    return SdeModel("cubic", 1, 1, lambda X: X - X**3, _constant_diffusion(1.0, 1))


def irregular_drift() -> SdeModel:
    """``dx = x (1 - |x|) dt + dw``."""
    return SdeModel("irregular", 1, 1, lambda X: X * (1 - np.abs(X)), _constant_diffusion(1.0, 1))


def laser(b: float) -> SdeModel:
    """Laser equation ``da = (1 - |a|^2) a dt + b dW_c`` in real form (Re a, Im a).

    ``<dW_c dW_c*> = 2 dt`` splits into two independent real noises of
    variance dt each.
    """
    if b <= 0:
        raise InvalidInput("b must be positive")

    def drift(X):
        return (1 - np.sum(X**2, axis=1, keepdims=True)) * X

    return SdeModel(f"laser(b={b})", 2, 2, drift, _constant_diffusion(b, 2))


def model_catalog() -> dict[str, SdeModel]:
    """The benchmark models with their default parameters."""
    return {
        "constant": constant_drift(),
        "ou": ornstein_uhlenbeck(),
        "cubic": cubic_drift(),
        "irregular": irregular_drift(),
        "laser": laser(1.0),
    }


# initial distributions: (mean, std) per coordinate
INITIAL_STD_STEADY = 1 / math.sqrt(2)


def ou_exact_moments(p: OuParams, t: float, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact raw moments and cumulants 1..M of the OU process at time t,
    starting from N(init_mean, init_std^2)."""
    if M < 1:
        raise InvalidInput("M must be >= 1")
    decay = math.exp(-p.g * t)
    mean = p.f / p.g * (1 - decay) + decay * p.init_mean
    var = decay**2 * p.init_std**2 + p.b**2 / (2 * p.g) * (1 - decay**2)
    if var > 0:
        central = np.array([normal_moment(m, math.sqrt(var)) for m in range(1, M + 1)])
    else:
        central = np.zeros(M)
    raw = raw_from_central(mean, central)
    return raw, cumulants_from_moments(raw)


@dataclass(frozen=True)
class SteadyStateWeight:
    """Unnormalized stationary density ``exp(log_weight(x))`` on [-L, L].

    ``breakpoints`` are interior points where the integrand may be
    non-smooth; they become panel edges.
    """

    log_weight: Callable[[np.ndarray], np.ndarray]
    half_width: float
    panels: int = 64
    order: int = 24
    breakpoints: tuple[float, ...] = (0.0,)


CUBIC_WEIGHT = SteadyStateWeight(lambda x: x**2 - 0.5 * x**4, 6.0)
IRREGULAR_WEIGHT = SteadyStateWeight(lambda x: x**2 - (2 / 3) * np.abs(x) * x**2, 8.0)


def _gauss_legendre_grid(w: SteadyStateWeight):
    L = w.half_width
    edges = sorted({-L, L, *[p for p in w.breakpoints if -L < p < L]})
    # split each piece into panels proportional to its length
    nodes, weights = np.polynomial.legendre.leggauss(w.order)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(1, round(w.panels * (hi - lo) / (2 * L)))
        cuts = np.linspace(lo, hi, n + 1)
        for a, b in zip(cuts[:-1], cuts[1:]):
            half = (b - a) / 2
            xs.append(a + half * (nodes + 1))
            ws.append(half * weights)
    return np.concatenate(xs), np.concatenate(ws)


def steady_state_expectation(w: SteadyStateWeight, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """``int f e^l / int e^l`` by composite Gauss-Legendre quadrature."""
    x, q = _gauss_legendre_grid(w)
    logw = w.log_weight(x)
    top = logw.max()
    edge = max(w.log_weight(np.array([-w.half_width, w.half_width])))
    if not np.isfinite(top) or edge - top > math.log(1e-30):
        raise InvalidInput("weight does not decay within the integration window")
    dens = np.exp(logw - top) * q
    return float(np.dot(dens, f(x)) / dens.sum())


def steady_state_moments(w: SteadyStateWeight, M: int) -> np.ndarray:
    return np.array([steady_state_expectation(w, lambda x, m=m: x**m) for m in range(1, M + 1)])


def laser_nss(b: float) -> float:
    """Steady-state photon number ``<|a|^2>`` of the laser equation."""
    if not b > 0:
        raise InvalidInput("b must be positive")
    z = 1 / (math.sqrt(2) * b)
    # 1 + erf(z) == erfc(-z), accurate for all z
    return 1 + math.sqrt(2 / math.pi) * b * math.exp(-0.5 / b**2) / math.erfc(-z)


def laser_nss_quadrature(b: float) -> float:
    """Same quantity by integrating the radial stationary density
    ``p(n) ~ exp((n - n^2/2) / b^2)`` over n >= 0."""
    def logw(n):
        return -((n - 1) ** 2) / (2 * b**2)

    hi = 1 + 40 * b
    pts = [1.0] if hi > 1 else None
    num = scipy.integrate.quad(lambda n: n * math.exp(logw(n)), 0, hi, points=pts, epsabs=0, epsrel=1e-13, limit=200)[0]
    den = scipy.integrate.quad(lambda n: math.exp(logw(n)), 0, hi, points=pts, epsabs=0, epsrel=1e-13, limit=200)[0]
    return num / den


def gaussian_cross_moments(obs: MonomialObservables, mean, std) -> np.ndarray:
    """Exact ``<prod x_i^k_i>`` for independent normal coordinates."""
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (obs.dim,))
    std = np.broadcast_to(np.asarray(std, dtype=float), (obs.dim,))
    kmax = int(obs.exponents.max())
    per_coord = []
    for i in range(obs.dim):
        central = np.array([normal_moment(m, std[i]) for m in range(1, kmax + 1)])
        per_coord.append(np.concatenate(([1.0], raw_from_central(mean[i], central))))
    out = np.ones(obs.size)
    for i in range(obs.dim):
        out *= per_coord[i][obs.exponents[:, i]]
    return out * obs.coef


def laser_observables(max_order: int = 4) -> MonomialObservables:
    """All ``Re(a)^n Im(a)^m`` with ``1 <= n + m <= max_order``, with targets
    from the initial distribution (independent N(0, 1/2) components)."""
    obs = cross_moment_observables(max_order, dim=2)
    return obs.with_targets(gaussian_cross_moments(obs, 0.0, INITIAL_STD_STEADY))
