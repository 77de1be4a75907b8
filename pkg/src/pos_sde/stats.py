"""Ensemble moments, moment/cumulant conversions and benchmark error measures.

Ensembles are float64 arrays of shape ``(n_samples, dim)`` (sample-major, so
``X.reshape(-1)`` is the extended vector). One-dimensional input of shape
``(n_samples,)`` is accepted wherever ``dim == 1``.

All ensemble reductions go through :func:`ensemble_mean`, which sums along a
contiguous axis so numpy applies pairwise summation. The reduction order only
depends on the array shape, so results are bitwise reproducible for a given
input.
"""

from __future__ import annotations

import math
from math import comb

import numpy as np

from .errors import InvalidInput


def as_ensemble(X, dim: int | None = None) -> np.ndarray:
    """Validate ``X`` and return it as a ``(n_samples, dim)`` float64 array."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InvalidInput(f"ensemble must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidInput("empty ensemble")
    if dim is not None and arr.shape[1] != dim:
        raise InvalidInput(f"expected dimension {dim}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0, 0]
        raise InvalidInput(f"non-finite entry in ensemble at sample {bad}")
    return arr


def ensemble_mean(values: np.ndarray) -> np.ndarray:
    """Mean over the last axis using pairwise summation."""
    values = np.ascontiguousarray(values)
    return np.add.reduce(values, axis=-1) / values.shape[-1]


def power_table(x: np.ndarray, max_power: int) -> np.ndarray:
    """Rows ``x**0 .. x**max_power`` for a 1-D sample vector, shape (max_power+1, N)."""
    out = np.empty((max_power + 1, x.shape[0]))
    out[0] = 1.0
    for k in range(1, max_power + 1):
        np.multiply(out[k - 1], x, out=out[k])
    return out


def raw_moments(X, M: int) -> np.ndarray:
    """Sampled raw moments ``<x^m>`` for m = 1..M of a one-dimensional ensemble."""
    if M < 1:
        raise InvalidInput("M must be >= 1")
    arr = as_ensemble(X, dim=1)
    return ensemble_mean(power_table(arr[:, 0], M)[1:])


def normal_moment(m: int, sigma: float) -> float:
    """``<x^m>`` for a zero-mean normal distribution with standard deviation sigma."""
    if m < 1:
        raise InvalidInput("moment order must be >= 1")
    if sigma <= 0:
        raise InvalidInput("sigma must be positive")
    if m % 2:
        return 0.0
    double_fact = math.prod(range(m - 1, 0, -2))
    return sigma**m * double_fact


def normal_moments(M: int, sigma: float = 1.0, mean: float = 0.0) -> np.ndarray:
    """Raw moments 1..M of N(mean, sigma^2)."""
    central = np.array([normal_moment(m, sigma) for m in range(1, M + 1)])
    return raw_from_central(mean, central)


def special_targets(sigma: float) -> tuple[float, float]:
    """Exact ``<exp(x)>`` and ``<|x|>`` for x ~ N(0, sigma^2)."""
    if sigma <= 0:
        raise InvalidInput("sigma must be positive")
    return math.exp(sigma**2 / 2), sigma * math.sqrt(2 / math.pi)


def raw_from_central(mean: float, central) -> np.ndarray:
    """Raw moments from the mean and central moments 1..M (central[0] is the
    first central moment, i.e. zero)."""
    central = np.asarray(central, dtype=np.float64)
    M = central.shape[0]
    raw = np.empty(M + 1)
    raw[0] = 1.0
    for m in range(1, M + 1):
        acc = central[m - 1]
        for p in range(m):
            acc -= comb(m, p) * raw[p] * (-mean) ** (m - p)
        raw[m] = acc
    return raw[1:]


def central_from_raw(raw) -> tuple[float, np.ndarray]:
    """Inverse of :func:`raw_from_central`; returns ``(mean, central)``."""
    raw = np.asarray(raw, dtype=np.float64)
    M = raw.shape[0]
    mean = raw[0]
    full = np.concatenate(([1.0], raw))
    central = np.empty(M)
    for m in range(1, M + 1):
        central[m - 1] = sum(comb(m, p) * full[p] * (-mean) ** (m - p) for p in range(m + 1))
    central[0] = 0.0
    return mean, central


def cumulants_from_moments(raw) -> np.ndarray:
    """Cumulants kappa_1..kappa_M from raw moments 1..M."""
    raw = np.asarray(raw, dtype=np.float64)
    M = raw.shape[0]
    if M < 1:
        raise InvalidInput("need at least one moment")
    full = np.concatenate(([1.0], raw))
    kappa = np.zeros(M + 1)
    for m in range(1, M + 1):
        acc = full[m]
        for p in range(1, m):
            acc -= comb(m - 1, p - 1) * kappa[p] * full[m - p]
        kappa[m] = acc
    return kappa[1:]


def moments_from_cumulants(kappa) -> np.ndarray:
    """Inverse of :func:`cumulants_from_moments`."""
    kappa = np.concatenate(([0.0], np.asarray(kappa, dtype=np.float64)))
    M = kappa.shape[0] - 1
    full = np.zeros(M + 1)
    full[0] = 1.0
    for m in range(1, M + 1):
        full[m] = kappa[m] + sum(
            comb(m - 1, p - 1) * kappa[p] * full[m - p] for p in range(1, m)
        )
    return full[1:]


def normalized_static_error(X, targets, sigma: float, n_samples: int | None = None) -> np.ndarray:
    """Moment errors ``|<x^m> - mu_m|`` scaled by ``sigma^m sqrt(m!/N_S)``.

    The scaling is the standard deviation of the sampled moment for a normal
    distribution, so i.i.d. samples give values of order one.
    """
    arr = as_ensemble(X, dim=1)
    n = arr.shape[0] if n_samples is None else n_samples
    if n <= 0:
        raise InvalidInput("n_samples must be positive")
    targets = np.asarray(targets, dtype=np.float64)
    M = targets.shape[0]
    r_tilde = np.abs(raw_moments(arr, M) - targets)
    m = np.arange(1, M + 1)
    scale = sigma**m * np.sqrt(np.array([math.factorial(k) for k in m], dtype=float) / n)
    return r_tilde / scale


SPECIAL_SCALINGS = ("as_written", "sqrt_n")


def normalized_special_error(
    X, sigma: float, scaling: str = "as_written"
) -> dict[str, float]:
    """Normalized errors of ``<exp(x)>`` and ``<|x|>`` against the N(0, sigma^2) values.

    ``scaling="as_written"`` divides the absolute error by ``sqrt(N_S)``;
    ``"sqrt_n"`` multiplies by it instead, which is the dimensionally
    consistent choice (errors of i.i.d. samples then come out of order one).
    """
    arr = as_ensemble(X, dim=1)
    n = arr.shape[0]
    mu_exp, mu_abs = special_targets(sigma)
    x = np.ascontiguousarray(arr[:, 0])
    errs = {
        "exp": abs(float(ensemble_mean(np.exp(x))) - mu_exp),
        "abs": abs(float(ensemble_mean(np.abs(x))) - mu_abs),
    }
    if scaling == "as_written":
        factor = 1 / math.sqrt(n)
    elif scaling == "sqrt_n":
        factor = math.sqrt(n)
    else:
        raise InvalidInput(f"unknown scaling {scaling!r}; expected one of {SPECIAL_SCALINGS}")
    return {k: v * factor for k, v in errs.items()}


def relative_distance(A, B) -> float:
    """``||A - B|| / ||B||`` in the Euclidean norm of the flattened arrays."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise InvalidInput(f"shape mismatch {A.shape} vs {B.shape}")
    ref = np.linalg.norm(B.ravel())
    if ref == 0:
        raise InvalidInput("reference has zero norm")
    return float(np.linalg.norm((A - B).ravel()) / ref)


def cost_metric(wall_seconds: float, r_tilde: float) -> float:
    """Inverse efficiency ``T_CPU * R~^2``."""
    if wall_seconds < 0:
        raise InvalidInput("wall_seconds must be non-negative")
    return wall_seconds * r_tilde**2
