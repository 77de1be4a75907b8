"""Euler-Maruyama stepping with and without parallel optimized sampling.

Two optimized steps are provided:

* :func:`combined_step` starts from the Euler proposal and projects the whole
  ensemble onto the Ito-generator prediction ``c`` of the new observables.
* :func:`individual_step` keeps the drift term and optimizes only the
  effective noise ``dV = B dW`` so that the order-sqrt(dt) and order-dt parts
  of the observable change vanish separately.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng
from .errors import Divergence, InvalidDiffusion, InvalidInput, NonConvergence, NumericError, PosError
from .models import SdeModel
from .observables import MonomialObservables
from .static import (
    EPS,
    AttemptReport,
    OptimizerConfig,
    _diverging,
    conditioned_basis,
    least_norm_step,
    newton_project,
)
from .stats import as_ensemble, ensemble_mean

METHODS = ("euler", "combined", "individual")


def _coefficients(X: np.ndarray, model: SdeModel) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(model.drift(X), dtype=np.float64)
    B = np.asarray(model.diffusion(X), dtype=np.float64)
    for name, arr in (("drift", a), ("diffusion", B)):
        ok = np.isfinite(arr.reshape(arr.shape[0], -1)).all(axis=1)
        if not ok.all():
            raise NumericError(f"non-finite {name} at sample {int(np.argmin(ok))}")
    return a, B


def _noise_block(dW, n: int, q: int) -> np.ndarray:
    dW = np.asarray(dW, dtype=np.float64)
    if dW.ndim == 1 and q == 1:
        dW = dW[:, None]
    if dW.shape != (n, q):
        raise InvalidInput(f"noise block must have shape ({n}, {q}), got {dW.shape}")
    return dW


def _check_dt(dt: float):
    if not dt > 0:
        raise InvalidInput("dt must be positive")


def euler_step(X, model: SdeModel, dt: float, dW) -> np.ndarray:
    """``x <- x + a(x) dt + b(x) dW`` for every sample."""
    _check_dt(dt)
    X = as_ensemble(X, dim=model.dim)
    dW = _noise_block(dW, X.shape[0], model.noise_dim)
    a, B = _coefficients(X, model)
    return X + a * dt + np.einsum("niq,nq->ni", B, dW)


def ideal_moment_changes(X, model: SdeModel, obs: MonomialObservables, dt: float) -> np.ndarray:
    """Targets ``c_m = < o_m + (grad o_m . a + 1/2 H_m : b b^T) dt >`` over the ensemble."""
    if dt < 0:
        raise InvalidInput("dt must be non-negative")
    X = as_ensemble(X, dim=model.dim)
    if obs.dim != model.dim:
        raise InvalidInput("observable and model dimensions differ")
    a, B = _coefficients(X, model)
    d = np.einsum("niq,njq->nij", B, B)
    return ensemble_mean(obs.values(X) + dt * obs.generator(X, a, d))


def _relative(num: float, den: float) -> float:
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def combined_step(X, model: SdeModel, obs: MonomialObservables, dt: float, dW, cfg: OptimizerConfig = OptimizerConfig()):
    """One Euler step followed by a Newton projection onto the ideal observables.

    Returns ``(X_next, report)``; ``report.residuals`` are ``|o_bar(X_next) - c|``
    and ``report.distance`` is ``||X_next - X0|| / ||X0 - X||`` with ``X0`` the
    Euler proposal.
    """
    start = time.perf_counter()
    _check_dt(dt)
    X = as_ensemble(X, dim=model.dim)
    dW = _noise_block(dW, X.shape[0], model.noise_dim)
    a, B = _coefficients(X, model)
    dX0 = a * dt + np.einsum("niq,nq->ni", B, dW)
    proposal = X + dX0
    c = ensemble_mean(obs.values(X) + dt * obs.generator(X, a, np.einsum("niq,njq->nij", B, B)))
    X_next, report = newton_project(proposal, obs, c, cfg)
    report.distance = _relative(float(np.linalg.norm(X_next - proposal)), float(np.linalg.norm(dX0)))
    report.wall_seconds = time.perf_counter() - start
    return X_next, report


def individual_residuals(X, dV, obs: MonomialObservables, diffusion_dt) -> tuple[np.ndarray, np.ndarray]:
    """Mean and variance conditions ``(e1, e2)`` for an effective noise ``dV``.

    ``e1 = J dV`` and ``e2 = 1/2 H : (dV dV^T - D dt)`` with the Hessian
    block-diagonal over samples; ``diffusion_dt`` is ``D dt`` with shape
    (N, dim, dim).
    """
    X = as_ensemble(X, dim=obs.dim)
    dV = as_ensemble(dV, dim=obs.dim)
    G = obs.gradients(X)
    H = obs.hessians(X)
    outer = dV[:, :, None] * dV[:, None, :] - diffusion_dt
    e1 = ensemble_mean(np.einsum("mni,ni->mn", G, dV))
    e2 = ensemble_mean(0.5 * np.einsum("mnij,nij->mn", H, outer))
    return e1, e2


def individual_step(X, model: SdeModel, obs: MonomialObservables, dt: float, dW, cfg: OptimizerConfig = OptimizerConfig()):
    """Euler step with the effective noise optimized so that ``e1 = e2 = 0``.

    Returns ``(X_next, report)``; ``report.residuals`` holds
    ``|e1_m| + |e2_m|`` and ``report.distance`` is ``||dV_opt - dV|| / ||dV||``.
    """
    start = time.perf_counter()
    _check_dt(dt)
    X = as_ensemble(X, dim=model.dim)
    N, d = X.shape
    dW = _noise_block(dW, N, model.noise_dim)
    a, B = _coefficients(X, model)
    Dmat = np.einsum("niq,njq->nij", B, B)
    if np.any(np.diagonal(Dmat, axis1=1, axis2=2) < 0):
        raise InvalidDiffusion("negative diagonal diffusion entry")
    Ddt = Dmat * dt
    dV0 = np.einsum("niq,nq->ni", B, dW)
    dV = dV0.copy()

    work, _ = conditioned_basis(obs, X, cfg.precondition)
    G = work.gradients(X)
    # rows of the variance condition vanish identically for linear observables
    Hk = work.hessians(X)[~work.linear_mask]
    M, K = G.shape[0], Hk.shape[0]
    Jrows = G.reshape(M, N * d) / N

    history: list[float] = []
    iterations = fallbacks = 0
    converged = False

    def make_report():
        e1, e2 = individual_residuals(X, dV, obs, Ddt)
        return AttemptReport(
            residuals=np.abs(e1) + np.abs(e2),
            iterations=iterations,
            distance=_relative(float(np.linalg.norm(dV - dV0)), float(np.linalg.norm(dV0))),
            wall_seconds=time.perf_counter() - start,
            converged=converged,
            svd_fallbacks=fallbacks,
            residual_history=list(history),
        )

    while True:
        p1 = np.einsum("mni,ni->mn", G, dV)
        p2 = 0.5 * np.einsum("mnij,nij->mn", Hk, dV[:, :, None] * dV[:, None, :] - Ddt)
        R = -np.concatenate((ensemble_mean(p1), ensemble_mean(p2)))
        if not np.all(np.isfinite(R)):
            raise Divergence("non-finite residual", X + a * dt + dV, make_report())
        history.append(float(np.linalg.norm(R)))
        floor = 16 * EPS * np.concatenate((ensemble_mean(np.abs(p1)), ensemble_mean(np.abs(p2))))
        if np.all(np.abs(R) <= floor):
            converged = True
            break
        if _diverging(history):
            raise Divergence("noise residual grew on consecutive iterations", X + a * dt + dV, make_report())
        if iterations >= cfg.i_max:
            raise NonConvergence(f"no convergence within {cfg.i_max} iterations", X + a * dt + dV, make_report())
        HdV = np.einsum("mnij,nj->mni", Hk, dV).reshape(K, N * d) / N
        Jt = np.concatenate((Jrows, HdV))
        step, used_svd = least_norm_step(Jt, R, cfg)
        fallbacks += used_svd
        v_norm = np.linalg.norm(dV)
        dV = dV + step.reshape(N, d)
        iterations += 1
        if np.linalg.norm(step) < cfg.eta * v_norm:
            converged = True
            break
    return X + a * dt + dV, make_report()


# -- multi-step driver ------------------------------------------------------


def default_recorders(dim: int, n_moments: int = 8) -> dict[str, Callable[[np.ndarray], float]]:
    """Observables logged at snapshot times."""
    if dim == 1:
        rec = {f"m{m}": (lambda X, m=m: float(ensemble_mean(X[:, 0] ** m))) for m in range(1, n_moments + 1)}
        rec["exp"] = lambda X: float(ensemble_mean(np.exp(X[:, 0])))
        rec["abs"] = lambda X: float(ensemble_mean(np.abs(X[:, 0])))
        return rec
    return {"n": lambda X: float(ensemble_mean(np.sum(X**2, axis=1)))}


@dataclass
class Snapshot:
    time: float
    step: int
    values: dict[str, float]

    def moments(self, M: int) -> np.ndarray:
        return np.array([self.values[f"m{m}"] for m in range(1, M + 1)])


@dataclass
class IntegrationResult:
    snapshots: list[Snapshot]
    final: np.ndarray
    retried_steps: list[int] = field(default_factory=list)
    newton_iterations: int = 0


def integrate(
    model: SdeModel,
    X0,
    T: float,
    n_steps: int,
    method: str = "euler",
    obs: MonomialObservables | None = None,
    cfg: OptimizerConfig = OptimizerConfig(),
    record_times=None,
    seed: int = 0,
    stream: int = 0,
    recorders: dict[str, Callable[[np.ndarray], float]] | None = None,
    callback: Callable[[int, np.ndarray, AttemptReport | None], None] | None = None,
) -> IntegrationResult:
    """Integrate ``n_steps`` uniform steps up to time ``T``.

    Noise for step ``k`` is drawn from the counter address ``(seed, stream, k)``,
    so every method sees the same Brownian increments. A POS step that
    diverges is retried once as two half steps whose increments sum to the
    original one; a second failure aborts with ``exc.step`` set.

    ``record_times`` are rounded to the nearest step; the default records
    ``t = 0`` and ``t = T``.
    """
    if method not in METHODS:
        raise InvalidInput(f"method must be one of {METHODS}")
    if not T > 0 or n_steps < 1:
        raise InvalidInput("need T > 0 and n_steps >= 1")
    if method != "euler" and obs is None:
        raise InvalidInput("POS methods need an observable set")
    X = as_ensemble(X0, dim=model.dim).copy()
    N = X.shape[0]
    q = model.noise_dim
    dt = T / n_steps
    sqrt_dt = math.sqrt(dt)
    if record_times is None:
        record_times = (0.0, T)
    record_steps = sorted({min(n_steps, max(0, round(t / dt))) for t in record_times})
    recorders = recorders or default_recorders(model.dim)
    result = IntegrationResult([], X)

    def snap(k):
        result.snapshots.append(Snapshot(k * dt, k, {name: f(X) for name, f in recorders.items()}))

    def pos_step(Xc, h, dW):
        step = combined_step if method == "combined" else individual_step
        return step(Xc, model, obs, h, dW, cfg)

    if 0 in record_steps:
        snap(0)
    for k in range(n_steps):
        dW = sqrt_dt * rng.normals(seed, stream, k, (N, q))
        report = None
        try:
            if method == "euler":
                X = euler_step(X, model, dt, dW)
            else:
                try:
                    X, report = pos_step(X, dt, dW)
                except Divergence:
                    result.retried_steps.append(k)
                    bridge = 0.5 * sqrt_dt * rng.normals(seed, stream, k, (N, q), rng.RETRY)
                    dW1 = 0.5 * dW + bridge
                    Xh, r1 = pos_step(X, dt / 2, dW1)
                    X, report = pos_step(Xh, dt / 2, dW - dW1)
                    report.iterations += r1.iterations
                result.newton_iterations += report.iterations
        except PosError as exc:
            exc.step = k
            exc.args = (f"step {k}: {exc.args[0] if exc.args else ''}",) + exc.args[1:]
            raise
        if callback is not None:
            callback(k, X, report)
        if k + 1 in record_steps:
            snap(k + 1)
    result.final = X
    return result
