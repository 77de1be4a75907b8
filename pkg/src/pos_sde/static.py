"""Static parallel optimized sampling: Newton projection of an ensemble onto
prescribed observable values."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import Divergence, InvalidInput, NonConvergence, SingularGram
from .linsolve import RCOND_THRESHOLD, SVD_REL_CUTOFF, least_norm_solve, svd_pinv_apply
from .observables import MonomialObservables
from .stats import as_ensemble, ensemble_mean

EPS = np.finfo(np.float64).eps
DIVERGENCE_POLICIES = ("fail", "backtrack-resample")


@dataclass(frozen=True)
class OptimizerConfig:
    """Newton iteration controls.

    ``eta`` stops the iteration once ``||dX|| / ||X|| < eta``; ``i_max`` caps
    the number of Newton steps.
    """

    eta: float = 1e-8
    i_max: int = 50
    divergence_policy: str = "fail"
    svd_fallback: bool = True
    max_restarts: int = 3
    rcond_threshold: float = RCOND_THRESHOLD
    svd_rel_cutoff: float = SVD_REL_CUTOFF
    precondition: bool = True

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidInput("eta must be positive")
        if self.i_max < 1:
            raise InvalidInput("i_max must be >= 1")
        if self.divergence_policy not in DIVERGENCE_POLICIES:
            raise InvalidInput(f"divergence_policy must be one of {DIVERGENCE_POLICIES}")


@dataclass
class AttemptReport:
    """Outcome of one optimization (static or one dynamic step).

    ``residuals`` holds the absolute per-observable errors after optimization;
    benchmarks turn them into normalized errors.
    """

    residuals: np.ndarray
    iterations: int
    distance: float
    wall_seconds: float
    converged: bool
    restarts: int = 0
    svd_fallbacks: int = 0
    residual_history: list[float] = field(default_factory=list)


def jacobian(X, obs: MonomialObservables) -> np.ndarray:
    """Derivative matrix of the sampled observables, shape (M, N_S * dim)."""
    return obs.jacobian(as_ensemble(X, dim=obs.dim))


def least_norm_step(J, rhs, cfg: OptimizerConfig) -> tuple[np.ndarray, bool]:
    """Least-norm solution of ``J dX = rhs``; second value is True if the SVD
    fallback was used."""
    # row equilibration leaves the least-norm solution unchanged
    norms = np.linalg.norm(J, axis=1)
    norms[norms == 0] = 1.0
    J = J / norms[:, None]
    rhs = rhs / norms
    try:
        return least_norm_solve(J, rhs, cfg.rcond_threshold), False
    except SingularGram:
        if not cfg.svd_fallback:
            raise
        return svd_pinv_apply(J, rhs, cfg.svd_rel_cutoff), True


def conditioned_basis(obs: MonomialObservables, X: np.ndarray, enabled: bool = True):
    """Pick a shifted/scaled copy of ``obs`` centred on the ensemble.

    Returns ``(obs2, T)``; ``T`` maps residuals of ``obs`` to residuals of
    ``obs2``. Falls back to the identity when recombination is impossible.
    """
    if enabled:
        shift = ensemble_mean(np.ascontiguousarray(X.T))
        spread = np.sqrt(ensemble_mean(np.ascontiguousarray((X - shift).T) ** 2))
        scale = np.where(spread > 0, spread, 1.0)
        try:
            return obs.recombination(shift, scale)
        except InvalidInput:
            pass
    return obs, np.eye(obs.size)


def _diverging(history: list[float]) -> bool:
    # residual norm strictly increased on two consecutive iterations
    return len(history) >= 3 and history[-3] < history[-2] < history[-1]


def newton_project(X0, obs: MonomialObservables, targets, cfg: OptimizerConfig):
    """Move ``X0`` by successive least-norm Newton steps until ``obs.mean(X) == targets``.

    Returns ``(X, report)``; ``report.distance`` is ``||X - X0|| / ||X0||``
    (callers with a different reference recompute it). Raises
    :class:`Divergence` or :class:`NonConvergence` with the partial result
    attached.
    """
    start = time.perf_counter()
    X0 = as_ensemble(X0, dim=obs.dim)
    targets = np.asarray(targets, dtype=np.float64)
    N, d = X0.shape
    X = X0.copy()
    work_obs, T = conditioned_basis(obs, X0, cfg.precondition)
    history: list[float] = []
    iterations = fallbacks = 0
    converged = False

    def report(residual):
        dist = float(np.linalg.norm(X - X0) / np.linalg.norm(X0)) if np.any(X0) else 0.0
        return AttemptReport(
            residuals=np.abs(residual),
            iterations=iterations,
            distance=dist,
            wall_seconds=time.perf_counter() - start,
            converged=converged,
            svd_fallbacks=fallbacks,
            residual_history=list(history),
        )

    while True:
        vals = obs.values(X)
        residual = targets - ensemble_mean(vals)
        if not np.all(np.isfinite(residual)):
            raise Divergence("non-finite observables during Newton iteration", X, report(residual))
        history.append(float(np.linalg.norm(residual)))
        floor = 16 * EPS * ensemble_mean(np.abs(vals))
        if np.all(np.abs(residual) <= floor):
            converged = True
            break
        if _diverging(history):
            raise Divergence(
                f"residual grew on consecutive iterations ({history[-3]:.3e} -> {history[-1]:.3e})",
                X,
                report(residual),
            )
        if iterations >= cfg.i_max:
            raise NonConvergence(f"no convergence within {cfg.i_max} iterations", X, report(residual))
        step, used_svd = least_norm_step(work_obs.jacobian_by_coordinate(X), T @ residual, cfg)
        fallbacks += used_svd
        x_norm = np.linalg.norm(X)
        X = X + step.reshape(d, N).T
        iterations += 1
        if not np.all(np.isfinite(X)):
            raise Divergence("non-finite iterate", X, report(residual))
        if np.linalg.norm(step) < cfg.eta * x_norm:
            converged = True
            residual = targets - obs.mean(X)
            break
    return X, report(residual)


def optimize_initial(
    X0,
    obs: MonomialObservables,
    cfg: OptimizerConfig = OptimizerConfig(),
    resample: Callable[[int], np.ndarray] | None = None,
):
    """Optimize an initial ensemble so the sampled observables equal ``obs.targets``.

    Parameters
    ----------
    X0 : array_like
        Random draw from the intended initial distribution.
    obs : MonomialObservables
        Observables with ``targets`` set.
    cfg : OptimizerConfig
    resample : callable, optional
        ``resample(k)`` returns a fresh draw for restart ``k`` (1-based). Used
        only with ``divergence_policy="backtrack-resample"``.

    Returns
    -------
    (X_opt, AttemptReport)
    """
    if obs.targets is None:
        raise InvalidInput("observable set has no targets")
    restarts = 0
    X_start = X0
    while True:
        try:
            X, rep = newton_project(X_start, obs, obs.targets, cfg)
            rep.restarts = restarts
            return X, rep
        except Divergence as exc:
            can_retry = (
                cfg.divergence_policy == "backtrack-resample"
                and resample is not None
                and restarts < cfg.max_restarts
            )
            if exc.report is not None:
                exc.report.restarts = restarts
            if not can_retry:
                raise
            restarts += 1
            X_start = resample(restarts)
