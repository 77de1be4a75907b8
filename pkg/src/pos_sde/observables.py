"""Monomial observable sets with analytic gradients and Hessians.

An observable set holds M functions ``o_m(x) = coef_m * prod_i z_i**e_mi``
with ``z = (x - shift) / scale``, evaluated per sample. Shift and scale are
there so the Newton solvers can re-express the same constraints in a
numerically better basis (see :meth:`MonomialObservables.recombination`).
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np

from .errors import InvalidInput
from .stats import as_ensemble, ensemble_mean


class MonomialObservables:
    """M monomials in ``dim`` variables.

    Parameters
    ----------
    exponents : array_like of int, shape (M, dim)
        Exponent tuple of each observable.
    targets : array_like, shape (M,), optional
        Exact expectation values the optimizers aim for.
    coef : array_like, shape (M,), optional
        Output scale per observable (default 1).
    shift, scale : array_like, shape (dim,), optional
        Affine change of variables applied before taking powers.
    """

    def __init__(self, exponents, targets=None, coef=None, shift=None, scale=None):
        exps = np.atleast_2d(np.asarray(exponents, dtype=np.int64))
        if exps.ndim != 2 or exps.shape[0] == 0:
            raise InvalidInput("need at least one observable")
        if np.any(exps < 0) or np.any(exps.sum(axis=1) == 0):
            raise InvalidInput("exponents must be non-negative and not all zero")
        self.exponents = exps
        M, d = exps.shape
        self.coef = np.ones(M) if coef is None else np.asarray(coef, dtype=np.float64)
        self.shift = np.zeros(d) if shift is None else np.asarray(shift, dtype=np.float64)
        self.scale = np.ones(d) if scale is None else np.asarray(scale, dtype=np.float64)
        if np.any(self.coef == 0) or np.any(self.scale <= 0):
            raise InvalidInput("coefficients must be non-zero and scales positive")
        self.targets = None if targets is None else np.asarray(targets, dtype=np.float64)
        if self.targets is not None and self.targets.shape != (M,):
            raise InvalidInput(f"targets must have shape ({M},)")
        self._max_exp = exps.max(axis=0)

    @property
    def size(self) -> int:
        return self.exponents.shape[0]

    @property
    def dim(self) -> int:
        return self.exponents.shape[1]

    @property
    def degree(self) -> np.ndarray:
        return self.exponents.sum(axis=1)

    @property
    def linear_mask(self) -> np.ndarray:
        """True where the Hessian vanishes identically (degree-1 monomials)."""
        return self.degree <= 1

    def labels(self) -> list[str]:
        if self.dim == 1:
            return [f"x^{e[0]}" for e in self.exponents]
        return ["*".join(f"x{i}^{k}" for i, k in enumerate(e) if k) for e in self.exponents]

    def with_targets(self, targets) -> "MonomialObservables":
        return MonomialObservables(self.exponents, targets, self.coef, self.shift, self.scale)

    def rescaled(self, factors) -> "MonomialObservables":
        """``o_m -> c_m o_m`` together with ``mu_m -> c_m mu_m``."""
        factors = np.asarray(factors, dtype=np.float64)
        targets = None if self.targets is None else self.targets * factors
        return MonomialObservables(self.exponents, targets, self.coef * factors, self.shift, self.scale)

    def subset(self, index) -> "MonomialObservables":
        targets = None if self.targets is None else self.targets[index]
        return MonomialObservables(self.exponents[index], targets, self.coef[index], self.shift, self.scale)

    # -- evaluation -------------------------------------------------------

    _PAD = 2  # zero rows standing in for exponents -1 and -2

    def _rows(self, X, max_shift: int):
        """Per coordinate ``i`` and shift ``s``: rows ``z_i ** (e_mi - s)``, shape (M, N).

        Negative powers come out as zero rows, which is what differentiation
        of a monomial needs.
        """
        X = as_ensemble(X, dim=self.dim)
        Z = (X - self.shift) / self.scale
        n = Z.shape[0]
        out = []
        for i in range(self.dim):
            kmax = int(self._max_exp[i])
            tab = np.zeros((kmax + 1 + self._PAD, n))
            tab[self._PAD] = 1.0
            zi = np.ascontiguousarray(Z[:, i])
            for k in range(1, kmax + 1):
                np.multiply(tab[self._PAD + k - 1], zi, out=tab[self._PAD + k])
            idx = self.exponents[:, i] + self._PAD
            if np.all(np.diff(idx) == 1):
                # consecutive exponents: views instead of gathered copies
                out.append([tab[idx[0] - s : idx[-1] + 1 - s] for s in range(max_shift + 1)])
            else:
                out.append([tab[idx - s] for s in range(max_shift + 1)])
        return out

    @staticmethod
    def _prod(rows, shifts):
        out = None
        for i, s in enumerate(shifts):
            out = rows[i][s] if out is None else out * rows[i][s]
        return out

    def _values(self, rows):
        return self.coef[:, None] * self._prod(rows, [0] * self.dim)

    def _gradients(self, rows):
        # coordinate-major, shape (M, dim, N)
        M, d = self.exponents.shape
        N = rows[0][0].shape[1]
        out = np.empty((M, d, N))
        for i in range(d):
            fac = self.exponents[:, i] * self.coef / self.scale[i]
            shifts = [0] * d
            shifts[i] = 1
            np.multiply(fac[:, None], self._prod(rows, shifts), out=out[:, i, :])
        return out

    def _hessian_entry(self, rows, i, j):
        e = self.exponents
        shifts = [0] * self.dim
        if i == j:
            fac = e[:, i] * (e[:, i] - 1) * self.coef / self.scale[i] ** 2
            shifts[i] = 2
        else:
            fac = e[:, i] * e[:, j] * self.coef / (self.scale[i] * self.scale[j])
            shifts[i] = shifts[j] = 1
        return fac[:, None] * self._prod(rows, shifts)

    def values(self, X) -> np.ndarray:
        """Per-sample values, shape (M, N)."""
        return self._values(self._rows(X, 0))

    def mean(self, X) -> np.ndarray:
        """Sampled observables ``o_bar(X)``, shape (M,)."""
        return ensemble_mean(self.values(X))

    def gradients(self, X) -> np.ndarray:
        """Per-sample gradients ``d o_m / d x_i``, shape (M, N, dim)."""
        return self._gradients(self._rows(X, 1)).transpose(0, 2, 1)

    def hessians(self, X) -> np.ndarray:
        """Per-sample Hessians, shape (M, N, dim, dim)."""
        rows = self._rows(X, 2)
        M, d = self.exponents.shape
        N = rows[0][0].shape[1]
        out = np.empty((M, N, d, d))
        for i in range(d):
            for j in range(i, d):
                block = self._hessian_entry(rows, i, j)
                out[:, :, i, j] = block
                out[:, :, j, i] = block
        return out

    def jacobian(self, X) -> np.ndarray:
        """``J_mn = d o_bar_m / d X_n`` over the extended vector, shape (M, N*dim)."""
        G = self.gradients(X)
        return G.reshape(G.shape[0], -1) / G.shape[1]

    def jacobian_by_coordinate(self, X) -> np.ndarray:
        """Same derivatives as :meth:`jacobian` with columns ordered
        coordinate-major (column ``i * N + n``), shape (M, dim*N)."""
        G = self._gradients(self._rows(X, 1))
        return G.reshape(G.shape[0], -1) / G.shape[2]

    def generator(self, X, drift, diffusion_matrix) -> np.ndarray:
        """Per-sample Ito generator ``grad o . a + 1/2 H : d``, shape (M, N).

        ``drift`` has shape (N, dim), ``diffusion_matrix`` shape (N, dim, dim).
        Entries of ``d`` that vanish for every sample are skipped.
        """
        rows = self._rows(X, 2)
        drift = np.asarray(drift, dtype=np.float64)
        dmat = np.asarray(diffusion_matrix, dtype=np.float64)
        G = self._gradients(rows)
        out = np.einsum("min,ni->mn", G, drift)
        for i in range(self.dim):
            for j in range(i, self.dim):
                dij = dmat[:, i, j] if i == j else dmat[:, i, j] + dmat[:, j, i]
                if np.any(dij):
                    out += 0.5 * self._hessian_entry(rows, i, j) * dij
        return out

    # -- change of basis --------------------------------------------------

    def recombination(self, shift, scale) -> tuple["MonomialObservables", np.ndarray]:
        """Equivalent observable set in shifted/scaled variables.

        Returns ``(obs2, T)`` with ``obs2.values = T @ self.values + const``.
        Because ``T`` is invertible, the constraint sets ``o_bar = mu`` and
        ``o2_bar = T mu + const`` coincide, and the least-norm Newton step is
        the same in both bases. Requires the exponent set to be closed under
        lowering any exponent (true for all-moments-up-to-order sets).
        """
        shift = np.broadcast_to(np.asarray(shift, dtype=np.float64), (self.dim,))
        scale = np.broadcast_to(np.asarray(scale, dtype=np.float64), (self.dim,))
        if np.any(scale <= 0):
            raise InvalidInput("scale must be positive")
        # express the new variables in the current z-coordinates
        s_rel = (shift - self.shift) / self.scale
        l_rel = scale / self.scale
        index = {tuple(e): k for k, e in enumerate(self.exponents)}
        M = self.size
        T = np.zeros((M, M))
        const = np.zeros(M)
        for m, e in enumerate(self.exponents):
            for k in itertools.product(*(range(ei + 1) for ei in e)):
                c = 1.0
                for i, (ei, ki) in enumerate(zip(e, k)):
                    c *= comb(int(ei), ki) * (-s_rel[i]) ** (int(ei) - ki) / l_rel[i] ** int(ei)
                if c == 0.0:
                    continue
                if not any(k):
                    const[m] += c
                    continue
                j = index.get(tuple(k))
                if j is None:
                    raise InvalidInput("exponent set is not closed under lowering; cannot recombine")
                T[m, j] += c / self.coef[j]
        targets = None if self.targets is None else T @ self.targets + const
        new = MonomialObservables(self.exponents, targets, None, shift, scale)
        return new, T


def power_observables(M: int, targets=None) -> MonomialObservables:
    """``x, x^2, ..., x^M`` in one dimension."""
    if M < 1:
        raise InvalidInput("M must be >= 1")
    return MonomialObservables(np.arange(1, M + 1)[:, None], targets)


def cross_moment_observables(max_order: int, dim: int = 2, targets=None) -> MonomialObservables:
    """All monomials ``prod x_i^{k_i}`` with total degree 1..max_order."""
    exps = [
        k
        for total in range(1, max_order + 1)
        for k in itertools.product(range(total + 1), repeat=dim)
        if sum(k) == total
    ]
    # order by degree, then lexicographically descending in x0
    exps.sort(key=lambda k: (sum(k), tuple(-v for v in k)))
    return MonomialObservables(exps, targets)
