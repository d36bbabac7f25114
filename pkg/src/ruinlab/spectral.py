"""Perron-Frobenius eigenpair of the killed kernel."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import ConvergenceError, ValidationError, check_game_size, check_int, check_positive
from .kernel import KernelOperator, apply, build_killed_kernel
from .simplex import SimplexIndex, center_state, enumerate_interior

__all__ = [
    "EigenPair",
    "perron_frobenius",
    "spectral_gap_scan",
    "center_value",
    "PerronFrobeniusSolver",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
]

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10**6


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Top eigenvalue ``beta0`` and positive unit eigenvector ``phi0`` of ``K``."""

    beta0: float
    phi0: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    k: int
    N: int
    tol: float = DEFAULT_TOL
    cache_hit: bool = False

    @property
    def gap(self) -> float:
        return 1.0 - self.beta0


def perron_frobenius(op: KernelOperator, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> EigenPair:
    """Power iteration from the all-ones vector.

    ``K`` is nonnegative, symmetric and irreducible on the interior, so the
    iterates stay positive and converge to the Perron vector.  The stopping
    test is the eigen-residual ``||K v - (v.Kv) v||_2 <= tol`` with
    ``||v||_2 = 1``; ``beta0`` is the Rayleigh quotient at that point.
    """
    tol = check_positive(tol, "tol")
    max_iter = check_int(max_iter, "max_iter", minimum=1)
    n = op.index.interior_count
    if n == 0:
        raise ValidationError("operator has no interior states")

    # with two players the chain is bipartite (-beta0 is also an eigenvalue),
    # so iterate with K + I there; k >= 3 has triangles and needs no shift
    shift = 1.0 if op.k == 2 else 0.0
    v = np.full(n, 1.0 / np.sqrt(n))
    residual = np.inf
    for it in range(1, max_iter + 1):
        w = apply(op, v)
        beta = float(v @ w)
        residual = float(np.linalg.norm(w - beta * v))
        if residual <= tol:
            break
        w += shift * v
        v = w / np.linalg.norm(w)
    else:
        raise ConvergenceError("power iteration did not converge", residual, max_iter)

    v = np.abs(v) / np.linalg.norm(v)
    logger.debug("k=%d N=%d beta0=%.15g after %d iterations", op.k, op.N, beta, it)
    return EigenPair(beta0=beta, phi0=v, residual=residual, iterations=it, k=op.k, N=op.N, tol=tol)


def spectral_gap_scan(
    k: int,
    N_list: Iterable[int],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    cache_dir: str | Path | None = None,
) -> list[tuple[int, float]]:
    """Table of ``(N, 1 - beta0)`` sorted by ``N``."""
    from .io import cached_perron_frobenius

    rows = []
    for N in sorted(set(N_list)):
        k_, N_ = check_game_size(k, N)
        op = build_killed_kernel(enumerate_interior(k_, N_))
        pair = cached_perron_frobenius(op, tol=tol, max_iter=max_iter, cache_dir=cache_dir)
        rows.append((N_, pair.gap))
    return rows


def center_value(pair: EigenPair, index: SimplexIndex) -> float:
    """``phi0`` at the lexicographically first interior state closest to the center."""
    if len(pair.phi0) != index.interior_count:
        raise ValidationError("eigenvector does not match the index")
    return float(pair.phi0[index.encode(center_state(index))])


class PerronFrobeniusSolver(BaseEstimator):
    """Estimator-style wrapper computing the eigenpair for a ``(k, N)`` game.

    Parameters
    ----------
    k : int
        Number of players.
    n_chips : int
        Total number of chips ``N``.
    tol : float
        Residual tolerance for the power iteration.
    max_iter : int
    cache_dir : str or None
        Directory for the binary eigenvector cache; ``None`` disables caching.

    Attributes
    ----------
    index_ : SimplexIndex
    kernel_ : KernelOperator
    beta0_ : float
    phi0_ : ndarray
    eigenpair_ : EigenPair
    """

    def __init__(self, k=3, n_chips=12, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, cache_dir=None):
        self.k = k
        self.n_chips = n_chips
        self.tol = tol
        self.max_iter = max_iter
        self.cache_dir = cache_dir

    def fit(self, X=None, y=None):
        from .io import cached_perron_frobenius

        k, N = check_game_size(self.k, self.n_chips)
        self.index_ = enumerate_interior(k, N)
        self.kernel_ = build_killed_kernel(self.index_)
        self.eigenpair_ = cached_perron_frobenius(
            self.kernel_, tol=self.tol, max_iter=self.max_iter, cache_dir=self.cache_dir
        )
        self.beta0_ = self.eigenpair_.beta0
        self.phi0_ = self.eigenpair_.phi0
        return self

    def transform(self, X) -> np.ndarray:
        """Evaluate ``phi0`` at each interior state (row) of ``X``."""
        check_is_fitted(self, "phi0_")
        X = np.asarray(X, dtype=np.int64)
        if X.ndim == 1:
            X = X[None, :]
        idx = self.index_.lookup(X)
        if np.any(idx < 0):
            raise ValidationError("all rows must be interior states of the fitted game")
        return self.phi0_[idx]

    def center_value(self) -> float:
        check_is_fitted(self, "phi0_")
        return center_value(self.eigenpair_, self.index_)
