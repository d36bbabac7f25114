"""Exact exit laws ``P(X_tau = z | X_0 = s)``.

For a fixed start ``s`` the Green row ``g = (I - K)^{-1} e_s`` counts expected
visits to each interior state before absorption, and

    P(X_tau = z | X_0 = s) = sum_{y next to z} g(y) / (k (k - 1)).

``I - K`` is symmetric positive definite because ``beta0 < 1``, so a single
preconditioned conjugate-gradient solve per start gives the whole boundary law.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    ConvergenceError,
    ValidationError,
    check_game_size,
    check_player,
    check_positive,
    check_state_array,
)
from .kernel import KernelOperator, build_killed_kernel
from .simplex import ChipConfig, SimplexIndex, enumerate_interior

__all__ = [
    "AbsorptionRow",
    "absorption_row",
    "face_hit_probability",
    "conditional_final_distribution",
    "RuinChain",
    "FLUSH_THRESHOLD",
]

FLUSH_THRESHOLD = 1e-300


@dataclass(frozen=True, eq=False)
class AbsorptionRow:
    """Boundary law for one start state.

    ``probabilities[j]`` is the chance of exiting at ``index.boundary[j]``.
    ``flushed`` counts entries forced to zero because they were below
    :data:`FLUSH_THRESHOLD` or negative from round-off.
    """

    start: ChipConfig
    probabilities: np.ndarray = field(repr=False)
    solver_residual: float
    index: SimplexIndex = field(repr=False)
    green: np.ndarray = field(repr=False)
    flushed: int = 0

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(c) for c in z): float(p) for z, p in zip(self.index.boundary, self.probabilities)}

    @property
    def total(self) -> float:
        return float(self.probabilities.sum())


def _system(op: KernelOperator) -> sp.csr_matrix:
    n = op.index.interior_count
    return (sp.identity(n, format="csr") - op.matrix).tocsr()


def _solve(op: KernelOperator, rhs: np.ndarray, tol: float, method: str, maxiter: int | None):
    A = _system(op)
    if method == "direct":
        g = spla.splu(A.tocsc()).solve(rhs)
    elif method == "cg":
        diag = A.diagonal()
        jacobi = spla.LinearOperator(A.shape, matvec=lambda r: r / diag, dtype=np.float64)
        g, info = spla.cg(A, rhs, rtol=tol, atol=0.0, M=jacobi, maxiter=maxiter or 10 * A.shape[0] + 100)
        if info != 0:
            res = np.linalg.norm(rhs - A @ g) / np.linalg.norm(rhs)
            raise ConvergenceError("conjugate gradient did not converge", res, info)
    else:
        raise ValidationError(f"unknown method {method!r}; expected 'cg' or 'direct'")
    residual = float(np.linalg.norm(rhs - A @ g) / np.linalg.norm(rhs))
    return g, residual


def absorption_row(
    op: KernelOperator,
    s,
    tol: float = 1e-12,
    method: str = "cg",
    maxiter: int | None = None,
) -> AbsorptionRow:
    """Boundary law of the chain started at interior state ``s``.

    Parameters
    ----------
    op : KernelOperator
    s : ChipConfig or sequence of int
        Interior start state.
    tol : float
        Relative residual tolerance for the CG solve.
    method : {"cg", "direct"}
        ``"direct"`` uses a sparse LU factorization instead of CG.
    """
    tol = check_positive(tol, "tol")
    s = s if isinstance(s, ChipConfig) else ChipConfig(s)
    if not s.is_interior:
        raise ValidationError(f"start not interior: {s.chips}")
    row = op.index.encode(s)
    rhs = np.zeros(op.index.interior_count)
    rhs[row] = 1.0
    g, residual = _solve(op, rhs, tol, method, maxiter)

    probs = op.exits.T.astype(np.float64) @ g * float(op.step_probability)
    small = probs < FLUSH_THRESHOLD
    probs[small] = 0.0
    return AbsorptionRow(
        start=s,
        probabilities=probs,
        solver_residual=residual,
        index=op.index,
        green=g,
        flushed=int(np.count_nonzero(small)),
    )


def face_hit_probability(row: AbsorptionRow, i: int) -> float:
    """Probability that player ``i`` (1-based) is the one ruined."""
    return float(row.probabilities[row.index.face_mask(i)].sum())


def conditional_final_distribution(row: AbsorptionRow, i: int) -> dict[tuple[int, ...], float]:
    """Exit law restricted to face ``i`` and renormalized."""
    mask = row.index.face_mask(i)
    mass = row.probabilities[mask].sum()
    if mass <= 0:
        raise ValidationError(f"face {i} carries zero probability from {row.start.chips}")
    states = row.index.boundary[mask]
    return {tuple(int(c) for c in z): float(p / mass) for z, p in zip(states, row.probabilities[mask])}


class RuinChain(BaseEstimator):
    """Estimator-style front end for exit laws of the ``(k, N)`` game.

    ``fit`` builds the index and kernel; ``predict_proba`` maps start states
    (rows of ``X``) to boundary laws whose columns follow ``boundary_states_``.

    Parameters
    ----------
    k : int
    n_chips : int
    tol : float
        CG relative residual tolerance.
    method : {"cg", "direct"}
    """

    def __init__(self, k=3, n_chips=12, tol=1e-12, method="cg"):
        self.k = k
        self.n_chips = n_chips
        self.tol = tol
        self.method = method

    def fit(self, X=None, y=None):
        k, N = check_game_size(self.k, self.n_chips)
        if self.method not in ("cg", "direct"):
            raise ValidationError(f"unknown method {self.method!r}")
        self.index_ = enumerate_interior(k, N)
        self.kernel_ = build_killed_kernel(self.index_)
        self.boundary_states_ = self.index_.boundary
        return self

    def absorption_rows(self, X) -> list[AbsorptionRow]:
        check_is_fitted(self, "kernel_")
        X = check_state_array(X, self.index_.k)
        return [absorption_row(self.kernel_, x, tol=self.tol, method=self.method) for x in X]

    def predict_proba(self, X) -> np.ndarray:
        """Array of shape ``(n_starts, boundary_count)``."""
        return np.vstack([r.probabilities for r in self.absorption_rows(X)])

    def predict_face_proba(self, X) -> np.ndarray:
        """Array of shape ``(n_starts, k)``; column ``i`` is the chance player ``i + 1`` is ruined."""
        P = self.predict_proba(X)
        masks = np.stack([self.index_.face_mask(i) for i in range(1, self.index_.k + 1)], axis=1)
        return P @ masks.astype(np.float64)

    def predict(self, X) -> np.ndarray:
        """Most likely ruined player (1-based) for each start."""
        return np.argmax(self.predict_face_proba(X), axis=1) + 1

    def face_probability(self, s, i: int) -> float:
        check_is_fitted(self, "kernel_")
        check_player(i, self.index_.k)
        return face_hit_probability(absorption_row(self.kernel_, s, tol=self.tol, method=self.method), i)
