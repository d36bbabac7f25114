"""Killed transition kernel of the chip-exchange game.

At each turn an unordered pair of players is chosen uniformly and a fair coin
decides who hands over a chip, so every ordered move ``x -> x + e_i - e_j``
has probability ``1 / (2 * C(k, 2)) = 1 / (k (k - 1))``.  Restricting the
moves to the interior gives the sub-stochastic symmetric kernel ``K``.

The kernel is stored as an integer adjacency matrix (number of moves between
two states, 0 or 1) together with an integer exit matrix from interior states
to reachable boundary states; the step probability is applied at use time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ._validation import ValidationError
from .simplex import ChipConfig, SimplexIndex

__all__ = ["KernelOperator", "build_killed_kernel", "apply", "exit_distribution", "MATRIX_FREE_THRESHOLD"]

#: above this many stored nonzeros ``apply`` switches to the matrix-free path
MATRIX_FREE_THRESHOLD = 10**7


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """Killed kernel over the interior of a :class:`SimplexIndex`.

    Attributes
    ----------
    index : SimplexIndex
    step_probability : Fraction
        Probability ``1 / (k (k - 1))`` of each ordered move.
    adjacency : scipy.sparse.csr_matrix of int8
        ``adjacency[x, y] == 1`` iff ``y - x`` is a single move; symmetric, zero diagonal.
    exits : scipy.sparse.csr_matrix of int8
        ``exits[x, z] == 1`` iff boundary state ``z`` is one move from interior ``x``.
    move_table : ndarray of shape (interior_count, k (k - 1))
        Interior index reached by each ordered move, ``-1`` when the move exits.
        Drives the matrix-free application.
    """

    index: SimplexIndex
    step_probability: Fraction
    adjacency: sp.csr_matrix = field(repr=False)
    exits: sp.csr_matrix = field(repr=False)
    move_table: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return self.index.k

    @property
    def N(self) -> int:
        return self.index.N

    @property
    def shape(self) -> tuple[int, int]:
        n = self.index.interior_count
        return (n, n)

    @property
    def moves_per_state(self) -> int:
        return self.k * (self.k - 1)

    @property
    def matrix_free(self) -> bool:
        return self.adjacency.nnz > MATRIX_FREE_THRESHOLD

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """``K`` as a float CSR matrix."""
        return (self.adjacency.astype(np.float64) * float(self.step_probability)).tocsr()

    @cached_property
    def exit_matrix(self) -> sp.csr_matrix:
        """Transition probabilities from interior states to reachable boundary states."""
        return (self.exits.astype(np.float64) * float(self.step_probability)).tocsr()

    def row_sums(self) -> np.ndarray:
        """Interior row sums of ``K``."""
        return np.asarray(self.adjacency.sum(axis=1)).ravel() * float(self.step_probability)


def build_killed_kernel(index: SimplexIndex) -> KernelOperator:
    """Materialize the killed kernel over ``index``."""
    k = index.k
    n = index.interior_count
    states = index.interior
    p = Fraction(1, 2 * math.comb(k, 2))

    table = np.full((n, k * (k - 1)), -1, dtype=np.int64)
    adj_rows, adj_cols, exit_rows, exit_cols = [], [], [], []
    col = 0
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            targets = states.copy()
            targets[:, i] += 1
            targets[:, j] -= 1
            inner = index.lookup(targets)
            table[:, col] = inner
            col += 1
            hit = inner >= 0
            adj_rows.append(np.nonzero(hit)[0])
            adj_cols.append(inner[hit])
            # a move that leaves the interior zeroes exactly coordinate j
            out = ~hit
            bidx = index.lookup_boundary(targets[out])
            if np.any(bidx < 0):
                raise AssertionError("move left the interior without landing on the reachable boundary")
            exit_rows.append(np.nonzero(out)[0])
            exit_cols.append(bidx)

    rows = np.concatenate(adj_rows)
    cols = np.concatenate(adj_cols)
    adjacency = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    erows = np.concatenate(exit_rows)
    ecols = np.concatenate(exit_cols)
    exits = sp.csr_matrix(
        (np.ones(len(erows), dtype=np.int8), (erows, ecols)), shape=(n, index.boundary_count)
    )
    adjacency.sort_indices()
    exits.sort_indices()

    # exact mass balance: every ordered move either stays inside or exits
    inside = np.asarray(adjacency.sum(axis=1, dtype=np.int64)).ravel()
    outside = np.asarray(exits.sum(axis=1, dtype=np.int64)).ravel()
    if np.any(inside + outside != k * (k - 1)):
        raise AssertionError("kernel rows do not balance to one")
    table.setflags(write=False)
    return KernelOperator(index=index, step_probability=p, adjacency=adjacency, exits=exits, move_table=table)


def apply(op: KernelOperator, v, matrix_free: bool | None = None) -> np.ndarray:
    """Compute ``K v``.

    The explicit CSR product is used unless the operator is above
    :data:`MATRIX_FREE_THRESHOLD` nonzeros (or ``matrix_free=True``), in which
    case the neighbor table is summed column by column in a fixed order.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (op.index.interior_count,):
        raise ValidationError(f"vector length {v.shape} does not match interior_count={op.index.interior_count}")
    if matrix_free is None:
        matrix_free = op.matrix_free
    p = float(op.step_probability)
    if not matrix_free:
        return (op.adjacency @ v) * p
    padded = np.append(v, 0.0)
    acc = np.zeros_like(v)
    for col in range(op.move_table.shape[1]):
        acc += padded[op.move_table[:, col]]
    return acc * p


def exit_distribution(op: KernelOperator, y) -> list[tuple[ChipConfig, Fraction]]:
    """Boundary states reachable from interior ``y`` in one move, with their exact probabilities."""
    y = y if isinstance(y, ChipConfig) else ChipConfig(y)
    if not y.is_interior:
        raise ValidationError(f"{y.chips} is not interior")
    row = op.index.encode(y)
    lo, hi = op.exits.indptr[row], op.exits.indptr[row + 1]
    out = []
    for col, count in zip(op.exits.indices[lo:hi], op.exits.data[lo:hi]):
        out.append((op.index.decode_boundary(int(col)), op.step_probability * int(count)))
    return out
