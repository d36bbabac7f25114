"""Input validation helpers shared by the public entry points."""

from __future__ import annotations

import numbers
from typing import Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when an argument violates a documented precondition."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver stops before reaching its tolerance.

    The last residual and iteration count are kept on the exception so that
    callers (and the CLI) can report how close the solver got.
    """

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


def check_int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_game_size(k, N) -> tuple[int, int]:
    """Validate the (players, chips) pair used to build a lattice simplex."""
    k = check_int(k, "k", minimum=2)
    N = check_int(N, "N")
    if N < k:
        raise ValidationError(f"need N >= k to have interior states, got k={k}, N={N}")
    return k, N


def check_player(i, k: int) -> int:
    """Player indices are 1-based throughout the public API."""
    i = check_int(i, "player index")
    if not 1 <= i <= k:
        raise ValidationError(f"player index must lie in 1..{k}, got {i}")
    return i


def as_chip_array(chips: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(chips)
    if arr.ndim != 1 or arr.size < 2:
        raise ValidationError(f"chip configuration must be a flat sequence of length >= 2, got {chips!r}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValidationError(f"chip counts must be integers, got {chips!r}")
    arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise ValidationError(f"chip counts must be nonnegative, got {chips!r}")
    return arr


def check_state_array(X, k: int | None = None) -> np.ndarray:
    """Coerce a batch of chip configurations to an ``(m, k)`` int64 array."""
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValidationError(f"expected a 2-D array of states, got shape {arr.shape}")
    if k is not None and arr.shape[1] != k:
        raise ValidationError(f"expected states with {k} coordinates, got {arr.shape[1]}")
    if np.any(arr < 0):
        raise ValidationError("chip counts must be nonnegative")
    return arr.astype(np.int64)


def parse_chip_list(text: str) -> tuple[int, ...]:
    """Parse ``"1,1,2"`` into ``(1, 1, 2)``."""
    try:
        chips = tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok)
    except ValueError as exc:
        raise ValidationError(f"could not parse chip list {text!r}") from exc
    as_chip_array(chips)
    return chips
