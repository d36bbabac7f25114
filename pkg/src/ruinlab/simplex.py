"""Lattice simplex of chip configurations.

States are integer vectors ``x`` with ``sum(x) == N``.  The interior holds the
configurations where every player still has a chip; the reachable boundary
holds those where exactly one player is ruined.  Configurations with two or
more zeros can be represented but never enter a boundary index, since the
chain stops at the first ruin.

Player indices in the public API are 1-based.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from ._validation import ValidationError, as_chip_array, check_game_size, check_player

__all__ = [
    "ChipConfig",
    "Move",
    "SimplexIndex",
    "enumerate_interior",
    "neighbors",
    "interior_neighbors",
    "interior_neighbors_of_boundary",
    "distance",
    "face",
    "center_state",
]


@dataclass(frozen=True)
class ChipConfig:
    """An immutable chip distribution among ``k`` players."""

    chips: tuple[int, ...]

    def __init__(self, chips: Sequence[int]):
        arr = as_chip_array(chips)
        object.__setattr__(self, "chips", tuple(int(c) for c in arr))

    @property
    def k(self) -> int:
        return len(self.chips)

    @property
    def N(self) -> int:
        return sum(self.chips)

    @property
    def zero_count(self) -> int:
        return sum(1 for c in self.chips if c == 0)

    @property
    def is_interior(self) -> bool:
        return self.zero_count == 0

    @property
    def is_boundary(self) -> bool:
        """True on the reachable boundary (exactly one ruined player)."""
        return self.zero_count == 1

    @property
    def ruined_player(self) -> int | None:
        """1-based index of the ruined player on the reachable boundary."""
        if not self.is_boundary:
            return None
        return self.chips.index(0) + 1

    def as_array(self) -> np.ndarray:
        return np.array(self.chips, dtype=np.int64)

    def permuted(self, perm: Sequence[int]) -> "ChipConfig":
        """Return the configuration with coordinates ``chips[perm[0]], chips[perm[1]], ...``."""
        return ChipConfig([self.chips[p] for p in perm])

    def __iter__(self) -> Iterator[int]:
        return iter(self.chips)

    def __len__(self) -> int:
        return len(self.chips)

    def __getitem__(self, item):
        return self.chips[item]

    def __repr__(self) -> str:
        return f"ChipConfig{self.chips}"


class Move(NamedTuple):
    """One candidate step ``x + e_receiver - e_giver`` (players 1-based)."""

    target: tuple[int, ...]
    receiver: int
    giver: int
    valid: bool


def _positive_compositions(total: int, parts: int) -> np.ndarray:
    """All positive compositions of ``total`` into ``parts`` parts, lexicographic.

    Compositions are in bijection with ``(parts - 1)``-subsets of cut points in
    ``1..total-1``; lexicographic order of the cut points matches lexicographic
    order of the compositions.
    """
    if parts == 1:
        return np.array([[total]], dtype=np.int64) if total >= 1 else np.empty((0, 1), np.int64)
    if total < parts:
        return np.empty((0, parts), dtype=np.int64)
    count = math.comb(total - 1, parts - 1)
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(1, total), parts - 1)),
        dtype=np.int64,
        count=count * (parts - 1),
    )
    cuts = flat.reshape(count, parts - 1)
    padded = np.empty((count, parts + 1), dtype=np.int64)
    padded[:, 0] = 0
    padded[:, 1:-1] = cuts
    padded[:, -1] = total
    return np.diff(padded, axis=1)


@dataclass(frozen=True, eq=False)
class SimplexIndex:
    """Dense lexicographic indexing of the interior and the reachable boundary.

    Attributes
    ----------
    k, N : int
        Number of players and total chips.
    interior : ndarray of shape (interior_count, k)
        Interior states in lexicographic order; row ``i`` is the state with index ``i``.
    boundary : ndarray of shape (boundary_count, k)
        Reachable boundary states (exactly one zero) in lexicographic order.
    """

    k: int
    N: int
    interior: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)

    def __post_init__(self):
        if (self.N + 1) ** (self.k - 1) >= 2**62:
            raise ValidationError(f"(k={self.k}, N={self.N}) too large for 64-bit state keys")
        self.interior.setflags(write=False)
        self.boundary.setflags(write=False)

    @property
    def interior_count(self) -> int:
        return len(self.interior)

    @property
    def boundary_count(self) -> int:
        return len(self.boundary)

    @cached_property
    def _weights(self) -> np.ndarray:
        # mixed radix over the first k-1 coordinates; the last is implied by the sum
        base = self.N + 1
        return np.array([base ** (self.k - 2 - i) for i in range(self.k - 1)], dtype=np.int64)

    def keys(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=np.int64)
        return states[..., : self.k - 1] @ self._weights

    @cached_property
    def _interior_keys(self) -> np.ndarray:
        return self.keys(self.interior)

    @cached_property
    def _boundary_keys(self) -> np.ndarray:
        return self.keys(self.boundary)

    @staticmethod
    def _search(sorted_keys: np.ndarray, keys: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(sorted_keys, keys)
        pos = np.minimum(pos, max(len(sorted_keys) - 1, 0))
        found = sorted_keys[pos] == keys if len(sorted_keys) else np.zeros(keys.shape, bool)
        return np.where(found, pos, -1)

    def _valid_rows(self, states: np.ndarray) -> np.ndarray:
        return (states.sum(axis=-1) == self.N) & np.all(states >= 0, axis=-1)

    def lookup(self, states) -> np.ndarray:
        """Vectorized interior index of each row of ``states`` (``-1`` when absent)."""
        states = np.asarray(states, dtype=np.int64)
        out = self._search(self._interior_keys, self.keys(np.clip(states, 0, None)))
        ok = self._valid_rows(states) & np.all(states > 0, axis=-1)
        return np.where(ok, out, -1)

    def lookup_boundary(self, states) -> np.ndarray:
        """Vectorized boundary index of each row of ``states`` (``-1`` when absent)."""
        states = np.asarray(states, dtype=np.int64)
        out = self._search(self._boundary_keys, self.keys(np.clip(states, 0, None)))
        ok = self._valid_rows(states) & ((states == 0).sum(axis=-1) == 1)
        return np.where(ok, out, -1)

    def _coerce(self, x) -> np.ndarray:
        arr = x.as_array() if isinstance(x, ChipConfig) else as_chip_array(x)
        if len(arr) != self.k or arr.sum() != self.N:
            raise ValidationError(f"{tuple(arr)} is not a configuration with k={self.k}, N={self.N}")
        return arr

    def encode(self, x) -> int:
        """Interior index of ``x``; raises if ``x`` is not interior."""
        arr = self._coerce(x)
        idx = int(self.lookup(arr[None, :])[0])
        if idx < 0:
            raise ValidationError(f"{tuple(arr)} is not an interior state")
        return idx

    def decode(self, i: int) -> ChipConfig:
        return ChipConfig(self.interior[i])

    def encode_boundary(self, z) -> int:
        arr = self._coerce(z)
        idx = int(self.lookup_boundary(arr[None, :])[0])
        if idx < 0:
            raise ValidationError(f"{tuple(arr)} is not a reachable boundary state")
        return idx

    def decode_boundary(self, j: int) -> ChipConfig:
        return ChipConfig(self.boundary[j])

    def face_mask(self, i: int) -> np.ndarray:
        """Boolean mask over the boundary index selecting states where player ``i`` is ruined."""
        i = check_player(i, self.k)
        return self.boundary[:, i - 1] == 0

    def __repr__(self) -> str:
        return (
            f"SimplexIndex(k={self.k}, N={self.N}, interior_count={self.interior_count}, "
            f"boundary_count={self.boundary_count})"
        )


def enumerate_interior(k: int, N: int) -> SimplexIndex:
    """Index all interior states (and the reachable boundary) of the ``k``-player, ``N``-chip simplex.

    >>> idx = enumerate_interior(3, 4)
    >>> idx.interior.tolist()
    [[1, 1, 2], [1, 2, 1], [2, 1, 1]]
    """
    k, N = check_game_size(k, N)
    interior = _positive_compositions(N, k)

    pieces = []
    rest = _positive_compositions(N, k - 1)
    for i in range(k):
        block = np.zeros((len(rest), k), dtype=np.int64)
        block[:, np.arange(k) != i] = rest
        pieces.append(block)
    boundary = np.concatenate(pieces, axis=0)
    # fixed coordinate sum: lexicographic order == order of the leading k-1 coordinates
    order = np.lexsort(boundary[:, : k - 1].T[::-1])
    return SimplexIndex(k=k, N=N, interior=interior, boundary=np.ascontiguousarray(boundary[order]))


def neighbors(x) -> list[Move]:
    """All ``2 * C(k, 2)`` moves ``x +/- (e_i - e_j)``, with moves leaving the orthant flagged invalid."""
    arr = x.as_array() if isinstance(x, ChipConfig) else as_chip_array(x)
    k = len(arr)
    moves = []
    for i, j in itertools.combinations(range(k), 2):
        for receiver, giver in ((i, j), (j, i)):
            t = arr.copy()
            t[receiver] += 1
            t[giver] -= 1
            moves.append(Move(tuple(int(c) for c in t), receiver + 1, giver + 1, bool(np.all(t >= 0))))
    return moves


def interior_neighbors(x) -> list[ChipConfig]:
    return [ChipConfig(m.target) for m in neighbors(x) if m.valid and min(m.target) > 0]


def interior_neighbors_of_boundary(z) -> list[ChipConfig]:
    """Interior states one move away from the reachable boundary state ``z``.

    The ruined coordinate must receive the chip, so the neighbors are
    ``z + e_i - e_b`` for every other player ``b`` holding at least two chips.
    """
    z = z if isinstance(z, ChipConfig) else ChipConfig(z)
    if z.zero_count != 1:
        raise ValidationError(f"{z.chips} must have exactly one zero coordinate")
    i = z.chips.index(0)
    out = []
    for b, c in enumerate(z.chips):
        if b != i and c >= 2:
            y = list(z.chips)
            y[i] += 1
            y[b] -= 1
            out.append(ChipConfig(y))
    return sorted(out, key=lambda c: c.chips)


def distance(a, b) -> float:
    """Euclidean distance between two configurations of the same game."""
    a = a.as_array() if isinstance(a, ChipConfig) else as_chip_array(a)
    b = b.as_array() if isinstance(b, ChipConfig) else as_chip_array(b)
    if len(a) != len(b) or a.sum() != b.sum():
        raise ValidationError("configurations belong to different (k, N)")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def face(i: int, index: SimplexIndex) -> list[ChipConfig]:
    """Reachable boundary states where player ``i`` (1-based) is ruined."""
    return [ChipConfig(z) for z in index.boundary[index.face_mask(i)]]


def center_state(index: SimplexIndex) -> ChipConfig:
    """Lexicographically first interior state closest to ``(N/k, ..., N/k)``.

    Squared distances are compared exactly as ``sum((k*x_i - N)**2)``.
    """
    d2 = np.sum((index.k * index.interior - index.N) ** 2, axis=1)
    return index.decode(int(np.argmin(d2)))

