"""Seeded simulation of the chip-exchange game.

Runs are split into fixed-size chunks.  Chunk ``c`` draws from its own
``numpy`` PCG64 stream seeded by ``SeedSequence(seed, spawn_key=(c,))``, so
the merged tallies depend only on ``(seed, runs, chunk_size)`` and never on
how many workers process the chunks.
"""

from __future__ import annotations

import itertools
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import ValidationError, check_int, check_player
from .simplex import ChipConfig

__all__ = ["McStats", "simulate", "estimate_face_probability", "DEFAULT_CHUNK_SIZE"]

DEFAULT_CHUNK_SIZE = 100_000


@dataclass(frozen=True, eq=False)
class McStats:
    """Merged tallies of terminal states.

    ``face_counts[i]`` counts runs where player ``i + 1`` was ruined.
    ``boundary_counts`` maps terminal states to counts (empty when not recorded).
    """

    start: ChipConfig
    runs: int
    seed: int
    chunk_size: int
    face_counts: np.ndarray
    boundary_counts: dict = field(default_factory=dict)
    total_tau: int = 0

    @property
    def mean_tau(self) -> float:
        return self.total_tau / self.runs

    def frequencies(self) -> dict[tuple[int, ...], float]:
        return {z: c / self.runs for z, c in self.boundary_counts.items()}


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _run_chunk(start: np.ndarray, runs: int, seed: int, chunk: int, record_boundary: bool):
    rng = _chunk_rng(seed, chunk)
    k = len(start)
    pairs = np.array(list(itertools.combinations(range(k), 2)), dtype=np.int64)
    npairs = len(pairs)

    state = np.tile(start, (runs, 1))
    alive = np.arange(runs)
    tau = np.zeros(runs, dtype=np.int64)
    while alive.size:
        m = alive.size
        pick = pairs[rng.integers(0, npairs, size=m)]
        heads = rng.integers(0, 2, size=m).astype(bool)
        receiver = np.where(heads, pick[:, 0], pick[:, 1])
        giver = np.where(heads, pick[:, 1], pick[:, 0])
        state[alive, receiver] += 1
        state[alive, giver] -= 1
        tau[alive] += 1
        # only the giver can have reached zero on this step
        alive = alive[state[alive, giver] != 0]

    ruined = np.argmin(state, axis=1)
    face_counts = np.bincount(ruined, minlength=k).astype(np.int64)
    boundary = Counter()
    if record_boundary:
        uniq, counts = np.unique(state, axis=0, return_counts=True)
        boundary.update({tuple(int(c) for c in row): int(n) for row, n in zip(uniq, counts)})
    return face_counts, boundary, int(tau.sum())


def simulate(
    s,
    runs: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    n_jobs: int | None = 1,
    record_boundary: bool = True,
) -> McStats:
    """Play ``runs`` independent games from interior state ``s``.

    Each step picks an unordered pair uniformly among the ``C(k, 2)`` pairs
    and a fair coin decides which of the two hands a chip to the other; a game
    stops as soon as some player holds zero chips.

    Parameters
    ----------
    s : ChipConfig or sequence of int
    runs : int
        Number of games, at least 1.
    seed : int
        Master seed (64-bit).
    chunk_size : int
        Games per RNG stream; part of the reproducibility contract.
    n_jobs : int or None
        Worker threads; ``None`` means ``os.cpu_count()``.  Does not affect results.
    record_boundary : bool
        Keep the full terminal-state histogram.
    """
    s = s if isinstance(s, ChipConfig) else ChipConfig(s)
    if not s.is_interior:
        raise ValidationError(f"start not interior: {s.chips}")
    runs = check_int(runs, "runs", minimum=1)
    seed = check_int(seed, "seed", minimum=0)
    chunk_size = check_int(chunk_size, "chunk_size", minimum=1)
    if n_jobs is None:
        n_jobs = os.cpu_count() or 1
    n_jobs = check_int(n_jobs, "n_jobs", minimum=1)

    start = s.as_array()
    n_chunks = math.ceil(runs / chunk_size)
    sizes = [min(chunk_size, runs - c * chunk_size) for c in range(n_chunks)]
    jobs = [(start, sizes[c], seed, c, record_boundary) for c in range(n_chunks)]
    if n_jobs == 1 or n_chunks == 1:
        results = [_run_chunk(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(lambda job: _run_chunk(*job), jobs))

    face_counts = np.zeros(s.k, dtype=np.int64)
    boundary = Counter()
    total_tau = 0
    for fc, bc, tt in results:
        face_counts += fc
        boundary.update(bc)
        total_tau += tt
    return McStats(
        start=s,
        runs=runs,
        seed=seed,
        chunk_size=chunk_size,
        face_counts=face_counts,
        boundary_counts=dict(sorted(boundary.items())),
        total_tau=total_tau,
    )


def estimate_face_probability(stats: McStats, i: int) -> tuple[float, float]:
    """Binomial point estimate and standard error for face ``i`` (1-based)."""
    i = check_player(i, stats.start.k)
    p = stats.face_counts[i - 1] / stats.runs
    return float(p), float(math.sqrt(p * (1.0 - p) / stats.runs))
