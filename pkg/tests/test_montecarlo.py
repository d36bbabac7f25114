import math

import numpy as np
import pytest

from ruinlab import ValidationError
from ruinlab.absorption import absorption_row, face_hit_probability
from ruinlab.kernel import build_killed_kernel
from ruinlab.montecarlo import McStats, estimate_face_probability, simulate
from ruinlab.simplex import ChipConfig, enumerate_interior

RUNS = 1_000_000


def _within(count, p, runs, sigmas):
    return abs(count / runs - p) <= sigmas * math.sqrt(p * (1 - p) / runs)


def test_one_step_games():
    st = simulate((1, 1, 1), RUNS, seed=11)
    assert st.mean_tau == 1.0
    assert len(st.boundary_counts) == 6
    assert all(_within(c, 1 / 6, RUNS, 4) for c in st.boundary_counts.values())


def test_three_state_case_matches_exact():
    st = simulate((1, 1, 2), RUNS, seed=5)
    assert _within(st.boundary_counts[(0, 1, 3)], 5 / 28, RUNS, 4)


def test_two_player_ruin():
    st = simulate((3, 7), RUNS, seed=2)
    assert _within(st.face_counts[0], 0.7, RUNS, 4)


def test_four_player_face_matches_exact():
    st = simulate((1, 1, 1, 9), RUNS, seed=99, n_jobs=None, record_boundary=False)
    row = absorption_row(build_killed_kernel(enumerate_interior(4, 12)), (1, 1, 1, 9))
    p_hat, se = estimate_face_probability(st, 4)
    assert abs(p_hat - face_hit_probability(row, 4)) <= 3 * math.sqrt(
        face_hit_probability(row, 4) * (1 - face_hit_probability(row, 4)) / RUNS
    )
    assert se > 0


def test_tallies_consistent():
    st = simulate((2, 3, 4), 20_000, seed=1, chunk_size=3_000)
    assert st.face_counts.sum() == st.runs
    assert sum(st.boundary_counts.values()) == st.runs
    assert all(ChipConfig(z).is_boundary for z in st.boundary_counts)
    for i in range(3):
        assert st.face_counts[i] == sum(c for z, c in st.boundary_counts.items() if z[i] == 0)


def test_determinism_independent_of_threads():
    a = simulate((2, 2, 3, 3), 30_000, seed=123, chunk_size=4_000, n_jobs=1)
    b = simulate((2, 2, 3, 3), 30_000, seed=123, chunk_size=4_000, n_jobs=4)
    assert a.boundary_counts == b.boundary_counts
    assert np.array_equal(a.face_counts, b.face_counts)
    assert a.total_tau == b.total_tau
    c = simulate((2, 2, 3, 3), 30_000, seed=124, chunk_size=4_000)
    assert c.boundary_counts != a.boundary_counts


def test_mean_tau_grows_with_n():
    taus = [simulate((N // 3, N // 3, N - 2 * (N // 3)), 5_000, seed=0).mean_tau for N in (3, 6, 9, 12)]
    assert all(b > a for a, b in zip(taus, taus[1:]))


def test_estimate_face_probability_formula():
    st = McStats(ChipConfig((1, 1, 1)), 1_000_000, 0, 1, np.array([250_000, 750_000, 0]))
    p, se = estimate_face_probability(st, 1)
    assert p == 0.25 and se == pytest.approx(4.33e-4, rel=1e-3)
    assert estimate_face_probability(st, 3) == (0.0, 0.0)
    with pytest.raises(ValidationError):
        estimate_face_probability(st, 4)


@pytest.mark.parametrize(
    "kwargs",
    [dict(s=(0, 2, 2), runs=10, seed=0), dict(s=(1, 2, 2), runs=0, seed=0), dict(s=(1, 2, 2), runs=5, seed=-1)],
)
def test_validation(kwargs):
    with pytest.raises(ValidationError):
        simulate(**kwargs)
