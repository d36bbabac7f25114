"""Acceptance checks run by ``ruinlab verify`` and the acceptance test module.

Each check returns a :class:`Check` with a pass flag, the measured numbers
and its wall time.  Oracles used here (dense solves, exact fractions) are
built independently of the sparse code paths they verify.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .absorption import absorption_row, face_hit_probability
from .analysis import fit_power_law, ratio_report, spread_is_stable, successive_exponents
from .io import write_csv
from .kernel import build_killed_kernel, exit_distribution
from .montecarlo import simulate
from .profile import ProfileConstants, alpha_from_lambda, phi0_formula_k3, phi0_formula_tau
from .simplex import enumerate_interior
from .spectral import center_value, perron_frobenius
from .sphereig import derive_alpha, dirichlet_lambda, octant_triangle, tetrahedral_triangle

__all__ = ["Check", "CRITERIA", "run_all", "dense_exit_law"]

MC_SEED = 20240601


@dataclass
class Check:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "seconds": self.seconds, "details": self.details}

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  ({self.seconds:.1f}s)"


def _timed(name: str):
    def wrap(fn: Callable[..., tuple[bool, dict]]):
        def run(quick: bool = False) -> Check:
            t0 = time.perf_counter()
            passed, details = fn(quick)
            return Check(name, bool(passed), details, time.perf_counter() - t0)

        run.__name__ = fn.__name__
        run.check_name = name
        return run

    return wrap


def _pf(k: int, N: int):
    index = enumerate_interior(k, N)
    return index, perron_frobenius(build_killed_kernel(index))


def _phi_map(index, pair) -> dict:
    return {tuple(int(c) for c in s): float(v) for s, v in zip(index.interior, pair.phi0)}


def dense_exit_law(k: int, N: int, start) -> dict[tuple[int, ...], float]:
    """Exit law from a dense fundamental-matrix solve over brute-force enumerated states."""
    states = [x for x in itertools.product(range(N + 1), repeat=k) if sum(x) == N]
    interior = [x for x in states if min(x) > 0]
    boundary = [x for x in states if x.count(0) == 1]
    ii = {x: n for n, x in enumerate(interior)}
    bi = {x: n for n, x in enumerate(boundary)}
    Q = np.zeros((len(interior), len(interior)))
    R = np.zeros((len(interior), len(boundary)))
    p = 1.0 / (k * (k - 1))
    for x in interior:
        for i, j in itertools.permutations(range(k), 2):
            y = list(x)
            y[i] += 1
            y[j] -= 1
            y = tuple(y)
            if y in ii:
                Q[ii[x], ii[y]] += p
            else:
                R[ii[x], bi[y]] += p
    B = np.linalg.solve(np.eye(len(interior)) - Q, R)
    row = B[ii[tuple(start)]]
    return {z: float(row[bi[z]]) for z in boundary}


@_timed("1 spectral-gap law (k=3 slope of 1-beta0)")
def check_spectral_gap(quick: bool) -> tuple[bool, dict]:
    t0 = time.perf_counter()
    Ns = list(range(12, 49, 4))
    points = [(N, _pf(3, N)[1].gap) for N in Ns]
    fit = fit_power_law(points)
    elapsed = time.perf_counter() - t0
    ok = -2.1 <= fit.slope <= -1.9 and elapsed <= 120
    return ok, {"N": Ns, "gap": [g for _, g in points], "fit": fit.as_dict(), "runtime_s": elapsed}


@_timed("2 center-value law (phi0(o_N) N^((k-1)/2) spread)")
def check_center_value(quick: bool) -> tuple[bool, dict]:
    out = {}
    ok = True
    for k, Ns, limit in ((3, range(12, 49, 4), 3.0), (4, range(12, 33, 4), 5.0)):
        scaled = []
        for N in Ns:
            index, pair = _pf(k, N)
            scaled.append(center_value(pair, index) * N ** ((k - 1) / 2))
        spread = max(scaled) / min(scaled)
        ok &= spread <= limit
        out[f"k{k}"] = {"N": list(Ns), "scaled_center": scaled, "spread": spread, "limit": limit}
    return ok, out


@_timed("3 k=3 closed-form profile ratio spread")
def check_k3_formula(quick: bool) -> tuple[bool, dict]:
    spreads = {}
    for N in (24, 36, 48):
        index, pair = _pf(3, N)
        spreads[N] = ratio_report(_phi_map(index, pair), phi0_formula_k3, label=f"interior N={N}").spread
    ok = spreads[36] <= 10 and spreads[48] <= 2 * spreads[24]
    return ok, {"spread": spreads}


@_timed("4 k=4 tau-product comparator on corner region")
def check_k4_formula(quick: bool) -> tuple[bool, dict]:
    const = ProfileConstants.default(4)
    reports = {}
    for N in (16, 20, 24):
        index, pair = _pf(4, N)
        reports[N] = ratio_report(
            _phi_map(index, pair),
            lambda s: phi0_formula_tau(s, const),
            lambda s, N=N: s[3] >= N / 4,
            label=f"x4 >= N/4, N={N}",
        )
    spreads = [(N, r.spread) for N, r in reports.items()]
    ok = reports[24].spread <= 1e3 and spread_is_stable(spreads)
    return ok, {"reports": {N: r.as_dict() for N, r in reports.items()}, "constants": const.as_dict()}


def _dominant_sweep(k: int, Ns) -> list[tuple[int, float]]:
    points = []
    for N in Ns:
        op = build_killed_kernel(enumerate_interior(k, N))
        s = (1,) * (k - 1) + (N - k + 1,)
        points.append((N, face_hit_probability(absorption_row(op, s), k)))
    return points


@_timed("5 dominant-player exponent (local slopes)")
def check_dominant_exponent(quick: bool) -> tuple[bool, dict]:
    p4 = _dominant_sweep(4, range(8, 33, 4))
    a4 = [-s for _, s in successive_exponents(p4)]
    p3 = _dominant_sweep(3, range(8, 49, 4))
    a3 = [-s for _, s in successive_exponents(p3)]
    mono = all(b > a for a, b in zip(a4, a4[1:]))
    ok = mono and 4.8 <= a4[-1] <= 6.2 and 2.7 <= a3[-1] <= 3.2
    return ok, {
        "k4": {"points": p4, "local_exponents": a4, "monotone": mono},
        "k3": {"points": p3, "local_exponents": a3},
    }


@_timed("6 absorption correctness (mass, dense oracle, Monte Carlo)")
def check_absorption(quick: bool) -> tuple[bool, dict]:
    details: dict = {}
    worst_mass = 0.0
    worst_dense = 0.0
    for k, N in ((3, 9), (4, 12)):
        index = enumerate_interior(k, N)
        op = build_killed_kernel(index)
        starts = index.interior if index.interior_count <= 200 else index.interior[:: max(1, index.interior_count // 50)]
        for s in starts:
            row = absorption_row(op, s)
            worst_mass = max(worst_mass, abs(row.total - 1.0))
            if index.interior_count <= 200 and (not quick or k == 3):
                oracle = dense_exit_law(k, N, tuple(int(c) for c in s))
                got = row.as_dict()
                worst_dense = max(worst_dense, max(abs(got[z] - v) for z, v in oracle.items()))
    for k, N in ((3, 48), (4, 32)):
        op = build_killed_kernel(enumerate_interior(k, N))
        row = absorption_row(op, (1,) * (k - 1) + (N - k + 1,))
        worst_mass = max(worst_mass, abs(row.total - 1.0))
    details["max_mass_error"] = worst_mass
    details["max_dense_error"] = worst_dense

    runs = 200_000 if quick else 1_000_000
    worst_z = 0.0
    # full boundary law for k=3, N=9
    s3 = (2, 3, 4)
    exact = absorption_row(build_killed_kernel(enumerate_interior(3, 9)), s3).as_dict()
    mc = simulate(s3, runs, seed=MC_SEED, n_jobs=None)
    for z, p in exact.items():
        if p > 0:
            f = mc.boundary_counts.get(z, 0) / runs
            worst_z = max(worst_z, abs(f - p) / math.sqrt(p * (1 - p) / runs))
    # face probabilities for k=4, N=12
    s4 = (1, 1, 1, 9)
    row4 = absorption_row(build_killed_kernel(enumerate_interior(4, 12)), s4)
    mc4 = simulate(s4, runs, seed=MC_SEED, n_jobs=None, record_boundary=False)
    for i in range(1, 5):
        p = face_hit_probability(row4, i)
        f = mc4.face_counts[i - 1] / runs
        worst_z = max(worst_z, abs(f - p) / math.sqrt(p * (1 - p) / runs))
    details.update({"mc_runs": runs, "mc_seed": MC_SEED, "max_mc_sigma": worst_z})
    ok = worst_mass <= 1e-10 and worst_dense <= 1e-9 and worst_z <= 4.0
    return ok, details


@_timed("7 spherical Dirichlet eigenvalue (octant, tetrahedral)")
def check_sphere(quick: bool) -> tuple[bool, dict]:
    t0 = time.perf_counter()
    levels = 6
    octant = dirichlet_lambda(octant_triangle(), levels=levels)
    tetra = dirichlet_lambda(tetrahedral_triangle(), levels=levels)
    alpha = derive_alpha(tetra, 4)
    elapsed = time.perf_counter() - t0
    order = tetra.convergence_order
    ok = (
        abs(octant.extrapolated_lambda - 12.0) <= 0.005 * 12.0
        and 37.5 <= tetra.extrapolated_lambda <= 39.5
        and order is not None
        and 1.7 <= order <= 2.3
        and 5.55 <= alpha <= 5.85
        and elapsed <= 600
    )
    return ok, {
        "octant": {"extrapolated_lambda": octant.extrapolated_lambda, "levels": octant.level_lambdas,
                   "order": octant.convergence_order},
        "tetra": {"extrapolated_lambda": tetra.extrapolated_lambda, "levels": tetra.level_lambdas, "order": order},
        "derived_alpha": alpha,
        "alpha_at_reference_lambda": alpha_from_lambda(4, 38.447),
        "runtime_s": elapsed,
    }


@_timed("8 exact small-case oracles")
def check_small_cases(quick: bool) -> tuple[bool, dict]:
    _, pair = _pf(3, 4)
    beta_err = abs(pair.beta0 - 1.0 / 3.0)
    op4 = build_killed_kernel(enumerate_interior(3, 4))
    p = absorption_row(op4, (1, 1, 2)).as_dict()[(0, 1, 3)]
    p_err = abs(p - 5.0 / 28.0)
    law = exit_distribution(build_killed_kernel(enumerate_interior(3, 3)), (1, 1, 1))
    uniform = len(law) == 6 and all(q == Fraction(1, 6) for _, q in law)
    ok = beta_err <= 1e-12 and p_err <= 1e-12 and uniform
    return ok, {"beta0_error": beta_err, "p013_error": p_err, "one_step_uniform": uniform}


@_timed("9 symmetry and determinism")
def check_symmetry(quick: bool) -> tuple[bool, dict]:
    worst = 0.0
    for k, N in ((3, 15), (4, 12)):
        index, pair = _pf(k, N)
        for perm in itertools.permutations(range(k)):
            rows = index.lookup(index.interior[:, perm])
            worst = max(worst, float(np.max(np.abs(pair.phi0[rows] - pair.phi0))))

    def csv_text(n_jobs):
        st = simulate((2, 3, 4), 50_000, seed=7, chunk_size=10_000, n_jobs=n_jobs)
        return write_csv(None, "boundary-frequencies", ["z", "count"],
                         ((" ".join(map(str, z)), c) for z, c in st.boundary_counts.items())).encode()

    first = csv_text(1)
    deterministic = first == csv_text(1) and first == csv_text(4)

    index, pair = _pf(3, 24)
    exact = _phi_map(index, pair)
    base = ratio_report(exact, phi0_formula_k3).spread
    scale_err = max(
        abs(ratio_report(exact, lambda s, c=c: c * phi0_formula_k3(s)).spread / base - 1.0)
        for c in (1e-6, 0.37, 11.0, 2.5e8)
    )
    ok = worst <= 1e-10 and deterministic and scale_err <= 1e-13
    return ok, {"max_permutation_error": worst, "mc_byte_identical": deterministic,
                "scaling_relative_error": scale_err}


CRITERIA = [
    check_spectral_gap,
    check_center_value,
    check_k3_formula,
    check_k4_formula,
    check_dominant_exponent,
    check_absorption,
    check_sphere,
    check_small_cases,
    check_symmetry,
]


def run_all(quick: bool = False, only: list[int] | None = None) -> list[Check]:
    """Run the acceptance checks (1-based numbers in ``only``) in order."""
    selected = CRITERIA if only is None else [CRITERIA[i - 1] for i in only]
    return [check(quick) for check in selected]
