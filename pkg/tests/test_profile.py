import itertools
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruinlab import ValidationError
from ruinlab.absorption import absorption_row, face_hit_probability
from ruinlab.analysis import ratio_report, spread_is_stable, successive_exponents
from ruinlab.kernel import build_killed_kernel
from ruinlab.profile import (
    BETA,
    NAIVE_SUBDOMINANT_COEFFICIENT,
    CaseLabel,
    ProfileConstants,
    alpha_from_lambda,
    harmonic_profile_k3,
    harmonic_profile_k4,
    hitting_estimate,
    phi0_formula_k3,
    phi0_formula_tau,
    power_scale_exponent,
    read_constants,
    subdominant_exponent,
    write_constants,
)
from ruinlab.simplex import distance, enumerate_interior

C4 = ProfileConstants.default(4)


def test_alpha_examples():
    assert alpha_from_lambda(3, 9) == 3.0
    assert alpha_from_lambda(4, 38.447) == pytest.approx(5.7207, abs=5e-5)
    assert alpha_from_lambda(4, 1e-14) < 1e-13
    lams = np.linspace(0.5, 60, 50)
    alphas = [alpha_from_lambda(4, x) for x in lams]
    assert all(b > a for a, b in zip(alphas, alphas[1:]))
    with pytest.raises(ValidationError):
        alpha_from_lambda(4, 0)
    with pytest.raises(ValidationError):
        alpha_from_lambda(2, 5)


def test_constants_invariants(caplog):
    assert 2.55 < BETA < 2.554
    m = 0.5
    assert C4.alpha_k == math.sqrt(m * m + C4.lambda_k) - m
    with caplog.at_level(logging.INFO, logger="ruinlab.profile"):
        ProfileConstants.default(4)
    assert "differs" in caplog.text
    assert ProfileConstants.default(3).alpha_k == 3.0
    with pytest.raises(ValidationError):
        ProfileConstants.default(5)


def test_constants_file_roundtrip(tmp_path):
    p = tmp_path / "c.txt"
    const = ProfileConstants.from_lambda(4, 38.44689874635274, "computed-by-sphereig")
    write_constants(p, const)
    assert read_constants(p) == const
    p.write_text(p.read_text().replace("alpha_k=5.72", "alpha_k=5.68"))
    with pytest.raises(ValidationError):
        read_constants(p)
    p.write_text("k=4\nlambda_k=38\n")
    with pytest.raises(ValidationError):
        read_constants(p)


def test_phi0_formula_k3_examples():
    N = 1000
    assert phi0_formula_k3((1, 1, N - 2)) == pytest.approx(2 * (N - 1) ** 2 * (N - 2) / N**7, rel=1e-14)
    assert phi0_formula_k3((1, 1, N - 2)) * N**4 == pytest.approx(2, rel=1e-2)
    assert phi0_formula_k3((10, 10, 10)) == pytest.approx(8 / 3**6 / 30, rel=1e-14)
    with pytest.raises(ValidationError):
        phi0_formula_k3((1, 2, 3, 4))


def test_k3_profile_matches_formula_near_tip():
    # close to the tip x3 ~ N the formula reduces to N^-4 (x1+x2) x1 x2
    N = 10**6
    x = (3, 5, N - 8)
    assert phi0_formula_k3(x) * N**4 == pytest.approx(harmonic_profile_k3(x), rel=1e-4)


@settings(max_examples=80, deadline=None)
@given(
    st.tuples(*[st.floats(0.01, 100) for _ in range(3)]),
    st.floats(0.01, 1000),
)
def test_k4_profile_homogeneous(x, c):
    h = harmonic_profile_k4(x, C4)
    assert harmonic_profile_k4(tuple(c * v for v in x), C4) == pytest.approx(c**C4.alpha_k * h, rel=1e-12)


def test_k4_profile_symmetric():
    x = (1.5, 2.0, 7.25)
    ref = harmonic_profile_k4(x, C4)
    for perm in itertools.permutations(x):
        assert harmonic_profile_k4(perm, C4) == pytest.approx(ref, rel=1e-14)
    # at (1,1,1): 3^(alpha-3beta+3) * 8^(beta-2)
    assert harmonic_profile_k4((1, 1, 1), C4) == pytest.approx(
        3**C4.edge_exponent * 8 ** (BETA - 2), rel=1e-14
    )
    with pytest.raises(ValidationError):
        harmonic_profile_k4((0, 1, 1), C4)


def test_tau_formula_symmetry_and_center_scaling():
    x = (2, 3, 5, 14)
    ref = phi0_formula_tau(x, C4)
    for perm in itertools.permutations(x):
        assert phi0_formula_tau(perm, C4) == pytest.approx(ref, rel=1e-13)
    scaled = [phi0_formula_tau((n, n, n, n), C4) * (4 * n) ** 1.5 for n in (3, 10, 50, 400)]
    np.testing.assert_allclose(scaled, scaled[0], rtol=1e-10)


def test_tau_formula_reduces_to_profile_in_corner():
    spreads = []
    for N in (16, 24, 32, 48):
        states = [x for x in enumerate_interior(4, N).interior if x[3] >= N / 4]
        values = {tuple(x): phi0_formula_tau(x, C4) for x in states}
        rep = ratio_report(values, lambda x: N ** -(1.5 + C4.alpha_k) * harmonic_profile_k4(x, C4))
        spreads.append((N, rep.spread))
    assert spread_is_stable(spreads)


def test_hitting_case1_dominant_start():
    N = 24
    s = (1, 1, 1, N - 3)
    est = hitting_estimate(s, (6, 7, 11, 0), C4)
    assert est.case is CaseLabel.CASE1
    # player 3 holds the most chips at exit, so z* is the second coordinate after permutation
    z1, zs = 6, 7
    expected = N ** (-1 - 2 * C4.alpha_k) * 3**C4.edge_exponent * 8 ** (BETA - 2) * (z1 + zs) ** (
        C4.alpha_k - 2 * BETA + 1
    ) * (z1 * zs) ** (BETA - 1)
    assert est.value == pytest.approx(expected, rel=1e-12)


def test_hitting_cases_and_distance():
    N = 24
    s = (1, 1, 1, N - 3)
    for z in enumerate_interior(4, N).boundary:
        est = hitting_estimate(s, z, C4)
        if est.case is CaseLabel.CASE1:
            assert distance(s, z) >= N / 4
    assert hitting_estimate(s, (0, 2, 2, 20), C4).case is CaseLabel.CASE3
    both = hitting_estimate((1, 1, 1, 21), (0, 9, 1, 14), C4, far_fraction=0.25)
    assert both.case is CaseLabel.CASE2 and both.case3_value is not None and both.value > 0
    assert hitting_estimate((6, 6, 6, 6), (8, 0, 8, 8), C4).case is CaseLabel.OUTSIDE


def test_hitting_errors():
    with pytest.raises(ValidationError):
        hitting_estimate((1, 1, 1, 9), (0, 1, 1, 10), ProfileConstants.default(3))
    with pytest.raises(ValidationError):
        hitting_estimate((0, 2, 1, 9), (0, 1, 1, 10), C4)
    with pytest.raises(ValidationError):
        hitting_estimate((1, 1, 1, 9), (0, 0, 2, 10), C4)


@pytest.mark.parametrize("case", [CaseLabel.CASE1, CaseLabel.CASE3])
def test_hitting_estimate_bounded_against_exact(case):
    spreads = []
    for N in (16, 20, 24):
        s = (1, 1, 1, N - 3)
        row = absorption_row(build_killed_kernel(enumerate_interior(4, N)), s)
        exact, est = {}, {}
        for z, p in row.as_dict().items():
            h = hitting_estimate(s, z, C4)
            if h.case is case and p > 0:
                exact[z], est[z] = p, h.value
        spreads.append((N, ratio_report(exact, est).spread))
    assert spread_is_stable(spreads)


def test_power_scale_exponent():
    assert power_scale_exponent((0, 0, 0)) == C4.alpha_k
    assert power_scale_exponent((0.3, 0.3, 0.3)) == pytest.approx(C4.alpha_k * 0.7, rel=1e-14)
    e = 0.4
    assert power_scale_exponent((e / 2, e / 2, e)) == pytest.approx(C4.alpha_k * (1 - e) + e * BETA / 2, rel=1e-14)
    with pytest.raises(ValidationError):
        power_scale_exponent((0.5, 0.2, 0.6))
    with pytest.raises(ValidationError):
        power_scale_exponent((0, 0, 1))


def test_subdominant_exponent():
    assert subdominant_exponent(0.5) == pytest.approx(1.276, abs=1e-3)
    assert subdominant_exponent(0.0) == 0.0
    assert subdominant_exponent() == BETA
    with pytest.raises(ValidationError):
        subdominant_exponent(1.5)


@pytest.mark.slow
def test_subdominant_trend():
    points = []
    for r in (4, 6, 8, 10):
        N = r * r
        row = absorption_row(build_killed_kernel(enumerate_interior(4, N)), (1, 1, r, N - 2 - r))
        points.append((N, face_hit_probability(row, 3)))
    slopes = [s for _, s in successive_exponents(points)]
    assert all(b < a for a, b in zip(slopes, slopes[1:]))
    target, naive = -subdominant_exponent(0.5), -NAIVE_SUBDOMINANT_COEFFICIENT * 0.5
    assert abs(slopes[-1] - target) < abs(slopes[-1] - naive)
