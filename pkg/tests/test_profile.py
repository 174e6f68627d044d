import numpy as np
import pytest

import relshock as rs
from relshock.calculus import make_pair
from relshock.errors import (ConvexityViolation, DegenerateShock,
                             InsufficientDomain)
from relshock.profile import normalize_positive_speed, rankine_hugoniot


def test_rankine_hugoniot_burgers(burgers_pair):
    assert rankine_hugoniot(burgers_pair, 1.0, 0.0) == pytest.approx(0.5)


def test_rankine_hugoniot_quartic(quartic_pair):
    assert rankine_hugoniot(quartic_pair, 1.0, 0.0) == pytest.approx(1.0)


def test_rankine_hugoniot_degenerate(burgers_pair):
    with pytest.raises(DegenerateShock):
        rankine_hugoniot(burgers_pair, 1.0, 1.0)


def test_positive_speed_normalization_preserves_moving_frame(burgers_pair, rng):
    # u_- = -0.5, u_+ = -1.5 gives sigma = -1 for Burgers flux
    u_minus, u_plus = -0.5, -1.5
    sigma = rankine_hugoniot(burgers_pair, u_minus, u_plus)
    assert sigma < 0.0
    new_pair, new_sigma = normalize_positive_speed(burgers_pair, u_minus, u_plus)
    assert new_sigma == pytest.approx(-sigma)
    # the moving-frame flux A = -sigma*u + f is unchanged
    for u in rng.uniform(-2, 0, 10):
        A_old = -sigma * u + burgers_pair.f(u)
        A_new = -new_sigma * u + new_pair.f(u)
        assert A_new == pytest.approx(A_old, abs=1e-14)
    # f'' unchanged
    assert new_pair.f(0.3, 2) == pytest.approx(burgers_pair.f(0.3, 2))


def test_positive_speed_normalization_zero_speed():
    pair = make_pair("burgers", "quadratic")
    # u_- = 0.5, u_+ = -0.5: sigma = 0 for Burgers
    new_pair, new_sigma = normalize_positive_speed(pair, 0.5, -0.5)
    assert new_sigma > 0.0


def test_burgers_golden_profile(burgers_profile):
    prof = burgers_profile
    assert prof.sigma == pytest.approx(0.75)
    exact = 0.75 - 0.25 * np.tanh(prof.xi / 8.0)
    assert np.max(np.abs(prof.S - exact)) <= 1e-8
    # ODE residual |-sigma S' + f'(S) S' - S''|
    res = np.abs(-prof.sigma * prof.S_prime
                 + prof.pair.f(prof.S, 1) * prof.S_prime
                 - prof.S_double_prime)
    assert np.max(res) <= 1e-9


def test_profile_midpoint_anchor(burgers_profile, quartic_profile):
    for prof in (burgers_profile, quartic_profile):
        mid = prof.S[np.argmin(np.abs(prof.xi))]
        assert mid == 0.5 * (prof.u_minus + prof.u_plus)


def test_profile_bounds_and_monotonicity(quartic_profile):
    prof = quartic_profile
    assert np.all(prof.S <= prof.u_minus) and np.all(prof.S >= prof.u_plus)
    core = np.abs(prof.xi) <= 5.0 / prof.epsilon
    assert np.all(np.diff(prof.S[core]) < 0.0)
    # strict interior on the core
    assert np.all(prof.S[core] < prof.u_minus)
    assert np.all(prof.S[core] > prof.u_plus)


def test_weight_identities(quartic_profile):
    prof = quartic_profile
    np.testing.assert_allclose(
        prof.a_prime, -(prof.lam / prof.epsilon) * prof.S_prime, rtol=0, atol=0)
    assert np.all(prof.a >= 1.0) and np.all(prof.a <= 1.0 + prof.lam)
    assert prof.a[0] == pytest.approx(1.0, abs=1e-9)
    assert prof.a[-1] == pytest.approx(1.0 + prof.lam, abs=1e-9)
    assert np.all(prof.a_prime >= 0.0)


def test_y_map_bijection(quartic_profile):
    prof = quartic_profile
    y = prof.y
    assert np.all(y >= 0.0) and np.all(y <= 1.0)
    mid = y[np.argmin(np.abs(prof.xi))]
    assert mid == pytest.approx(0.5)
    core = np.abs(prof.xi) <= 5.0 / prof.epsilon
    assert np.all(np.diff(y[core]) > 0.0)


def test_sigma_close_to_characteristic_speed(quartic_pair):
    # |sigma - f'(S)| <= C eps with C stable under eps-halving
    sups = []
    for eps in (0.1, 0.05):
        prof = rs.solve_profile(quartic_pair, 1.0, eps)
        sups.append(np.max(np.abs(prof.sigma - prof.pair.f(prof.S, 1))) / eps)
    assert abs(sups[0] / sups[1] - 1.0) <= 0.25


def test_tail_diagnostics_burgers_matches_closed_form(burgers_profile):
    prof = burgers_profile
    rep = rs.tail_diagnostics(prof)
    # oracle: identical least-squares fit applied to the closed form
    eps = prof.epsilon
    absSp = (eps**2 / 8.0) / np.cosh(eps * prof.xi / 4.0) ** 2
    peak = absSp.max()
    m = ((prof.xi > 0) & (absSp >= 1e-7 * peak)
         & (absSp <= np.exp(-3.0) * peak) & (np.abs(prof.xi) >= 2.0 / eps))
    oracle = -np.polyfit(prof.xi[m], np.log(absSp[m]), 1)[0]
    assert rep.decay_right == pytest.approx(oracle, rel=1e-3)
    # asymptotic rate eps/2 = 0.25, reached to within 15% on this window
    assert rep.decay_right == pytest.approx(0.25, rel=0.15)
    assert rep.decay_left == pytest.approx(rep.decay_right, rel=1e-6)
    assert rep.inf_ratio > 0.0 and np.isfinite(rep.curvature_ratio)


def test_tail_diagnostics_requires_domain(burgers_pair):
    prof = rs.solve_profile(burgers_pair, 1.0, 0.5, half_width=8.0)
    with pytest.raises(InsufficientDomain):
        rs.tail_diagnostics(prof)


def test_tail_scaling_quartic(quartic_pair):
    reports = {}
    for eps in (0.1, 0.05):
        reports[eps] = rs.tail_diagnostics(rs.solve_profile(quartic_pair, 1.0, eps))
    r0, r1 = reports[0.1], reports[0.05]
    assert abs(r0.decay_left / r1.decay_left - 2.0) <= 0.5
    assert abs(r0.decay_right / r1.decay_right - 2.0) <= 0.5
    assert abs(r0.inf_ratio / r1.inf_ratio - 1.0) <= 0.25
    assert abs(r0.curvature_ratio / r1.curvature_ratio - 1.0) <= 0.25


def test_y_map_check_burgers_exact(burgers_profile):
    # dy/dxi = (eps/2) y (1-y) identically for the quadratic flux
    assert rs.y_map_check(burgers_profile) <= 1e-10


def test_y_map_check_quartic_eps2_scaling(quartic_pair):
    sups = [rs.y_map_check(rs.solve_profile(quartic_pair, 1.0, eps))
            for eps in (0.1, 0.05)]
    assert abs(sups[0] / sups[1] - 4.0) <= 1.0


def test_solve_profile_validations(burgers_pair, quartic_pair):
    with pytest.raises(DegenerateShock):
        rs.solve_profile(burgers_pair, 1.0, 0.0)
    with pytest.raises(ConvexityViolation):
        rs.solve_profile(quartic_pair, 0.0, 0.1)  # f''(0) = 0
    with pytest.warns(UserWarning):
        rs.solve_profile(burgers_pair, 1.0, 0.8)  # above 0.5|u_-| heuristic


def test_interpolant_and_table(burgers_profile):
    prof = burgers_profile
    xq = np.linspace(-20, 20, 1001)
    exact = 0.75 - 0.25 * np.tanh(xq / 8.0)
    assert np.max(np.abs(prof.S_at(xq) - exact)) <= 1e-9
    with pytest.raises(InsufficientDomain):
        prof.S_at(np.array([prof.half_width * 1.01]))
    tab = prof.table_on(xq)
    np.testing.assert_allclose(tab["a_prime"],
                               -(prof.lam / prof.epsilon) * tab["S_prime"])
    np.testing.assert_allclose(tab["y"], (prof.u_minus - tab["S"]) / prof.epsilon)
