import numpy as np
import pytest

import relshock as rs
from relshock import pde
from relshock.config import ExperimentConfig
from relshock.dynamics import (ShiftState, coupled_step, phi_eps, prepare_run,
                               run_contraction)
from relshock.errors import ConfigError
from relshock.functionals import ProfileOnGrid
from relshock.grid import Field, Grid


def test_phi_eps_branch_values():
    eps = 0.05
    e2, inv2 = eps * eps, 1.0 / eps**2
    assert phi_eps(eps, 0.0) == 0.0
    assert phi_eps(eps, -e2) == pytest.approx(inv2, rel=1e-12)
    assert phi_eps(eps, 2 * e2) == -inv2
    assert phi_eps(eps, -5 * e2) == inv2


def test_phi_eps_continuity_at_knots():
    eps = 0.07
    e2 = eps * eps
    for s in (-1, 1):
        inside = phi_eps(eps, s * e2 * (1 - 1e-12))
        outside = phi_eps(eps, s * e2)
        assert inside == pytest.approx(outside, rel=1e-9)


def test_phi_eps_odd_and_bounded(rng):
    eps = 0.1
    inv2 = 1.0 / eps**2
    for y in rng.uniform(-3 * eps**2, 3 * eps**2, 100):
        assert phi_eps(eps, -y) == -phi_eps(eps, y)
        assert abs(phi_eps(eps, y)) <= inv2


def test_phi_eps_validation():
    with pytest.raises(ValueError):
        phi_eps(0.0, 1.0)


@pytest.fixture(scope="module")
def small_setup(quartic_profile):
    grid = Grid(quartic_profile.half_width, 1601)
    ptab = ProfileOnGrid(quartic_profile, grid)
    return ptab


def _state_from(ptab, values):
    vals = values.copy()
    vals[0], vals[-1] = ptab.u_left, ptab.u_right
    return pde.PdeState(0.0, Field(ptab.grid, vals,
                                   boundary=(ptab.u_left, ptab.u_right)), ptab)


def test_coupled_step_fixed_point(small_setup):
    ptab = small_setup
    state = _state_from(ptab, ptab.S)
    shift = ShiftState()
    dt = 0.5 * pde.cfl_limit(state)
    for _ in range(3):
        state, shift, snap = coupled_step(state, shift, dt)
    # discrete truncation nudges u off S by O(h^2); Phi amplifies Y by eps^-4
    assert abs(snap.Y) <= 1e-8
    assert np.max(np.abs(snap.B)) <= 1e-12
    assert abs(snap.Xdot) <= 1e-4
    assert abs(shift.X) <= 1e-6
    assert np.max(np.abs(state.field.values - ptab.S)) <= 1e-6


def test_shift_chases_displacement_sign(quartic_profile, small_setup):
    ptab = small_setup
    xi = ptab.grid.xi
    hw = quartic_profile.half_width
    for d in (0.5, -0.5):
        u0 = quartic_profile.S_at(np.clip(xi - d, -hw, hw))
        state = _state_from(ptab, u0)
        shift = ShiftState()
        dt = 0.5 * pde.cfl_limit(state)
        _, shift, snap = coupled_step(state, shift, dt)
        # X must move toward the displacement: sign(Xdot) == sign(d)
        assert np.sign(snap.Xdot) == np.sign(d)
        assert np.sign(shift.X) == np.sign(d)


def test_shift_bound_by_construction(small_setup, rng):
    ptab = small_setup
    xi = ptab.grid.xi
    u0 = ptab.S + 0.4 * np.exp(-((xi - 2) / 3) ** 2)
    state = _state_from(ptab, u0)
    shift = ShiftState()
    dt = 0.5 * pde.cfl_limit(state)
    inv2 = 1.0 / ptab.epsilon**2
    for _ in range(20):
        state, shift, snap = coupled_step(state, shift, dt)
        assert abs(snap.Xdot) <= inv2 * (1.0 + 2.0 * abs(snap.B_total))


@pytest.fixture(scope="module")
def quick_config():
    return {
        "flux": "quartic", "entropy": "remark12", "u_minus": 1.0,
        "epsilon": 0.05, "lambda": 0.25, "delta0": 0.3, "points": 1601,
        "T": 0.5, "snapshot_cadence": 0.05,
        "perturbation": {"kind": "bump", "amplitude": 0.2, "center": 0.0,
                         "width": 2.0},
    }


def test_run_contraction_quick(quick_config):
    rep = run_contraction(ExperimentConfig.from_dict(quick_config))
    assert rep.passed, rep.failures
    assert rep.ended_early is None
    assert rep.max_entropy_increment <= 1e-8 * rep.initial_entropy
    assert rep.shift_bound_ok and rep.max_shift_bound_margin <= 0.0
    assert rep.final_entropy < rep.initial_entropy
    assert rep.n_steps > 0 and len(rep.snapshots) >= 3
    # snapshot times uniformly spaced (identity-residual precondition)
    ts = np.array([s.t for s in rep.snapshots])
    assert np.max(np.abs(np.diff(ts) - np.diff(ts)[0])) <= 1e-12


def test_run_contraction_deterministic(quick_config):
    a = run_contraction(ExperimentConfig.from_dict(quick_config))
    b = run_contraction(ExperimentConfig.from_dict(quick_config))
    assert np.array_equal(a.entropy_steps, b.entropy_steps)
    assert a.X_final == b.X_final


def test_run_contraction_collects_fields_and_energy(quick_config):
    rep = run_contraction(ExperimentConfig.from_dict(quick_config),
                          collect_fields=True)
    assert len(rep.fields) == len(rep.snapshots)
    assert np.isfinite(rep.energy_C)
    assert rep.h_accum >= 0.0 and rep.h_l1_bound > 0.0


def test_run_report_summary_serializable(quick_config):
    import json
    rep = run_contraction(ExperimentConfig.from_dict(quick_config))
    txt = json.dumps(rep.summary_dict(), default=str)
    assert "passed" in txt


def test_hypotheses_gate_blocks_bad_pair():
    cfg = ExperimentConfig.from_dict({
        "flux": "burgers", "entropy": "quadratic", "u_minus": 1.0,
        "epsilon": 0.05, "lambda": 0.25, "points": 1601, "T": 0.1,
    })
    with pytest.raises(ConfigError):
        prepare_run(cfg)
    cfg.assert_theorem = False
    with pytest.warns(UserWarning):
        prepare_run(cfg)


def test_run_ends_gracefully_when_shift_leaves_window():
    # a heavy one-signed perturbation asks for a shift beyond half_width/2
    cfg = ExperimentConfig.from_dict({
        "flux": "quartic", "entropy": "remark12", "u_minus": 1.0,
        "epsilon": 0.05, "lambda": 0.25, "points": 1601, "T": 2.0,
        "half_width": 160.0, "snapshot_cadence": 0.05,
        "perturbation": {"kind": "bump", "amplitude": 3.0, "center": 0.0,
                         "width": 8.0},
    })
    rep = run_contraction(cfg)
    assert rep.ended_early is not None
    assert not rep.passed
    assert "shift out of range" in rep.failures[0]


def test_euler_integrator_available(quick_config):
    cfg = ExperimentConfig.from_dict({**quick_config,
                                      "shift_integrator": "euler"})
    rep = run_contraction(cfg)
    assert rep.n_steps > 0
    cfg2 = ExperimentConfig.from_dict({**quick_config,
                                       "shift_integrator": "heun"})
    rep2 = run_contraction(cfg2)
    assert rep2.n_steps > 0


def test_identity_study_small(quick_config):
    cfg = ExperimentConfig.from_dict({**quick_config, "T": 0.2,
                                      "points": 1201, "dt_safety": 0.5})
    st = rs.identity_study(cfg, refine=1)
    assert len(st["residuals"]) == 2
    assert all(np.isfinite(r) for r in st["residuals"])
    assert st["levels"][1]["dt"] == pytest.approx(st["levels"][0]["dt"] / 2)
