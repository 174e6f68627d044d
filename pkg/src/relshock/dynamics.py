"""Shift ODE coupled to the PDE, and the end-to-end contraction harness.

The shift X(t) solves Xdot = Phi_eps(Y(u^X)) * (2|B(u^X)| + 1) with X(0)=0.
Inside the linear branch |Y| <= eps^2 the switch has gain (2|B|+1)/eps^4,
which is stiff relative to the PDE's CFL step; the default update therefore
solves the frozen-u implicit Euler step for X (a damped, overshoot-free
discretization of the same ODE), while plain explicit Euler and Heun remain
available through the config.  The harness time-steps to the horizon,
records functional snapshots, and audits the contraction of the weighted
relative entropy together with the shift bound |Xdot| <= (1 + 2|B|)/eps^2,
which holds exactly by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import optimize

from . import pde
from .calculus import check_hypotheses, make_pair
from .config import ExperimentConfig
from .errors import BlowUp, ConfigError, ShiftOutOfRange
from .functionals import (FunctionalSnapshot, ProfileOnGrid, eval_R_main,
                          evaluate_functionals)
from .grid import Field, Grid
from .profile import solve_profile

__all__ = ["phi_eps", "ShiftState", "coupled_step", "run_contraction",
           "identity_study", "RunReport"]


def phi_eps(eps: float, y: float) -> float:
    """Continuous odd switch: 1/eps^2 for y <= -eps^2, -y/eps^4 in between,
    -1/eps^2 for y >= eps^2.  Clamped so |phi| <= 1/eps^2 exactly in floating
    point."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    e2 = eps * eps
    inv2 = 1.0 / e2
    if y <= -e2:
        return inv2
    if y >= e2:
        return -inv2
    return min(inv2, max(-inv2, -y * inv2 * inv2))


@dataclass
class ShiftState:
    """Shift position, velocity, and the running integral of h(t) = 2|B|."""

    X: float = 0.0
    Xdot: float = 0.0
    h_accum: float = 0.0


def _Y_of_shift(ptab: ProfileOnGrid, coeffs: np.ndarray, X: float) -> float:
    """Y(u^X) for a frozen field given by its spline coefficients."""
    us = ptab.grid.shift_from_coeffs(coeffs, X)
    w = us - ptab.S
    eta_rel = np.asarray(ptab.pair.eta(us)) - ptab.eta_S - ptab.etap_S * w
    g = ptab.grid
    return (-g.integrate_values(ptab.a_prime * eta_rel)
            + g.integrate_values(ptab.a_detap_S * w))


def _advance_shift(ptab: ProfileOnGrid, coeffs: np.ndarray, X: float,
                   Y: float, gamma: float, dt: float, integrator: str) -> float:
    """One X-update.  "euler" takes the explicit step; "implicit" solves the
    frozen-u backward-Euler equation d = dt*gamma*Phi(Y(u^{X+d})), which never
    steps past the Y = 0 equilibrium, so the switch cannot chatter (the
    discrete sliding mode lands inside the linear band instead of slamming
    across it)."""
    eps = ptab.epsilon
    dx = dt * gamma * phi_eps(eps, Y)
    # Heun uses the explicit step as its predictor.
    if integrator in ("euler", "heun") or dx == 0.0:
        return X + dx

    def resid(d):
        return d - dt * gamma * phi_eps(eps, _Y_of_shift(ptab, coeffs, X + d))

    r_end = resid(dx)
    # Small implicit correction: the step is non-stiff here, keep explicit.
    if (dx > 0 and r_end <= 0.25 * dx) or (dx < 0 and r_end >= 0.25 * dx):
        return X + dx
    lo, hi = min(0.0, dx), max(0.0, dx)
    d = optimize.brentq(resid, lo, hi, xtol=1e-14 * max(1.0, abs(X)),
                        rtol=8.9e-16, maxiter=100)
    return X + d


def _functional_snapshot(state: pde.PdeState, shift: ShiftState,
                         delta0: float, coeffs: np.ndarray | None = None):
    ptab = state.ptab
    if coeffs is None:
        coeffs = ptab.grid.spline_coeffs(state.field.values)
    u_shift = ptab.grid.shift_from_coeffs(coeffs, shift.X) if shift.X != 0.0 \
        else state.field.values
    fx = evaluate_functionals(u_shift, ptab)
    eps, lam = ptab.epsilon, ptab.lam
    Xdot = phi_eps(eps, fx["Y"]) * (2.0 * abs(fx["B_total"]) + 1.0)
    snap = FunctionalSnapshot(
        t=state.t, Y=fx["Y"], B=fx["B"], G0=fx["G0"], D=fx["D"],
        weighted_entropy=fx["weighted_entropy"], X=shift.X, Xdot=Xdot,
        R_main=eval_R_main(fx["Y"], fx["B_total"], fx["G0"], fx["D"],
                           eps, lam, delta0))
    return snap, fx


def coupled_step(state: pde.PdeState, shift: ShiftState, dt: float,
                 delta0: float = 0.3, integrator: str = "implicit"
                 ) -> tuple[pde.PdeState, ShiftState, FunctionalSnapshot]:
    """One coupled step.  Fixed order for determinism: evaluate functionals
    on u^X, form Xdot, advance X, advance u, emit the start-time snapshot."""
    ptab = state.ptab
    coeffs = ptab.grid.spline_coeffs(state.field.values)
    snap, fx = _functional_snapshot(state, shift, delta0, coeffs)
    gamma = 2.0 * abs(snap.B_total) + 1.0
    X_new = _advance_shift(ptab, coeffs, shift.X, snap.Y, gamma, dt, integrator)
    new_state = pde.step(state, dt)
    if integrator == "heun":
        trial = ShiftState(X_new, snap.Xdot, shift.h_accum)
        snap2, _ = _functional_snapshot(new_state, trial, delta0)
        X_new = shift.X + 0.5 * dt * (snap.Xdot + snap2.Xdot)
    new_shift = ShiftState(X=X_new, Xdot=snap.Xdot,
                           h_accum=shift.h_accum + dt * 2.0 * abs(snap.B_total))
    return new_state, new_shift, snap


def _crossed(y0: float, y1: float, e2: float) -> bool:
    return (y0 - e2) * (y1 - e2) < 0.0 or (y0 + e2) * (y1 + e2) < 0.0


@dataclass
class RunReport:
    """Outcome of one contraction experiment."""

    config: dict
    passed: bool
    failures: list
    ended_early: str | None
    n_steps: int
    dt: float
    snapshots: list
    entropy_steps: np.ndarray       # weighted entropy at every step
    step_times: np.ndarray
    initial_entropy: float
    final_entropy: float
    max_entropy_increment: float
    shift_bound_ok: bool
    max_shift_bound_margin: float   # max of |Xdot| - (1+2|B|)/eps^2 (<= 0)
    n_inner: int                    # snapshots with |Y| <= eps^2
    max_R_main_inner: float
    n_outer: int
    max_xy_outer: float             # max of Xdot*Y + 2|B| over outer snapshots
    decay_margin_worst: float       # min of E_i - E_{i+1} - delta0*(eps/lam)*|B_i|*dt
    h_accum: float
    h_l1_bound: float               # (2*lam/(delta0*eps)) * initial entropy
    energy_C: float
    max_overshoot: float
    X_final: float
    fields: list = dc_field(default_factory=list, repr=False)

    def summary_dict(self) -> dict:
        return {
            "passed": self.passed, "failures": self.failures,
            "ended_early": self.ended_early, "n_steps": self.n_steps,
            "dt": self.dt, "initial_entropy": self.initial_entropy,
            "final_entropy": self.final_entropy,
            "max_entropy_increment": self.max_entropy_increment,
            "shift_bound_ok": self.shift_bound_ok,
            "max_shift_bound_margin": self.max_shift_bound_margin,
            "n_inner": self.n_inner, "max_R_main_inner": self.max_R_main_inner,
            "n_outer": self.n_outer, "max_xy_outer": self.max_xy_outer,
            "decay_margin_worst": self.decay_margin_worst,
            "h_accum": self.h_accum, "h_l1_bound": self.h_l1_bound,
            "energy_C": self.energy_C, "max_overshoot": self.max_overshoot,
            "X_final": self.X_final, "config": self.config,
        }


def prepare_run(cfg: ExperimentConfig):
    """Shared setup: hypotheses gate, profile solve, grid, initial state."""
    cfg.validate()
    pair = make_pair(cfg.flux, cfg.entropy)
    hyp = check_hypotheses(pair, cfg.theta_resolved)
    if not hyp.passed:
        msg = ("entropy fails the convexity/growth hypotheses for this flux: "
               + "; ".join(hyp.failures))
        if cfg.assert_theorem:
            raise ConfigError(msg)
        warnings.warn(msg + " (contraction not guaranteed; exploratory run)")
    profile = solve_profile(pair, cfg.u_minus, cfg.epsilon,
                            half_width=cfg.half_width_resolved, lam=cfg.lam)
    grid = Grid(cfg.half_width_resolved, cfg.points)
    ptab = ProfileOnGrid(profile, grid)
    u0 = pde.build_initial(ptab, cfg.perturbation)
    state = pde.PdeState(0.0, Field(grid, u0, boundary=(ptab.u_left,
                                                        ptab.u_right)), ptab)
    return state, ptab


def run_contraction(cfg: ExperimentConfig, dt: float | None = None,
                    stride: int | None = None, collect_fields: bool = False,
                    event_substeps: int = 4) -> RunReport:
    """Time-step the coupled system to the horizon and audit every invariant.

    Snapshots are recorded on a uniform stride so the entropy-identity
    residual can use centered differences; a step during which Y crosses the
    switching thresholds +-eps^2 is redone with `event_substeps` substeps.
    """
    state, ptab = prepare_run(cfg)
    eps, lam, delta0 = ptab.epsilon, ptab.lam, cfg.delta0
    integrator = cfg.shift_integrator

    dt0 = dt if dt is not None else cfg.dt_safety * pde.cfl_limit(state)
    if stride is None:
        stride = max(1, int(round(cfg.snapshot_cadence / dt0)))
    m = max(1, int(np.ceil(cfg.T / (stride * dt0) - 1e-12)))
    n_steps = m * stride
    dt = cfg.T / n_steps
    inv2 = 1.0 / (eps * eps)

    shift = ShiftState()
    snapshots = []
    fields = []
    E_steps = np.empty(n_steps + 1)
    t_steps = np.empty(n_steps + 1)
    B_abs_steps = np.empty(n_steps + 1)
    max_margin = -np.inf
    ended_early = None
    failures = []

    prev_Y = None
    redone = False
    i = 0
    saved = prev_saved = (state, shift)
    while i < n_steps:
        saved = (state, shift)
        try:
            new_state, new_shift, snap = coupled_step(state, shift, dt,
                                                      delta0, integrator)
        except ShiftOutOfRange as exc:
            ended_early = f"shift out of range at step {i}: {exc}"
            break
        except BlowUp as exc:
            ended_early = f"blow-up at step {i}: {exc}"
            break

        if (prev_Y is not None and not redone and event_substeps > 1
                and _crossed(prev_Y, snap.Y, eps * eps)):
            # Redo the previous step with substeps to keep the switch clean,
            # then re-enter this step from the corrected state.
            sub_state, sub_shift = prev_saved
            ok = True
            for _ in range(event_substeps):
                try:
                    sub_state, sub_shift, _ = coupled_step(
                        sub_state, sub_shift, dt / event_substeps, delta0,
                        integrator)
                except (ShiftOutOfRange, BlowUp) as exc:
                    ended_early = f"event substep failed at step {i}: {exc}"
                    ok = False
                    break
            if not ok:
                break
            state, shift = sub_state, sub_shift
            redone = True
            continue
        redone = False
        prev_saved = saved
        prev_Y = snap.Y

        E_steps[i] = snap.weighted_entropy
        t_steps[i] = snap.t
        B_abs_steps[i] = abs(snap.B_total)
        margin = abs(snap.Xdot) - inv2 * (1.0 + 2.0 * abs(snap.B_total))
        max_margin = max(max_margin, margin)
        if i % stride == 0:
            snapshots.append(snap)
            if collect_fields:
                fields.append(state)
        state, shift = new_state, new_shift
        i += 1

    n_done = i
    if ended_early is None:
        final_snap, _ = _functional_snapshot(state, shift, delta0)
        E_steps[n_done] = final_snap.weighted_entropy
        t_steps[n_done] = final_snap.t
        B_abs_steps[n_done] = abs(final_snap.B_total)
        snapshots.append(final_snap)
        if collect_fields:
            fields.append(state)
        k_last = n_done + 1
    else:
        k_last = n_done
    E_steps = E_steps[:k_last]
    t_steps = t_steps[:k_last]
    B_abs_steps = B_abs_steps[:k_last]

    E0 = float(E_steps[0]) if k_last > 0 else np.nan
    increments = np.diff(E_steps) if k_last > 1 else np.array([])
    max_increment = float(np.max(increments)) if increments.size else 0.0
    decay_margin = (-increments - delta0 * (eps / lam)
                    * B_abs_steps[:-1] * dt) if increments.size else np.array([])
    decay_worst = float(np.min(decay_margin)) if decay_margin.size else 0.0

    inner = [s for s in snapshots if abs(s.Y) <= eps * eps]
    outer = [s for s in snapshots if abs(s.Y) > eps * eps]
    max_R_inner = max((s.R_main for s in inner), default=-np.inf)
    max_xy_outer = max((s.Xdot * s.Y + 2.0 * abs(s.B_total) for s in outer),
                       default=-np.inf)

    shift_bound_ok = max_margin <= 0.0
    if ended_early is not None:
        failures.append(ended_early)
    if max_increment > 1e-8 * max(E0, 1e-300):
        failures.append(f"weighted entropy increased by {max_increment:.3e} "
                        f"(allowed 1e-8 * E0 = {1e-8 * E0:.3e})")
    if not shift_bound_ok:
        failures.append(f"shift bound violated by {max_margin:.3e}")
    if inner and max_R_inner > 1e-8:
        failures.append(f"R_main = {max_R_inner:.3e} > 1e-8 on an inner snapshot")
    if outer and max_xy_outer > 1e-10:
        failures.append(f"Xdot*Y + 2|B| = {max_xy_outer:.3e} > 1e-10 on an "
                        "outer snapshot")

    energy_C = pde.energy_check(fields) if len(fields) >= 2 else np.nan
    return RunReport(
        config=cfg.to_dict(), passed=not failures, failures=failures,
        ended_early=ended_early, n_steps=n_done, dt=dt, snapshots=snapshots,
        entropy_steps=E_steps, step_times=t_steps,
        initial_entropy=E0, final_entropy=float(E_steps[-1]) if k_last else np.nan,
        max_entropy_increment=max_increment, shift_bound_ok=shift_bound_ok,
        max_shift_bound_margin=float(max_margin),
        n_inner=len(inner), max_R_main_inner=float(max_R_inner),
        n_outer=len(outer), max_xy_outer=float(max_xy_outer),
        decay_margin_worst=decay_worst, h_accum=shift.h_accum,
        h_l1_bound=(2.0 * lam / (delta0 * eps)) * E0,
        energy_C=energy_C, max_overshoot=state.max_overshoot,
        X_final=shift.X, fields=fields)


def identity_study(cfg: ExperimentConfig, refine: int = 1) -> dict:
    """Entropy-identity residual at base resolution and under simultaneous
    (h, dt)/2 refinements.

    The base dt is derived from the finest level's CFL limit so halving it
    at each refinement stays stable; the renormalization of dt inside
    run_contraction preserves the exact 2:1 ratio between levels.
    """
    from .functionals import entropy_identity_residual

    cfgs = []
    for level in range(refine + 1):
        c = ExperimentConfig.from_dict(cfg.to_dict())
        c.points = ((cfg.points | 1) - 1) * 2**level + 1
        cfgs.append(c)

    state_fine, _ = prepare_run(cfgs[-1])
    dt_fine = cfgs[-1].dt_safety * pde.cfl_limit(state_fine)

    results = []
    for level, c in enumerate(cfgs):
        dt = dt_fine * 2 ** (refine - level)
        # The residual differences consecutive snapshots, so record each step.
        report = run_contraction(c, dt=dt, stride=1)
        resid = entropy_identity_residual(report.snapshots)
        results.append({"points": c.points, "dt": dt, "residual": resid,
                        "report": report})
    out = {"levels": results,
           "residuals": [r["residual"] for r in results]}
    if refine >= 1:
        out["ratios"] = [results[k]["residual"] / results[k + 1]["residual"]
                         for k in range(refine)]
    return out
