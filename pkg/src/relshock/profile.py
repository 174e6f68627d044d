"""Viscous shock profile: traveling-wave ODE solve, weight, and tail diagnostics.

The profile S connects u_minus to u_plus = u_minus - epsilon and solves
S' = -sigma*(S - u_-) + f(S) - f(u_-) with S(0) = (u_- + u_+)/2.  The module
also builds the monotone weight a = 1 + lam*(u_- - S)/epsilon and the
normalized coordinate y = (u_- - S)/epsilon used by the contraction analysis,
and verifies their small-amplitude asymptotics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .calculus import CallableFunc, FluxEntropyPair, PolyFunc
from .errors import (ConvexityViolation, DegenerateShock, InsufficientDomain,
                     IntegrationFailure, ProfileEscape)

__all__ = [
    "rankine_hugoniot",
    "normalize_positive_speed",
    "solve_profile",
    "tail_diagnostics",
    "y_map_check",
    "ShockProfile",
    "TailReport",
]


def rankine_hugoniot(pair: FluxEntropyPair, u_minus: float, u_plus: float) -> float:
    """Shock speed sigma = (f(u_-) - f(u_+)) / (u_- - u_+)."""
    if u_minus == u_plus:
        raise DegenerateShock("u_minus == u_plus")
    return float((pair.f(u_minus) - pair.f(u_plus)) / (u_minus - u_plus))


def _with_linear_term(func, c: float):
    """Return the function u -> c*u + func(u) with matching derivatives."""
    if isinstance(func, PolyFunc):
        coeffs = func.coeffs.copy()
        if coeffs.size < 2:
            coeffs = np.pad(coeffs, (0, 2 - coeffs.size))
        coeffs[1] += c
        return PolyFunc(coeffs)
    derivs = [lambda x, g=func.derivs[0]: c * np.asarray(x, float) + g(x)]
    if len(func.derivs) > 1:
        derivs.append(lambda x, g=func.derivs[1]: c + g(x))
        derivs.extend(func.derivs[2:])
    return CallableFunc(derivs)


def normalize_positive_speed(pair: FluxEntropyPair, u_minus: float,
                             u_plus: float) -> tuple[FluxEntropyPair, float]:
    """Replace f by a linearly shifted flux so the shock speed is positive.

    A linear term changes sigma but leaves f'', the profile, and the
    moving-frame flux A = -sigma*u + f unchanged.  For sigma < 0 the shifted
    flux is -2*sigma*u + f (new speed -sigma); for sigma = 0 it is u + f
    (new speed 1).
    """
    sigma = rankine_hugoniot(pair, u_minus, u_plus)
    if sigma > 0.0:
        return pair, sigma
    c = -2.0 * sigma if sigma < 0.0 else 1.0
    new_pair = FluxEntropyPair(_with_linear_term(pair.f, c), pair.eta,
                               pair.reference_point)
    return new_pair, rankine_hugoniot(new_pair, u_minus, u_plus)


@dataclass
class ShockProfile:
    """Tabulated shock profile on a graded grid, immutable after construction.

    S_prime comes from the ODE right-hand side and S_double_prime from the
    identity S'' = (f'(S) - sigma) S', never from differencing.
    """

    u_minus: float
    u_plus: float
    epsilon: float
    sigma: float
    lam: float
    half_width: float
    xi: np.ndarray
    S: np.ndarray
    S_prime: np.ndarray
    S_double_prime: np.ndarray
    a: np.ndarray
    a_prime: np.ndarray
    y: np.ndarray
    pair: FluxEntropyPair
    _interp: CubicHermiteSpline = field(repr=False, compare=False, default=None)

    def rhs(self, s):
        """Profile ODE right-hand side -sigma*(s - u_-) + f(s) - f(u_-)."""
        f = self.pair.f
        return -self.sigma * (np.asarray(s, float) - self.u_minus) \
            + f(s) - f(self.u_minus)

    def S_at(self, xi_new):
        """Cubic-Hermite interpolated S (exact nodal slopes from the ODE
        right-hand side), clipped to [u_plus, u_minus]."""
        xi_new = np.asarray(xi_new, dtype=float)
        if np.any(np.abs(xi_new) > self.half_width * (1 + 1e-12)):
            raise InsufficientDomain("requested point outside tabulated domain")
        return np.clip(self._interp(xi_new), self.u_plus, self.u_minus)

    def table_on(self, xi_new) -> dict:
        """Resample S and its analytic companions onto a new grid."""
        S = self.S_at(xi_new)
        Sp = self.rhs(S)
        Spp = (self.pair.f(S, 1) - self.sigma) * Sp
        y = (self.u_minus - S) / self.epsilon
        return {
            "S": S, "S_prime": Sp, "S_double_prime": Spp,
            "a": 1.0 + self.lam * y,
            "a_prime": -(self.lam / self.epsilon) * Sp,
            "y": y,
        }


def _graded_grid(half_width: float, h_core: float, w_core: float,
                 growth: float = 1.02) -> np.ndarray:
    """Symmetric grid: uniform spacing h_core on [0, w_core], then geometrically
    coarsened spacing out to half_width."""
    pos = list(np.arange(0.0, w_core, h_core))
    x, h = pos[-1], h_core
    while x < half_width:
        h *= growth
        x = min(x + h, half_width)
        pos.append(x)
    pos = np.asarray(pos)
    return np.concatenate([-pos[:0:-1], pos])


def solve_profile(pair: FluxEntropyPair, u_minus: float, epsilon: float,
                  half_width: float | None = None, tol: float = 1e-12,
                  lam: float = 0.0, positive_speed: bool = True,
                  points_per_width: int = 250) -> ShockProfile:
    """Integrate the traveling-wave ODE outward from xi = 0 and tabulate.

    The anchor S(0) = (u_- + u_+)/2 is exact; integration runs forward and
    backward with a high-order adaptive method.  half_width defaults to
    12/epsilon so tail values of S' are negligible for generic convex fluxes.
    """
    if epsilon <= 0.0:
        raise DegenerateShock("epsilon must be positive")
    if pair.f(u_minus, 2) <= 0.0:
        raise ConvexityViolation("f''(u_minus) <= 0")
    if epsilon > 0.5 * abs(u_minus):
        warnings.warn("shock amplitude epsilon above the small-amplitude "
                      "heuristic 0.5*|u_minus|; asymptotic diagnostics may degrade")

    u_plus = u_minus - epsilon
    work_pair, sigma = (normalize_positive_speed(pair, u_minus, u_plus)
                        if positive_speed else
                        (pair, rankine_hugoniot(pair, u_minus, u_plus)))

    f = work_pair.f
    f_uminus = float(f(u_minus))

    def rhs(_, s):
        return -sigma * (s - u_minus) + f(s) - f_uminus

    # Admissibility: the RHS must be negative strictly between the end states.
    probe = np.linspace(u_plus, u_minus, 1001)[1:-1]
    if np.any(rhs(0.0, probe) >= 0.0):
        warnings.warn("profile ODE right-hand side changes sign between the "
                      "end states; flux/epsilon combination is inconsistent")

    if half_width is None:
        half_width = 12.0 / epsilon
    h_core = (1.0 / epsilon) / points_per_width
    w_core = min(half_width, 6.0 / epsilon)
    xi = _graded_grid(half_width, h_core, w_core)
    mid = float(0.5 * (u_minus + u_plus))

    S = np.empty_like(xi)
    zero_idx = int(np.searchsorted(xi, 0.0))
    for sign, nodes_slice in ((1, slice(zero_idx, None)),
                              (-1, slice(zero_idx, None, -1))):
        nodes = xi[nodes_slice]
        sol = solve_ivp(rhs, (0.0, sign * half_width), [mid], t_eval=nodes,
                        method="DOP853", rtol=min(tol, 1e-12), atol=1e-14)
        if not sol.success:
            raise IntegrationFailure(f"profile ODE solve failed: {sol.message}")
        S[nodes_slice] = sol.y[0]

    # Deep-tail overshoot of a few 1e-11 is integrator roundoff, not escape.
    slack = 1e-6 * epsilon
    if np.any(S < u_plus - slack) or np.any(S > u_minus + slack):
        raise ProfileEscape("profile left the interval (u_plus, u_minus)")
    S = np.clip(S, u_plus, u_minus)

    S_prime = rhs(0.0, S)
    S_double_prime = (f(S, 1) - sigma) * S_prime
    y = (u_minus - S) / epsilon
    prof = ShockProfile(
        u_minus=u_minus, u_plus=u_plus, epsilon=epsilon, sigma=sigma, lam=lam,
        half_width=half_width, xi=xi, S=S, S_prime=S_prime,
        S_double_prime=S_double_prime,
        a=1.0 + lam * y, a_prime=-(lam / epsilon) * S_prime, y=y,
        pair=work_pair, _interp=CubicHermiteSpline(xi, S, S_prime))
    return prof


@dataclass
class TailReport:
    """Fitted tail decay and the two small-amplitude profile ratios."""

    decay_left: float
    decay_right: float
    inf_ratio: float       # inf_{[-1/eps, 1/eps]} |S'| / eps^2
    curvature_ratio: float  # sup |S''| / (eps |S'|)
    window: tuple


def tail_diagnostics(profile: ShockProfile) -> TailReport:
    """Least-squares tail exponents of |S'| plus the two stability ratios."""
    eps = profile.epsilon
    if profile.half_width < 5.0 / eps:
        raise InsufficientDomain("tail fit needs half_width >= 5/epsilon")

    xi, Sp, Spp = profile.xi, profile.S_prime, profile.S_double_prime
    absSp = np.abs(Sp)
    peak = float(np.max(absSp))

    # Fit where the linearized exponential decay dominates: at least three
    # e-foldings below the peak (curvature-polluted closer in) but well above
    # the ODE-solution noise floor in the deep tails.
    lo_amp, hi_amp = 1e-7 * peak, np.exp(-3.0) * peak

    def fit_side(side_mask):
        m = side_mask & (absSp >= lo_amp) & (absSp <= hi_amp) \
            & (np.abs(xi) >= 2.0 / eps)
        if np.count_nonzero(m) < 8:
            raise InsufficientDomain("too few usable tail samples")
        slope = np.polyfit(np.abs(xi[m]), np.log(absSp[m]), 1)[0]
        return -float(slope)

    decay_left = fit_side(xi < 0)
    decay_right = fit_side(xi > 0)

    core = np.abs(xi) <= 1.0 / eps
    inf_ratio = float(np.min(absSp[core]) / eps**2)

    usable = absSp > 0.0
    curvature_ratio = float(np.max(np.abs(Spp[usable]) / (eps * absSp[usable])))
    return TailReport(decay_left=decay_left, decay_right=decay_right,
                      inf_ratio=inf_ratio, curvature_ratio=curvature_ratio,
                      window=(lo_amp, hi_amp))


def y_map_check(profile: ShockProfile, y_cut: float = 1e-6) -> float:
    """Sup over the grid of |(1/(y(1-y))) dy/dxi - eps*f''(u_-)/2|.

    Evaluation is restricted to y in [y_cut, 1-y_cut] to avoid 0/0 in the
    flat tails.
    """
    y = profile.y
    mask = (y >= y_cut) & (y <= 1.0 - y_cut)
    dydxi = -profile.S_prime[mask] / profile.epsilon
    expr = dydxi / (y[mask] * (1.0 - y[mask]))
    target = 0.5 * profile.epsilon * float(profile.pair.f(profile.u_minus, 2))
    return float(np.max(np.abs(expr - target)))
