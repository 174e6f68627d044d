"""Pointwise algebra of the flux-entropy pair.

Provides smooth scalar functions with derivatives (polynomials get exact
derivatives, closures supply their own), Bregman-type relative quantities,
the antiderivative F of -eta''*f, the entropy fluxes, and a sampled
certificate checker for the convexity/growth hypotheses that the weighted
contraction construction needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate

from .errors import ConvexityViolation, NonFiniteValue, QuadratureFailure

__all__ = [
    "PolyFunc",
    "CallableFunc",
    "FluxEntropyPair",
    "make_function",
    "make_pair",
    "relative_value",
    "relative_eta_prime",
    "mu",
    "antiderivative_F",
    "entropy_flux_q",
    "entropy_flux_G",
    "check_hypotheses",
    "HypothesisReport",
    "BUILTIN_FLUXES",
    "BUILTIN_ENTROPIES",
]

# Named built-ins, coefficients in ascending degree.
BUILTIN_FLUXES = {
    "burgers": [0.0, 0.0, 0.5],            # u^2/2
    "quartic": [0.0, 0.0, 0.0, 0.0, 1.0],  # u^4
}
BUILTIN_ENTROPIES = {
    "quadratic": [0.0, 0.0, 1.0],                     # u^2
    "remark12": [0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0],  # u^6 + u^4 + u^2
}


class PolyFunc:
    """Polynomial with exact derivatives of every order.

    Coefficients are ascending-degree, matching the external config format
    {"poly": [c0, c1, ...]}.
    """

    def __init__(self, coeffs: Sequence[float]):
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.ndim != 1 or self.coeffs.size == 0:
            raise ValueError("coefficient vector must be non-empty and 1-D")
        self._dcoeffs = {0: self.coeffs}

    def _deriv_coeffs(self, order: int) -> np.ndarray:
        if order not in self._dcoeffs:
            self._dcoeffs[order] = npoly.polyder(self.coeffs, order)
        return self._dcoeffs[order]

    def __call__(self, x, order: int = 0):
        return npoly.polyval(np.asarray(x, dtype=float), self._deriv_coeffs(order))

    def antiderivative_of_product(self, other: "PolyFunc", self_order: int = 0):
        """Exact antiderivative of (d^self_order self) * other, constant 0 at 0."""
        prod = npoly.polymul(self._deriv_coeffs(self_order), other.coeffs)
        return PolyFunc(npoly.polyint(prod))


class CallableFunc:
    """Scalar function given as closures [g, g', g'', ...]."""

    def __init__(self, derivs: Sequence[Callable[[float], float]]):
        if len(derivs) == 0:
            raise ValueError("need at least the 0th derivative")
        self.derivs = list(derivs)

    def __call__(self, x, order: int = 0):
        if order >= len(self.derivs):
            raise ValueError(f"derivative of order {order} was not supplied")
        return np.asarray(self.derivs[order](np.asarray(x, dtype=float)))


def make_function(spec) -> PolyFunc | CallableFunc:
    """Build a smooth function from a name, a {"poly": [...]} dict, a coefficient
    list, or an already-built function object."""
    if isinstance(spec, (PolyFunc, CallableFunc)):
        return spec
    if isinstance(spec, str):
        named = {**BUILTIN_FLUXES, **BUILTIN_ENTROPIES}
        if spec not in named:
            raise ValueError(f"unknown named function {spec!r}")
        return PolyFunc(named[spec])
    if isinstance(spec, dict) and "poly" in spec:
        return PolyFunc(spec["poly"])
    if isinstance(spec, (list, tuple, np.ndarray)):
        return PolyFunc(spec)
    raise ValueError(f"cannot interpret function spec {spec!r}")


@dataclass
class FluxEntropyPair:
    """Flux f and entropy eta with derivative evaluators, plus the reference
    point that anchors antiderivative integrals (F, q).

    Only differences of F and q are contract-bearing; the reference point
    fixes the irrelevant constant.
    """

    f: PolyFunc | CallableFunc
    eta: PolyFunc | CallableFunc
    reference_point: float = 0.0
    _F_poly: PolyFunc | None = field(default=None, repr=False, compare=False)
    _q_poly: PolyFunc | None = field(default=None, repr=False, compare=False)

    def mu(self, u):
        """1/eta''(u); see :func:`mu` for the checked scalar version."""
        return 1.0 / self.eta(u, 2)


def make_pair(flux_spec, entropy_spec, reference_point: float = 0.0) -> FluxEntropyPair:
    return FluxEntropyPair(make_function(flux_spec), make_function(entropy_spec),
                           reference_point)


def _check_finite(value, what: str):
    if not np.all(np.isfinite(value)):
        raise NonFiniteValue(f"{what} produced a non-finite value")
    return value


def relative_value(g, u, v):
    """Bregman remainder g(u) - g(v) - g'(v)(u - v).

    Applied to eta this is the relative entropy eta(u|v); applied to f it is
    the relative flux f(u|v), which also equals the relative moving-frame
    flux A(u|v).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        out = g(u) - g(v) - g(v, 1) * (u - v)
    return _check_finite(out, "relative_value")


def relative_eta_prime(pair: FluxEntropyPair, u, v):
    """(eta')(u|v) = eta'(u) - eta'(v) - eta''(v)(u - v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    eta = pair.eta
    out = eta(u, 1) - eta(v, 1) - eta(v, 2) * (u - v)
    return _check_finite(out, "relative_eta_prime")


def mu(pair: FluxEntropyPair, u):
    """mu(u) = 1/eta''(u), the mobility of the rewritten diffusion term."""
    d2 = np.asarray(pair.eta(u, 2), dtype=float)
    if np.any(d2 <= 0.0):
        raise ConvexityViolation("eta'' <= 0 at a queried point")
    return _check_finite(1.0 / d2, "mu")


def _F_polyfunc(pair: FluxEntropyPair) -> PolyFunc | None:
    if not (isinstance(pair.f, PolyFunc) and isinstance(pair.eta, PolyFunc)):
        return None
    if pair._F_poly is None:
        pair._F_poly = pair.eta.antiderivative_of_product(pair.f, self_order=2)
    return pair._F_poly


def antiderivative_F(pair: FluxEntropyPair, u):
    """F(u) = -int_{ref}^{u} eta''(w) f(w) dw.

    Polynomial pairs are integrated exactly; otherwise adaptive quadrature
    (abs tol 1e-12, rel tol 1e-10) is used.
    """
    u = np.asarray(u, dtype=float)
    ref = pair.reference_point
    poly = _F_polyfunc(pair)
    if poly is not None:
        out = -(poly(u) - poly(ref))
        return _check_finite(out, "antiderivative_F")

    def integrand(w):
        return pair.eta(w, 2) * pair.f(w)

    def single(x):
        val, err = integrate.quad(integrand, ref, x, epsabs=1e-12, epsrel=1e-10,
                                  limit=200)
        if not np.isfinite(val) or err > max(1e-10 * abs(val), 1e-11):
            raise QuadratureFailure(
                f"antiderivative_F quadrature error {err:.3e} at u={x}")
        return -val

    if u.ndim == 0:
        return _check_finite(single(float(u)), "antiderivative_F")
    return _check_finite(np.array([single(x) for x in u.ravel()]).reshape(u.shape),
                         "antiderivative_F")


def entropy_flux_q(pair: FluxEntropyPair, u):
    """Entropy flux q(u) = int_{ref}^{u} eta'(w) f'(w) dw."""
    u = np.asarray(u, dtype=float)
    ref = pair.reference_point
    if isinstance(pair.f, PolyFunc) and isinstance(pair.eta, PolyFunc):
        if pair._q_poly is None:
            prod = npoly.polymul(pair.eta._deriv_coeffs(1), pair.f._deriv_coeffs(1))
            pair._q_poly = PolyFunc(npoly.polyint(prod))
        poly = pair._q_poly
        return _check_finite(poly(u) - poly(ref), "entropy_flux_q")

    def single(x):
        val, _ = integrate.quad(lambda w: pair.eta(w, 1) * pair.f(w, 1), ref, x,
                                epsabs=1e-12, epsrel=1e-10, limit=200)
        return val

    if u.ndim == 0:
        return _check_finite(single(float(u)), "entropy_flux_q")
    return _check_finite(np.array([single(x) for x in u.ravel()]).reshape(u.shape),
                         "entropy_flux_q")


def entropy_flux_G(pair: FluxEntropyPair, sigma: float, u):
    """Entropy flux of the moving-frame flux A = -sigma*u + f, i.e. G' = eta' A'."""
    u = np.asarray(u, dtype=float)
    ref = pair.reference_point
    return entropy_flux_q(pair, u) - sigma * (pair.eta(u) - pair.eta(ref))


@dataclass
class HypothesisReport:
    """Sampled certificate for the entropy hypotheses.

    ``alpha_est`` is the sampled min of min(eta'', eta''''); ``constants``
    maps items "i".."iv" to the smallest C making the inequality hold on the
    sample set, and ``worst_points`` to the (u, v) pair attaining it.
    """

    alpha_est: float
    min_eta_dd: float
    min_eta_dddd: float
    constants: dict
    worst_points: dict
    h1_passed: bool
    h2_passed: bool
    passed: bool
    failures: list
    theta: float
    n_samples: int


def check_hypotheses(pair: FluxEntropyPair, theta: float,
                     urange: tuple[float, float] | None = None,
                     n_samples: int = 41, seed: int = 0) -> HypothesisReport:
    """Sampled pass/fail certificate for the convexity/growth hypotheses.

    The first hypothesis asks for alpha > 0 with eta'' >= alpha and
    eta'''' >= alpha everywhere; the second asks, for |v| <= theta, for a
    finite C in four comparison inequalities whose indicator split sits at
    |u| = 2*theta.  A lattice of n_samples per axis plus 10x random points is
    scanned; this is a certificate on the sampled set, not a proof.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if urange is None:
        urange = (-2.0 * theta - 1.0, 2.0 * theta + 1.0)
    lo, hi = urange
    if hi <= lo:
        raise ValueError("empty sample range")

    n_lattice = n_samples | 1  # odd so a symmetric range includes its midpoint
    rng = np.random.default_rng(seed)
    u_lattice = np.linspace(lo, hi, n_lattice)
    v_lattice = np.linspace(-theta, theta, n_lattice)
    u_rand = rng.uniform(lo, hi, size=10 * n_samples)
    v_rand = rng.uniform(-theta, theta, size=10 * n_samples)

    u_pts = np.concatenate([u_lattice, u_rand])
    v_pts = np.concatenate([v_lattice, v_rand])

    eta, f = pair.eta, pair.f
    d2 = np.asarray(eta(u_pts, 2), dtype=float)
    d4 = np.asarray(eta(u_pts, 4), dtype=float)
    if not (np.all(np.isfinite(d2)) and np.all(np.isfinite(d4))):
        raise NonFiniteValue("entropy derivative sample is non-finite")
    min_dd = float(np.min(d2))
    min_dddd = float(np.min(d4))
    alpha_est = min(min_dd, min_dddd)

    uu, vv = np.meshgrid(u_pts, v_pts, indexing="ij")
    uu, vv = uu.ravel(), vv.ravel()
    keep = np.abs(uu - vv) > 1e-9
    uu, vv = uu[keep], vv[keep]

    e_rel = relative_value(eta, uu, vv)
    ep = np.abs(np.asarray(eta(uu, 1)) - np.asarray(eta(vv, 1)))
    fd = np.abs(np.asarray(f(uu)) - np.asarray(f(vv)))
    epp = np.abs(np.asarray(eta(uu, 2)) - np.asarray(eta(vv, 2)))
    Fu = antiderivative_F(pair, uu)
    Fv = antiderivative_F(pair, vv)
    intF = np.abs(Fv - Fu)  # |int_v^u eta'' f dw|
    inner = np.abs(uu) <= 2.0 * theta

    items = {
        "i": (np.where(inner, ep**2, ep), e_rel),
        "ii": (fd, ep),
        "iii": (epp, ep),
        "iv": (intF, np.where(inner, ep, ep**2)),
    }

    constants, worst_points = {}, {}
    h2_passed = True
    failures = []
    for name, (lhs, rhs) in items.items():
        if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
            raise NonFiniteValue(f"growth comparison ({name}) sample is non-finite")
        degenerate = (rhs <= 1e-14) & (lhs > 1e-12)
        valid = rhs > 1e-14
        if np.any(degenerate):
            constants[name] = np.inf
            k = int(np.argmax(degenerate))
            worst_points[name] = (float(uu[k]), float(vv[k]))
            h2_passed = False
            failures.append(f"growth comparison ({name}): LHS > 0 with "
                            f"vanishing RHS at (u, v) = {worst_points[name]}")
            continue
        ratio = np.where(valid, lhs / np.where(valid, rhs, 1.0), 0.0)
        k = int(np.argmax(ratio))
        constants[name] = float(ratio[k])
        worst_points[name] = (float(uu[k]), float(vv[k]))

    h1_passed = alpha_est > 0.0
    if not h1_passed:
        if min_dddd <= 0.0:
            failures.insert(0, f"convexity floor fails: min eta'''' = "
                               f"{min_dddd:g} (needs a uniform positive "
                               "lower bound)")
        if min_dd <= 0.0:
            failures.insert(0, f"convexity floor fails: min eta'' = "
                               f"{min_dd:g} (needs a uniform positive "
                               "lower bound)")
    return HypothesisReport(
        alpha_est=alpha_est, min_eta_dd=min_dd, min_eta_dddd=min_dddd,
        constants=constants, worst_points=worst_points,
        h1_passed=h1_passed, h2_passed=h2_passed,
        passed=h1_passed and h2_passed, failures=failures,
        theta=theta, n_samples=n_samples)
