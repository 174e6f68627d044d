"""Uniform computational grid: quadrature, differentiation, shift resampling.

All whole-line functionals are evaluated as composite Simpson sums on a
truncated symmetric domain; fields are value types and every operation here
is pure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import NonFiniteValue, ShiftOutOfRange, TruncationWarning

__all__ = ["Grid", "Field", "integrate", "derivative", "shift_sample"]


class Grid:
    """Uniform symmetric grid on [-half_width, half_width].

    The node count is forced odd so composite Simpson weights apply cleanly.
    """

    def __init__(self, half_width: float, n_points: int):
        if half_width <= 0.0 or n_points < 5:
            raise ValueError("need half_width > 0 and at least 5 nodes")
        n_points |= 1
        self.half_width = float(half_width)
        self.n = n_points
        self.xi = np.linspace(-half_width, half_width, n_points)
        self.h = float(self.xi[1] - self.xi[0])
        w = np.full(n_points, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        self._simpson = w * (self.h / 3.0)

    def integrate_values(self, values: np.ndarray, check: bool = False) -> float:
        """Composite Simpson sum; optionally audit endpoint mass."""
        if check:
            scale = float(np.max(np.abs(values)))
            if scale > 0.0 and max(abs(values[0]), abs(values[-1])) > 1e-10 * scale:
                warnings.warn("integrand carries non-negligible endpoint mass; "
                              "domain truncation may bias the integral",
                              TruncationWarning, stacklevel=3)
        return float(self._simpson @ values)

    def derivative_values(self, values: np.ndarray) -> np.ndarray:
        """4th-order first derivative: central stencils inside, one-sided
        5-point stencils at the edges."""
        v = values
        h = self.h
        out = np.empty_like(v)
        out[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
        out[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * h)
        out[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / (12 * h)
        out[-2] = (3 * v[-1] + 10 * v[-2] - 18 * v[-3] + 6 * v[-4] - v[-5]) / (12 * h)
        out[-1] = (25 * v[-1] - 48 * v[-2] + 36 * v[-3] - 16 * v[-4] + 3 * v[-5]) / (12 * h)
        return out

    def shift_values(self, values: np.ndarray, X: float) -> np.ndarray:
        """Resample at xi + X by cubic spline; boundary values extend outside."""
        if X == 0.0:
            return values.copy()
        return self.shift_from_coeffs(self.spline_coeffs(values), X)

    def spline_coeffs(self, values: np.ndarray) -> np.ndarray:
        """Cubic B-spline coefficients of a grid function, for repeated
        shift evaluations of the same field."""
        return ndimage.spline_filter1d(values, order=3, mode="nearest")

    def shift_from_coeffs(self, coeffs: np.ndarray, X: float) -> np.ndarray:
        if abs(X) >= 0.5 * self.half_width:
            raise ShiftOutOfRange(f"|X| = {abs(X):g} >= half_width/2")
        coords = np.arange(self.n, dtype=float) + X / self.h
        return ndimage.map_coordinates(coeffs, coords[None, :], order=3,
                                       mode="nearest", prefilter=False)


@dataclass
class Field:
    """Grid function with pinned far-field boundary values."""

    grid: Grid
    values: np.ndarray
    boundary: tuple[float, float] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError("values length does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteValue("field contains non-finite values")
        if self.boundary is None:
            self.boundary = (float(self.values[0]), float(self.values[-1]))
        else:
            clamp_tol = 1e-8
            if (abs(self.values[0] - self.boundary[0]) > clamp_tol
                    or abs(self.values[-1] - self.boundary[1]) > clamp_tol):
                raise ValueError("boundary nodes disagree with declared "
                                 "far-field values")


def integrate(field: Field) -> float:
    """Simpson integral of the field over its domain, with endpoint audit."""
    return field.grid.integrate_values(field.values, check=True)


def derivative(field: Field) -> Field:
    """Pointwise d/dxi of the field (4th-order stencils)."""
    return Field(field.grid, field.grid.derivative_values(field.values))


def shift_sample(field: Field, X: float) -> Field:
    """The shifted field xi -> field(xi + X); constant extension outside.

    The result's far-field values are re-read from its own endpoints: after a
    shift the tail values move by O(tail mass), which is legitimate.
    """
    return Field(field.grid, field.grid.shift_values(field.values, X))
