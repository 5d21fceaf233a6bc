"""Angular arithmetic, closed layer curves, arc length and geodesic distance.

Phases are plain floats reduced into [0, 2*pi).  A layer is a closed curve
given in polar form R(theta) > 0; arc length along it is tabulated once at
construction and evaluated through a C1 cubic interpolant so that analytic
derivatives of arc-based quantities agree with finite differences of the
tabulated values.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_phase(theta):
    """Reduce an angle (scalar or array) into [0, 2*pi)."""
    r = np.mod(theta, TWO_PI)
    # mod of a tiny negative can round up to exactly 2*pi
    if np.ndim(r) == 0:
        return 0.0 if r >= TWO_PI else float(r)
    r[r >= TWO_PI] = 0.0
    return r


def phase_of(x: float, y: float) -> float:
    """Polar phase of a point, in [0, 2*pi); the origin maps to 0.

    The (x=0, y<0) ray maps to 3*pi/2 so the result always stays inside
    [0, 2*pi).
    """
    if x == 0.0:
        if y > 0.0:
            return 0.5 * math.pi
        if y < 0.0:
            return 1.5 * math.pi
        return 0.0
    if x < 0.0:
        return wrap_phase(math.atan(y / x) + math.pi)
    # x > 0
    if y >= 0.0:
        return wrap_phase(math.atan(y / x))
    return wrap_phase(math.atan(y / x) + TWO_PI)


def phase_of_many(x, y):
    """Vectorized phase_of."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    at = np.arctan2(y, x)  # branch-equivalent to the piecewise definition
    out = wrap_phase(np.where((x == 0.0) & (y == 0.0), 0.0, at))
    return out


def ang_dist(a, b):
    """Unsigned angular distance in [0, pi] between two phases."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d = np.where(d > math.pi, np.abs(d - TWO_PI), np.where(d <= -math.pi, np.abs(d + TWO_PI), np.abs(d)))
    return float(d) if np.ndim(d) == 0 else d


def ang_diff(a, b):
    """Signed counterclockwise phase difference a - b, reduced into (-pi, pi]."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d = np.where(d > math.pi, d - TWO_PI, np.where(d <= -math.pi, d + TWO_PI, d))
    return float(d) if np.ndim(d) == 0 else d


def ccw_gap(a, b):
    """Counterclockwise angular travel from b to a, in [0, 2*pi)."""
    return wrap_phase(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def _central_diff(fn: Callable, step: float = 1e-6) -> Callable:
    def deriv(theta):
        return (fn(theta + step) - fn(theta - step)) / (2.0 * step)

    return deriv


class LayerCurve:
    """Closed star-shaped curve R(theta) with cached arc-length tables.

    The cumulative arc map s(theta) is built with per-cell Simpson quadrature
    on ``table_n`` uniform cells and evaluated through a cubic Hermite
    interpolant whose nodal derivatives are the exact speeds
    sqrt(R^2 + R'^2).  Inverse lookups combine a binary search with Newton
    refinement on the interpolant.
    """

    def __init__(self, radius_fn: Callable, radius_deriv_fn: Callable | None = None,
                 table_n: int = 4096, name: str = ""):
        self.radius_fn = radius_fn
        self.radius_deriv_fn = radius_deriv_fn if radius_deriv_fn is not None else _central_diff(radius_fn)
        self.table_n = int(table_n)
        self.name = name
        if self.table_n < 16:
            raise ValueError("table_n must be >= 16")
        self._build_tables()

    # -- construction -----------------------------------------------------

    def _build_tables(self):
        n = self.table_n
        h = TWO_PI / n
        nodes = np.arange(n + 1) * h
        mids = (np.arange(n) + 0.5) * h
        r_nodes = np.asarray(self.radius_fn(nodes), dtype=float)
        if np.any(r_nodes <= 0.0):
            raise ValueError(f"radius must be strictly positive everywhere (curve {self.name!r})")
        g_nodes = self._speed_exact(nodes)
        g_mids = self._speed_exact(mids)
        cells = (h / 6.0) * (g_nodes[:-1] + 4.0 * g_mids + g_nodes[1:])
        cum = np.concatenate(([0.0], np.cumsum(cells)))
        if np.any(np.diff(cum) <= 0.0):
            raise ValueError(f"arc-length table is not strictly increasing (curve {self.name!r})")
        self._grid_h = h
        self._inv_h = 1.0 / h
        self._cum = cum
        self._g = g_nodes
        self.total_length = float(cum[-1])
        # per-cell cubic Hermite coefficients, Horner order
        c0 = cum[:-1]
        dc = np.diff(cum)
        m0 = g_nodes[:-1] * h
        m1 = g_nodes[1:] * h
        self._coef = np.column_stack((c0, m0, 3.0 * dc - 2.0 * m0 - m1,
                                      -2.0 * dc + m0 + m1))

    def _speed_exact(self, theta):
        r = np.asarray(self.radius_fn(theta), dtype=float)
        dr = np.asarray(self.radius_deriv_fn(theta), dtype=float)
        return np.sqrt(r * r + dr * dr)

    # -- basic evaluation --------------------------------------------------

    def radius(self, theta):
        return self.radius_fn(wrap_phase(theta))

    def speed(self, theta):
        """Arc length per radian sqrt(R^2 + R'^2), exact callables."""
        return self._speed_exact(wrap_phase(theta))

    def point(self, theta):
        """Cartesian point on the curve at the given phase."""
        th = wrap_phase(theta)
        r = self.radius_fn(th)
        return r * np.cos(th), r * np.sin(th)

    # -- cumulative arc map and its inverse ---------------------------------

    def _hermite(self, theta, deriv=False):
        u = np.mod(np.asarray(theta, dtype=float), TWO_PI) * self._inv_h
        j = np.minimum(u.astype(np.int64), self.table_n - 1)
        t = u - j
        c = self._coef[j]
        if not deriv:
            return c[..., 0] + t * (c[..., 1] + t * (c[..., 2] + t * c[..., 3]))
        return (c[..., 1] + t * (2.0 * c[..., 2] + 3.0 * t * c[..., 3])) * self._inv_h

    def arc_coord(self, theta):
        """Cumulative counterclockwise arc length from phase 0 to theta."""
        out = self._hermite(theta)
        return float(out) if np.ndim(theta) == 0 else out

    def arc_coord_deriv(self, theta):
        """Derivative of the tabulated arc map.

        Used as the speed factor in analytic gradients so they stay the exact
        derivative of arc quantities computed from the same table.
        """
        out = self._hermite(theta, deriv=True)
        return float(out) if np.ndim(theta) == 0 else out

    def phase_at_arc(self, s):
        """Phase whose cumulative arc coordinate equals s (s taken mod L)."""
        scalar = np.ndim(s) == 0
        sv = np.mod(np.asarray(s, dtype=float), self.total_length)
        j = np.clip(np.searchsorted(self._cum, sv, side="right") - 1, 0, self.table_n - 1)
        seg = self._cum[j + 1] - self._cum[j]
        th = (j + (sv - self._cum[j]) / seg) * self._grid_h
        for _ in range(3):
            th = th - (self._hermite(th) - sv) / self._hermite(th, deriv=True)
            th = np.clip(th, 0.0, TWO_PI * (1.0 - 1e-16))
        th = wrap_phase(th)
        return float(th) if scalar else th

    # -- distances ----------------------------------------------------------

    def arc_length_between(self, a, b):
        """Counterclockwise arc length from phase a to phase b (wraps at 2*pi)."""
        la = self.arc_coord(a)
        lb = self.arc_coord(b)
        out = np.mod(lb - la, self.total_length)
        return float(out) if (np.ndim(a) == 0 and np.ndim(b) == 0) else out

    def geodesic_dist(self, a, b):
        """Shorter-way arc distance between two phases; at most L/2."""
        ell = self.arc_length_between(a, b)
        out = np.minimum(ell, self.total_length - ell)
        return float(out) if np.ndim(out) == 0 else out

    def antipode(self, phi):
        """Phase at geodesic distance L/2 counterclockwise from phi."""
        return self.phase_at_arc(self.arc_coord(phi) + 0.5 * self.total_length)

    def geodesic_midpoint(self, a, b):
        """Phase equidistant (along the ccw arc from a to b) from both ends."""
        return self.phase_at_arc(self.arc_coord(a) + 0.5 * self.arc_length_between(a, b))

    # -- constructors --------------------------------------------------------

    @classmethod
    def circle(cls, radius: float, table_n: int = 4096) -> "LayerCurve":
        r = float(radius)
        if r <= 0:
            raise ValueError("circle radius must be positive")
        return cls(lambda th: np.full_like(np.asarray(th, dtype=float), r),
                   lambda th: np.zeros_like(np.asarray(th, dtype=float)),
                   table_n=table_n, name=f"circle(r={r})")

    @classmethod
    def sinusoid(cls, base: float, amplitude: float, frequency: float,
                 table_n: int = 4096) -> "LayerCurve":
        b, a, w = float(base), float(amplitude), float(frequency)
        return cls(lambda th: b + a * np.sin(w * np.asarray(th, dtype=float)),
                   lambda th: a * w * np.cos(w * np.asarray(th, dtype=float)),
                   table_n=table_n, name=f"sinusoid({b},{a},{w})")

    @classmethod
    def from_table(cls, samples: Sequence[Sequence[float]], table_n: int = 4096) -> "LayerCurve":
        """Curve from (theta, R) samples with periodic linear interpolation."""
        pts = sorted((wrap_phase(float(t)), float(r)) for t, r in samples)
        if len(pts) < 3:
            raise ValueError("table curve needs at least 3 samples")
        th = np.array([p[0] for p in pts])
        rr = np.array([p[1] for p in pts])
        if np.any(np.diff(th) <= 0):
            raise ValueError("table curve has duplicate phases")
        th_ext = np.concatenate((th, [th[0] + TWO_PI]))
        rr_ext = np.concatenate((rr, [rr[0]]))

        def radius_fn(t):
            tw = np.mod(np.asarray(t, dtype=float) - th[0], TWO_PI) + th[0]
            return np.interp(tw, th_ext, rr_ext)

        return cls(radius_fn, None, table_n=table_n, name="table")


def validate_nesting(curves: Sequence[LayerCurve], samples: int = 2048) -> None:
    """Require each curve to lie strictly inside the next one."""
    theta = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    radii = [np.asarray(c.radius_fn(theta), dtype=float) for c in curves]
    for k in range(len(curves) - 1):
        if np.any(radii[k + 1] - radii[k] <= 0.0):
            raise ValueError(f"layer {k + 2} does not strictly enclose layer {k + 1}")
