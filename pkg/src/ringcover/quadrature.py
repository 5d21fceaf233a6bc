"""Composite Simpson quadrature over counterclockwise phase intervals.

Intervals may wrap through 2*pi and are always split at the wrap seam (the
intrusion density is allowed to jump there) and at any caller-supplied
interior phases.  Each smooth piece gets a fixed, length-independent number
of Simpson subintervals so integrals vary smoothly under perturbations of
the splits, which keeps finite differences of integrated quantities
consistent with analytic integrands.
"""

from __future__ import annotations

import numpy as np

from .geometry import TWO_PI, ccw_gap, wrap_phase


def ccw_pieces(lo: float, hi: float, splits=(), full_circle: bool = False):
    """Smooth sub-intervals of the ccw interval lo -> hi as (start, span) pairs.

    ``full_circle`` integrates the whole layer when lo == hi would otherwise
    denote an empty interval.
    """
    lo = wrap_phase(lo)
    span = TWO_PI if full_circle else ccw_gap(hi, lo)
    if span == 0.0 and not full_circle:
        return []
    offsets = [0.0, span]
    seam = TWO_PI - lo  # ccw travel from lo to phase 0
    if 0.0 < seam < span:
        offsets.append(seam)
    for s in splits:
        u = ccw_gap(s, lo)
        if 0.0 < u < span:
            offsets.append(u)
    offsets = sorted(set(offsets))
    return [(wrap_phase(lo + a), b - a) for a, b in zip(offsets[:-1], offsets[1:]) if b > a]


_WEIGHT_CACHE: dict = {}
_X_CACHE: dict = {}


def simpson_weights(n: int) -> np.ndarray:
    """Composite Simpson weights for n subintervals (n even), unit step."""
    cached = _WEIGHT_CACHE.get(n)
    if cached is not None:
        return cached
    if n % 2 or n < 2:
        raise ValueError("n must be even and >= 2")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w /= 3.0
    _WEIGHT_CACHE[n] = w
    return w


def _unit_nodes(n: int) -> np.ndarray:
    cached = _X_CACHE.get(n)
    if cached is None:
        cached = _X_CACHE[n] = np.arange(n + 1) / n
    return cached


def integrate_pieces(fn, pieces, n: int = 192) -> float:
    """Integrate fn(theta) over a list of (start, span) pieces.

    Pieces never cross the wrap seam, so nodes are left unwrapped: a piece
    ending at 2*pi is evaluated there, i.e. at the left limit of integrands
    that jump across the seam.
    """
    if not pieces:
        return 0.0
    w = simpson_weights(n)
    x = _unit_nodes(n)
    total = 0.0
    for start, span in pieces:
        theta = start + span * x
        total += float(np.dot(w, np.asarray(fn(theta), dtype=float))) * (span / n)
    return total


def integrate_interval(fn, lo, hi, splits=(), full_circle=False, n: int = 192) -> float:
    """Integrate fn over the ccw phase interval lo -> hi."""
    return integrate_pieces(fn, ccw_pieces(lo, hi, splits, full_circle), n=n)


class PieceBatch:
    """Flattened piece set for many owners, evaluated in one vector pass."""

    def __init__(self, starts, spans, owners, n_owners: int, n: int = 192):
        self.starts = np.asarray(starts, dtype=float)
        self.spans = np.asarray(spans, dtype=float)
        self.owners = np.asarray(owners, dtype=np.int64)
        self.n_owners = n_owners
        self.n = n
        x = _unit_nodes(n)
        # pieces never cross the seam; unwrapped nodes keep seam-endpoint
        # evaluations on the correct side of discontinuous densities
        self.theta = self.starts[:, None] + self.spans[:, None] * x[None, :]
        self.weights = simpson_weights(n)[None, :] * (self.spans / n)[:, None]

    def reduce(self, values: np.ndarray) -> np.ndarray:
        """Per-owner integral of an integrand sampled on self.theta."""
        piece_sums = np.sum(self.weights * values, axis=1)
        return np.bincount(self.owners, weights=piece_sums, minlength=self.n_owners)
