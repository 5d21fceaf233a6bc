"""Single-layer barrier coverage: segments, joint monitoring probability,
and the gradient control laws for agents and division points.

An assembly is one layer's working set: agent phases interleaved with the
division points that bound each agent's responsibility segment.  All segment
integrals run on quadrature pieces split at each agent's own phase and at
its geodesic cut point (arc distance L/2), where the integrand loses
smoothness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import TWO_PI, LayerCurve, wrap_phase
from .models import DensityModel, SensingModel
from .quadrature import PieceBatch


def _prev(x: np.ndarray) -> np.ndarray:
    """x shifted so element j holds x[j-1] (cyclic)."""
    return np.concatenate((x[-1:], x[:-1]))


def _next(x: np.ndarray) -> np.ndarray:
    """x shifted so element j holds x[j+1] (cyclic)."""
    return np.concatenate((x[1:], x[:1]))


class OrderingError(RuntimeError):
    """Cyclic interleaving of agents and division points was violated."""


@dataclass(frozen=True)
class Gains:
    kappa_r: float = 0.1
    kappa_omega: float = 0.01
    kappa_s: float = 0.05


@dataclass(frozen=True)
class LayerAssembly:
    """Working members of one layer, sorted counterclockwise by phase.

    ``s[i]`` is member i's own division point: the clockwise boundary of its
    segment.  Member i's segment runs ccw from s[i] to s[i+1] (wrapping), the
    full layer when there is a single member.
    """

    curve: LayerCurve
    sensing: SensingModel
    density: DensityModel
    ids: np.ndarray
    phi: np.ndarray
    s: np.ndarray
    quad_n: int = 192

    @staticmethod
    def build(curve, sensing, density, ids, phi, s, quad_n=192, validate=True) -> "LayerAssembly":
        ids = np.asarray(ids, dtype=np.int64)
        phi = wrap_phase(np.asarray(phi, dtype=float))
        s = wrap_phase(np.asarray(s, dtype=float))
        phi = np.atleast_1d(phi)
        s = np.atleast_1d(s)
        order = np.argsort(phi, kind="stable")
        asm = LayerAssembly(curve, sensing, density, ids[order], phi[order], s[order], quad_n)
        if validate:
            msg = asm.interleaving_violation()
            if msg:
                raise OrderingError(msg)
        return asm

    @property
    def n(self) -> int:
        return len(self.ids)

    def index_of(self, agent_id: int) -> int:
        hits = np.nonzero(self.ids == agent_id)[0]
        if len(hits) != 1:
            raise KeyError(f"agent {agent_id} is not a member")
        return int(hits[0])

    # -- structure ----------------------------------------------------------

    def alpha_index(self, j: int) -> int:
        """Sorted index of the clockwise neighbor of sorted member j."""
        return (j - 1) % self.n

    def beta_index(self, j: int) -> int:
        """Sorted index of the counterclockwise neighbor of sorted member j."""
        return (j + 1) % self.n

    def segment(self, j: int):
        """Segment (start, end) of sorted member j; equal phases mean the
        whole layer for a lone member."""
        return float(self.s[j]), float(self.s[self.beta_index(j)])

    def segment_lengths(self) -> np.ndarray:
        """Arc length of each member's segment."""
        if self.n == 1:
            return np.array([self.curve.total_length])
        nxt = _next(self.s)
        return self.curve.arc_length_between(self.s, nxt)

    def ordering_check(self):
        """(violation message or None, min angular clearance).

        Member j's own division point must sit strictly inside the ccw gap
        from its clockwise neighbor's phase to its own phase; the clearance
        is the smallest distance from any division point to the enclosing
        agent phases.
        """
        if self.n == 0:
            return "empty assembly", 0.0
        if self.n == 1:
            return None, TWO_PI
        prev_phi = _prev(self.phi)
        gap = np.mod(self.phi - prev_phi, TWO_PI)
        off = np.mod(self.s - prev_phi, TWO_PI)
        if np.any(gap == 0.0):
            return "duplicate member phases", 0.0
        min_gap = float(min(np.min(off), np.min(gap - off)))
        bad = np.nonzero((off <= 0.0) | (off >= gap))[0]
        if len(bad):
            j = int(bad[0])
            return (f"division point of agent {int(self.ids[j])} left its gap "
                    f"(offset {off[j]:.6g} of {gap[j]:.6g})"), min_gap
        return None, min_gap

    def interleaving_violation(self) -> str | None:
        """None when phases are distinct and division points interleave."""
        return self.ordering_check()[0]

    def min_ordering_gap(self) -> float:
        """Smallest angular clearance between any agent and adjacent division
        point; positive iff the interleaving invariant holds strictly."""
        return self.ordering_check()[1]

    def with_updates(self, phi=None, s=None, validate=True) -> "LayerAssembly":
        return LayerAssembly.build(self.curve, self.sensing, self.density, self.ids,
                                   self.phi if phi is None else phi,
                                   self.s if s is None else s,
                                   self.quad_n, validate=validate)


def segment_of(assembly: LayerAssembly, agent_id: int):
    """Segment (s_own, s_ccw_neighbor) of an agent; identical endpoints mean
    the whole layer (single member)."""
    return assembly.segment(assembly.index_of(agent_id))


# -- batched segment integrals ----------------------------------------------


def _segment_batch(assembly: LayerAssembly) -> PieceBatch:
    """Quadrature pieces for every member's segment, built in one vector pass.

    Each segment is cut at the owner's phase, at the owner's geodesic cut
    point, and at the 2*pi seam; pieces that start at or past the seam are
    shifted down by 2*pi so nodes never wrap to the wrong side of densities
    that jump at the seam.
    """
    curve = assembly.curve
    L = curve.total_length
    n = assembly.n
    lo = assembly.s
    span = np.full(n, TWO_PI) if n == 1 else np.mod(_next(lo) - lo, TWO_PI)
    # the geodesic cut (arc L/2 from the owner) needs a split only when the
    # segment actually reaches that far on either side of the owner
    sc_lo = curve.arc_coord(lo)
    sc_phi = curve.arc_coord(assembly.phi)
    back = np.mod(sc_phi - sc_lo, L)
    arc_span = np.full(n, L) if n == 1 else np.mod(curve.arc_coord(_next(lo)) - sc_lo, L)
    fwd = arc_span - back
    needs_cut = np.maximum(back, fwd) > 0.5 * L
    u_cut = np.full(n, np.inf)
    if np.any(needs_cut):
        cut = np.atleast_1d(curve.phase_at_arc(sc_phi[needs_cut] + 0.5 * L))
        u_cut[needs_cut] = np.mod(cut - lo[needs_cut], TWO_PI)
    u_seam = TWO_PI - lo
    offs = np.column_stack((
        np.mod(assembly.phi - lo, TWO_PI),
        u_cut,
        u_seam,
    ))
    offs = np.where((offs <= 0.0) | (offs >= span[:, None]), np.inf, offs)
    offs.sort(axis=1)
    bounds = np.column_stack((np.zeros(n), np.where(np.isinf(offs), span[:, None], offs),
                              span))
    starts_off = bounds[:, :-1]
    piece_span = np.diff(bounds, axis=1)
    shift = np.where(starts_off >= u_seam[:, None], TWO_PI, 0.0)
    starts = lo[:, None] + starts_off - shift
    owners = np.broadcast_to(np.arange(n)[:, None], piece_span.shape)
    mask = piece_span > 0.0
    return PieceBatch(starts[mask], piece_span[mask], owners[mask], n,
                      n=assembly.quad_n)


def _eval_fields(assembly: LayerAssembly, batch: PieceBatch):
    """Geodesic distances and their phase-derivative signs on batch nodes."""
    curve = assembly.curve
    L = curve.total_length
    s_theta = curve.arc_coord(batch.theta)
    s_phi = curve.arc_coord(assembly.phi)[batch.owners][:, None]
    ell = np.mod(s_theta - s_phi, L)
    d = np.minimum(ell, L - ell)
    # d(phi, theta) = ell or L - ell; its phi-derivative is -s'(phi) on the
    # ccw side (ell < L/2) and +s'(phi) on the clockwise side.  Pieces are
    # split at the cut, so the side is decided per piece (from its midpoint
    # node); shared endpoint nodes take each piece's one-sided derivative.
    mid = batch.theta.shape[1] // 2
    sign = np.where(ell[:, mid] <= 0.5 * L, -1.0, 1.0)[:, None]
    return d, sign


def coverage_fields(assembly: LayerAssembly):
    """Per-member coverage integrals in one vector pass.

    Returns arrays (aligned with assembly order): h (covered mass), grad
    (dH/dphi_i), mass (segment intrusion mass).
    """
    if assembly.n == 0:
        z = np.zeros(0)
        return z, z, z
    batch = _segment_batch(assembly)
    d, sign = _eval_fields(assembly, batch)
    rho = np.asarray(assembly.density(batch.theta), dtype=float)
    f = assembly.sensing.detect_prob(d)
    fp = assembly.sensing.detect_prob_deriv(d)
    h = batch.reduce(f * rho)
    # integrand of dH/dphi_i is f'(d) * dd/dphi * rho with dd/dphi = sign * s'(phi_i);
    # s' comes from the arc table so this stays the exact derivative of h above
    speed = assembly.curve.arc_coord_deriv(assembly.phi)
    grad = batch.reduce(fp * sign * rho) * speed
    mass = batch.reduce(rho)
    return h, grad, mass


def coverage_quality(assembly: LayerAssembly) -> float:
    """Joint monitoring probability: total intrusion mass covered, weighted
    by each owner's detection probability."""
    h, _, _ = coverage_fields(assembly)
    return float(np.sum(h))


def agent_gradient(assembly: LayerAssembly, agent_id: int) -> float:
    """dH/dphi_i for one member."""
    _, grad, _ = coverage_fields(assembly)
    return float(grad[assembly.index_of(agent_id)])


def agent_angular_velocity(assembly: LayerAssembly, agent_id: int, kappa_omega: float) -> float:
    """Gradient-ascent angular speed of a member over its own segment."""
    return kappa_omega * agent_gradient(assembly, agent_id)


def division_point_velocity(assembly: LayerAssembly, agent_id: int, kappa_s: float) -> float:
    """Rebalancing speed of a member's division point: positive when the
    point sits geodesically closer to the clockwise neighbor."""
    j = assembly.index_of(agent_id)
    a = assembly.alpha_index(j)
    curve = assembly.curve
    return kappa_s * (curve.geodesic_dist(assembly.phi[j], assembly.s[j])
                      - curve.geodesic_dist(assembly.phi[a], assembly.s[j]))


def radial_control(curve: LayerCurve, phi: float, r: float, kappa_r: float) -> float:
    """Radial speed pulling an agent onto the curve."""
    return kappa_r * (float(curve.radius(phi)) - r)


def settle_division_points(assembly: LayerAssembly, kappa_s: float, dt: float,
                           eps: float, cap: int = 200):
    """Iterate the division-point law until each member's point is within
    eps of geodesic equidistance from the two adjacent agents.

    Returns (updated s array, iterations used).
    """
    curve = assembly.curve
    if assembly.n == 1:
        return assembly.s.copy(), 0
    L = curve.total_length
    half = 0.5 * L
    sc_own = curve.arc_coord(assembly.phi)
    sc_alpha = _prev(sc_own)
    s = assembly.s.copy()
    used = 0
    for it in range(cap):
        sc_s = curve.arc_coord(s)
        li = np.mod(sc_s - sc_own, L)
        la = np.mod(sc_s - sc_alpha, L)
        diff = (half - np.abs(li - half)) - (half - np.abs(la - half))
        active = np.abs(diff) > eps
        if not active.any():
            break
        used = it + 1
        s = np.where(active, s + kappa_s * diff * dt, s)
    return wrap_phase(s), used


@dataclass
class StepResult:
    assembly: LayerAssembly
    radii: np.ndarray
    h_total: float          # coverage of the pre-step phases on settled segments
    h_per_agent: np.ndarray
    grad: np.ndarray
    mass: np.ndarray
    inner_iters: int
    min_gap: float


def step_single_layer(assembly: LayerAssembly, radii, gains: Gains, dt: float,
                      eps_frac: float = 1e-4, inner_cap: int = 200,
                      validate: bool = True) -> StepResult:
    """One synchronous round of the single-layer coverage law.

    Division points are settled first against frozen phases, then every
    member takes one explicit-Euler step of the angular and radial laws.
    Ordering violations raise OrderingError; they are a failure oracle, never
    repaired.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    curve = assembly.curve
    eps = eps_frac * curve.total_length
    s_new, iters = settle_division_points(assembly, gains.kappa_s, dt, eps, inner_cap)
    settled = assembly.with_updates(s=s_new, validate=False)

    h, grad, mass = coverage_fields(settled)
    omega = gains.kappa_omega * grad
    radii = np.asarray(radii, dtype=float)
    r_new = radii + gains.kappa_r * (np.asarray(curve.radius(settled.phi), dtype=float) - radii) * dt
    phi_new = wrap_phase(settled.phi + omega * dt)

    stepped = LayerAssembly(curve, settled.sensing, settled.density, settled.ids,
                            phi_new, settled.s, settled.quad_n)
    msg, min_gap = stepped.ordering_check()
    if validate:
        if settled.n > 1 and int(np.sum(_next(phi_new) < phi_new)) > 1:
            raise OrderingError("agents crossed during an angular step")
        if msg:
            raise OrderingError(msg)
    return StepResult(stepped, r_new, float(np.sum(h)), h, grad, mass,
                      iters, min_gap)


def midpoint_division_points(curve: LayerCurve, phi_sorted: np.ndarray) -> np.ndarray:
    """Geodesic midpoints between consecutive agents: the stationary division
    points for frozen phases (antipode for a lone agent)."""
    phi_sorted = np.atleast_1d(np.asarray(phi_sorted, dtype=float))
    if len(phi_sorted) == 1:
        return np.array([curve.antipode(phi_sorted[0])])
    prev = _prev(phi_sorted)
    return np.asarray(curve.geodesic_midpoint(prev, phi_sorted))


def angular_reset_point(phi_i: float, phi_alpha: float) -> float:
    """Division point reset used when an agent's clockwise neighbor changes:
    half the unsigned angular distance behind the agent."""
    from .geometry import ang_dist

    return wrap_phase(phi_i - 0.5 * ang_dist(phi_i, phi_alpha))
