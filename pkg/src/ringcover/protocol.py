"""Distributed agent lifecycle for multi-layer coverage: patrol, target
identification, entry requests, neighbor seeking, division-point upkeep,
weight-based layer changes, and membership accounting.

Decision functions are pure reads of a round snapshot; the simulation engine
serializes their commits.  Layer indices are 1-based; 0 means "no target".
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import LayerCurve, ccw_gap, phase_of, wrap_phase
from .coverage import LayerAssembly, angular_reset_point


class Role(enum.IntEnum):
    FREE = 0
    LAYER = 1


class DetectState(enum.IntEnum):
    OPEN = 0
    SATURATED = 1


@dataclass
class AgentState:
    """Public state of one agent."""

    id: int
    x: float
    y: float
    phase: float
    radius: float
    role: Role = Role.FREE
    target_layer: int = 0
    division_point: float = math.nan
    detect_state: DetectState = DetectState.OPEN
    prev_alpha: int = -1  # clockwise neighbor at the last division-point commit

    @staticmethod
    def at(agent_id: int, x: float, y: float) -> "AgentState":
        return AgentState(agent_id, float(x), float(y), phase_of(x, y), math.hypot(x, y))

    def set_polar(self, r: float, phi: float) -> None:
        self.radius = float(r)
        self.x = float(r * math.cos(phi))
        self.y = float(r * math.sin(phi))
        self.phase = phase_of(self.x, self.y)

    def working_on(self) -> int:
        """Layer the agent currently covers (0 for free agents)."""
        return self.target_layer if self.role == Role.LAYER else 0


@dataclass
class LayerRegistry:
    """Per-round membership snapshot, rebuilt from roles every round."""

    n_layers: int
    members: list  # per layer (1-based key k -> members[k-1]): list of agent ids
    counts: np.ndarray
    n_working: int
    n_free: int


def rebuild_registry(agents, n_layers: int) -> LayerRegistry:
    """Count every working agent into its layer."""
    members = [[] for _ in range(n_layers)]
    for a in agents:
        if a.role == Role.LAYER:
            if not 1 <= a.target_layer <= n_layers:
                raise ValueError(f"agent {a.id} works on invalid layer {a.target_layer}")
            members[a.target_layer - 1].append(a.id)
    counts = np.array([len(m) for m in members], dtype=np.int64)
    n_working = int(counts.sum())
    return LayerRegistry(n_layers, members, counts, n_working, len(list(agents)) - n_working)


@dataclass(frozen=True)
class LayerView:
    """Frozen public fields of one layer's members, sorted ccw by phase."""

    ids: np.ndarray
    phi: np.ndarray
    s: np.ndarray
    c: np.ndarray  # DetectState values

    @property
    def n(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class Snapshot:
    """Immutable public view of all agents at a round boundary."""

    ids: np.ndarray
    phase: np.ndarray
    radius: np.ndarray
    role: np.ndarray
    target_layer: np.ndarray
    division_point: np.ndarray
    detect_state: np.ndarray
    registry: LayerRegistry
    layers: list  # per-layer LayerView


def take_snapshot(agents, n_layers: int) -> Snapshot:
    agents = list(agents)
    registry = rebuild_registry(agents, n_layers)
    by_id = {a.id: a for a in agents}
    views = []
    for k in range(1, n_layers + 1):
        ids = registry.members[k - 1]
        phi = np.array([by_id[i].phase for i in ids])
        s = np.array([by_id[i].division_point for i in ids])
        c = np.array([int(by_id[i].detect_state) for i in ids], dtype=np.int64)
        order = np.argsort(phi, kind="stable")
        views.append(LayerView(np.array(ids, dtype=np.int64)[order], phi[order],
                               s[order], c[order]))
    return Snapshot(
        np.array([a.id for a in agents], dtype=np.int64),
        np.array([a.phase for a in agents]),
        np.array([a.radius for a in agents]),
        np.array([int(a.role) for a in agents], dtype=np.int64),
        np.array([a.target_layer for a in agents], dtype=np.int64),
        np.array([a.division_point for a in agents]),
        np.array([int(a.detect_state) for a in agents], dtype=np.int64),
        registry,
        views,
    )


# -- completion rate and detect state -----------------------------------------


def completion_rate(assembly: LayerAssembly, agent_id: int,
                    fields=None) -> float:
    """Detection probability conditioned on intrusion through the agent's own
    segment; 1 by convention for a zero-mass segment."""
    from .coverage import coverage_fields

    j = assembly.index_of(agent_id)
    h, _, mass = coverage_fields(assembly) if fields is None else fields
    if mass[j] < 1e-12:
        return 1.0
    return float(h[j] / mass[j])


def update_detect_state(eta: float, threshold: float) -> DetectState:
    """Saturated strictly above the threshold, open otherwise."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie strictly inside (0, 1)")
    return DetectState.SATURATED if eta > threshold else DetectState.OPEN


# -- free-agent motion --------------------------------------------------------


def patrol_step(agent: AgentState, omega0: float, dt: float) -> None:
    """Advance a free agent along its circle; the radius is exactly
    preserved by the polar update."""
    agent.set_polar(agent.radius, wrap_phase(agent.phase + omega0 * dt))


def approach_step(agent: AgentState, target: LayerCurve, kappa_r: float, dt: float) -> None:
    """Radial motion toward the target curve at the agent's current phase."""
    r_target = float(target.radius(agent.phase))
    agent.set_polar(agent.radius + kappa_r * (r_target - agent.radius) * dt, agent.phase)


def approach_radius_step(agent: AgentState, r_target: float, kappa_r: float, dt: float) -> None:
    """Radial motion toward a fixed radius (the patrol ring)."""
    agent.set_polar(agent.radius + kappa_r * (r_target - agent.radius) * dt, agent.phase)


def in_band(agent: AgentState, curve: LayerCurve, delta: float) -> bool:
    r_curve = float(curve.radius(agent.phase))
    return r_curve - delta <= agent.radius <= r_curve + delta


# -- segment lookup and layer decisions ---------------------------------------


def segment_owner(view: LayerView, phase: float) -> int:
    """Id of the member whose segment contains the given phase.

    Each member's segment starts at its own division point and runs ccw to
    the next point, so the owner is the member with the largest division
    point at or below the phase (cyclically).
    """
    if view.n == 0:
        raise ValueError("layer has no members")
    if view.n == 1:
        return int(view.ids[0])
    order = np.argsort(view.s, kind="stable")
    j = int(np.searchsorted(view.s[order], phase, side="right")) - 1
    return int(view.ids[order[j % view.n]])


def identify_target_layer(agent_idx: int, snapshot: Snapshot) -> int:
    """Innermost-first scan for a layer that would admit the agent at its
    current phase; 0 when every layer refuses."""
    phase = float(snapshot.phase[agent_idx])
    for k in range(1, snapshot.registry.n_layers + 1):
        view = snapshot.layers[k - 1]
        if view.n == 0:
            return k
        owner = segment_owner(view, phase)
        j = int(np.nonzero(view.ids == owner)[0][0])
        if view.c[j] == int(DetectState.OPEN):
            return k
    return 0


@dataclass(frozen=True)
class EntryDecision:
    admitted: bool
    incumbent: int = -1          # deciding member, -1 for an empty layer
    division_point: float = math.nan  # set for empty-layer entries only


def request_entry(agent_idx: int, k: int, snapshot: Snapshot) -> EntryDecision:
    """Entry decision against the snapshot.

    An empty layer always admits and assigns the antipodal division point.
    Otherwise the member owning the entrant's phase decides: saturated
    refuses, open admits.  Simultaneous requests are arbitrated by the
    engine, not here.
    """
    view = snapshot.layers[k - 1]
    phase = float(snapshot.phase[agent_idx])
    if view.n == 0:
        return EntryDecision(True, -1, wrap_phase(phase + math.pi))
    owner = segment_owner(view, phase)
    j = int(np.nonzero(view.ids == owner)[0][0])
    if view.c[j] == int(DetectState.SATURATED):
        return EntryDecision(False, owner)
    return EntryDecision(True, owner)


def find_neighbors(agent_id: int, view: LayerView) -> tuple[int, int]:
    """(clockwise, counterclockwise) nearest same-layer members.

    A lone member neighbors itself; with two members the other one fills
    both slots.
    """
    j = np.nonzero(view.ids == agent_id)[0]
    if len(j) != 1:
        raise KeyError(f"agent {agent_id} is not a member of this layer")
    if view.n == 1:
        return agent_id, agent_id
    phase = float(view.phi[int(j[0])])
    others = view.ids != agent_id
    ids = view.ids[others]
    phi = view.phi[others]
    if view.n == 2:
        other = int(ids[0])
        return other, other
    alpha = int(ids[np.argmin(ccw_gap(phase, phi))])
    beta = int(ids[np.argmin(ccw_gap(phi, phase))])
    return alpha, beta


@dataclass(frozen=True)
class DivisionAction:
    alpha: int
    beta: int
    reset: bool
    new_s: float = math.nan


def maintain_division_point(agent_id: int, prev_alpha: int, view: LayerView,
                            phase: float) -> DivisionAction:
    """Reset the division point when the clockwise neighbor changed since the
    last round, otherwise signal that the regular coverage step should run."""
    alpha, beta = find_neighbors(agent_id, view)
    if alpha != prev_alpha:
        if alpha == agent_id:
            new_s = wrap_phase(phase + math.pi)
        else:
            j = int(np.nonzero(view.ids == alpha)[0][0])
            new_s = angular_reset_point(phase, float(view.phi[j]))
        return DivisionAction(alpha, beta, True, new_s)
    return DivisionAction(alpha, beta, False)


def weight_based_layer_change(agent_idx: int, snapshot: Snapshot) -> bool:
    """True when a working agent on layer k > 1 should leave to help the
    inner layer: the inner member owning its phase is working and open."""
    k = int(snapshot.target_layer[agent_idx])
    if k <= 1:
        return False
    inner = snapshot.layers[k - 2]
    if inner.n == 0:
        return False
    owner = segment_owner(inner, float(snapshot.phase[agent_idx]))
    j = int(np.nonzero(inner.ids == owner)[0][0])
    return inner.c[j] == int(DetectState.OPEN)


def total_detection_probability(per_layer) -> float:
    """System-level detection probability from per-layer probabilities."""
    p = np.asarray(per_layer, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("per-layer probabilities must lie in [0, 1]")
    return float(1.0 - np.prod(1.0 - p))
