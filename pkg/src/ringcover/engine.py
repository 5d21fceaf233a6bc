"""Deterministic scenario execution.

Each round publishes an immutable snapshot of all public agent fields; every
agent decides against that snapshot and the resulting updates commit in agent
id order, so a (scenario, seed) pair replays bit-identically.  Membership
changes (admissions, demotions) take effect at round commit, which keeps each
layer's member set piecewise constant in round units.
"""

from __future__ import annotations

import hashlib
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .coverage import (
    Gains,
    LayerAssembly,
    OrderingError,
    angular_reset_point,
    coverage_fields,
    settle_division_points,
)
from .geometry import LayerCurve, TWO_PI, phase_of, validate_nesting, wrap_phase
from .models import (
    DensityModel,
    SensingModel,
    gaussian_model,
    linear_phase_density,
    table_density,
    uniform_density,
)
from .protocol import (
    AgentState,
    DetectState,
    Role,
    approach_radius_step,
    approach_step,
    identify_target_layer,
    in_band,
    patrol_step,
    request_entry,
    take_snapshot,
    update_detect_state,
    weight_based_layer_change,
)


class ScenarioError(ValueError):
    """Invalid or incomplete scenario configuration."""


class InvariantBreach(RuntimeError):
    """A runtime invariant failed; carries the partial trace for debugging."""

    def __init__(self, message, trace=None, tick=None, agent=None):
        super().__init__(message)
        self.trace = trace
        self.tick = tick
        self.agent = agent


# -- scenario -----------------------------------------------------------------

_MODES = ("single_layer", "multi_layer")


def _build_curve(spec, table_n):
    kind = spec.get("type")
    if kind == "circle":
        return LayerCurve.circle(float(spec["radius"]), table_n=table_n)
    if kind == "sinusoid":
        return LayerCurve.sinusoid(float(spec["base"]), float(spec["amplitude"]),
                                   float(spec["frequency"]), table_n=table_n)
    if kind == "table":
        return LayerCurve.from_table(spec["samples"], table_n=table_n)
    raise ScenarioError(f"unknown curve type {kind!r} (expected circle|sinusoid|table)")


def _build_sensing(spec):
    kind = spec.get("type", "gaussian")
    if kind == "gaussian":
        return gaussian_model(float(spec.get("gamma", 1.0)))
    raise ScenarioError(f"unknown sensing type {kind!r}")


def _build_density(spec):
    kind = spec.get("type", "uniform")
    if kind == "uniform":
        return uniform_density()
    if kind == "linear_phase":
        return linear_phase_density()
    if kind == "table":
        return table_density(spec["samples"], normalized=bool(spec.get("normalized", False)))
    raise ScenarioError(f"unknown density type {kind!r}")


@dataclass
class Scenario:
    """Fully-resolved simulation configuration."""

    layers: list
    sensing: SensingModel
    density: DensityModel
    agent_count: int
    init: dict
    gains: Gains
    h: float
    delta: float
    omega0: float
    patrol_margin: float
    dt: float
    horizon: float
    seed: int
    mode: str
    eps_frac: float
    inner_cap: int
    quad_segment_n: int
    early_stop: bool
    config: dict  # resolved dict for echo / replay

    @staticmethod
    def from_dict(cfg: dict) -> "Scenario":
        for key in ("layers", "agents"):
            if key not in cfg:
                raise ScenarioError(f"missing required scenario key {key!r}")
        quad = dict(cfg.get("quad", {}))
        table_n = int(quad.get("table_n", 4096))
        segment_n = int(quad.get("segment_n", 192))
        layer_specs = cfg["layers"]
        if not layer_specs:
            raise ScenarioError("layers must list at least one curve")
        layers = [_build_curve(s, table_n) for s in layer_specs]
        validate_nesting(layers)
        sensing = _build_sensing(dict(cfg.get("sensing", {"type": "gaussian", "gamma": 1.0})))
        density = _build_density(dict(cfg.get("density", {"type": "uniform"})))
        if not density.normalized:
            warnings.warn("density is not normalized; per-layer probabilities "
                          "are rescaled by its total mass", stacklevel=2)
        agents = dict(cfg["agents"])
        if "count" not in agents:
            raise ScenarioError("missing required scenario key 'agents.count'")
        count = int(agents["count"])
        if count < 1:
            raise ScenarioError("agents.count must be >= 1")
        init = dict(agents.get("init", {"type": "disk", "radius": 0.5}))
        gains_cfg = dict(cfg.get("gains", {}))
        gains = Gains(float(gains_cfg.get("kappa_r", 0.1)),
                      float(gains_cfg.get("kappa_omega", 0.01)),
                      float(gains_cfg.get("kappa_s", 0.05)))
        proto = dict(cfg.get("protocol", {}))
        h = float(proto.get("h", 0.6))
        if not 0.0 < h < 1.0:
            raise ScenarioError("protocol.h must lie strictly inside (0, 1)")
        delta = float(proto.get("delta", 0.05))
        if delta <= 0:
            raise ScenarioError("protocol.delta must be positive")
        omega0 = float(proto.get("omega0", 0.2))
        patrol_margin = float(proto.get("patrol_margin", 4.0 * delta))
        dt = float(cfg.get("dt", 0.01))
        horizon = float(cfg.get("horizon", 30.0))
        if dt <= 0 or horizon < dt:
            raise ScenarioError("need dt > 0 and horizon >= dt")
        mode = cfg.get("mode", "multi_layer")
        if mode not in _MODES:
            raise ScenarioError(f"mode must be one of {_MODES}")
        seed = int(cfg.get("seed", 1))
        resolved = {
            "layers": layer_specs,
            "sensing": {"type": "gaussian", "gamma": sensing.gamma},
            "density": dict(cfg.get("density", {"type": "uniform"})),
            "agents": {"count": count, "init": init},
            "gains": {"kappa_r": gains.kappa_r, "kappa_omega": gains.kappa_omega,
                      "kappa_s": gains.kappa_s},
            "protocol": {"h": h, "delta": delta, "omega0": omega0,
                         "patrol_margin": patrol_margin},
            "dt": dt, "horizon": horizon, "seed": seed, "mode": mode,
            "quad": {"table_n": table_n, "segment_n": segment_n},
            "epsilon_frac": float(cfg.get("epsilon_frac", 1e-4)),
            "inner_cap": int(cfg.get("inner_cap", 200)),
            "early_stop": bool(cfg.get("early_stop", False)),
        }
        return Scenario(layers, sensing, density, count, init, gains, h, delta,
                        omega0, patrol_margin, dt, horizon, seed, mode,
                        resolved["epsilon_frac"], resolved["inner_cap"],
                        segment_n, resolved["early_stop"], resolved)

    def to_dict(self) -> dict:
        return self.config


def initial_placement(init: dict, count: int, seed: int, inner_curve: LayerCurve):
    """Seeded agent positions with pairwise-distinct phases."""
    kind = init.get("type", "disk")
    if kind == "explicit":
        pos = np.asarray(init["positions"], dtype=float)
        if pos.shape != (count, 2):
            raise ScenarioError(f"explicit init needs {count} (x, y) pairs")
        phases = np.array([phase_of(x, y) for x, y in pos])
        if len(np.unique(phases)) != count:
            raise ScenarioError("explicit init has duplicate phases")
        return pos
    if kind != "disk":
        raise ScenarioError(f"unknown init type {kind!r} (expected disk|explicit)")
    radius = float(init.get("radius", 0.5))
    theta_grid = np.linspace(0.0, TWO_PI, 512, endpoint=False)
    if radius >= float(np.min(inner_curve.radius_fn(theta_grid))):
        raise ScenarioError("disk init radius must stay inside the innermost layer")
    rng = np.random.default_rng(seed)
    phases = np.empty(count)
    radii = np.empty(count)
    placed = 0
    while placed < count:
        phi = rng.uniform(0.0, TWO_PI)
        if placed and np.min(np.abs(np.concatenate((
                phases[:placed] - phi, phases[:placed] - phi + TWO_PI,
                phases[:placed] - phi - TWO_PI)))) <= 1e-9:
            continue  # resample phase collisions
        phases[placed] = phi
        radii[placed] = radius * math.sqrt(rng.uniform())
        placed += 1
    return np.column_stack((radii * np.cos(phases), radii * np.sin(phases)))


# -- trace ---------------------------------------------------------------------

_TRACE_COLUMNS = ("t", "id", "x", "y", "phi", "r", "role", "k", "s", "c")


def _fmt(v: float) -> str:
    return "%.17g" % v


@dataclass
class SimulationTrace:
    """Per-tick record of agent states, per-layer coverage, and events."""

    n_agents: int
    n_layers: int
    config: dict
    times: np.ndarray = None
    states: np.ndarray = None        # (T, N, 8): x, y, phi, r, role, k, s, c
    layer_h: np.ndarray = None       # (T, K) raw covered mass
    layer_p: np.ndarray = None       # (T, K) normalized detection probability
    total_p: np.ndarray = None       # (T,)
    member_counts: np.ndarray = None  # (T, K)
    events: list = field(default_factory=list)  # (t, agent, kind, layer, detail)
    diagnostics: dict = field(default_factory=dict)

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.trace_csv_text())

    def trace_csv_text(self) -> str:
        out = io.StringIO()
        out.write(",".join(_TRACE_COLUMNS) + "\n")
        for j, t in enumerate(self.times):
            rows = self.states[j]
            for i in range(self.n_agents):
                x, y, phi, r, role, k, s, c = rows[i]
                out.write(f"{_fmt(t)},{i},{_fmt(x)},{_fmt(y)},{_fmt(phi)},{_fmt(r)},"
                          f"{int(role)},{int(k)},{_fmt(s)},{int(c)}\n")
        return out.getvalue()

    def summary_csv_text(self) -> str:
        out = io.StringIO()
        cols = ["t"] + [f"P_{k}" for k in range(1, self.n_layers + 1)] + ["P"]
        out.write(",".join(cols) + "\n")
        for j, t in enumerate(self.times):
            vals = [self.layer_p[j, k] for k in range(self.n_layers)]
            out.write(",".join([_fmt(t)] + [_fmt(v) for v in vals]
                               + [_fmt(self.total_p[j])]) + "\n")
        return out.getvalue()

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.summary_csv_text())

    def events_csv_text(self) -> str:
        out = io.StringIO()
        out.write("t,agent,event,layer,detail\n")
        for t, agent, kind, layer, detail in self.events:
            out.write(f"{_fmt(t)},{agent},{kind},{layer},{detail}\n")
        return out.getvalue()

    def write_events_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.events_csv_text())

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.trace_csv_text().encode())
        digest.update(self.summary_csv_text().encode())
        digest.update(self.events_csv_text().encode())
        return digest.hexdigest()

    def final_total_p(self) -> float:
        return float(self.total_p[-1])


# -- engine ---------------------------------------------------------------------


class _Recorder:
    def __init__(self, n_agents, n_layers, config):
        self.times = []
        self.states = []
        self.layer_h = []
        self.member_counts = []
        self.events = []
        self.n_agents = n_agents
        self.n_layers = n_layers
        self.config = config

    def record_state(self, t, agents, counts):
        rows = np.empty((self.n_agents, 8))
        for i, a in enumerate(agents):
            rows[i] = (a.x, a.y, a.phase, a.radius, int(a.role),
                       a.target_layer, a.division_point, int(a.detect_state))
        self.times.append(t)
        self.states.append(rows)
        self.member_counts.append(counts.copy())
        self.layer_h.append(None)  # filled one round later

    def set_h(self, tick_index, h_values):
        if 0 <= tick_index < len(self.layer_h):
            self.layer_h[tick_index] = np.asarray(h_values, dtype=float)

    def finish(self, layer_mass, diagnostics) -> SimulationTrace:
        T = len(self.times)
        K = self.n_layers
        h = np.zeros((T, K))
        for j in range(T):
            if self.layer_h[j] is not None:
                h[j] = self.layer_h[j]
        p = np.clip(h / layer_mass[None, :], 0.0, 1.0)
        total = 1.0 - np.prod(1.0 - p, axis=1)
        trace = SimulationTrace(self.n_agents, K, self.config)
        trace.times = np.asarray(self.times)
        trace.states = np.asarray(self.states) if T else np.zeros((0, self.n_agents, 8))
        trace.layer_h = h
        trace.layer_p = p
        trace.total_p = total
        trace.member_counts = np.asarray(self.member_counts, dtype=np.int64) \
            if T else np.zeros((0, K), dtype=np.int64)
        trace.events = self.events
        trace.diagnostics = diagnostics
        return trace


def _assembly_for_layer(scn, view, k):
    return LayerAssembly.build(scn.layers[k - 1], scn.sensing, scn.density,
                               view.ids, view.phi, view.s,
                               quad_n=scn.quad_segment_n, validate=False)


def _reset_changed_neighbors(agents_by_id, member_ids, layer_curve, t, k, events):
    """Re-anchor division points after a membership change.

    Every member whose clockwise neighbor differs from its last committed one
    gets the standard reset; a lone member keeps/receives the antipodal point.
    """
    if not member_ids:
        return
    members = sorted((agents_by_id[i] for i in member_ids), key=lambda a: (a.phase, a.id))
    n = len(members)
    if n == 1:
        a = members[0]
        if a.prev_alpha != a.id:
            a.division_point = wrap_phase(a.phase + math.pi)
            a.prev_alpha = a.id
            events.append((t, a.id, "reset", k, "lone"))
        return
    for j, a in enumerate(members):
        alpha = members[(j - 1) % n]
        if a.prev_alpha != alpha.id or not np.isfinite(a.division_point):
            a.division_point = angular_reset_point(a.phase, alpha.phase)
            a.prev_alpha = alpha.id
            events.append((t, a.id, "reset", k, f"alpha={alpha.id}"))


def run(scenario: Scenario) -> SimulationTrace:
    """Execute a scenario and return its trace.

    Raises InvariantBreach (with the partial trace attached) if membership
    conservation or the agent/division-point interleaving is ever violated.
    """
    if scenario.mode == "single_layer":
        return _run_single(scenario)
    return _run_multi(scenario)


def _run_single(scn: Scenario) -> SimulationTrace:
    """Static-membership fast path: every agent works layer 1 from the start."""
    from .coverage import step_single_layer

    curve = scn.layers[0]
    positions = initial_placement(scn.init, scn.agent_count, scn.seed, curve)
    phases = np.array([phase_of(x, y) for x, y in positions])
    radii = np.hypot(positions[:, 0], positions[:, 1])
    order = np.argsort(phases, kind="stable")
    ids = np.arange(scn.agent_count, dtype=np.int64)[order]
    phi = phases[order]
    radii = radii[order]
    if scn.agent_count == 1:
        s = np.array([curve.antipode(phi[0])])
    else:
        s = np.array([angular_reset_point(p, a) for p, a in zip(phi, np.roll(phi, 1))])
    asm = LayerAssembly.build(curve, scn.sensing, scn.density, ids, phi, s,
                              quad_n=scn.quad_segment_n)

    layer_mass = np.array([scn.density.total_mass()])
    rec = _Recorder(scn.agent_count, 1, scn.to_dict())
    diagnostics = {
        "max_h_drop": np.zeros(1),
        "min_ordering_gap": math.inf,
        "max_inner_iters": 0,
        "rounds": 0,
        "stopped_early": False,
        "final_grad_inf": math.nan,
    }
    rounds = int(math.ceil(scn.horizon / scn.dt - 1e-12))
    inv = np.empty(scn.agent_count, dtype=np.int64)
    inv[asm.ids] = np.arange(scn.agent_count)
    prev_H = None
    counts = np.array([scn.agent_count], dtype=np.int64)

    for rnd in range(1, rounds + 1):
        t = rnd * scn.dt
        try:
            res = step_single_layer(asm, radii, scn.gains, scn.dt,
                                    scn.eps_frac, scn.inner_cap)
        except OrderingError as exc:
            raise InvariantBreach(str(exc), rec.finish(layer_mass, diagnostics),
                                  rnd) from exc
        asm, radii = res.assembly, res.radii
        diagnostics["max_inner_iters"] = max(diagnostics["max_inner_iters"], res.inner_iters)
        diagnostics["min_ordering_gap"] = min(diagnostics["min_ordering_gap"], res.min_gap)
        if prev_H is not None:
            drop = prev_H - res.h_total
            if drop > diagnostics["max_h_drop"][0]:
                diagnostics["max_h_drop"][0] = drop
        prev_H = res.h_total
        rec.set_h(rnd - 2, [res.h_total])

        rows = np.empty((scn.agent_count, 8))
        with np.errstate(invalid="ignore"):
            eta = np.where(res.mass < 1e-12, 1.0,
                           res.h_per_agent / np.where(res.mass < 1e-12, 1.0, res.mass))
        srt = np.empty_like(rows)
        srt[:, 0] = radii * np.cos(asm.phi)
        srt[:, 1] = radii * np.sin(asm.phi)
        srt[:, 2] = asm.phi
        srt[:, 3] = radii
        srt[:, 4] = int(Role.LAYER)
        srt[:, 5] = 1
        srt[:, 6] = asm.s
        srt[:, 7] = (eta > scn.h).astype(float)
        rows[:] = srt[inv]
        rec.times.append(t)
        rec.states.append(rows)
        rec.member_counts.append(counts.copy())
        rec.layer_h.append(None)
        diagnostics["rounds"] = rnd

    h, grad, _ = coverage_fields(asm)
    H_final = float(np.sum(h))
    if prev_H is not None and prev_H - H_final > diagnostics["max_h_drop"][0]:
        diagnostics["max_h_drop"][0] = prev_H - H_final
    rec.set_h(rounds - 1, [H_final])
    diagnostics["final_grad_inf"] = float(np.max(np.abs(grad))) if len(grad) else 0.0
    diagnostics["final_assembly"] = asm
    if math.isinf(diagnostics["min_ordering_gap"]):
        diagnostics["min_ordering_gap"] = TWO_PI
    return rec.finish(layer_mass, diagnostics)


def _run_multi(scn: Scenario) -> SimulationTrace:
    K = len(scn.layers)
    positions = initial_placement(scn.init, scn.agent_count, scn.seed, scn.layers[0])
    agents = [AgentState.at(i, x, y) for i, (x, y) in enumerate(positions)]
    for a in agents:
        a.target_layer = 1  # innermost-first: everyone aims at layer 1 initially

    layer_mass = np.array([scn.density.total_mass() for _ in range(K)])
    patrol_radius = float(np.max(scn.layers[-1].radius_fn(
        np.linspace(0, TWO_PI, 2048, endpoint=False)))) + scn.patrol_margin

    rec = _Recorder(scn.agent_count, K, scn.to_dict())
    diagnostics = {
        "max_h_drop": np.zeros(K),
        "min_ordering_gap": math.inf,
        "max_inner_iters": 0,
        "rounds": 0,
        "stopped_early": False,
    }
    prev_h = {}       # layer k -> (member id tuple, H value)
    eps = [scn.eps_frac * c.total_length for c in scn.layers[:K]]
    rounds = int(math.ceil(scn.horizon / scn.dt - 1e-12))
    by_id = {a.id: a for a in agents}
    quiet_rounds = 0

    def fail(message, tick, agent=None):
        raise InvariantBreach(message, rec.finish(layer_mass, diagnostics), tick, agent)

    def layer_pass(snap, tick_index, t):
        """Settle division points, measure coverage, stage angular/radial moves.

        Returns (staged moves, per-layer H, per-member eta by agent id).
        """
        moves = {}
        h_by_layer = np.zeros(K)
        eta_by_id = {}
        for k in range(1, K + 1):
            view = snap.layers[k - 1]
            if view.n == 0:
                continue
            asm = _assembly_for_layer(scn, view, k)
            msg = asm.interleaving_violation()
            if msg:
                fail(f"layer {k} at tick {tick_index}: {msg}", tick_index)
            s_new, iters = settle_division_points(asm, scn.gains.kappa_s, scn.dt,
                                                  eps[k - 1], scn.inner_cap)
            asm = asm.with_updates(s=s_new, validate=False)
            msg = asm.interleaving_violation()
            if msg:
                fail(f"layer {k} at tick {tick_index} after settling: {msg}", tick_index)
            diagnostics["max_inner_iters"] = max(diagnostics["max_inner_iters"], iters)
            diagnostics["min_ordering_gap"] = min(diagnostics["min_ordering_gap"],
                                                  asm.min_ordering_gap())
            h, grad, mass = coverage_fields(asm)
            h_total = float(np.sum(h))
            h_by_layer[k - 1] = h_total
            members = tuple(int(i) for i in asm.ids)
            if k in prev_h and prev_h[k][0] == members:
                drop = prev_h[k][1] - h_total
                if drop > diagnostics["max_h_drop"][k - 1]:
                    diagnostics["max_h_drop"][k - 1] = drop
            prev_h[k] = (members, h_total)
            omega = scn.gains.kappa_omega * grad
            phi_new = wrap_phase(asm.phi + omega * scn.dt)
            r_curve = np.asarray(asm.curve.radius(asm.phi), dtype=float)
            with np.errstate(invalid="ignore"):
                eta = np.where(mass < 1e-12, 1.0, h / np.where(mass < 1e-12, 1.0, mass))
            s_sorted = asm.s  # settled, aligned with asm order
            for j, aid in enumerate(asm.ids):
                moves[int(aid)] = (float(phi_new[j]), float(s_sorted[j]), float(r_curve[j]))
                eta_by_id[int(aid)] = float(eta[j])
        return moves, h_by_layer, eta_by_id

    tick = 0
    for rnd in range(1, rounds + 1):
        t = rnd * scn.dt
        snap = take_snapshot(agents, K)
        if snap.registry.n_working + snap.registry.n_free != scn.agent_count:
            fail(f"membership conservation broken at tick {rnd}", rnd)

        moves, h_by_layer, eta_by_id = layer_pass(snap, rnd - 1, t)
        rec.set_h(tick - 1, h_by_layer)

        # expected clockwise neighbor per member (sorted order == nearest
        # clockwise for interleaved members); a mismatch with the last
        # committed neighbor means the division point must be re-anchored
        # instead of stepped this round
        alpha_now = {}
        for k in range(1, K + 1):
            view = snap.layers[k - 1]
            if view.n:
                prev_ids = np.concatenate((view.ids[-1:], view.ids[:-1]))
                alpha_now.update({int(i): (int(p), float(pp)) for i, p, pp in
                                  zip(view.ids, prev_ids,
                                      np.concatenate((view.phi[-1:], view.phi[:-1])))})

        staged_requests = []   # (agent_id, layer, decision)
        demotions = []
        membership_changed = set()
        max_speed = 0.0

        for a in agents:
            idx = int(np.nonzero(snap.ids == a.id)[0][0])
            if a.role == Role.LAYER:
                k = a.target_layer
                alpha_id, alpha_phi = alpha_now[a.id]
                if alpha_id != a.prev_alpha:
                    # clockwise neighbor changed outside a membership commit:
                    # reset the division point, skip this round's motion
                    if alpha_id == a.id:
                        a.division_point = wrap_phase(a.phase + math.pi)
                    else:
                        a.division_point = angular_reset_point(a.phase, alpha_phi)
                    a.prev_alpha = alpha_id
                    rec.events.append((t, a.id, "reset", k, f"alpha={alpha_id}"))
                elif a.id in moves:
                    phi_new, s_new, r_curve = moves[a.id]
                    r_new = a.radius + scn.gains.kappa_r * (r_curve - a.radius) * scn.dt
                    old_xy = (a.x, a.y)
                    a.division_point = s_new
                    a.set_polar(r_new, phi_new)
                    max_speed = max(max_speed, math.hypot(a.x - old_xy[0], a.y - old_xy[1]) / scn.dt)
                if a.id in eta_by_id:
                    a.detect_state = update_detect_state(eta_by_id[a.id], scn.h)
                if weight_based_layer_change(idx, snap):
                    demotions.append(a.id)
            else:
                old_xy = (a.x, a.y)
                if a.target_layer == 0:
                    a.target_layer = identify_target_layer(idx, snap)
                if a.target_layer == 0:
                    if abs(a.radius - patrol_radius) > scn.delta:
                        approach_radius_step(a, patrol_radius, scn.gains.kappa_r, scn.dt)
                    else:
                        patrol_step(a, scn.omega0, scn.dt)
                else:
                    curve = scn.layers[a.target_layer - 1]
                    if not in_band(a, curve, scn.delta):
                        approach_step(a, curve, scn.gains.kappa_r, scn.dt)
                    else:
                        staged_requests.append((a.id, a.target_layer,
                                                request_entry(idx, a.target_layer, snap)))
                max_speed = max(max_speed, math.hypot(a.x - old_xy[0], a.y - old_xy[1]) / scn.dt)

        # demotions commit first (id order)
        for aid in sorted(demotions):
            a = by_id[aid]
            k_old = a.target_layer
            a.role = Role.FREE
            a.target_layer = k_old - 1
            a.division_point = math.nan
            a.prev_alpha = -1
            a.detect_state = DetectState.OPEN
            membership_changed.add(k_old)
            rec.events.append((t, aid, "demote", k_old, f"to={k_old - 1}"))

        # admissions: one winner per (layer, deciding segment), lower id first
        winners = {}
        for aid, k, dec in sorted(staged_requests):
            key = (k, dec.incumbent)
            if not dec.admitted:
                continue
            if key not in winners:
                winners[key] = aid
        for aid, k, dec in sorted(staged_requests):
            a = by_id[aid]
            if not dec.admitted:
                a.target_layer = 0
                rec.events.append((t, aid, "reject_saturated", k, f"incumbent={dec.incumbent}"))
                continue
            if winners.get((k, dec.incumbent)) != aid:
                a.target_layer = 0
                rec.events.append((t, aid, "reject_conflict", k, f"incumbent={dec.incumbent}"))
                continue
            member_phases = [ag.phase for ag in agents
                             if ag.role == Role.LAYER and ag.target_layer == k]
            guard = 0
            while any(a.phase == p for p in member_phases) and guard < 64:
                patrol_step(a, scn.omega0, scn.dt)  # phase collision: nudge until distinct
                guard += 1
            a.role = Role.LAYER
            a.target_layer = k
            a.detect_state = DetectState.OPEN
            if dec.incumbent == -1:
                a.division_point = dec.division_point
                a.prev_alpha = a.id
            else:
                a.division_point = math.nan
                a.prev_alpha = -1
            membership_changed.add(k)
            rec.events.append((t, aid, "admit", k, f"incumbent={dec.incumbent}"))

        # re-anchor division points on layers whose membership changed
        for k in sorted(membership_changed):
            member_ids = [a.id for a in agents if a.role == Role.LAYER and a.target_layer == k]
            _reset_changed_neighbors(by_id, member_ids, scn.layers[k - 1], t, k, rec.events)

        tick += 1
        counts = np.array([sum(1 for a in agents
                               if a.role == Role.LAYER and a.target_layer == kk)
                           for kk in range(1, K + 1)], dtype=np.int64)
        rec.record_state(t, agents, counts)
        diagnostics["rounds"] = rnd

        if membership_changed or staged_requests:
            quiet_rounds = 0
        else:
            quiet_rounds += 1
        if scn.early_stop and quiet_rounds >= 500 and max_speed < 1e-6:
            diagnostics["stopped_early"] = True
            break

    # final tick's coverage
    snap = take_snapshot(agents, K)
    h_final = np.zeros(K)
    for k in range(1, K + 1):
        view = snap.layers[k - 1]
        if view.n == 0:
            continue
        asm = _assembly_for_layer(scn, view, k)
        msg = asm.interleaving_violation()
        if msg:
            fail(f"layer {k} at final tick: {msg}", tick)
        h, _, _ = coverage_fields(asm)
        h_final[k - 1] = float(np.sum(h))
        members = tuple(int(i) for i in asm.ids)
        if k in prev_h and prev_h[k][0] == members:
            drop = prev_h[k][1] - h_final[k - 1]
            if drop > diagnostics["max_h_drop"][k - 1]:
                diagnostics["max_h_drop"][k - 1] = drop
    rec.set_h(tick - 1, h_final)

    if math.isinf(diagnostics["min_ordering_gap"]):
        diagnostics["min_ordering_gap"] = TWO_PI
    return rec.finish(layer_mass, diagnostics)


def run_config(cfg: dict) -> SimulationTrace:
    return run(Scenario.from_dict(cfg))
