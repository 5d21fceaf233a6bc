import math

import numpy as np
import pytest

from ringcover.coverage import LayerAssembly, midpoint_division_points
from ringcover.geometry import TWO_PI, LayerCurve, wrap_phase
from ringcover.models import gaussian_model, uniform_density
from ringcover.protocol import (
    AgentState,
    DetectState,
    Role,
    approach_step,
    completion_rate,
    find_neighbors,
    identify_target_layer,
    in_band,
    maintain_division_point,
    patrol_step,
    rebuild_registry,
    request_entry,
    segment_owner,
    take_snapshot,
    total_detection_probability,
    update_detect_state,
    weight_based_layer_change,
)

CIRCLE1 = LayerCurve.circle(1.0)
CIRCLE2 = LayerCurve.circle(2.0)
SENS = gaussian_model(1.0)
UNI = uniform_density()


def make_agents(specs):
    """specs: list of (x, y, role, k, s, c)."""
    agents = []
    for i, (x, y, role, k, s, c) in enumerate(specs):
        a = AgentState.at(i, x, y)
        a.role = role
        a.target_layer = k
        a.division_point = s
        a.detect_state = c
        agents.append(a)
    return agents


def working(phase, k, s, c=DetectState.OPEN, r=1.0):
    return (r * math.cos(phase), r * math.sin(phase), Role.LAYER, k, s, c)


def free(phase, k=0, r=0.5):
    return (r * math.cos(phase), r * math.sin(phase), Role.FREE, k, math.nan,
            DetectState.OPEN)


class TestRegistry:
    def test_all_free(self):
        agents = make_agents([free(0.1), free(1.0), free(2.0)])
        reg = rebuild_registry(agents, 2)
        assert reg.counts.tolist() == [0, 0]
        assert reg.n_free == 3 and reg.n_working == 0

    def test_singleton(self):
        agents = make_agents([free(0.1), working(1.0, 2, 2.5)])
        reg = rebuild_registry(agents, 2)
        assert reg.counts.tolist() == [0, 1]
        assert reg.members[1] == [1]

    def test_recount_matches_roles(self):
        rng = np.random.default_rng(3)
        specs = []
        for i in range(50):
            ph = rng.uniform(0, TWO_PI)
            if rng.uniform() < 0.5:
                specs.append(free(ph))
            else:
                specs.append(working(ph, int(rng.integers(1, 4)), wrap_phase(ph - 0.1)))
        agents = make_agents(specs)
        reg = rebuild_registry(agents, 3)
        assert reg.n_working + reg.n_free == 50
        for k in range(1, 4):
            expected = sorted(a.id for a in agents
                              if a.role == Role.LAYER and a.target_layer == k)
            assert sorted(reg.members[k - 1]) == expected


class TestCompletionRate:
    def test_perfect_sensing(self):
        from ringcover.models import SensingModel

        one = SensingModel(lambda d: np.ones_like(np.asarray(d, dtype=float)),
                           lambda d: np.zeros_like(np.asarray(d, dtype=float)))
        asm = LayerAssembly.build(CIRCLE1, one, UNI, np.array([0, 1]),
                                  np.array([0.0, math.pi]),
                                  midpoint_division_points(CIRCLE1, np.array([0.0, math.pi])))
        assert completion_rate(asm, 0) == pytest.approx(1.0, abs=1e-12)

    def test_zero_mass_segment_convention(self):
        from ringcover.models import table_density

        # density vanishing on agent 0's whole segment (0.1 -> 2.0)
        rho = table_density([(0.0, 0.0), (2.9, 0.0), (3.1, 1.0), (5.0, 1.0),
                             (6.0, 0.0)])
        phi = np.array([1.0, 4.0])
        asm = LayerAssembly.build(CIRCLE1, SENS, rho, np.array([0, 1]), phi,
                                  np.array([0.1, 2.0]))
        assert completion_rate(asm, 0) == 1.0

    def test_in_unit_interval(self):
        rng = np.random.default_rng(5)
        phi = np.sort(rng.uniform(0, TWO_PI, 5))
        asm = LayerAssembly.build(CIRCLE1, SENS, UNI, np.arange(5), phi,
                                  midpoint_division_points(CIRCLE1, phi))
        for i in range(5):
            assert 0.0 <= completion_rate(asm, i) <= 1.0


class TestDetectState:
    def test_above_threshold(self):
        assert update_detect_state(1.0, 0.6) == DetectState.SATURATED

    def test_exactly_at_threshold_stays_open(self):
        assert update_detect_state(0.6, 0.6) == DetectState.OPEN

    def test_below(self):
        assert update_detect_state(0.0, 0.6) == DetectState.OPEN

    def test_threshold_validated(self):
        with pytest.raises(ValueError):
            update_detect_state(0.5, 1.0)


class TestMotion:
    def test_patrol_polar_advance(self):
        a = AgentState.at(0, 0.5, 0.0)
        patrol_step(a, 0.2, 0.1)
        assert a.phase == pytest.approx(0.02, abs=1e-12)
        assert a.radius == pytest.approx(0.5, abs=1e-15)

    def test_patrol_full_revolution(self):
        a = AgentState.at(0, 0.5, 0.0)
        n = 1000
        for _ in range(n):
            patrol_step(a, TWO_PI / (n * 0.01), 0.01)
        circ_err = min(a.phase, TWO_PI - a.phase)
        assert circ_err == pytest.approx(0.0, abs=1e-9)
        assert a.radius == pytest.approx(0.5, abs=1e-12)

    def test_patrol_radius_drift_free(self):
        a = AgentState.at(0, 0.37, 0.11)
        r0 = a.radius
        for _ in range(10_000):
            patrol_step(a, 0.2, 0.01)
        assert a.radius == pytest.approx(r0, abs=1e-12)

    def test_approach_fixed_point(self):
        a = AgentState.at(0, 1.0, 0.0)
        approach_step(a, CIRCLE1, 0.1, 0.01)
        assert a.radius == pytest.approx(1.0, abs=1e-15)

    def test_approach_monotone_and_band_time(self):
        a = AgentState.at(0, 1.0, 0.0)
        dt, kr, delta = 0.01, 0.1, 0.05
        t = 0.0
        last = a.radius
        while not in_band(a, CIRCLE2, delta):
            approach_step(a, CIRCLE2, kr, dt)
            t += dt
            assert a.radius > last - 1e-15
            last = a.radius
        expected = math.log(1.0 / delta) / kr
        assert t == pytest.approx(expected, rel=0.02)


def three_layer_snapshot(layer1, layer2=(), layer3=(), free_agents=()):
    specs = []
    for ph, s, c in layer1:
        specs.append(working(ph, 1, s, c, r=1.0))
    for ph, s, c in layer2:
        specs.append(working(ph, 2, s, c, r=2.0))
    for ph, s, c in layer3:
        specs.append(working(ph, 3, s, c, r=3.0))
    for ph in free_agents:
        specs.append(free(ph))
    agents = make_agents(specs)
    return agents, take_snapshot(agents, 3)


class TestTargetIdentification:
    def test_all_layers_empty(self):
        agents, snap = three_layer_snapshot([], free_agents=[1.0])
        assert identify_target_layer(0, snap) == 1

    def test_skip_saturated_innermost(self):
        agents, snap = three_layer_snapshot(
            [(1.0, 0.0, DetectState.SATURATED)], free_agents=[1.0])
        assert identify_target_layer(1, snap) == 2

    def test_all_saturated_keeps_patrolling(self):
        agents, snap = three_layer_snapshot(
            [(1.0, 4.14, DetectState.SATURATED)],
            [(1.0, 4.14, DetectState.SATURATED)],
            [(1.0, 4.14, DetectState.SATURATED)],
            free_agents=[1.0])
        assert identify_target_layer(3, snap) == 0

    def test_open_segment_matched_by_phase(self):
        # two members on layer 1: only the one owning phase 3.0 is open
        agents, snap = three_layer_snapshot(
            [(1.0, 0.0, DetectState.SATURATED), (4.0, 2.5, DetectState.OPEN)],
            free_agents=[3.0])
        assert identify_target_layer(2, snap) == 1
        agents, snap = three_layer_snapshot(
            [(1.0, 0.0, DetectState.OPEN), (4.0, 2.5, DetectState.SATURATED)],
            free_agents=[3.0])
        assert identify_target_layer(2, snap) == 2


class TestEntryRequest:
    def test_empty_layer_antipodal_point(self):
        agents, snap = three_layer_snapshot([], free_agents=[math.pi / 2])
        dec = request_entry(0, 1, snap)
        assert dec.admitted and dec.incumbent == -1
        assert dec.division_point == pytest.approx(3 * math.pi / 2, abs=1e-12)

    def test_saturated_incumbent_refuses(self):
        agents, snap = three_layer_snapshot(
            [(1.0, 4.14, DetectState.SATURATED)], free_agents=[1.2])
        dec = request_entry(1, 1, snap)
        assert not dec.admitted and dec.incumbent == 0

    def test_open_incumbent_admits(self):
        agents, snap = three_layer_snapshot(
            [(1.0, 4.14, DetectState.OPEN)], free_agents=[1.2])
        dec = request_entry(1, 1, snap)
        assert dec.admitted and dec.incumbent == 0


class TestNeighbors:
    def test_two_members(self):
        agents, snap = three_layer_snapshot(
            [(1.0, 4.0, DetectState.OPEN), (3.0, 2.0, DetectState.OPEN)])
        assert find_neighbors(0, snap.layers[0]) == (1, 1)

    def test_three_members_hand_case(self):
        agents, snap = three_layer_snapshot(
            [(0.0, 5.0, DetectState.OPEN), (2.0, 1.0, DetectState.OPEN),
             (4.0, 3.0, DetectState.OPEN)])
        alpha, beta = find_neighbors(0, snap.layers[0])
        assert (alpha, beta) == (2, 1)

    def test_square_symmetry(self):
        layer = [(0.1 + j * math.pi / 2, 0.1 + j * math.pi / 2 - 0.7, DetectState.OPEN)
                 for j in range(4)]
        agents, snap = three_layer_snapshot(layer)
        alpha, beta = find_neighbors(1, snap.layers[0])
        assert (alpha, beta) == (0, 2)

    def test_lone_member(self):
        agents, snap = three_layer_snapshot([(1.0, 4.14, DetectState.OPEN)])
        assert find_neighbors(0, snap.layers[0]) == (0, 0)


class TestDivisionMaintenance:
    def test_unchanged_alpha_steps(self):
        agents, snap = three_layer_snapshot(
            [(0.0, 5.0, DetectState.OPEN), (2.0, 1.0, DetectState.OPEN),
             (4.0, 3.0, DetectState.OPEN)])
        act = maintain_division_point(0, 2, snap.layers[0], 0.0)
        assert not act.reset and act.alpha == 2

    def test_changed_alpha_resets_to_half_distance(self):
        agents, snap = three_layer_snapshot(
            [(2.0, 1.6, DetectState.OPEN), (1.0, 0.6, DetectState.OPEN)])
        act = maintain_division_point(0, -1, snap.layers[0], 2.0)
        assert act.reset
        assert act.new_s == pytest.approx(1.5, abs=1e-12)

    def test_reset_wraps_positive(self):
        agents, snap = three_layer_snapshot(
            [(0.2, 0.05, DetectState.OPEN), (5.8, 5.0, DetectState.OPEN)])
        act = maintain_division_point(0, -1, snap.layers[0], 0.2)
        assert act.reset
        delta = 0.2 - 5.8 + TWO_PI
        assert act.new_s == pytest.approx(wrap_phase(0.2 - delta / 2), abs=1e-12)


class TestLayerChange:
    def test_inner_all_saturated_no_change(self):
        agents, snap = three_layer_snapshot(
            [(1.0, 4.14, DetectState.SATURATED)],
            [(1.0, 4.14, DetectState.OPEN)])
        idx = 1  # the layer-2 member
        assert not weight_based_layer_change(idx, snap)

    def test_open_inner_triggers_demotion(self):
        agents, snap = three_layer_snapshot(
            [(1.0, 4.14, DetectState.OPEN)],
            [(1.2, 4.34, DetectState.OPEN)])
        assert weight_based_layer_change(1, snap)

    def test_innermost_exempt(self):
        agents, snap = three_layer_snapshot([(1.0, 4.14, DetectState.OPEN)])
        assert not weight_based_layer_change(0, snap)

    def test_empty_inner_layer_no_change(self):
        agents, snap = three_layer_snapshot([], [(1.0, 4.14, DetectState.OPEN)])
        assert not weight_based_layer_change(0, snap)


class TestTotalDetection:
    def test_two_nines(self):
        assert total_detection_probability([0.9, 0.9]) == pytest.approx(0.99)

    def test_empty_layers_transparent(self):
        assert total_detection_probability([0.37, 0.0, 0.0]) == pytest.approx(0.37)

    def test_absorbing_layer(self):
        assert total_detection_probability([1.0, 0.123]) == 1.0

    def test_range_validated(self):
        with pytest.raises(ValueError):
            total_detection_probability([0.5, 1.2])
        with pytest.raises(ValueError):
            total_detection_probability([-0.1])

    def test_matches_expansion_random(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            k = int(rng.integers(1, 6))
            p = rng.uniform(0, 1, k)
            direct = 1.0 - np.prod(1.0 - p)
            assert total_detection_probability(p) == pytest.approx(direct, abs=1e-12)

    def test_monotone_in_each_layer(self):
        base = [0.3, 0.5, 0.2]
        p0 = total_detection_probability(base)
        for j in range(3):
            bumped = list(base)
            bumped[j] += 0.1
            assert total_detection_probability(bumped) > p0


def test_segment_owner_wrapped_points():
    # first member's division point wraps past zero
    agents, snap = three_layer_snapshot(
        [(0.3, 6.0, DetectState.OPEN), (2.0, 1.0, DetectState.OPEN),
         (4.0, 3.0, DetectState.OPEN)])
    view = snap.layers[0]
    assert segment_owner(view, 0.1) == 0
    assert segment_owner(view, 6.1) == 0
    assert segment_owner(view, 1.5) == 1
    assert segment_owner(view, 3.5) == 2
    assert segment_owner(view, 5.5) == 2
