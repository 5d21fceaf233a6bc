"""Acceptance criteria for the simulator, one test per criterion.

Each test prints a PASS/FAIL line with the measured quantity so the suite
doubles as a report (run with `pytest -s tests/test_acceptance.py`).  The
heavyweight trajectory fixtures are shared across criteria.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from ringcover.engine import Scenario, run
from ringcover.geometry import TWO_PI
from ringcover.verify import (
    ascent_runs,
    suite_global_optimum,
    suite_gradient,
    suite_midpoint_optimality,
    suite_monotone_ascent,
    suite_segment_bounds,
    suite_transfer,
)

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


def report(name: str, ok: bool, detail: str) -> None:
    print(f"\n{name}: {'PASS' if ok else 'FAIL'} - {detail}")


def _load(name: str) -> dict:
    return json.loads((SCENARIOS / name).read_text())


@pytest.fixture(scope="module")
def paper_multi():
    cfg = _load("paper_fig5.json")
    t0 = time.time()
    trace = run(Scenario.from_dict(cfg))
    return trace, time.time() - t0


@pytest.fixture(scope="module")
def paper_single():
    cfg = _load("paper_fig8_single.json")
    cfg["quad"]["segment_n"] = 128
    return run(Scenario.from_dict(cfg))


@pytest.fixture(scope="module")
def sweep_results(paper_multi, paper_single):
    base = _load("paper_fig5.json")
    base["quad"]["segment_n"] = 128
    results = {50: (paper_single.final_total_p(), paper_multi[0].final_total_p())}
    for n in (10, 20, 30, 40):
        cfg = json.loads(json.dumps(base))
        cfg["agents"]["count"] = n
        single = run(Scenario.from_dict(dict(cfg, mode="single_layer")))
        multi = run(Scenario.from_dict(dict(cfg, mode="multi_layer")))
        results[n] = (single.final_total_p(), multi.final_total_p())
    return results


def test_a1_gradient_fidelity():
    t0 = time.time()
    res = suite_gradient(n_fixtures=100, tol=1e-4)
    elapsed = time.time() - t0
    ok = res.passed and elapsed < 30.0
    report("A1 gradient fidelity", ok,
           f"{res.checks[0].detail}; runtime {elapsed:.1f}s (< 30s)")
    assert res.passed, res.checks[0].detail
    assert elapsed < 30.0


def test_a2_midpoint_optimality():
    res = suite_midpoint_optimality(n_fixtures=20, n_perturb=1000)
    detail = "; ".join(c.detail for c in res.checks)
    report("A2 midpoint division optimality", res.passed, detail)
    for c in res.checks:
        assert c.passed, c.detail


def test_a3_monotone_ascent():
    res = suite_monotone_ascent(n_runs=20)
    detail = "; ".join(c.detail for c in res.checks)
    report("A3 monotone ascent + terminal gradient", res.passed, detail)
    for c in res.checks:
        assert c.passed, c.detail


def test_a4_no_collisions(paper_multi):
    min_gap = min(float(tr.diagnostics["min_ordering_gap"])
                  for _, tr in ascent_runs(20))
    multi_gap = float(paper_multi[0].diagnostics["min_ordering_gap"])
    ok = min_gap > 0.0 and multi_gap > 0.0
    report("A4 ordering preserved (no collisions)", ok,
           f"min gap {min_gap:.3e} over single-layer runs, "
           f"{multi_gap:.3e} in the multi-layer run")
    assert ok


def test_a5_segment_length_bounds():
    res = suite_segment_bounds(n_runs=20)
    detail = "; ".join(c.detail for c in res.checks)
    report("A5 segment length bounds", res.passed, detail)
    for c in res.checks:
        assert c.passed, c.detail


def test_a6_global_optimum():
    t0 = time.time()
    res = suite_global_optimum(grid=256)
    elapsed = time.time() - t0
    ok = res.passed and elapsed < 120.0
    detail = "; ".join(c.detail for c in res.checks if "optimum" in c.name
                       or "spacing" in c.name)
    report("A6 brute-force optimum agreement", ok,
           f"{detail}; runtime {elapsed:.1f}s (< 2min)")
    for c in res.checks:
        assert c.passed, c.detail
    assert elapsed < 120.0


def test_a7_case_study_reproduction(paper_multi):
    trace, elapsed = paper_multi
    p_final = trace.final_total_p()
    counts = trace.member_counts
    increases = []
    for k in (1, 2):  # layers 2 and 3 (0-based column)
        first = int(np.argmax(counts[:, k] > 0))
        assert counts[first, k] > 0, f"layer {k + 1} never populated"
        before = trace.total_p[first - 1]
        after = trace.total_p[min(first + 10, len(trace.total_p) - 1)]
        increases.append(after - before)
    staircase = all(inc > 0 for inc in increases)
    ok = p_final >= 0.999 and staircase and elapsed < 300.0
    report("A7 case-study reproduction", ok,
           f"final P {p_final:.6f} (>= 0.999), staircase increases "
           f"{[f'{x:.2e}' for x in increases]}, runtime {elapsed:.0f}s (< 5min)")
    assert p_final >= 0.999
    assert staircase
    assert elapsed < 300.0


@pytest.mark.xfail(reason="with the case-study arc-length distance, 50 agents "
                          "cannot push the miss product below 1e-4 (optimal "
                          "allocation caps near P=0.99986); the shipped seed "
                          "attains P>=0.999 as required but not 0.9999",
                   strict=False)
def test_a7_aspirational_9999(paper_multi):
    p_final = paper_multi[0].final_total_p()
    report("A7 (aspirational) best-seed P >= 0.9999", p_final >= 0.9999,
           f"final P {p_final:.6f}")
    assert p_final >= 0.9999


def test_a8_single_vs_multi(sweep_results):
    p50_single, p50_multi = sweep_results[50]
    worst_gap = min(sweep_results[n][1] - sweep_results[n][0]
                    for n in (10, 20, 30, 40, 50))
    ok = (p50_multi >= p50_single and p50_single >= 0.99 and worst_gap >= -1e-3)
    rows = ", ".join(f"N={n}: {sweep_results[n][1]:.5f}/{sweep_results[n][0]:.5f}"
                     for n in sorted(sweep_results))
    report("A8 multi vs single sweep", ok,
           f"multi/single {rows}; worst multi-single gap {worst_gap:+.2e} (>= -1e-3)")
    assert p50_multi >= p50_single
    assert p50_single >= 0.99
    assert worst_gap >= -1e-3


def test_a9_transfer_bounds():
    res = suite_transfer(n_fixtures=50)
    detail = "; ".join(c.detail for c in res.checks)
    report("A9 departure/arrival bounds + transfer criterion", res.passed, detail)
    for c in res.checks:
        assert c.passed, c.detail


def test_a10_determinism(tmp_path):
    cfg = _load("smoke.json")
    t1 = run(Scenario.from_dict(cfg))
    t2 = run(Scenario.from_dict(cfg))
    same = t1.content_hash() == t2.content_hash()
    echoed = json.loads(json.dumps(Scenario.from_dict(cfg).to_dict()))
    t3 = run(Scenario.from_dict(echoed))
    round_trip = t1.content_hash() == t3.content_hash()
    # single-layer mode replays identically too
    cfg_s = dict(cfg, mode="single_layer")
    s1 = run(Scenario.from_dict(cfg_s))
    s2 = run(Scenario.from_dict(cfg_s))
    same_s = s1.content_hash() == s2.content_hash()
    ok = same and round_trip and same_s
    report("A10 determinism / replay", ok,
           f"multi replay {'=' if same else '!='}, config-echo round-trip "
           f"{'=' if round_trip else '!='}, single replay {'=' if same_s else '!='} "
           f"(hash {t1.content_hash()[:12]})")
    assert ok
