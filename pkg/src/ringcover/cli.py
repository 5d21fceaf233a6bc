"""Command-line entry point: scenario execution, parameter sweeps, and the
verification suites."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .engine import InvariantBreach, Scenario, ScenarioError, run
from .verify import SUITES


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file is not valid JSON: {exc}")


def _apply_overrides(cfg: dict, pairs) -> dict:
    """Apply dotted key=value overrides; values parse as JSON when possible."""
    for pair in pairs or ():
        if "=" not in pair:
            raise ScenarioError(f"override {pair!r} is not of the form key=value")
        key, raw = pair.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ScenarioError(f"override path {key!r} crosses a non-object")
        node[parts[-1]] = value
    return cfg


def _emit_error(message: str, kind: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def _write_outputs(trace, out_dir: Path, config: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    trace.write_trace_csv(out_dir / "trace.csv")
    trace.write_summary_csv(out_dir / "summary.csv")
    trace.write_events_csv(out_dir / "events.csv")
    with open(out_dir / "config.json", "w") as fh:
        json.dump(config, fh, indent=2)


def cmd_run(args) -> int:
    try:
        cfg = _apply_overrides(_load_config(args.scenario), args.set)
        if args.seed is not None:
            cfg["seed"] = args.seed
        scenario = Scenario.from_dict(cfg)
    except ScenarioError as exc:
        _emit_error(str(exc), "config")
        return 2
    out_dir = Path(args.out)
    try:
        trace = run(scenario)
    except InvariantBreach as exc:
        if exc.trace is not None:
            _write_outputs(exc.trace, out_dir, scenario.to_dict())
        _emit_error(f"invariant breach at tick {exc.tick}: {exc}", "invariant")
        return 3
    _write_outputs(trace, out_dir, scenario.to_dict())
    print(f"final P = {trace.final_total_p():.6f} "
          f"({len(trace.times)} ticks, hash {trace.content_hash()[:12]})")
    return 0


_SWEEP_KEYS = {
    "agent_count": ("agents", "count"),
    "h": ("protocol", "h"),
    "gamma": ("sensing", "gamma"),
    "dt": ("dt",),
}


def _set_path(cfg, path, value):
    node = cfg
    for p in path[:-1]:
        node = node.setdefault(p, {})
    node[path[-1]] = value


def _sweep_value(cfg, param, value, mode, seed):
    cfg = json.loads(json.dumps(cfg))
    path = _SWEEP_KEYS[param]
    _set_path(cfg, path, int(value) if param == "agent_count" else float(value))
    cfg["mode"] = mode
    if seed is not None:
        cfg["seed"] = seed
    trace = run(Scenario.from_dict(cfg))
    return trace.final_total_p()


def cmd_sweep(args) -> int:
    if args.param not in _SWEEP_KEYS:
        _emit_error(f"param must be one of {sorted(_SWEEP_KEYS)}", "config")
        return 2
    try:
        cfg = _apply_overrides(_load_config(args.scenario), args.set)
        Scenario.from_dict(cfg)  # validate the base configuration up front
    except ScenarioError as exc:
        _emit_error(str(exc), "config")
        return 2
    raw_values = [v for v in args.values.split(",") if v]
    values = []
    for v in raw_values:
        x = float(v)
        if x in values:
            print(f"warning: duplicate sweep value {v} ignored", file=sys.stderr)
        else:
            values.append(x)
    modes = ("single_layer", "multi_layer") if args.modes == "both" else \
        (f"{args.modes}_layer",)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    any_failed = False
    jobs = [(v, m) for v in values for m in modes]
    payloads = [(cfg, args.param, v, m, args.seed) for v, m in jobs]
    workers = _worker_count(len(jobs))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, payloads))
    else:
        results = [_sweep_worker(p) for p in payloads]
    outcomes = [(jobs[i], results[i][0], results[i][1]) for i in range(len(jobs))]

    table = {}
    for (v, m), p, err in outcomes:
        if err is not None:
            any_failed = True
            print(f"warning: {args.param}={v} mode={m} failed: {err}", file=sys.stderr)
        table.setdefault(v, {})[m] = (p, err)
    cols = ["param_value"] + [f"P_{m.removesuffix('_layer')}" for m in modes] + ["status"]
    lines = [",".join(cols)]
    for v in values:
        entry = table.get(v, {})
        cells = [repr(v)]
        status = "ok"
        for m in modes:
            p, err = entry.get(m, (None, "missing"))
            if err is not None:
                cells.append("")
                status = "failed"
            else:
                cells.append("%.17g" % p)
        lines.append(",".join(cells + [status]))
    out_path = out_dir / "sweep.csv"
    out_path.write_text("\n".join(lines) + "\n")
    print(f"wrote {out_path}")
    return 1 if any_failed else 0


def _sweep_worker(payload):
    cfg, param, value, mode, seed = payload
    try:
        return _sweep_value(cfg, param, value, mode, seed), None
    except Exception as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _worker_count(n_jobs: int) -> int:
    cap = os.environ.get("RINGCOVER_THREADS")
    try:
        cap = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError:
        cap = 1
    return max(1, min(cap, n_jobs, os.cpu_count() or 1))


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite in (None, "all") else [args.suite]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        _emit_error(f"unknown suite {unknown[0]!r}; choices: all, {', '.join(SUITES)}",
                    "config")
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_ok = True
    report_lines = ["suite,check,passed,detail"]
    for name in names:
        result = SUITES[name]()
        print(result.summary())
        for c in result.checks:
            print(f"  {'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
            report_lines.append(
                f"{name},{c.name},{int(c.passed)},\"{c.detail}\"")
            if not c.passed:
                all_ok = False
                if c.fixture is not None:
                    fix_path = out_dir / f"failed_{name}_{c.name}.json"
                    with open(fix_path, "w") as fh:
                        json.dump(c.fixture, fh, indent=2)
                    print(f"  fixture saved to {fix_path}")
    (out_dir / "verify_report.csv").write_text("\n".join(report_lines) + "\n")
    print("all suites passed" if all_ok else "FAILURES detected")
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ringcover",
                                 description="multi-layer ring barrier coverage simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("-o", "--out", default="out")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (dotted path, JSON value)")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario across parameter values")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--param", required=True,
                         choices=sorted(_SWEEP_KEYS))
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--modes", choices=("both", "single", "multi"), default="both")
    p_sweep.add_argument("-o", "--out", default="out")
    p_sweep.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_ver = sub.add_parser("verify", help="run property-check suites")
    p_ver.add_argument("suite", nargs="?", default="all",
                       help="all | " + " | ".join(SUITES))
    p_ver.add_argument("-o", "--out", default="out")
    p_ver.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
