"""Headless entry point: run scenarios, replay traces, generate fixtures,
validate invariants, serve the live hub and render reports."""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

from .dashboard import INITIAL_STATE, replay as replay_events, state_to_dict
from .dataset import ReadingSet, load_readings
from .fixtures import (TASK_NAMES, default_scenario, gen_readings, run_fuzz,
                       task_script, write_readings_csv)
from .gestures import EventKind, read_event_log
from .hub import load_trace, save_trace
from .scenario import Scenario, load_scenario, save_scenario
from .session import Session, is_input, replay_session

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


def _load_scenario_arg(args) -> Scenario:
    if args.scenario:
        return load_scenario(args.scenario)
    return default_scenario()


def _load_readings_for(scenario: Scenario, scenario_path: str | None) -> ReadingSet:
    if not scenario.dataset_path:
        return ReadingSet()
    path = Path(scenario.dataset_path)
    if not path.is_absolute() and scenario_path:
        path = Path(scenario_path).parent / path
    if not path.exists():
        return ReadingSet()
    with open(path, encoding="utf-8") as f:
        return load_readings(f, known_buildings=scenario.buildings.keys())


def cmd_run(args) -> int:
    from .dashboard import DashboardState, load_shoebox, save_shoebox

    scenario = _load_scenario_arg(args)
    readings = _load_readings_for(scenario, args.scenario)
    initial = DashboardState()
    if args.shoebox:
        initial = DashboardState(
            shoebox=load_shoebox(args.shoebox, scenario.id))
    session = Session(scenario, readings=readings, initial_state=initial)
    duration = args.duration
    if args.trace:
        trace = load_trace(args.trace)
        session.feed(env for _, env in trace.entries if is_input(env))
        if duration is None:
            duration = trace.entries[-1][0] / 1000.0 + 2.0 if trace.entries else 5.0
    if duration is None:
        duration = 30.0
    metrics = session.run(duration)
    doc = metrics.to_dict()
    doc["seed"] = args.seed
    if args.metrics_out:
        Path(args.metrics_out).write_text(json.dumps(doc, indent=2) + "\n")
    if args.record:
        save_trace(session.trace, args.record)
    if args.shoebox:
        save_shoebox(session.state, args.shoebox, scenario.id)
    print(json.dumps(doc, indent=2))
    return EXIT_OK if metrics.ok else EXIT_VIOLATION


def cmd_fuzz(args) -> int:
    metrics = run_fuzz(args.seed, n_ticks=args.ticks)
    doc = metrics.to_dict()
    print(json.dumps(doc, indent=2))
    ok = metrics.ok and metrics.settled
    return EXIT_OK if ok else EXIT_VIOLATION


def _check_trace(path: str, scenario: Scenario) -> list[str]:
    problems: list[str] = []
    trace = load_trace(path)
    last_seq: dict[tuple[str, str], int] = {}
    held: dict[str, bool] = {}
    state = INITIAL_STATE
    binding = dict(scenario.bindings)
    for idx, (t_ms, env) in enumerate(trace.entries):
        key = (env.role, env.sender)
        if key in last_seq and env.seq <= last_seq[key]:
            problems.append(f"entry {idx}: seq {env.seq} does not advance {key}")
            break
        last_seq[key] = env.seq
        if env.kind != "interaction_event":
            continue
        from .gestures import InteractionEvent

        ev = InteractionEvent.from_dict(env.payload)
        if ev.kind is EventKind.PICKED_UP:
            if held.get(ev.proxy):
                problems.append(f"entry {idx}: double pickup for {ev.proxy}")
                break
            held[ev.proxy] = True
        elif ev.kind is EventKind.PLACED_DOWN:
            if not held.get(ev.proxy):
                problems.append(f"entry {idx}: place-down without pickup "
                                f"for {ev.proxy}")
                break
            held[ev.proxy] = False
        from .dashboard import reduce as reduce_event

        state, _ = reduce_event(state, ev, binding)
        if state.locked and state.secondary is None:
            problems.append(f"entry {idx}: locked on the primary layer")
            break
    expected = tuple(binding[p] for p in sorted(held) if held[p])
    if not problems and set(expected) != set(state.filter):
        problems.append(
            f"final filter {state.filter} != held buildings {expected}")
    return problems


def _check_golden_dir(path: Path, scenario: Scenario) -> list[str]:
    problems = []
    pairs = sorted(path.glob("*.events.jsonl"))
    for events_path in pairs:
        golden_path = events_path.with_name(
            events_path.name.replace(".events.jsonl", ".state.json"))
        if not golden_path.exists():
            problems.append(f"{events_path.name}: missing golden state file")
            continue
        with open(events_path, encoding="utf-8") as f:
            events = read_event_log(f)
        state = replay_events(events, dict(scenario.bindings))
        got = state_to_dict(state)
        want = json.loads(golden_path.read_text())
        if got != want:
            problems.append(f"{events_path.name}: state mismatch\n"
                            f"  got:  {json.dumps(got, sort_keys=True)}\n"
                            f"  want: {json.dumps(want, sort_keys=True)}")
    return problems


def cmd_check(args) -> int:
    scenario = _load_scenario_arg(args)
    problems: list[str] = []
    if args.trace:
        problems += _check_trace(args.trace, scenario)
    if args.golden:
        problems += _check_golden_dir(Path(args.golden), scenario)
    if not args.trace and not args.golden:
        print("nothing to check (pass --trace and/or --golden)")
        return EXIT_USAGE
    if problems:
        for p in problems:
            print(f"FAIL {p}")
        return EXIT_VIOLATION
    print("OK all invariants hold")
    return EXIT_OK


def cmd_gen_fixtures(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [t for t in (args.tasks.split(",") if args.tasks else []) if t]
    written = []
    scenario = default_scenario(dataset_path="readings.csv")
    if not args.no_scenario:
        save_scenario(scenario, out / "scenario.json")
        written.append(out / "scenario.json")
        readings = gen_readings(list(scenario.buildings), seed=args.seed,
                                cadence_hours=args.cadence_hours)
        write_readings_csv(out / "readings.csv", readings)
        written.append(out / "readings.csv")
    for task in tasks:
        trace = task_script(task, scenario)
        name = task.replace("-", "_")
        path = out / f"{name}.trace.jsonl"
        save_trace(trace, path)
        written.append(path)
        # The bare pose stream, in the recognizer's golden-file format.
        pose_path = out / f"{name}.poses.jsonl"
        with open(pose_path, "w", encoding="utf-8") as f:
            from .gestures import write_pose_trace
            from .geometry import TablePose

            samples = [(e.payload["proxy"],
                        TablePose(x=e.payload["x"], y=e.payload["y"],
                                  z=e.payload["z"], yaw=e.payload["yaw"],
                                  pitch=e.payload.get("pitch", 0.0),
                                  roll=e.payload.get("roll", 0.0),
                                  t_ms=e.t_ms))
                       for _, e in trace.entries if e.kind == "pose_update"]
            write_pose_trace(f, samples)
        written.append(pose_path)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_replay(args) -> int:
    scenario = _load_scenario_arg(args)
    readings = _load_readings_for(scenario, args.scenario)
    trace = load_trace(args.trace)
    session = Session(scenario, readings=readings)
    if trace.config_hash and trace.config_hash != session.config_hash \
            and not args.force:
        print(f"config hash mismatch: trace {trace.config_hash} vs "
              f"session {session.config_hash} (use --force to override)")
        return EXIT_USAGE
    session = replay_session(scenario, trace, readings=readings,
                             duration_s=args.duration)
    metrics = session.metrics()
    print(json.dumps(metrics.to_dict(), indent=2))
    return EXIT_OK if metrics.ok else EXIT_VIOLATION


def cmd_report(args) -> int:
    from .report import write_report

    scenario = _load_scenario_arg(args)
    readings = _load_readings_for(scenario, args.scenario)
    session = Session(scenario, readings=readings)
    if args.trace:
        trace = load_trace(args.trace)
        session.feed(env for _, env in trace.entries if is_input(env))
        duration = trace.entries[-1][0] / 1000.0 + 2.0 if trace.entries else 1.0
        session.run(args.duration or duration)
    model = session.render_model()
    poses = {r.id: r.pose for r in session.fleet.robots}
    written = write_report(model, scenario, args.out, robot_poses=poses)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .live import serve_forever

    try:
        asyncio.run(serve_forever(args))
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxydash",
        description="tabletop proxy simulator, gesture dashboard and hub")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", help="scenario JSON path (default built-in)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("run", help="run a headless scenario, print metrics")
    common(p)
    p.add_argument("--trace", help="input envelope trace to script the run")
    p.add_argument("--duration", type=float, help="seconds of simulated time")
    p.add_argument("--metrics-out", help="write metrics JSON here")
    p.add_argument("--record", help="write the full session trace here")
    p.add_argument("--shoebox", help="persistent shoebox sidecar JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fuzz", help="seeded randomized stress run")
    common(p)
    p.add_argument("--ticks", type=int, default=10_000)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("check", help="validate a trace or golden directory")
    common(p)
    p.add_argument("--trace", help="envelope trace to validate")
    p.add_argument("--golden", help="directory of *.events.jsonl/*.state.json")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen-fixtures", help="write scenario, dataset and task traces")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--tasks", default=",".join(TASK_NAMES),
                   help="comma list of task scripts (empty for none)")
    p.add_argument("--no-scenario", action="store_true")
    p.add_argument("--cadence-hours", type=int, default=24)
    p.set_defaults(func=cmd_gen_fixtures)

    p = sub.add_parser("replay", help="re-run a recorded trace deterministically")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--duration", type=float)
    p.add_argument("--speed", type=float, default=1.0,
                   help="pacing for live replay; headless replay ignores it")
    p.add_argument("--force", action="store_true",
                   help="ignore config hash mismatch")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="render dashboard figures and CSV exports")
    common(p)
    p.add_argument("--trace", help="optional trace to replay before reporting")
    p.add_argument("--duration", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the WebSocket hub (and live session)")
    common(p)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", action="store_true",
                   help="also serve the web UI static files")
    p.add_argument("--ui-dir", default=None)
    p.add_argument("--ui-port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # scenario/trace problems are user input errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
