"""Command-line interface.

    constabl check FILE            static checks; exit 1 on errors
    constabl print FILE            canonical pretty-printed form
    constabl simulate FILE --events e1,e2 [--seed N | --choices 1,2.1,...]
    constabl fuzz FILE [--config cfg.json] [--report out.json]
    constabl fuzz-bytes FILE [--bytes 00ff3a] [--seed N]
    constabl serve [--port N]

Exit codes: 0 clean (warnings allowed), 1 findings or errors, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import sys

from .diagnostics import ParseError, errors_of
from .engine import (
    DEFAULT_STEP_BUDGET,
    EngineError,
    RandomScheduler,
    ScriptedScheduler,
    simulate,
)
from .fuzz import (
    FuzzConfig,
    events_from_bytes,
    fuzz_campaign,
    load_config,
    run_one,
)
from .model import Model
from .parser import parse_model_file, pretty_print
from .structural import check_model
from .transcode import ConflictError


def _load(path: str) -> Model:
    try:
        return parse_model_file(path)
    except OSError as e:
        print(f"error: cannot read {path}: {e.strerror}", file=sys.stderr)
        raise SystemExit(1)
    except ParseError as e:
        for d in e.diagnostics:
            print(d.format(), file=sys.stderr)
        raise SystemExit(1)


def _load_checked(path: str) -> Model:
    model = _load(path)
    diags = check_model(model)
    for d in diags:
        print(d.format(), file=sys.stderr)
    if errors_of(diags):
        raise SystemExit(1)
    return model


def cmd_check(args: argparse.Namespace) -> int:
    model = _load(args.file)
    diags = check_model(model)
    if args.json:
        print(json.dumps(
            [
                {"severity": d.severity, "code": d.code, "message": d.message,
                 "file": d.file, "line": d.line, "col": d.col}
                for d in diags
            ],
            indent=2,
        ))
    else:
        for d in diags:
            print(d.format())
        if not diags:
            print(f"{args.file}: ok "
                  f"({len(model.states)} states, {len(model.transitions)} transitions)")
    return 1 if errors_of(diags) else 0


def cmd_print(args: argparse.Namespace) -> int:
    print(pretty_print(_load(args.file)), end="")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    model = _load_checked(args.file)
    events = [e for e in args.events.split(",") if e] if args.events else []
    for e in events:
        if e not in model.events:
            print(f"error: event {e!r} is not declared (events: "
                  f"{', '.join(model.events)})", file=sys.stderr)
            return 2
    if args.choices:
        scheduler = ScriptedScheduler([c for c in args.choices.split(",") if c])
    else:
        scheduler = RandomScheduler(args.seed)
    result = simulate(model, events, scheduler, budget=args.budget)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(result.trace.to_ndjson())
    if args.json:
        payload = {
            "config": sorted(result.config),
            "steps": [
                {"step": o.step, "event": o.event, "lost": o.lost,
                 "fired": list(o.fired), "config": sorted(o.config)}
                for o in result.outcomes
            ],
            "error": None if result.error is None else {
                "type": type(result.error).__name__, "message": str(result.error),
            },
        }
        print(json.dumps(payload, indent=2))
    else:
        for o in result.outcomes:
            if o.lost:
                print(f"step {o.step} {o.event}: lost")
            else:
                fired = ",".join(o.fired)
                cfg = ", ".join(sorted(o.config))
                print(f"step {o.step} {o.event}: fired {fired} -> {{{cfg}}}")
        print(f"final: {{{', '.join(sorted(result.config))}}}")
    if result.error is not None:
        print(f"error: {result.error}", file=sys.stderr)
        return 1
    return 0


def _finding_line(f) -> str:
    extras = []
    if "transitions" in f.detail:
        extras.append("transitions " + ",".join(f.detail["transitions"]))
    if f.detail.get("variable"):
        extras.append("variable " + f.detail["variable"])
    if f.detail.get("states"):
        extras.append("states " + ",".join(f.detail["states"]))
    if f.detail.get("reason") and f.kind == "runtime-error":
        extras.append(f.detail["reason"])
    witness = f"witness: {len(f.witness.events)} events, seed {f.witness.scheduler_seed}"
    if f.witness.events:
        witness += " [" + ",".join(f.witness.events) + "]"
    body = "; ".join(extras) if extras else ""
    return f"finding {f.kind} at step {f.step}: {body} ({witness})"


def cmd_fuzz(args: argparse.Namespace) -> int:
    model = _load_checked(args.file)
    if args.config:
        try:
            cfg = load_config(args.config)
        except (OSError, ValueError) as e:
            print(f"error: bad fuzz config: {e}", file=sys.stderr)
            return 2
    else:
        cfg = FuzzConfig()
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.total_events is not None:
        overrides["total_events"] = args.total_events
    if args.max_events is not None:
        overrides["max_events_per_run"] = args.max_events
    if args.no_minimize:
        overrides["minimize"] = False
    if overrides:
        cfg = FuzzConfig(**{**cfg.__dict__, **overrides})
    try:
        report = fuzz_campaign(model, cfg)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2)
            fh.write("\n")
    print(f"{report.runs} runs, {report.events_executed} events, "
          f"{len(report.states_reached)} states, "
          f"{len(report.transitions_fired)} transitions, "
          f"{report.configurations_seen} configurations "
          f"({report.elapsed_s:.2f}s)")
    for g in report.goals:
        goal = g.goal if isinstance(g.goal, str) else "{" + ", ".join(g.goal) + "}"
        if g.reached:
            print(f"goal {g.goal_kind} {goal}: reached at step {g.step}")
        else:
            print(f"goal {g.goal_kind} {goal}: not reached")
    for f in report.findings:
        print(_finding_line(f))
    return 1 if report.findings else 0


def cmd_fuzz_bytes(args: argparse.Namespace) -> int:
    model = _load_checked(args.file)
    if args.bytes is not None:
        try:
            data = bytes.fromhex(args.bytes)
        except ValueError:
            print(f"error: --bytes must be hex, got {args.bytes!r}", file=sys.stderr)
            return 2
    else:
        data = sys.stdin.buffer.read()
    events = events_from_bytes(data, model.events)
    print("events: " + (",".join(events) if events else "(none)"))
    rr = run_one(model, events, args.seed, FuzzConfig(minimize=False))
    print(f"steps executed: {rr.events_executed}")
    for f in rr.findings:
        print(_finding_line(f))
    return 1 if rr.findings else 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import default_port, serve

    serve(port=args.port if args.port is not None else default_port(),
          host=args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="constabl",
        description="parse, check, simulate and fuzz concurrent statecharts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run static checks")
    p.add_argument("file")
    p.add_argument("--json", action="store_true", help="diagnostics as JSON")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("print", help="canonical pretty-printed form")
    p.add_argument("file")
    p.set_defaults(fn=cmd_print)

    p = sub.add_parser("simulate", help="run an event sequence")
    p.add_argument("file")
    p.add_argument("--events", default="", help="comma-separated event names")
    p.add_argument("--seed", type=int, default=0, help="scheduler seed")
    p.add_argument("--choices", default="",
                   help="comma-separated control-point script (overrides --seed)")
    p.add_argument("--trace", help="write an NDJSON trace to this path")
    p.add_argument("--budget", type=int, default=DEFAULT_STEP_BUDGET,
                   help="per-step instruction budget")
    p.add_argument("--json", action="store_true", help="result as JSON")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("fuzz", help="run a fuzzing campaign")
    p.add_argument("file")
    p.add_argument("--config", help="campaign config (JSON)")
    p.add_argument("--seed", type=int, help="override campaign seed")
    p.add_argument("--runs", type=int, help="override run budget")
    p.add_argument("--total-events", type=int, help="override event budget")
    p.add_argument("--max-events", type=int, help="override events per run")
    p.add_argument("--no-minimize", action="store_true")
    p.add_argument("--report", help="write the full report (JSON) to this path")
    p.set_defaults(fn=cmd_fuzz)

    p = sub.add_parser("fuzz-bytes", help="replay one byte string as events")
    p.add_argument("file")
    p.add_argument("--bytes", help="hex-encoded input (default: raw bytes on stdin)")
    p.add_argument("--seed", type=int, default=0, help="scheduler seed")
    p.set_defaults(fn=cmd_fuzz_bytes)

    p = sub.add_parser("serve", help="run the WebSocket session server")
    p.add_argument("--port", type=int, default=None,
                   help="default: $CONSTABL_PORT or 8765")
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    except (EngineError, ConflictError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
