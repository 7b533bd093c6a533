#!/usr/bin/env python3
"""Run the bundled fuzzing campaigns and print a small report.

Three campaigns, mirroring the experiment setups the test suite pins down:

  traffic    the two-lamp junction with the both-green undesired
             configuration
  synthetic  the six-ring machine with three seeded defects (write race,
             guard-overlap non-determinism, order-sensitive undesired
             configuration) and two reachability goals
  safety     the guarded conflict models, expected to produce zero
             findings (false-positive check)

Usage:
    python3 scripts/run_fuzz_campaign.py [--events N] [--seed N] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from constabl import FuzzConfig, fuzz_campaign, parse_model_file

ROOT = Path(__file__).resolve().parent.parent


def campaign_traffic(events: int, seed: int) -> dict:
    model = parse_model_file(str(ROOT / "models" / "traffic.cstl"))
    cfg = FuzzConfig(
        seed=seed,
        total_events=events // 4,
        max_events_per_run=12,
        undesired=({"states": ["green1", "green2"]},),
    )
    return fuzz_campaign(model, cfg).to_json()


def campaign_synthetic(events: int, seed: int) -> dict:
    model = parse_model_file(str(ROOT / "models" / "synthetic.cstl"))
    cfg = FuzzConfig(
        seed=seed,
        total_events=events,
        max_events_per_run=40,
        undesired=({"states": ["s2_1", "s3_1"]},),
        goal_states=("q4_1",),
        goal_transitions=("tq4",),
    )
    return fuzz_campaign(model, cfg).to_json()


def campaign_safety(events: int, seed: int) -> dict:
    out = {}
    for name in ("nested_conflict_safe", "region_conflict_safe"):
        model = parse_model_file(str(ROOT / "models" / f"{name}.cstl"))
        cfg = FuzzConfig(
            seed=seed, total_events=events // 4, max_events_per_run=10, minimize=False
        )
        out[name] = fuzz_campaign(model, cfg).to_json()
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--events", type=int, default=20000, help="event budget per campaign")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--json", help="write the full reports to this path")
    args = ap.parse_args()

    reports = {
        "traffic": campaign_traffic(args.events, args.seed),
        "synthetic": campaign_synthetic(args.events, args.seed),
        "safety": campaign_safety(args.events, args.seed),
    }
    for name in ("traffic", "synthetic"):
        rep = reports[name]
        print(f"[{name}] {rep['runs']} runs, {rep['events_executed']} events, "
              f"{len(rep['findings'])} findings, {rep['elapsed_s']}s")
        for f in rep["findings"]:
            print(f"  {f['kind']} at step {f['step']}: witness "
                  f"{f['witness']['events']} (seed {f['witness']['scheduler_seed']})")
        for g in rep.get("goals", []):
            print(f"  goal {g['goal_kind']} {g['goal']}: "
                  f"{'reached' if g['reached'] else 'not reached'}")
    for name, rep in reports["safety"].items():
        print(f"[{name}] {rep['runs']} runs, {len(rep['findings'])} findings "
              f"(expected 0), {rep['elapsed_s']}s")
    if args.json:
        Path(args.json).write_text(json.dumps(reports, indent=2), encoding="utf-8")
        print(f"wrote {args.json}")


if __name__ == "__main__":
    main()
