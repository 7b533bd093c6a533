"""Randomized testing of statechart models.

A campaign draws byte strings from a seeded generator, maps each byte to
an event (index = byte modulo the number of declared events, in
declaration order), and simulates the resulting sequence under a freshly
seeded random scheduler. Findings are deduplicated, and minimized at the
end of the campaign by delta debugging over the event sequence with the
scheduler seed held fixed. Every finding carries a witness (events plus
scheduler seed) that reproduces it deterministically.

Oracles:
  non-determinism        block conflict between transitions whose sources
                         sit on one ancestor chain
  concurrency-conflict   block conflict across regions, or two fired
                         transitions writing the same variable in one step
  undesired-configuration  user-supplied predicates: a set of states that
                         must all be active, optionally an expression over
                         model variables
  runtime-error          guard/action evaluation failures (overflow,
                         division by zero, unbound variable)
  nontermination         a step exceeding its instruction budget
Reachability goals (states, transitions, exact atomic configurations) are
reported with first-hit witnesses rather than treated as defects.
"""

from __future__ import annotations

import json
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .engine import (
    DEFAULT_STEP_BUDGET,
    EngineError,
    NonterminationError,
    RandomScheduler,
    cst_states,
    ensure_checked,
    eval_expr,
    simulate,
)
from .model import (
    Binary,
    BoolLit,
    Call,
    Expr,
    IntLit,
    Model,
    Storage,
    Unary,
    Value,
    Var,
)
from .parser import parse_expression
from .structural import is_ancestor
from .trace import ErrorRecord, Instruction
from .transcode import ConflictError

__all__ = [
    "FuzzConfig",
    "Witness",
    "Finding",
    "GoalResult",
    "CampaignReport",
    "NonReproducibleError",
    "events_from_bytes",
    "run_one",
    "fuzz_campaign",
    "reproduce",
    "minimize_witness",
    "ddmin",
]


class NonReproducibleError(Exception):
    pass


@dataclass(frozen=True)
class Witness:
    """Everything needed to replay a finding deterministically."""

    events: tuple[str, ...]
    scheduler_seed: int

    def to_json(self) -> dict:
        return {"events": list(self.events), "scheduler_seed": self.scheduler_seed}


@dataclass
class Finding:
    kind: str
    witness: Witness
    step: int
    detail: dict
    minimized: bool = False

    def key(self) -> tuple:
        """Deduplication identity: the defect, not the run that hit it."""
        match self.kind:
            case "non-determinism" | "concurrency-conflict" if "transitions" in self.detail:
                extra: tuple = (
                    frozenset(self.detail["transitions"]),
                    self.detail.get("variable"),
                )
            case "undesired-configuration":
                extra = (self.detail["index"],)
            case "runtime-error":
                extra = (self.detail.get("reason"), self.detail.get("block"))
            case _:
                extra = ()
        return (self.kind,) + extra

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "step": self.step,
            "detail": self.detail,
            "witness": self.witness.to_json(),
            "minimized": self.minimized,
        }


@dataclass
class GoalResult:
    goal_kind: str  # state | transition | configuration
    goal: object
    reached: bool = False
    witness: Witness | None = None
    step: int | None = None

    def to_json(self) -> dict:
        return {
            "goal_kind": self.goal_kind,
            "goal": self.goal if not isinstance(self.goal, tuple) else list(self.goal),
            "reached": self.reached,
            "witness": self.witness.to_json() if self.witness else None,
            "step": self.step,
        }


@dataclass(frozen=True)
class FuzzConfig:
    max_events_per_run: int = 50
    runs: int | None = None
    total_events: int | None = None
    wall_clock_s: float | None = None
    seed: int = 0
    step_budget: int = DEFAULT_STEP_BUDGET
    oracles: tuple[str, ...] = (
        "non-determinism",
        "concurrency-conflict",
        "undesired-configuration",
        "runtime-error",
        "nontermination",
    )
    undesired: tuple[dict, ...] = ()
    goal_states: tuple[str, ...] = ()
    goal_transitions: tuple[str, ...] = ()
    goal_configurations: tuple[tuple[str, ...], ...] = ()
    minimize: bool = True
    track_reads: bool = False

    @staticmethod
    def from_json(data: dict) -> "FuzzConfig":
        known = {
            "max_events_per_run", "runs", "total_events", "wall_clock_s",
            "seed", "step_budget", "oracles", "undesired", "goals",
            "minimize", "track_reads",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown fuzz config keys: {sorted(unknown)}")
        goals = data.get("goals", {})
        if set(goals) - {"states", "transitions", "configurations"}:
            raise ValueError("goals accepts keys: states, transitions, configurations")
        kwargs: dict = {}
        for k in ("max_events_per_run", "runs", "total_events", "wall_clock_s",
                  "seed", "step_budget", "minimize", "track_reads"):
            if k in data:
                kwargs[k] = data[k]
        if "oracles" in data:
            kwargs["oracles"] = tuple(data["oracles"])
        if "undesired" in data:
            kwargs["undesired"] = tuple(data["undesired"])
        kwargs["goal_states"] = tuple(goals.get("states", ()))
        kwargs["goal_transitions"] = tuple(goals.get("transitions", ()))
        kwargs["goal_configurations"] = tuple(
            tuple(c) for c in goals.get("configurations", ())
        )
        return FuzzConfig(**kwargs)

    def budgeted_runs(self) -> int | None:
        if self.runs is None and self.total_events is None and self.wall_clock_s is None:
            return 1000  # default campaign size when nothing else bounds it
        return self.runs


def events_from_bytes(data: bytes, events: Sequence[str]) -> tuple[str, ...]:
    if not events:
        raise ValueError("model declares no events")
    return tuple(events[b % len(events)] for b in data)


# ---------------------------------------------------------------------------
# Undesired-configuration predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Predicate:
    index: int
    states: tuple[str, ...]
    expr: Expr | None
    expr_text: str | None
    bindings: tuple[tuple[str, tuple[str, str]], ...]  # var -> (state, storage)

    def holds(self, model: Model, env, config: frozenset[str]) -> bool:
        active = cst_states(model, config)
        if not all(s in active for s in self.states):
            return False
        if self.expr is None:
            return True
        values: dict[str, Value] = {}
        for name, (state, storage) in self.bindings:
            store = env.statics if storage == "static" else env.frames
            frame = store.get(state)
            if frame is None or name not in frame:
                return False  # variable not live: the predicate cannot hold
            values[name] = frame[name]
        try:
            return bool(eval_expr(env, model.root, _substitute(self.expr, values)))
        except EngineError:
            return False


def _substitute(expr: Expr, values: dict[str, Value]) -> Expr:
    match expr:
        case Var(name=name):
            v = values[name]
            return BoolLit(v) if isinstance(v, bool) else IntLit(v)
        case Unary(op=op, operand=inner):
            return Unary(op, _substitute(inner, values))
        case Binary(op=op, left=l, right=r):
            return Binary(op, _substitute(l, values), _substitute(r, values))
        case Call(func=f, args=args):
            return Call(f, tuple(_substitute(a, values) for a in args))
        case _:
            return expr


def _expr_vars(expr: Expr) -> set[str]:
    match expr:
        case Var(name=name):
            return {name}
        case Unary(operand=inner):
            return _expr_vars(inner)
        case Binary(left=l, right=r):
            return _expr_vars(l) | _expr_vars(r)
        case Call(args=args):
            out: set[str] = set()
            for a in args:
                out |= _expr_vars(a)
            return out
        case _:
            return set()


def _compile_predicates(model: Model, cfg: FuzzConfig) -> list[_Predicate]:
    preds = []
    for i, spec in enumerate(cfg.undesired):
        unknown = set(spec) - {"states", "expr"}
        if unknown:
            raise ValueError(f"undesired[{i}]: unknown keys {sorted(unknown)}")
        states = tuple(spec.get("states", ()))
        for s in states:
            if s not in model.states:
                raise ValueError(f"undesired[{i}]: unknown state {s!r}")
        expr_text = spec.get("expr")
        expr = None
        bindings: list[tuple[str, tuple[str, str]]] = []
        if expr_text is not None:
            expr = parse_expression(expr_text)
            for name in sorted(_expr_vars(expr)):
                owners = [
                    (s.name, v.storage.value)
                    for s in model.states.values()
                    for v in s.vars
                    if v.name == name
                ]
                if not owners:
                    raise ValueError(f"undesired[{i}]: unknown variable {name!r}")
                if len(owners) > 1:
                    raise ValueError(
                        f"undesired[{i}]: variable {name!r} is declared in several "
                        f"states ({sorted(o[0] for o in owners)}); qualify the model"
                    )
                bindings.append((name, owners[0]))
        if not states and expr is None:
            raise ValueError(f"undesired[{i}]: needs states and/or expr")
        preds.append(_Predicate(i, states, expr, expr_text, tuple(bindings)))
    return preds


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------

def _classify_conflict(model: Model, err: ConflictError) -> str:
    s1 = model.transitions[err.t1].source
    s2 = model.transitions[err.t2].source
    if s1 == s2 or is_ancestor(model, s1, s2) or is_ancestor(model, s2, s1):
        return "non-determinism"
    return "concurrency-conflict"


def _write_conflicts(records) -> list[tuple[str, tuple[str, str]]]:
    """Pairs (variable identity, branch pair) written by two branches."""
    writes: dict[str, set[str]] = {}
    for r in records:
        if isinstance(r, Instruction) and r.branch is not None and r.var is not None:
            writes.setdefault(r.branch, set()).add(r.var)
    out = []
    branches = sorted(writes)
    for i, b1 in enumerate(branches):
        for b2 in branches[i + 1:]:
            for var in sorted(writes[b1] & writes[b2]):
                out.append((var, (b1, b2)))
    return out


@dataclass
class RunResult:
    witness: Witness
    findings: list[Finding]
    initial_config: frozenset[str]
    steps: list[tuple[int, tuple[str, ...], frozenset[str]]]  # step, fired, config
    events_executed: int


def run_one(
    model: Model,
    events: Sequence[str],
    scheduler_seed: int,
    cfg: FuzzConfig,
    predicates: list[_Predicate] | None = None,
) -> RunResult:
    """Simulate one input and apply every enabled oracle to the outcome."""
    if predicates is None:
        predicates = _compile_predicates(model, cfg)
    witness = Witness(tuple(events), scheduler_seed)
    findings: list[Finding] = []

    def found(kind: str, step: int, detail: dict) -> None:
        if kind in cfg.oracles:
            findings.append(Finding(kind, witness, step, detail))

    try:
        result = simulate(
            model, events, RandomScheduler(scheduler_seed),
            budget=cfg.step_budget, track_reads=cfg.track_reads,
        )
    except EngineError as e:
        # initialization failed before any step could run
        found("runtime-error", 0, {"reason": getattr(e, "reason", "error"),
                                   "message": str(e)})
        return RunResult(witness, findings, frozenset(), [], 0)

    steps = [(o.step, o.fired, o.config) for o in result.outcomes]
    initial = _initial_config(result)

    if result.error is not None:
        err_step = _error_step(result)
        if isinstance(result.error, ConflictError):
            e = result.error
            found(
                _classify_conflict(model, e), err_step,
                {
                    "transitions": sorted((e.t1, e.t2)),
                    "shared_blocks": list(e.shared),
                    "event": _event_at(events, err_step),
                },
            )
        elif isinstance(result.error, EngineError):
            reason = getattr(result.error, "reason", None)
            if reason is None:
                reason = (
                    "nontermination"
                    if isinstance(result.error, NonterminationError)
                    else "error"
                )
            kind = "nontermination" if reason == "nontermination" else "runtime-error"
            detail = {
                "reason": reason,
                "message": str(result.error),
                "event": _event_at(events, err_step),
            }
            detail.update(getattr(result.error, "context", {}))
            found(kind, err_step, detail)

    for step, fired, config in steps:
        if len(fired) > 1:
            for var, pair in _write_conflicts(result.trace.executions(step)):
                found(
                    "concurrency-conflict", step,
                    {"variable": var, "transitions": list(pair),
                     "event": _event_at(events, step)},
                )
        for pred in predicates:
            if pred.holds(model, result.env, config):
                found(
                    "undesired-configuration", step,
                    {"index": pred.index, "states": list(pred.states),
                     "expr": pred.expr_text, "config": sorted(config)},
                )
    for pred in predicates:
        if initial and pred.holds(model, result.env, initial):
            found(
                "undesired-configuration", 0,
                {"index": pred.index, "states": list(pred.states),
                 "expr": pred.expr_text, "config": sorted(initial)},
            )

    executed = len(steps) + (1 if result.error is not None else 0)
    return RunResult(witness, findings, initial, steps, executed)


def _initial_config(result) -> frozenset[str]:
    from .trace import ConfigChange

    for r in result.trace:
        if isinstance(r, ConfigChange) and r.step == 0:
            return frozenset(r.new)
    return frozenset()


def _error_step(result) -> int:
    last = 0
    for r in result.trace:
        if isinstance(r, ErrorRecord):
            last = r.step
    return last


def _event_at(events: Sequence[str], step: int) -> str | None:
    return events[step - 1] if 1 <= step <= len(events) else None


# ---------------------------------------------------------------------------
# Minimization (delta debugging)
# ---------------------------------------------------------------------------

def ddmin(items: list, test: Callable[[list], bool]) -> list:
    """Classic ddmin: smallest subsequence (1-minimal) still failing `test`.
    `test(items)` must be True for the input; the result also tests True."""
    if test([]):
        return []
    n = 2
    while len(items) >= 2:
        chunk = max(1, len(items) // n)
        subsets = [items[i:i + chunk] for i in range(0, len(items), chunk)]
        reduced = False
        for s in subsets:
            if len(s) < len(items) and test(s):
                items, n, reduced = s, 2, True
                break
        if not reduced:
            for i in range(len(subsets)):
                complement = [x for j, s in enumerate(subsets) if j != i for x in s]
                if len(complement) < len(items) and test(complement):
                    items, n, reduced = complement, max(n - 1, 2), True
                    break
        if not reduced:
            if n >= len(items):
                break
            n = min(2 * n, len(items))
    return items


def minimize_witness(
    model: Model,
    finding: Finding,
    cfg: FuzzConfig,
    predicates: list[_Predicate] | None = None,
) -> Finding:
    """Shrink the event sequence while the same defect (by key) recurs
    under the same scheduler seed."""
    if predicates is None:
        predicates = _compile_predicates(model, cfg)
    target = finding.key()
    seed = finding.witness.scheduler_seed
    cache: dict[tuple[str, ...], bool] = {}

    def still_fails(events: list) -> bool:
        key = tuple(events)
        if key not in cache:
            rr = run_one(model, key, seed, cfg, predicates)
            cache[key] = any(f.key() == target for f in rr.findings)
        return cache[key]

    events = ddmin(list(finding.witness.events), still_fails)
    rr = run_one(model, tuple(events), seed, cfg, predicates)
    for f in rr.findings:
        if f.key() == target:
            return Finding(f.kind, f.witness, f.step, f.detail, minimized=True)
    raise NonReproducibleError(f"finding {target} vanished during minimization")


def reproduce(
    model: Model, finding: Finding, cfg: FuzzConfig | None = None
) -> Finding:
    """Replay a witness; raises NonReproducibleError if the defect is gone."""
    cfg = cfg or FuzzConfig()
    rr = run_one(model, finding.witness.events, finding.witness.scheduler_seed, cfg)
    for f in rr.findings:
        if f.key() == finding.key():
            return f
    raise NonReproducibleError(f"finding {finding.key()} did not reproduce")


# ---------------------------------------------------------------------------
# Campaigns
# ---------------------------------------------------------------------------

@dataclass
class CampaignReport:
    findings: list[Finding]
    goals: list[GoalResult]
    runs: int
    events_executed: int
    states_reached: tuple[str, ...]
    transitions_fired: tuple[str, ...]
    state_counts: dict[str, int]       # times each state was entered
    transition_counts: dict[str, int]  # times each transition fired
    configurations_seen: int
    coverage_curve: tuple[int, ...]  # cumulative |states|+|transitions| per run
    elapsed_s: float

    def to_json(self) -> dict:
        return {
            "findings": [f.to_json() for f in self.findings],
            "goals": [g.to_json() for g in self.goals],
            "runs": self.runs,
            "events_executed": self.events_executed,
            "states_reached": list(self.states_reached),
            "transitions_fired": list(self.transitions_fired),
            "state_counts": dict(self.state_counts),
            "transition_counts": dict(self.transition_counts),
            "configurations_seen": self.configurations_seen,
            "coverage_curve": list(self.coverage_curve),
            "elapsed_s": round(self.elapsed_s, 3),
        }


def fuzz_campaign(model: Model, cfg: FuzzConfig) -> CampaignReport:
    ensure_checked(model)
    predicates = _compile_predicates(model, cfg)
    for name in cfg.goal_states:
        if name not in model.states:
            raise ValueError(f"goal state {name!r} is not in the model")
    for name in cfg.goal_transitions:
        if name not in model.transitions:
            raise ValueError(f"goal transition {name!r} is not in the model")
    goals = (
        [GoalResult("state", s) for s in cfg.goal_states]
        + [GoalResult("transition", t) for t in cfg.goal_transitions]
        + [GoalResult("configuration", tuple(sorted(c))) for c in cfg.goal_configurations]
    )
    rng = random.Random(cfg.seed)
    seen: dict[tuple, Finding] = {}
    states_reached: set[str] = set()
    transitions_fired: set[str] = set()
    state_counts: Counter[str] = Counter()
    transition_counts: Counter[str] = Counter()
    configurations: set[frozenset[str]] = set()
    curve: list[int] = []
    runs = 0
    events_executed = 0
    start = time.monotonic()
    run_budget = cfg.budgeted_runs()

    while True:
        if run_budget is not None and runs >= run_budget:
            break
        if cfg.total_events is not None and events_executed >= cfg.total_events:
            break
        if cfg.wall_clock_s is not None and time.monotonic() - start >= cfg.wall_clock_s:
            break
        n = rng.randint(1, cfg.max_events_per_run)
        events = events_from_bytes(rng.randbytes(n), model.events)
        sched_seed = rng.randrange(2**32)
        rr = run_one(model, events, sched_seed, cfg, predicates)
        runs += 1
        events_executed += rr.events_executed

        for f in rr.findings:
            seen.setdefault(f.key(), f)
        all_configs = [(0, (), rr.initial_config)] + rr.steps if rr.initial_config else rr.steps
        prev_active: set[str] = set()
        for step, fired, config in all_configs:
            active = cst_states(model, config) if config else set()
            states_reached |= active
            state_counts.update(active - prev_active)  # entries, not residency
            prev_active = active
            transitions_fired.update(fired)
            transition_counts.update(fired)
            if config:
                configurations.add(config)
            for g in goals:
                if g.reached:
                    continue
                hit = (
                    (g.goal_kind == "state" and g.goal in cst_states(model, config))
                    or (g.goal_kind == "transition" and g.goal in fired)
                    or (g.goal_kind == "configuration" and tuple(sorted(config)) == g.goal)
                )
                if hit:
                    g.reached = True
                    g.witness = rr.witness
                    g.step = step
        curve.append(len(states_reached) + len(transitions_fired))

    findings = [seen[k] for k in sorted(seen, key=repr)]
    if cfg.minimize:
        findings = [minimize_witness(model, f, cfg, predicates) for f in findings]
    return CampaignReport(
        findings=findings,
        goals=goals,
        runs=runs,
        events_executed=events_executed,
        states_reached=tuple(sorted(states_reached)),
        transitions_fired=tuple(sorted(transitions_fired)),
        state_counts={k: state_counts[k] for k in sorted(state_counts)},
        transition_counts={k: transition_counts[k] for k in sorted(transition_counts)},
        configurations_seen=len(configurations),
        coverage_curve=tuple(curve),
        elapsed_s=time.monotonic() - start,
    )


def load_config(path: str) -> FuzzConfig:
    with open(path, encoding="utf-8") as fh:
        return FuzzConfig.from_json(json.load(fh))
