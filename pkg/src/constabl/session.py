"""Interactive simulation sessions.

A session wraps a checked model, a seeded scheduler and a live
environment. It supports two modes:

  event mode        `step_event` runs a whole step, interleaving resolved
                    internally by the session's seeded scheduler
  instruction mode  `step_event` only prepares the step; `choose` then
                    executes one eligible control point at a time until
                    the front (CP and JP) drains, at which point the
                    configuration change is applied

State snapshots expose everything a client needs to render the run: the
configuration and its tree, variable frames, the control front with
instruction previews, join points, and per-event enabledness previews.

Sessions are deterministic: the same model, seed, mode and op sequence
produce byte-identical traces. Every mutating call is appended to an op
log so a run can be replayed with `Session.replay`.

Errors during a step (evaluation failures, conflicting transition sets,
budget exhaustion) roll the environment back to the start of the step,
mark the step in the trace, and surface as SessionError with a structured
payload; the session itself stays usable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .engine import (
    DEFAULT_STEP_BUDGET,
    EngineError,
    Environment,
    EvalError,
    NotInControlFrontError,
    PreparedStep,
    RandomScheduler,
    cst,
    cst_states,
    enabled_transitions,
    finish_step,
    init_model,
    prepare_step,
    reason_of,
)
from .model import Model
from .trace import ErrorRecord, StepEnd, Trace
from .transcode import ConflictError, StateTree

MODES = ("event", "instruction")


class SessionError(Exception):
    def __init__(self, code: str, message: str, data: dict | None = None):
        super().__init__(message)
        self.code = code
        self.data = data or {}

    def to_json(self) -> dict:
        return {"code": self.code, "message": str(self), "data": self.data}


@dataclass(frozen=True)
class SessionOp:
    op: str
    arg: str

    def to_json(self) -> dict:
        return {"op": self.op, "arg": self.arg}


class Session:
    """One interactive run. The initial entry pseudo-step executes during
    construction under the session scheduler; interaction starts with the
    first event."""

    def __init__(
        self,
        model: Model,
        seed: int = 0,
        mode: str = "event",
        budget: int = DEFAULT_STEP_BUDGET,
        track_reads: bool = False,
    ):
        if mode not in MODES:
            raise SessionError("bad-mode", f"mode must be one of {MODES}, got {mode!r}")
        self.model = model
        self.seed = seed
        self.mode = mode
        self.budget = budget
        self.track_reads = track_reads
        self.scheduler = RandomScheduler(seed)
        try:
            config, env, trace = init_model(model, self.scheduler, budget)
        except EngineError as e:
            raise SessionError("model-error", str(e)) from e
        self.config: frozenset[str] = config
        self.env: Environment = env
        self.trace: Trace = trace
        self.step_count = 0
        self.ops: list[SessionOp] = []
        self.last_error: dict | None = None
        self.last_outcome: dict | None = None
        self._pending: PreparedStep | None = None
        self._snapshot: Environment | None = None

    # -- stepping ----------------------------------------------------------

    @property
    def mid_step(self) -> bool:
        return self._pending is not None

    def step_event(self, event: str) -> dict:
        """Run (event mode) or open (instruction mode) the next step."""
        if self.mid_step:
            raise SessionError(
                "mid-step",
                "a step is in progress; finish it with choose/run_step first",
                {"cp": list(self._pending.execution.cp_labels())},
            )
        if event not in self.model.events:
            raise SessionError(
                "bad-event", f"event {event!r} is not declared",
                {"events": list(self.model.events)},
            )
        self.ops.append(SessionOp("step-event", event))
        step = self.step_count + 1
        snapshot = self.env.copy()
        try:
            prepared = prepare_step(
                self.model, self.config, self.env, event, self.trace, step,
                self.budget, self.track_reads,
            )
        except (ConflictError, EvalError) as e:
            self.env.restore(snapshot)
            self.step_count = step
            self._fail(step, e)
        if prepared is None:  # event lost: the step is already closed
            self.step_count = step
            self.last_error = None
            self.last_outcome = {
                "step": step, "event": event, "lost": True, "fired": [],
                "config": sorted(self.config),
            }
            return self.last_outcome
        if self.mode == "event":
            try:
                prepared.execution.run(self.scheduler)
                new_config = finish_step(self.model, prepared, self.trace)
            except EngineError as e:
                self.env.restore(snapshot)
                self._record_failure(step, e)
                self.step_count = step
                self._fail(step, e)
            self.config = new_config
            self.step_count = step
            return self._complete(prepared)
        self._pending = prepared
        self._snapshot = snapshot
        return {
            "step": step, "event": event, "lost": False,
            "cp": list(prepared.execution.cp_labels()),
            "jp": {k: list(v) for k, v in prepared.execution.jp_map().items()},
        }

    def choose(self, label: str) -> dict:
        """Instruction mode: execute one control point from the front."""
        if self.mode != "instruction":
            raise SessionError("bad-mode", "choose is only available in instruction mode")
        if not self.mid_step:
            raise SessionError("not-mid-step", "no step in progress; send an event first")
        self.ops.append(SessionOp("choose", label))
        prepared = self._pending
        step = prepared.execution.step
        try:
            prepared.execution.execute(label)
        except NotInControlFrontError as e:
            # bad choice is not fatal: the step stays open
            self.ops.pop()
            raise SessionError(
                "bad-control-point", str(e), {"cp": list(e.available)}
            ) from e
        except EngineError as e:
            self.env.restore(self._snapshot)
            self._record_failure(step, e)
            self._pending = None
            self._snapshot = None
            self.step_count = step
            self._fail(step, e)
        if prepared.execution.done:
            try:
                new_config = finish_step(self.model, prepared, self.trace)
            except EngineError as e:
                self.env.restore(self._snapshot)
                self._record_failure(step, e)
                self._pending = None
                self._snapshot = None
                self.step_count = step
                self._fail(step, e)
            self.config = new_config
            self._pending = None
            self._snapshot = None
            self.step_count = step
            return self._complete(prepared)
        return {
            "step": step, "done": False,
            "cp": list(prepared.execution.cp_labels()),
            "jp": {k: list(v) for k, v in prepared.execution.jp_map().items()},
        }

    def run_step(self) -> dict:
        """Instruction mode: drain the open step with the session scheduler."""
        if not self.mid_step:
            raise SessionError("not-mid-step", "no step in progress")
        result: dict = {"done": False}
        while self.mid_step:
            label = self.scheduler.choose(self._pending.execution.cp_labels())
            result = self.choose(label)
        return result

    def _complete(self, prepared: PreparedStep) -> dict:
        self.last_error = None
        self.last_outcome = {
            "step": prepared.execution.step,
            "event": prepared.event,
            "lost": False,
            "fired": [t.name for t in prepared.transitions],
            "entered": sorted(prepared.entered),
            "exited": sorted(prepared.exited),
            "config": sorted(self.config),
            "done": True,
        }
        return self.last_outcome

    def _record_failure(self, step: int, e: EngineError) -> None:
        """Engine paths that raise mid-execution leave the step unmarked."""
        detail = dict(getattr(e, "context", {}))
        detail["message"] = str(e)
        self.trace.append(ErrorRecord(step, reason_of(e), detail))
        self.trace.append(StepEnd(step))

    def _fail(self, step: int, e: Exception) -> None:
        if isinstance(e, ConflictError):
            payload = {
                "transitions": sorted((e.t1, e.t2)),
                "shared_blocks": list(e.shared),
            }
            reason = "conflict"
        else:
            payload = dict(getattr(e, "context", {}))
            reason = reason_of(e)
        self.last_error = {"step": step, "reason": reason,
                           "message": str(e), "detail": payload}
        self.last_outcome = None
        raise SessionError("step-error", str(e), self.last_error) from e

    # -- snapshots ----------------------------------------------------------

    def state(self) -> dict:
        """JSON-ready snapshot of everything a client renders."""
        pending = self._pending
        cp = []
        jp: dict[str, list[str]] = {}
        if pending is not None:
            index = pending.execution.index
            for label in pending.execution.cp_labels():
                point = index.point(label)
                leaf = index.leaf(point.ordinal)
                node = index.node(point)
                cp.append({
                    "label": label,
                    "block": leaf.code.block_id.label(),
                    "node": node.id,
                    "kind": node.kind,
                    "preview": node.label(),
                })
            jp = {k: list(v) for k, v in pending.execution.jp_map().items()}
        enabled: dict[str, list[str]] = {}
        preview_errors: dict[str, str] = {}
        for event in self.model.events:
            try:
                enabled[event] = [
                    t.name
                    for t in enabled_transitions(self.model, self.config, self.env, event)
                ]
            except EngineError as e:
                enabled[event] = []
                preview_errors[event] = str(e)
        return {
            "model": self.model.name,
            "mode": self.mode,
            "seed": self.seed,
            "step": self.step_count,
            "mid_step": self.mid_step,
            "pending_event": pending.event if pending is not None else None,
            "config": sorted(self.config),
            "tree": _tree_json(cst(self.model, self.config)),
            "hierarchy": _hierarchy_json(self.model, self.model.root),
            "active": sorted(cst_states(self.model, self.config)),
            "frames": self.env.snapshot_frames(),
            "cp": cp,
            "jp": jp,
            "enabled": enabled,
            "enabled_errors": preview_errors,
            "events": list(self.model.events),
            "last_outcome": self.last_outcome,
            "last_error": self.last_error,
        }

    def trace_ndjson(self) -> str:
        return self.trace.to_ndjson()

    # -- replay --------------------------------------------------------------

    @classmethod
    def replay(
        cls,
        model: Model,
        seed: int,
        mode: str,
        ops: Sequence[SessionOp | dict],
        budget: int = DEFAULT_STEP_BUDGET,
        track_reads: bool = False,
    ) -> "Session":
        """Rebuild a session from its op log; errors replay as part of the
        history (they do not abort the replay)."""
        session = cls(model, seed, mode, budget, track_reads)
        for op in ops:
            if isinstance(op, dict):
                op = SessionOp(op["op"], op["arg"])
            try:
                if op.op == "step-event":
                    session.step_event(op.arg)
                elif op.op == "choose":
                    session.choose(op.arg)
                else:
                    raise SessionError("bad-op", f"unknown op {op.op!r}")
            except SessionError as e:
                if e.code != "step-error":
                    raise
        return session


def _tree_json(tree: StateTree) -> dict:
    return {
        "state": tree.state,
        "children": [_tree_json(c) for c in tree.children],
    }


def _hierarchy_json(model: Model, name: str) -> dict:
    """Full containment tree with state kinds, for client-side rendering."""
    state = model.states[name]
    return {
        "state": name,
        "kind": state.stype.value,
        "children": [_hierarchy_json(model, c) for c in model.children(name)],
    }
