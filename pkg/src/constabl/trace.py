"""Simulation traces: typed records, NDJSON serialization, and a replay
validator that checks an executed step against its code value.

Records serialize one-per-line as JSON objects with sorted keys, so a
trace file is a deterministic function of (model, events, seed). Stable
field names: kind, step, block, node, var, old, new, seed; instruction
records additionally carry the control-point label, the owning branch
(fired transition) and, optionally, the variables read.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Union

from .transcode import Code, CodeIndex


@dataclass(frozen=True)
class TraceBegin:
    seed: int | None
    model: str
    kind: str = field(default="trace-begin", init=False)

    def to_json(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "model": self.model}


@dataclass(frozen=True)
class StepBegin:
    step: int
    event: str | None  # None for the initial entry pseudo-step
    kind: str = field(default="step-begin", init=False)

    def to_json(self) -> dict:
        return {"kind": self.kind, "step": self.step, "event": self.event}


@dataclass(frozen=True)
class TransitionSet:
    step: int
    transitions: tuple[str, ...]
    kind: str = field(default="transition-set", init=False)

    def to_json(self) -> dict:
        return {"kind": self.kind, "step": self.step, "transitions": list(self.transitions)}


@dataclass(frozen=True)
class Instruction:
    step: int
    branch: str | None  # fired transition owning the branch; None in step 0
    block: str          # code block label, e.g. "A.exit"
    node: str           # CFG node id within the block
    cp: str             # control-point label within the step code
    var: str | None     # resolved identity "State.name", None for skip
    old: int | bool | None
    new: int | bool | None
    reads: tuple[str, ...] | None = None
    kind: str = field(default="instruction", init=False)

    def to_json(self) -> dict:
        out = {
            "kind": self.kind, "step": self.step, "branch": self.branch,
            "block": self.block, "node": self.node, "cp": self.cp,
            "var": self.var, "old": self.old, "new": self.new,
        }
        if self.reads is not None:
            out["reads"] = list(self.reads)
        return out


@dataclass(frozen=True)
class Decision:
    step: int
    branch: str | None
    block: str
    node: str
    cp: str
    outcome: bool
    reads: tuple[str, ...] | None = None
    kind: str = field(default="decision", init=False)

    def to_json(self) -> dict:
        out = {
            "kind": self.kind, "step": self.step, "branch": self.branch,
            "block": self.block, "node": self.node, "cp": self.cp,
            "outcome": self.outcome,
        }
        if self.reads is not None:
            out["reads"] = list(self.reads)
        return out


@dataclass(frozen=True)
class EventLost:
    step: int
    event: str
    kind: str = field(default="event-lost", init=False)

    def to_json(self) -> dict:
        return {"kind": self.kind, "step": self.step, "event": self.event}


@dataclass(frozen=True)
class ConfigChange:
    step: int
    old: tuple[str, ...]
    new: tuple[str, ...]
    kind: str = field(default="config-change", init=False)

    def to_json(self) -> dict:
        return {"kind": self.kind, "step": self.step, "old": list(self.old), "new": list(self.new)}


@dataclass(frozen=True)
class StepEnd:
    step: int
    kind: str = field(default="step-end", init=False)

    def to_json(self) -> dict:
        return {"kind": self.kind, "step": self.step}


@dataclass(frozen=True)
class ErrorRecord:
    step: int
    error: str  # e.g. "conflict", "division-by-zero", "overflow", "nontermination"
    detail: dict
    kind: str = field(default="error", init=False)

    def to_json(self) -> dict:
        return {"kind": self.kind, "step": self.step, "error": self.error, "detail": self.detail}


Record = Union[
    TraceBegin, StepBegin, TransitionSet, Instruction, Decision,
    EventLost, ConfigChange, StepEnd, ErrorRecord,
]


class Trace:
    """An append-only record list with NDJSON round-tripping."""

    def __init__(self, records: list[Record] | None = None):
        self.records: list[Record] = records if records is not None else []

    def append(self, record: Record) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    def to_ndjson(self) -> str:
        lines = [
            json.dumps(r.to_json(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
            for r in self.records
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    def step_records(self, step: int) -> list[Record]:
        return [r for r in self.records if getattr(r, "step", None) == step]

    def executions(self, step: int) -> list[Union[Instruction, Decision]]:
        return [r for r in self.step_records(step) if isinstance(r, (Instruction, Decision))]


def read_ndjson(text: str) -> list[dict]:
    """Parse an NDJSON trace back into plain dicts (for tooling and tests)."""
    return [json.loads(line) for line in text.splitlines() if line.strip()]


class LinearizationError(Exception):
    """A step trace is not a legal interleaving of its code value."""


def validate_step(code: Code, executions: list[Union[Instruction, Decision]]) -> None:
    """Check that the executed sequence is a linear extension of the step
    code's ordering constraints and runs every block exactly once.

    Bookkeeping is deliberately separate from the engine's: a leaf becomes
    active only when all of its predecessor leaves have finished, and each
    active leaf advances node by node through its own CFG, decisions
    following the recorded outcome.
    """
    index = CodeIndex(code)
    block_to_ordinal = {
        index.block_id(l.ordinal).label(): l.ordinal
        for l in (index.leaf(i) for i in range(1, len(index.leaves) + 1))
    }
    active: dict[int, str] = {}  # ordinal -> expected node id
    done: set[int] = set()
    for point in index.initial_points():
        active[point.ordinal] = point.node_id

    def activate_successors(ordinal: int) -> None:
        for succ in index.leaf(ordinal).next_ordinals:
            if succ in done or succ in active:
                raise LinearizationError(f"leaf {succ} activated twice")
            if all(p in done for p in index.leaf(succ).pred_ordinals):
                active[succ] = index.leaf(succ).code.cfg.entry

    for rec in executions:
        ordinal = block_to_ordinal.get(rec.block)
        if ordinal is None:
            raise LinearizationError(f"record references unknown block {rec.block!r}")
        if ordinal not in active:
            raise LinearizationError(
                f"block {rec.block!r} executed while not eligible (node {rec.node})"
            )
        if active[ordinal] != rec.node:
            raise LinearizationError(
                f"block {rec.block!r}: executed node {rec.node}, expected {active[ordinal]}"
            )
        leaf = index.leaf(ordinal)
        node = leaf.code.cfg.node(rec.node)
        if isinstance(rec, Decision):
            if node.kind != "dec":
                raise LinearizationError(f"decision record for non-decision node {rec.node}")
            nxt = node.then_succ if rec.outcome else node.else_succ
            active[ordinal] = nxt
        else:
            if node.kind != "inst":
                raise LinearizationError(f"instruction record for decision node {rec.node}")
            if rec.node == leaf.code.cfg.exit:
                del active[ordinal]
                done.add(ordinal)
                activate_successors(ordinal)
            else:
                active[ordinal] = node.succ
    if active:
        raise LinearizationError(f"step ended with unfinished blocks: {sorted(active)}")
    if len(done) != len(index.leaves):
        missing = set(range(1, len(index.leaves) + 1)) - done
        raise LinearizationError(f"blocks never executed: {sorted(missing)}")
