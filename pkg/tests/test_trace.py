"""Trace records, NDJSON stability, and the linearization validator.

The validator keeps its own bookkeeping (leaf eligibility, node-by-node
advance), so these tests treat it as the referee for engine output: real
traces must pass, and every class of tampering must be rejected.
"""

from __future__ import annotations

import dataclasses
import json

import pytest

from constabl import init_model, read_ndjson, simulate, step_code
from constabl.trace import (
    ConfigChange,
    Decision,
    ErrorRecord,
    EventLost,
    Instruction,
    LinearizationError,
    StepBegin,
    StepEnd,
    Trace,
    TraceBegin,
    TransitionSet,
    validate_step,
)


def _step_one(model, events, seed=0):
    """(step code, executed records) for step 1 of a seeded run."""
    result = simulate(model, events, seed)
    assert result.completed
    change = next(
        rec for rec in result.trace if isinstance(rec, ConfigChange) and rec.step == 1
    )
    fired = next(
        rec.transitions for rec in result.trace if isinstance(rec, TransitionSet)
    )
    code = step_code(model, fired, frozenset(change.old))
    return code, result.trace.executions(1)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def test_ndjson_lines_are_compact_and_sorted():
    t = Trace(
        [
            TraceBegin(7, "m"),
            StepBegin(1, "go"),
            EventLost(1, "go"),
            StepEnd(1),
        ]
    )
    assert t.to_ndjson() == (
        '{"kind":"trace-begin","model":"m","seed":7}\n'
        '{"event":"go","kind":"step-begin","step":1}\n'
        '{"event":"go","kind":"event-lost","step":1}\n'
        '{"kind":"step-end","step":1}\n'
    )


def test_ndjson_keeps_unicode_readable(m1):
    result = simulate(m1, [], 0)
    first = result.trace.to_ndjson().splitlines()[0]
    assert json.loads(first)["model"] == "\U0001d4dc"
    assert "\\u" not in first  # written as characters, not escapes


def test_empty_trace_serializes_to_empty_string():
    assert Trace().to_ndjson() == ""


def test_read_ndjson_roundtrip(m1_blocks):
    result = simulate(m1_blocks, ["e1", "e"], 3)
    text = result.trace.to_ndjson()
    parsed = read_ndjson(text)
    assert len(parsed) == len(result.trace)
    assert [r["kind"] for r in parsed[:2]] == ["trace-begin", "step-begin"]
    assert parsed == [r.to_json() for r in result.trace]


def test_instruction_record_fields(m1_blocks):
    result = simulate(m1_blocks, ["e1"], 0)
    insts = [r for r in result.trace.executions(1) if isinstance(r, Instruction)]
    root = m1_blocks.root
    first = insts[0]
    assert first.branch in {"t_AB", "t_CD"}
    assert first.var == f"{root}.w"
    assert first.new == first.old + 1
    assert {r.block for r in insts} == {
        "A.exit", "t_AB.action", "B.entry", "C.exit", "t_CD.action", "D.entry"
    }


def test_error_record_shape(loop_forever):
    result = simulate(loop_forever, ["go"], 0, budget=100)
    err = next(r for r in result.trace if isinstance(r, ErrorRecord))
    payload = err.to_json()
    assert payload["kind"] == "error"
    assert payload["error"] == "nontermination"
    assert "budget of 100" in payload["detail"]["message"]


def test_trace_scopes_are_balanced(m1):
    result = simulate(m1, ["e1", "e2", "e"], 11)
    begins = [r.step for r in result.trace if isinstance(r, StepBegin)]
    ends = [r.step for r in result.trace if isinstance(r, StepEnd)]
    assert begins == ends == [0, 1, 2, 3]


def test_seed_recorded_only_for_seeded_runs(m1, traffic):
    from constabl import RandomScheduler, ScriptedScheduler

    assert init_model(m1, 42)[2].records[0].seed == 42
    assert init_model(m1, RandomScheduler(3))[2].records[0].seed == 3
    # a scripted run has no seed to record
    script = ["1", "2", "3", "4", "5", "6"]  # entry chain of the lamp model
    _, _, trace = init_model(traffic, ScriptedScheduler(script))
    assert trace.records[0].seed is None


# ---------------------------------------------------------------------------
# Linearization validation
# ---------------------------------------------------------------------------

def test_engine_traces_validate(m1_blocks, m4):
    for model, events in ((m1_blocks, ["e"]), (m1_blocks, ["e1"]), (m4, ["go"])):
        for seed in range(20):
            code, executions = _step_one(model, events, seed)
            validate_step(code, executions)  # must not raise


def test_validator_rejects_in_block_reorder(m1_blocks):
    code, ex = _step_one(m1_blocks, ["e"])
    idx = [i for i, r in enumerate(ex) if r.block == "G.exit"]
    ex[idx[0]], ex[idx[1]] = ex[idx[1]], ex[idx[0]]
    with pytest.raises(LinearizationError, match="expected"):
        validate_step(code, ex)


def test_validator_rejects_cross_block_order_violation(m1_blocks):
    code, ex = _step_one(m1_blocks, ["e"])
    # run the action before the exits have finished
    action = [r for r in ex if r.block == "t_GN.action"]
    rest = [r for r in ex if r.block != "t_GN.action"]
    with pytest.raises(LinearizationError, match="not eligible"):
        validate_step(code, action + rest)


def test_validator_rejects_missing_block(m1_blocks):
    code, ex = _step_one(m1_blocks, ["e"])
    pruned = [r for r in ex if r.block != "J.entry"]
    with pytest.raises(LinearizationError):
        validate_step(code, pruned)


def test_validator_rejects_trailing_truncation(m1_blocks):
    code, ex = _step_one(m1_blocks, ["e"])
    with pytest.raises(LinearizationError, match="unfinished|never"):
        validate_step(code, ex[:-1])


def test_validator_rejects_duplicate_execution(m1_blocks):
    code, ex = _step_one(m1_blocks, ["e"])
    with pytest.raises(LinearizationError):
        validate_step(code, ex + [ex[-1]])


def test_validator_rejects_unknown_block(m1_blocks):
    code, ex = _step_one(m1_blocks, ["e"])
    fake = dataclasses.replace(ex[0], block="Z.exit")
    with pytest.raises(LinearizationError, match="unknown block"):
        validate_step(code, [fake] + ex[1:])


def test_validator_rejects_kind_mismatch(m4):
    code, ex = _step_one(m4, ["go"])
    out: list = []
    for r in ex:
        if isinstance(r, Decision):
            out.append(
                Instruction(
                    r.step, r.branch, r.block, r.node, r.cp, None, None, None
                )
            )
        else:
            out.append(r)
    with pytest.raises(LinearizationError, match="instruction record for decision"):
        validate_step(code, out)


def test_validator_follows_recorded_decisions(m4):
    code, ex = _step_one(m4, ["go"])
    flipped = [
        dataclasses.replace(r, outcome=not r.outcome) if isinstance(r, Decision) else r
        for r in ex
    ]
    with pytest.raises(LinearizationError):
        validate_step(code, flipped)
