"""The interleaving interpreter: arithmetic, scoping, steps and errors.

Sequence goldens on the two-shell model are hand-derived: {A,C} --e1-->
{B,D} --e--> {H,J} --e2--> {I,K}; the loop step of the single-transition
model executes 25 scheduler turns (two skip blocks, one assignment,
eleven decisions, ten body assignments, one synthesized skip).
"""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from constabl import (
    EvalError,
    InvalidConfigurationError,
    ModelCheckError,
    NonterminationError,
    RandomScheduler,
    ScriptedScheduler,
    cst,
    cst_states,
    enabled_transitions,
    eval_expr,
    init_model,
    is_valid_configuration,
    parse_expression,
    parse_model,
    parse_model_file,
    simulate,
)
from constabl.engine import (
    DivisionByZeroError,
    Environment,
    IntegerOverflowError,
    SchedulerScriptError,
    UnboundVariableError,
    initialize_statics,
    reason_of,
)
from constabl.trace import Decision, EventLost, Instruction
from constabl.transcode import StateTree

from conftest import model_path

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


def _env_for(src: str):
    model = parse_model(src)
    env = Environment(model)
    initialize_statics(model, env)
    return model, env


def _eval(src_vars: str, expr: str):
    model, env = _env_for(
        f"statechart R {{ events go; {src_vars} state A {{ }} init A; }}"
    )
    return eval_expr(env, model.root_state, parse_expression(expr))


# ---------------------------------------------------------------------------
# Expressions: 64-bit checked arithmetic, truncating division
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "expr,expected",
    [
        ("7 / 2", 3),
        ("-7 / 2", -3),       # truncation toward zero, not floor
        ("7 / -2", -3),
        ("-7 / -2", 3),
        ("5 - 2 * 3", -1),
        ("min(3, 4)", 3),
        ("max(-3, -4)", -3),
        ("abs(-9)", 9),
        ("1 < 2 and 2 <= 2", True),
        ("not (1 == 2)", True),
        ("true or false", True),
        ("3 != 4", True),
    ],
)
def test_expression_values(expr, expected):
    assert _eval("", expr) == expected


def test_division_by_zero():
    with pytest.raises(DivisionByZeroError):
        _eval("", "1 / 0")
    assert reason_of(DivisionByZeroError()) == "division-by-zero"


def _eval_ast(expr):
    model, env = _env_for("statechart R { events go; state A { } init A; }")
    return eval_expr(env, model.root_state, expr)


def test_overflow_detected():
    from constabl.model import Binary, Call, IntLit, Unary

    big, small = IntLit(INT64_MAX), IntLit(INT64_MIN)
    with pytest.raises(IntegerOverflowError):
        _eval_ast(Binary("+", big, IntLit(1)))
    with pytest.raises(IntegerOverflowError):
        _eval_ast(Binary("*", big, IntLit(2)))
    with pytest.raises(IntegerOverflowError):
        _eval_ast(Unary("-", small))
    with pytest.raises(IntegerOverflowError):
        _eval_ast(Call("abs", (small,)))
    with pytest.raises(IntegerOverflowError):
        _eval_ast(Binary("/", small, IntLit(-1)))
    assert _eval_ast(Binary("+", big, IntLit(0))) == INT64_MAX


def test_min_literal_is_out_of_range_as_text():
    # the most negative 64-bit value has no literal spelling: the minus is
    # a unary operator, so its magnitude overflows the literal range
    from constabl import ParseError

    with pytest.raises(ParseError):
        parse_expression(str(INT64_MIN))
    assert _eval("", f"{INT64_MIN + 1} - 1") == INT64_MIN


def test_short_circuit_evaluation():
    # the right operand would divide by zero; short-circuiting skips it
    assert _eval("", "false and 1 / 0 == 1") is False
    assert _eval("", "true or 1 / 0 == 1") is True
    with pytest.raises(DivisionByZeroError):
        _eval("", "true and 1 / 0 == 1")


@given(
    st.integers(min_value=INT64_MIN, max_value=INT64_MAX),
    st.integers(min_value=INT64_MIN, max_value=INT64_MAX).filter(lambda b: b != 0),
)
@settings(max_examples=300, deadline=None)
def test_division_truncates_toward_zero(a, b):
    from constabl.model import Binary, IntLit

    expr = Binary("/", IntLit(a), IntLit(b))
    if a == INT64_MIN and b == -1:
        with pytest.raises(IntegerOverflowError):
            _eval_ast(expr)
        return
    want = (abs(a) // abs(b)) * (1 if (a >= 0) == (b >= 0) else -1)
    assert _eval_ast(expr) == want


def test_variable_reads_resolve_through_scope():
    got = _eval("static base: int = 40; static off: int = 2;", "base + off")
    assert got == 42


def test_guard_scope_is_transition_cca(m1):
    # p2 is declared on E, the scope of t_AB, so a guard can read it
    model = parse_model(
        "statechart R { events go; state S { static k: int = 1;"
        " state A { } state B { } init A;"
        " transition t: A -> B on go [k == 1]; } init S; }"
    )
    config, env, _ = init_model(model)
    assert [t.name for t in enabled_transitions(model, config, env, "go")] == ["t"]


def test_unbound_variable_without_frame(m1):
    env = Environment(m1)
    initialize_statics(m1, env)
    # x1 is a local of G: no value until G's frame exists and the entry
    # instructions have initialized it
    with pytest.raises(UnboundVariableError):
        env.read("G", "x1")
    env.create_frame("G")
    with pytest.raises(UnboundVariableError):
        env.read("G", "x1")  # frame exists, initializer has not run yet
    identity, old, new = env.write("G", "x1", 0)
    assert (identity, old, new) == ("G.x1", None, 0)
    assert env.read("G", "x1") == 0
    env.drop_frame("G")
    with pytest.raises(UnboundVariableError):
        env.read("G", "x1")


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------

def test_cst_shape(m1):
    assert cst(m1, {"A", "C"}) == StateTree(
        "\U0001d4dc",
        (StateTree("G", (StateTree("E", (StateTree("A"),)),
                         StateTree("F", (StateTree("C"),)))),),
    )
    assert cst_states(m1, {"A", "C"}) == frozenset(
        {"\U0001d4dc", "G", "E", "A", "F", "C"}
    )


@pytest.mark.parametrize(
    "config,valid",
    [
        ({"A", "C"}, True),
        ({"B", "D"}, True),
        ({"H", "J"}, True),
        ({"A"}, False),          # shell G missing region F
        ({"A", "B", "C"}, False),  # two active children under E
        ({"A", "C", "H"}, False),  # two children under the root
        ({"E", "C"}, False),     # non-atomic member
        (set(), False),
        ({"A", "C", "nosuch"}, False),
    ],
)
def test_is_valid_configuration(m1, config, valid):
    assert is_valid_configuration(m1, config) is valid


def test_enabled_transitions_sorted_and_guarded(m1):
    config, env, _ = init_model(m1)
    assert [t.name for t in enabled_transitions(m1, config, env, "e1")] == [
        "t_AB", "t_CD"
    ]
    assert [t.name for t in enabled_transitions(m1, config, env, "e")] == ["t_GN"]
    assert list(enabled_transitions(m1, config, env, "e2")) == []


# ---------------------------------------------------------------------------
# Whole steps
# ---------------------------------------------------------------------------

def test_init_model_enters_initial_subtree(m1):
    config, env, trace = init_model(m1, 0)
    assert config == frozenset({"A", "C"})
    assert env.has_frame("G") and env.has_frame("E")
    records = trace.step_records(0)
    assert records[-1].kind == "step-end"
    # one entry block ran per state on the initial subtree
    blocks = {r.block for r in records if isinstance(r, Instruction)}
    assert blocks == {
        "\U0001d4dc.entry", "G.entry", "E.entry", "A.entry", "F.entry", "C.entry"
    }


def test_init_model_runs_static_initializers_once(m1_blocks):
    config, env, _ = init_model(m1_blocks, 0)
    # six entry blocks of two increments each
    assert env.read(m1_blocks.root, "w") == 12


def test_step_sequence_golden(m1):
    result = simulate(m1, ["e1", "e", "e2"], 7)
    assert result.completed
    assert [o.fired for o in result.outcomes] == [
        ("t_AB", "t_CD"), ("t_GN",), ("t_HI", "t_JK"),
    ]
    assert [sorted(o.config) for o in result.outcomes] == [
        ["B", "D"], ["H", "J"], ["I", "K"],
    ]
    out = result.outcomes[1]
    # outcome sets carry the atomic leaves; the configuration math is
    # (config - exited) | entered
    assert out.exited == frozenset({"B", "D"})
    assert out.entered == frozenset({"H", "J"})
    assert not out.lost


def test_event_lost_changes_nothing(m1):
    result = simulate(m1, ["e2", "e2"], 0)
    assert result.completed
    assert all(o.lost for o in result.outcomes)
    assert result.config == frozenset({"A", "C"})
    lost = [r for r in result.trace if isinstance(r, EventLost)]
    assert [(r.step, r.event) for r in lost] == [(1, "e2"), (2, "e2")]


def test_frames_dropped_on_exit_statics_survive(m1):
    result = simulate(m1, ["e"], 0)  # leaves G entirely
    env = result.env
    assert not env.has_frame("G") and not env.has_frame("E")
    assert env.has_frame("L") and env.has_frame("M")
    # G.exit ran: its static survived the frame teardown
    assert env.read("G", "n1") == 1


def test_reentry_reinitializes_locals():
    model = parse_model(
        "statechart R { events go, back;"
        " state S { local l: int = 0; entry { l := l + 5; }"
        "   state A { } init A; }"
        " state Z { }"
        " init S;"
        " transition t1: S -> Z on go;"
        " transition t2: Z -> S on back; }"
    )
    result = simulate(model, ["go", "back"], 0)
    assert result.completed
    # the initializer reset l to 0 before entry code ran again
    assert result.env.read("S", "l") == 5


def test_loop_step_turn_count(m4):
    result = simulate(m4, ["go"], 3)
    assert result.completed
    assert result.env.read("S", "x") == 10
    ex = result.trace.executions(1)
    assert len(ex) == 25
    decisions = [r for r in ex if isinstance(r, Decision)]
    assert len(decisions) == 11
    assert [d.outcome for d in decisions] == [True] * 10 + [False]


def test_scripted_scheduler_replays_exact_order(m1_blocks):
    from constabl import simulation_step

    script = ["1", "1.1", "3", "3.1", "4", "4.1", "2", "2.1", "5", "5.1",
              "6", "6.1", "7", "7.1", "8", "8.1", "10", "10.1", "9", "9.1",
              "11", "11.1"]
    config, env, trace = init_model(m1_blocks, 0)
    outcome = simulation_step(
        m1_blocks, config, env, "e", ScriptedScheduler(script), trace, 1
    )
    assert sorted(outcome.config) == ["H", "J"]
    cps = [r.cp for r in trace.executions(1)]
    assert cps == script


def test_scripted_scheduler_rejects_bad_choice(m1_blocks):
    from constabl import simulation_step

    for script in (["2"], ["1"]):  # not in front / script too short
        config, env, trace = init_model(m1_blocks, 0)
        with pytest.raises(SchedulerScriptError):
            simulation_step(
                m1_blocks, config, env, "e", ScriptedScheduler(script), trace, 1
            )


def test_same_seed_same_trace(m1_blocks):
    a = simulate(m1_blocks, ["e1", "e", "e2"], 99).trace.to_ndjson()
    b = simulate(m1_blocks, ["e1", "e", "e2"], 99).trace.to_ndjson()
    assert a == b


def test_read_tracking_optional(m1_blocks):
    tracked = simulate(m1_blocks, ["e"], 0, track_reads=True)
    plain = simulate(m1_blocks, ["e"], 0)
    root = m1_blocks.root
    insts = [r for r in tracked.trace.executions(1) if isinstance(r, Instruction)]
    assert all(r.reads == (f"{root}.w",) for r in insts)
    assert all(
        r.reads is None
        for r in plain.trace.executions(1)
        if isinstance(r, Instruction)
    )


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

def test_unchecked_model_is_rejected():
    model = parse_model_file(model_path("bad_t1"))
    with pytest.raises(ModelCheckError) as ei:
        init_model(model)
    assert [d.code for d in ei.value.diagnostics] == ["T1"]


def test_nontermination_budget(loop_forever):
    result = simulate(loop_forever, ["go"], 0, budget=500)
    assert isinstance(result.error, NonterminationError)
    assert not result.completed
    err = [r for r in result.trace if r.kind == "error"]
    assert len(err) == 1 and err[0].error == "nontermination"
    # the failed step still closed its trace scope
    assert result.trace.records[-1].kind == "step-end"


def test_runtime_error_rolls_back_the_step():
    model = parse_model(
        "statechart R { events go; static x: int = 5;"
        " state A { } state B { } init A;"
        " transition t: A -> B on go / { x := 7; x := x / (x - x); }; }"
    )
    result = simulate(model, ["go"], 0)
    assert isinstance(result.error, DivisionByZeroError)
    assert result.config == frozenset({"A"})   # configuration unchanged
    assert result.env.read("R", "x") == 5      # x := 7 rolled back
    err = [r for r in result.trace if r.kind == "error"]
    assert err[0].error == "division-by-zero"


def test_guard_error_is_reported_on_the_step():
    model = parse_model(
        "statechart R { events go; static x: int = 0;"
        " state A { } state B { } init A;"
        " transition t: A -> B on go [1 / x == 1]; }"
    )
    result = simulate(model, ["go"], 0)
    assert isinstance(result.error, EvalError)
    assert result.error.reason == "division-by-zero"
    assert result.error.context.get("transition") == "t"


def test_overflow_in_action_rolls_back():
    model = parse_model(
        f"statechart R {{ events go; static x: int = {INT64_MAX};"
        " state A { } state B { } init A;"
        " transition t: A -> B on go / { x := x + 1; }; }"
    )
    result = simulate(model, ["go"], 0)
    assert isinstance(result.error, IntegerOverflowError)
    assert result.env.read("R", "x") == INT64_MAX
    assert result.config == frozenset({"A"})


def test_simulation_halts_at_first_error(loop_forever):
    result = simulate(loop_forever, ["go", "go", "go"], 0, budget=200)
    assert len(result.outcomes) == 0
    assert isinstance(result.error, NonterminationError)


def test_random_scheduler_instance_reusable(m1):
    sched = RandomScheduler(5)
    r1 = simulate(m1, ["e1"], sched)
    assert r1.completed
    # a fresh scheduler with the same seed reproduces the original run
    again = simulate(m1, ["e1"], RandomScheduler(5))
    assert again.trace.to_ndjson() == simulate(m1, ["e1"], 5).trace.to_ndjson()
