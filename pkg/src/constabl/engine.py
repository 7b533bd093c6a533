"""Interleaving operational semantics: environments, configurations and
the step interpreter.

A configuration is the set of active atomic states; it is valid when its
closure under parents forms a tree in which every composite (and the root)
has exactly one active child and every shell has all of its regions
active.

A simulation step on event e fires all enabled transitions at once. Their
combined code (see `transcode`) runs one instruction at a time: the
control front is a set of control points CP plus a join-point map JP from
not-yet-eligible join entries to the exits still owed to them. A scheduler
picks which control point executes next; exhausting CP and JP together
ends the step. Decision nodes occupy a scheduling turn like instructions.

Environments hold one persistent frame of statics per state, plus a
volatile frame of locals/parameters per active state, created when the
state's entry block starts and destroyed when its exit block finishes.
Name lookup walks the scope chain innermost-first.

Errors during a step (guard/assignment evaluation, conflicting transition
sets, exceeding the instruction budget) leave the caller-visible state
unchanged: the environment is restored from a snapshot and the error is
recorded in the trace before the exception propagates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .diagnostics import Diagnostic, errors_of
from .model import (
    INT_MAX,
    INT_MIN,
    Assign,
    Binary,
    BoolLit,
    Call,
    Expr,
    IntLit,
    Model,
    Skip,
    State,
    StateType,
    Storage,
    Transition,
    Unary,
    Value,
    Var,
    VarDecl,
)
from .structural import ancestor_chain, cca_of_transitions, check_model
from .transcode import (
    BlockKind,
    Code,
    CodeIndex,
    ConflictError,
    ControlPoint,
    StateTree,
    cfg_tree_dest,
    cfg_tree_source,
    code_of,
    dest_state_tree,
    initial_subtree,
    rev,
    seq,
    source_state_tree,
    step_code,
    subtree,
    transition_code,
)
from .trace import (
    ConfigChange,
    Decision,
    ErrorRecord,
    EventLost,
    Instruction,
    StepBegin,
    StepEnd,
    Trace,
    TraceBegin,
    TransitionSet,
)

DEFAULT_STEP_BUDGET = 1_000_000


class EngineError(Exception):
    pass


class ModelCheckError(EngineError):
    """The engine refuses models with static errors."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.format() for d in diagnostics))


class EvalError(EngineError):
    """Expression evaluation failed; context filled in by the executor."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason
        self.context: dict = {}


class DivisionByZeroError(EvalError):
    def __init__(self) -> None:
        super().__init__("division-by-zero", "division by zero")


class IntegerOverflowError(EvalError):
    def __init__(self, detail: str):
        super().__init__("overflow", f"integer overflow: {detail}")


class UnboundVariableError(EvalError):
    def __init__(self, name: str, scope: str):
        super().__init__("unbound-variable", f"variable {name!r} has no value in scope {scope!r}")


class InvalidConfigurationError(EngineError):
    pass


class NonterminationError(EngineError):
    def __init__(self, budget: int):
        super().__init__(f"step exceeded the instruction budget of {budget}")
        self.budget = budget


class NotInControlFrontError(EngineError):
    def __init__(self, label: str, available: tuple[str, ...]):
        super().__init__(f"control point {label!r} is not eligible; front is {list(available)}")
        self.label = label
        self.available = available


class SchedulerScriptError(EngineError):
    pass


def reason_of(e: Exception) -> str:
    """Stable machine-readable tag for trace/error payloads."""
    if isinstance(e, EvalError):
        return e.reason
    if isinstance(e, NonterminationError):
        return "nontermination"
    if isinstance(e, InvalidConfigurationError):
        return "invalid-configuration"
    if isinstance(e, ModelCheckError):
        return "model-error"
    if isinstance(e, SchedulerScriptError):
        return "scheduler-script"
    return "error"


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------

class Environment:
    """Per-state variable frames with innermost-first resolution.

    `statics` frames exist for every state for the whole run; `frames`
    (locals and parameters) exist only while the state is active or being
    entered/exited within the current step.
    """

    def __init__(self, model: Model):
        self.model = model
        self.statics: dict[str, dict[str, Value]] = {s: {} for s in model.states}
        self.frames: dict[str, dict[str, Value]] = {}
        self._decls: dict[str, dict[str, VarDecl]] = {
            s.name: {v.name: v for v in s.vars} for s in model.states.values()
        }
        self._chains: dict[str, tuple[str, ...]] = {
            s.name: (s.name,) + tuple(a.name for a in ancestor_chain(model, s.name))
            for s in model.states.values()
        }

    def resolve(self, scope: str, name: str) -> tuple[str, VarDecl]:
        for state in self._chains[scope]:
            decl = self._decls[state].get(name)
            if decl is not None:
                return state, decl
        raise UnboundVariableError(name, scope)

    def read(self, scope: str, name: str) -> Value:
        state, decl = self.resolve(scope, name)
        store = self.statics if decl.storage == Storage.STATIC else self.frames
        frame = store.get(state)
        if frame is None or name not in frame:
            raise UnboundVariableError(name, scope)
        return frame[name]

    def write(self, scope: str, name: str, value: Value) -> tuple[str, Value | None, Value]:
        """Returns (resolved identity, old value or None, new value)."""
        state, decl = self.resolve(scope, name)
        store = self.statics if decl.storage == Storage.STATIC else self.frames
        frame = store.get(state)
        if frame is None:
            raise UnboundVariableError(name, scope)
        old = frame.get(name)
        frame[name] = value
        return f"{state}.{name}", old, value

    def create_frame(self, state: str) -> None:
        self.frames[state] = {}

    def drop_frame(self, state: str) -> None:
        self.frames.pop(state, None)

    def has_frame(self, state: str) -> bool:
        return state in self.frames

    def copy(self) -> "Environment":
        env = Environment.__new__(Environment)
        env.model = self.model
        env.statics = {k: dict(v) for k, v in self.statics.items()}
        env.frames = {k: dict(v) for k, v in self.frames.items()}
        env._decls = self._decls
        env._chains = self._chains
        return env

    def restore(self, snapshot: "Environment") -> None:
        """Overwrite contents in place so existing references stay valid."""
        self.statics = {k: dict(v) for k, v in snapshot.statics.items()}
        self.frames = {k: dict(v) for k, v in snapshot.frames.items()}

    def snapshot_frames(self) -> dict:
        """Sorted, JSON-ready view used by sessions and the web UI."""

        def view(store: dict[str, dict[str, Value]]) -> dict:
            return {
                state: {var: store[state][var] for var in sorted(store[state])}
                for state in sorted(store)
                if store[state]
            }

        return {"static": view(self.statics), "local": view(self.frames)}


# ---------------------------------------------------------------------------
# Expression evaluation (checked 64-bit arithmetic)
# ---------------------------------------------------------------------------

def _check64(value: int, detail: str) -> int:
    if value < INT_MIN or value > INT_MAX:
        raise IntegerOverflowError(detail)
    return value


def _div(a: int, b: int) -> int:
    # quotient truncates toward zero, like most statechart action languages
    if b == 0:
        raise DivisionByZeroError()
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return _check64(q, f"{a} / {b}")


def eval_expr(
    env: Environment,
    scope: State | Transition | str,
    expr: Expr,
    reads: list[str] | None = None,
) -> Value:
    """Evaluate in the given scope. A Transition scope resolves names from
    the closest common ancestor of its endpoints. `reads` collects the
    resolved identities of variables read (for race analysis)."""
    scope_name = _scope_name(env.model, scope)

    def ev(e: Expr) -> Value:
        match e:
            case IntLit(value=v):
                return v
            case BoolLit(value=v):
                return v
            case Var(name=name):
                if reads is not None:
                    state, _ = env.resolve(scope_name, name)
                    reads.append(f"{state}.{name}")
                return env.read(scope_name, name)
            case Unary(op=op, operand=inner):
                v = ev(inner)
                if op == "-":
                    return _check64(-v, f"-{v}")
                return not v
            case Binary(op=op, left=l, right=r):
                if op == "and":
                    return bool(ev(l)) and bool(ev(r))
                if op == "or":
                    return bool(ev(l)) or bool(ev(r))
                a = ev(l)
                b = ev(r)
                match op:
                    case "+":
                        return _check64(a + b, f"{a} + {b}")
                    case "-":
                        return _check64(a - b, f"{a} - {b}")
                    case "*":
                        return _check64(a * b, f"{a} * {b}")
                    case "/":
                        return _div(a, b)
                    case "==":
                        return a == b
                    case "!=":
                        return a != b
                    case "<":
                        return a < b
                    case "<=":
                        return a <= b
                    case ">":
                        return a > b
                    case ">=":
                        return a >= b
                raise AssertionError(f"unknown operator {op!r}")
            case Call(func=func, args=args):
                values = [ev(a) for a in args]
                match func:
                    case "min":
                        return min(values)
                    case "max":
                        return max(values)
                    case "abs":
                        return _check64(abs(values[0]), f"abs({values[0]})")
                raise AssertionError(f"unknown builtin {func!r}")
        raise TypeError(f"not an expression: {e!r}")

    return ev(expr)


def _scope_name(model: Model, scope: State | Transition | str) -> str:
    if isinstance(scope, str):
        return scope
    if isinstance(scope, Transition):
        return cca_of_transitions(model, [scope]).name
    return scope.name


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------

def cst(model: Model, config) -> StateTree:
    """The tree spanned by the configuration members and their ancestors."""
    members = {m if isinstance(m, str) else m.name for m in config}
    if not members:
        raise ValueError("cst of an empty configuration")
    keep = set(members)
    for m in members:
        keep.update(a.name for a in ancestor_chain(model, m))

    def prune(name: str) -> StateTree:
        kids = tuple(prune(c) for c in model.children(name) if c in keep)
        return StateTree(name, kids)

    return prune(model.root)


def cst_states(model: Model, config) -> frozenset[str]:
    members = {m if isinstance(m, str) else m.name for m in config}
    out = set(members)
    for m in members:
        out.update(a.name for a in ancestor_chain(model, m))
    return frozenset(out)


def is_valid_configuration(model: Model, config) -> bool:
    members = {m if isinstance(m, str) else m.name for m in config}
    if not members:
        return False
    for m in members:
        if m not in model.states or model.states[m].stype != StateType.ATOMIC:
            return False
    tree = cst(model, members)

    def check(node: StateTree) -> bool:
        st = model.states[node.state]
        if st.stype == StateType.ATOMIC:
            return not node.children
        if st.stype == StateType.SHELL:
            if {c.state for c in node.children} != set(model.children(node.state)):
                return False
        else:  # composite or statechart: exactly one active child
            if len(node.children) != 1:
                return False
        return all(check(c) for c in node.children)

    return check(tree)


def enabled_transitions(
    model: Model, config, env: Environment, event: str
) -> list[Transition]:
    """Transitions whose source is active, whose event matches, and whose
    guard evaluates to true; sorted by name."""
    if event not in model.events:
        raise EngineError(f"undeclared event {event!r}")
    if not is_valid_configuration(model, config):
        raise InvalidConfigurationError(f"invalid configuration {sorted(config)}")
    active = cst_states(model, config)
    out = []
    for t in sorted(model.transitions.values(), key=lambda tr: tr.name):
        if t.event != event or t.source not in active:
            continue
        try:
            if eval_expr(env, t, t.guard):
                out.append(t)
        except EvalError as e:
            e.context.setdefault("transition", t.name)
            e.context.setdefault("where", "guard")
            raise
    return out


# ---------------------------------------------------------------------------
# Schedulers
# ---------------------------------------------------------------------------

class RandomScheduler:
    """Uniform choice with a seeded generator: equal seeds, equal traces."""

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = random.Random(seed)

    def choose(self, options: Sequence[str]) -> str:
        return options[self._rng.randrange(len(options))]


class ScriptedScheduler:
    """Replays a fixed list of control-point labels."""

    def __init__(self, choices: Sequence[str]):
        self.choices = list(choices)
        self.pos = 0

    def choose(self, options: Sequence[str]) -> str:
        if self.pos >= len(self.choices):
            raise SchedulerScriptError(f"script exhausted; front is {list(options)}")
        choice = self.choices[self.pos]
        self.pos += 1
        if choice not in options:
            raise SchedulerScriptError(
                f"scripted choice {choice!r} not in control front {list(options)}"
            )
        return choice


# ---------------------------------------------------------------------------
# Step execution
# ---------------------------------------------------------------------------

class StepExecution:
    """Runs one step's code value instruction by instruction.

    The control front (CP, JP) starts at the code's first leaves and is
    empty exactly when the step is complete. `execute` performs one control
    point; `run` drains the front with a scheduler.
    """

    def __init__(
        self,
        model: Model,
        code: Code,
        env: Environment,
        trace: Trace,
        step: int,
        branch_of: dict[str, str | None] | None = None,
        budget: int = DEFAULT_STEP_BUDGET,
        track_reads: bool = False,
    ):
        self.model = model
        self.index = CodeIndex(code)
        self.env = env
        self.trace = trace
        self.step = step
        self.branch_of = branch_of or {}
        self.budget = budget
        self.track_reads = track_reads
        self._cp: dict[str, ControlPoint] = {
            p.label: p for p in self.index.initial_points()
        }
        self._jp: dict[str, set[str]] = {}
        self._started: set[int] = set()
        self._executed = 0
        self._scopes: dict[int, str] = {}
        for ordinal in range(1, len(self.index.leaves) + 1):
            block = self.index.block_id(ordinal)
            if block.kind == BlockKind.ACTION:
                self._scopes[ordinal] = cca_of_transitions(
                    model, [model.transitions[block.owner]]
                ).name
            else:
                self._scopes[ordinal] = block.owner

    @property
    def done(self) -> bool:
        return not self._cp and not self._jp

    def cp_labels(self) -> tuple[str, ...]:
        return tuple(sorted(self._cp, key=_label_key))

    def jp_map(self) -> dict[str, tuple[str, ...]]:
        return {
            join: tuple(sorted(pending, key=_label_key))
            for join, pending in sorted(self._jp.items(), key=lambda kv: _label_key(kv[0]))
        }

    def front(self) -> tuple[tuple[str, ...], dict[str, tuple[str, ...]]]:
        return self.cp_labels(), self.jp_map()

    def execute(self, label: str) -> None:
        point = self._cp.get(label)
        if point is None:
            raise NotInControlFrontError(label, self.cp_labels())
        if self._executed >= self.budget:
            raise NonterminationError(self.budget)
        self._executed += 1
        leaf = self.index.leaf(point.ordinal)
        block = leaf.code.block_id
        scope = self._scopes[point.ordinal]
        if point.ordinal not in self._started:
            self._started.add(point.ordinal)
            if block.kind == BlockKind.ENTRY:
                self.env.create_frame(block.owner)
        node = self.index.node(point)
        branch = self.branch_of.get(block.label())
        reads: list[str] | None = [] if self.track_reads else None
        try:
            if node.kind == "dec":
                outcome = bool(eval_expr(self.env, scope, node.cond, reads))
                self.trace.append(
                    Decision(
                        self.step, branch, block.label(), node.id, label, outcome,
                        tuple(reads) if reads is not None else None,
                    )
                )
                nxt = node.then_succ if outcome else node.else_succ
                del self._cp[label]
                self._add_point(point.ordinal, nxt)
            else:
                stmt = node.inst
                if isinstance(stmt, Assign):
                    value = eval_expr(self.env, scope, stmt.value, reads)
                    identity, old, new = self.env.write(scope, stmt.target, value)
                else:  # skip
                    identity, old, new = None, None, None
                self.trace.append(
                    Instruction(
                        self.step, branch, block.label(), node.id, label,
                        identity, old, new,
                        tuple(reads) if reads is not None else None,
                    )
                )
                del self._cp[label]
                if node.id == leaf.code.cfg.exit:
                    if block.kind == BlockKind.EXIT:
                        self.env.drop_frame(block.owner)
                    self._finish_leaf(point.ordinal, label)
                else:
                    self._add_point(point.ordinal, node.succ)
        except EvalError as e:
            e.context.setdefault("block", block.label())
            e.context.setdefault("node", node.id)
            e.context.setdefault("cp", label)
            raise
        assert not (set(self._cp) & set(self._jp)), "control point doubles as join point"

    def _add_point(self, ordinal: int, node_id: str) -> None:
        label = self.index.label_for(ordinal, node_id)
        self._cp[label] = self.index.point(label)

    def _finish_leaf(self, ordinal: int, exit_label: str) -> None:
        """Fork/join wiring: successors with a single predecessor become
        eligible; join successors wait in JP until all exits arrive."""
        for succ in self.index.leaf(ordinal).next_ordinals:
            entry = self.index.entry_point(succ)
            preds = self.index.leaf(succ).pred_ordinals
            if len(preds) == 1:
                self._cp[entry.label] = entry
                continue
            pending = self._jp.get(entry.label)
            if pending is None:
                pending = {self.index.exit_label(p) for p in preds} - {exit_label}
                if pending:
                    self._jp[entry.label] = pending
                else:
                    self._cp[entry.label] = entry
            else:
                pending.discard(exit_label)
                if not pending:
                    del self._jp[entry.label]
                    self._cp[entry.label] = entry

    def run(self, scheduler) -> None:
        while not self.done:
            label = scheduler.choose(self.cp_labels())
            self.execute(label)


def _label_key(label: str) -> tuple[int, ...]:
    return tuple(int(part) for part in label.split("."))


# ---------------------------------------------------------------------------
# Steps and runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepOutcome:
    step: int
    event: str
    config: frozenset[str]
    fired: tuple[str, ...]
    entered: frozenset[str]
    exited: frozenset[str]
    lost: bool


@dataclass
class PreparedStep:
    """A step after enabledness and conflict checking, before any code ran."""

    event: str
    transitions: tuple[Transition, ...]
    code: Code
    execution: StepExecution
    exited: frozenset[str]
    entered: frozenset[str]
    old_config: frozenset[str]

    def new_config(self) -> frozenset[str]:
        return (self.old_config - self.exited) | self.entered


def prepare_step(
    model: Model,
    config,
    env: Environment,
    event: str,
    trace: Trace,
    step: int,
    budget: int = DEFAULT_STEP_BUDGET,
    track_reads: bool = False,
) -> PreparedStep | None:
    """Record step-begin, pick the transition set, check conflicts and
    build the executor. Returns None (after recording) when the event is
    lost. Raises ConflictError, or EvalError from a guard, with the step
    already marked in the trace."""
    trace.append(StepBegin(step, event))
    try:
        enabled = enabled_transitions(model, config, env, event)
    except EvalError as e:
        detail = dict(e.context)
        detail["message"] = str(e)
        trace.append(ErrorRecord(step, e.reason, detail))
        trace.append(StepEnd(step))
        raise
    if not enabled:
        trace.append(EventLost(step, event))
        trace.append(StepEnd(step))
        return None
    trace.append(TransitionSet(step, tuple(t.name for t in enabled)))
    try:
        code = step_code(model, enabled, config)
    except ConflictError as e:
        trace.append(
            ErrorRecord(
                step, "conflict",
                {"transitions": sorted((e.t1, e.t2)), "shared_blocks": list(e.shared)},
            )
        )
        trace.append(StepEnd(step))
        raise
    exited: set[str] = set()
    entered: set[str] = set()
    branch_of: dict[str, str | None] = {}
    for t in enabled:
        src_tree = source_state_tree(model, t, config)
        dst_tree = dest_state_tree(model, t)
        exited.update(src_tree.leaves())
        entered.update(dst_tree.leaves())
        for s in src_tree.states():
            branch_of[f"{s}.exit"] = t.name
        for s in dst_tree.states():
            branch_of[f"{s}.entry"] = t.name
        branch_of[f"{t.name}.action"] = t.name
    execution = StepExecution(
        model, code, env, trace, step, branch_of, budget, track_reads
    )
    return PreparedStep(
        event, tuple(enabled), code, execution,
        frozenset(exited), frozenset(entered), frozenset(config),
    )


def finish_step(model: Model, prepared: PreparedStep, trace: Trace) -> frozenset[str]:
    """Apply the configuration change once the code has fully run."""
    assert prepared.execution.done
    new_config = prepared.new_config()
    if not is_valid_configuration(model, new_config):
        raise InvalidConfigurationError(
            f"step produced invalid configuration {sorted(new_config)}"
        )
    trace.append(
        ConfigChange(
            prepared.execution.step,
            tuple(sorted(prepared.old_config)),
            tuple(sorted(new_config)),
        )
    )
    trace.append(StepEnd(prepared.execution.step))
    return new_config


def simulation_step(
    model: Model,
    config,
    env: Environment,
    event: str,
    scheduler,
    trace: Trace,
    step: int,
    budget: int = DEFAULT_STEP_BUDGET,
    track_reads: bool = False,
) -> StepOutcome:
    """One full step. On any error the environment is rolled back, an
    error record is appended, and the exception propagates."""
    snapshot = env.copy()
    try:
        prepared = prepare_step(model, config, env, event, trace, step, budget, track_reads)
    except (ConflictError, EvalError):
        env.restore(snapshot)
        raise
    if prepared is None:
        return StepOutcome(
            step, event, frozenset(config), (), frozenset(), frozenset(), lost=True
        )
    try:
        prepared.execution.run(scheduler)
        new_config = finish_step(model, prepared, trace)
    except (EvalError, NonterminationError, InvalidConfigurationError) as e:
        env.restore(snapshot)
        detail = dict(getattr(e, "context", {}))
        detail["message"] = str(e)
        trace.append(ErrorRecord(step, reason_of(e), detail))
        trace.append(StepEnd(step))
        raise
    return StepOutcome(
        step, event, new_config,
        tuple(t.name for t in prepared.transitions),
        prepared.entered, prepared.exited, lost=False,
    )


def initialize_statics(model: Model, env: Environment) -> None:
    """Evaluate static initializers once, document order, before any step."""
    for s in model.preorder():
        for v in s.vars:
            if v.storage == Storage.STATIC:
                env.statics[s.name][v.name] = eval_expr(env, s.name, v.init)


def ensure_checked(model: Model) -> None:
    errors = errors_of(check_model(model))
    if errors:
        raise ModelCheckError(errors)


def init_model(
    model: Model,
    seed_or_scheduler: int | RandomScheduler | ScriptedScheduler = 0,
    budget: int = DEFAULT_STEP_BUDGET,
) -> tuple[frozenset[str], Environment, Trace]:
    """Static initialization plus the initial entry pseudo-step (step 0).

    The initial configuration is the set of atomic leaves of the root's
    initial subtree; the entry chain down to them runs through the same
    code machinery as any step, interleaved under the given scheduler.
    """
    ensure_checked(model)
    scheduler = (
        RandomScheduler(seed_or_scheduler)
        if isinstance(seed_or_scheduler, int)
        else seed_or_scheduler
    )
    seed = scheduler.seed if isinstance(scheduler, RandomScheduler) else None
    env = Environment(model)
    initialize_statics(model, env)
    trace = Trace([TraceBegin(seed, model.name)])
    trace.append(StepBegin(0, None))
    from .transcode import _treemap  # entry blocks over the initial subtree

    tree = _treemap(model, initial_subtree(model, model.root), BlockKind.ENTRY)
    code = code_of(tree)
    execution = StepExecution(model, code, env, trace, 0, budget=budget)
    execution.run(scheduler)
    config = frozenset(initial_subtree(model, model.root).leaves())
    if not is_valid_configuration(model, config):
        raise InvalidConfigurationError(
            f"initial configuration {sorted(config)} is invalid"
        )
    trace.append(ConfigChange(0, (), tuple(sorted(config))))
    trace.append(StepEnd(0))
    return config, env, trace


@dataclass
class SimulationResult:
    config: frozenset[str]
    env: Environment
    trace: Trace
    outcomes: list[StepOutcome] = field(default_factory=list)
    error: Exception | None = None

    @property
    def completed(self) -> bool:
        return self.error is None


def simulate(
    model: Model,
    events: Sequence[str],
    scheduler_or_seed: int | RandomScheduler | ScriptedScheduler = 0,
    budget: int = DEFAULT_STEP_BUDGET,
    track_reads: bool = False,
) -> SimulationResult:
    """Initialize and fold the event sequence; halts at the first error,
    which is recorded in the trace and reported on the result."""
    scheduler = (
        RandomScheduler(scheduler_or_seed)
        if isinstance(scheduler_or_seed, int)
        else scheduler_or_seed
    )
    config, env, trace = init_model(model, scheduler, budget)
    result = SimulationResult(config, env, trace)
    for i, event in enumerate(events, start=1):
        try:
            outcome = simulation_step(
                model, result.config, env, event, scheduler, trace, i, budget, track_reads
            )
        except (ConflictError, EngineError) as e:
            result.error = e
            break
        result.outcomes.append(outcome)
        result.config = outcome.config
    return result
