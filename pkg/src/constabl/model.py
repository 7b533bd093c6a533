"""Abstract syntax for concurrent statechart models.

A model is a tree of named states with one statechart-type root. Interior
states are composite (exactly one initial child is active at a time) or
shell (all children are concurrently active regions); leaves are atomic.
Transitions connect a source state to a destination state on a declared
event, optionally guarded and carrying an action block.

State and transition code is written in a small imperative language over
64-bit signed integers and booleans. Its statements and expressions are
defined here so the parser, checker, compiler and interpreter all share one
vocabulary.

Everything is a plain dataclass and treated as immutable after
construction, so models can be shared freely between concurrently running
sessions. Source spans are carried for diagnostics only and are excluded
from structural equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Literal, Union

# 64-bit signed integer range; arithmetic outside it is a runtime error.
INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

# Runtime values are tagged Python ints and bools (bool checked first,
# since bool is a subclass of int).
Value = Union[int, bool]
VType = Literal["int", "bool"]

# Pure builtin functions callable from expressions: name -> (arity, result type).
# All take int arguments.
BUILTINS: dict[str, tuple[int, VType]] = {
    "min": (2, "int"),
    "max": (2, "int"),
    "abs": (1, "int"),
}


class ModelError(Exception):
    """Base class for errors raised by model queries."""


class UnknownNameError(ModelError):
    def __init__(self, kind: str, name: str):
        super().__init__(f"unknown {kind}: {name!r}")
        self.kind = kind
        self.name = name


@dataclass(frozen=True)
class Span:
    """Source location of a syntactic construct (1-based line/col)."""

    line: int = 0
    col: int = 0
    end_line: int = 0
    end_col: int = 0


NO_SPAN = Span()


class StateType(Enum):
    STATECHART = "statechart"
    ATOMIC = "atomic"
    COMPOSITE = "composite"
    SHELL = "shell"


class Storage(Enum):
    PARAMETER = "param"
    LOCAL = "local"
    STATIC = "static"


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Unary:
    op: Literal["-", "not"]
    operand: "Expr"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]
    span: Span = field(default=NO_SPAN, compare=False)


Expr = Union[IntLit, BoolLit, Var, Unary, Binary, Call]

ARITH_OPS = frozenset({"+", "-", "*", "/"})
CMP_OPS = frozenset({"==", "!=", "<", "<=", ">", ">="})
BOOL_OPS = frozenset({"and", "or"})

TRUE = BoolLit(True)


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    target: str
    value: Expr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then_body: "Block"
    else_body: "Block"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: "Block"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Skip:
    span: Span = field(default=NO_SPAN, compare=False)


Stmt = Union[Assign, If, While, Skip]
Block = tuple  # tuple[Stmt, ...]; empty tuple means "no code"

EMPTY_BLOCK: Block = ()


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarDecl:
    """A variable declaration with storage class and mandatory initializer.

    Statics are initialized once before the first step and survive exits.
    Locals and parameters live in a per-state frame that is created on
    entry (re-running the initializers) and destroyed on exit. Parameters
    currently behave exactly like locals at runtime; external binding of
    parameter values is not implemented.
    """

    name: str
    storage: Storage
    vtype: VType
    init: Expr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class State:
    """One state. `initial` is a singleton for composite/statechart states,
    the full child set for shells, and empty for atomics."""

    name: str
    parent: str | None
    stype: StateType
    initial: tuple[str, ...] = ()
    vars: tuple[VarDecl, ...] = ()
    entry: Block = EMPTY_BLOCK
    exit: Block = EMPTY_BLOCK
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Transition:
    """A named transition. `parent` is the state in whose body it was
    declared; guard and action are scoped to the closest common ancestor of
    source and destination. A missing guard is the constant true."""

    name: str
    parent: str
    source: str
    dest: str
    event: str
    guard: Expr = TRUE
    action: Block = EMPTY_BLOCK
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Model:
    """A complete model: state tree, transitions and event alphabet.

    `states` and `transitions` preserve declaration order, which fixes the
    order of regions in concurrent code and the byte-to-event mapping used
    by the fuzzer.
    """

    name: str
    root: str
    states: dict[str, State]
    transitions: dict[str, Transition]
    events: tuple[str, ...]
    source: str | None = field(default=None, compare=False)
    _children: dict[str, tuple[str, ...]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        children: dict[str, list[str]] = {name: [] for name in self.states}
        for s in self.states.values():
            if s.parent is not None and s.parent in children:
                children[s.parent].append(s.name)
        self._children = {k: tuple(v) for k, v in children.items()}

    def state(self, name: str) -> State:
        try:
            return self.states[name]
        except KeyError:
            raise UnknownNameError("state", name) from None

    def transition(self, name: str) -> Transition:
        try:
            return self.transitions[name]
        except KeyError:
            raise UnknownNameError("transition", name) from None

    def children(self, name: str) -> tuple[str, ...]:
        if name not in self.states:
            raise UnknownNameError("state", name)
        return self._children[name]

    @property
    def root_state(self) -> State:
        return self.states[self.root]

    def preorder(self) -> Iterator[State]:
        """States in document order: each state before its children."""

        def walk(name: str) -> Iterator[State]:
            yield self.states[name]
            for c in self._children[name]:
                yield from walk(c)

        if self.root in self.states:
            yield from walk(self.root)


def lookup_state(model: Model, name: str) -> State:
    """Find a state by name; raises UnknownNameError if absent."""
    return model.state(name)


def parent_of(model: Model, state: State | str) -> State | None:
    """The parent state, or None for the root."""
    s = model.state(state) if isinstance(state, str) else state
    return None if s.parent is None else model.state(s.parent)


def models_equal(a: Model, b: Model) -> bool:
    """Structural equality including declaration order (spans ignored)."""
    return (
        a.name == b.name
        and a.root == b.root
        and a.events == b.events
        and list(a.states.items()) == list(b.states.items())
        and list(a.transitions.items()) == list(b.transitions.items())
    )
