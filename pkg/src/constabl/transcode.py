"""From transitions to concurrent code: state trees and the code algebra.

Firing a transition t in configuration c executes, in order: the exit
blocks of an exit tree (innermost states first), t's action, and the entry
blocks of an entry tree (outermost states first). Children of shell states
contribute concurrent branches; everything else is sequential.

The exit tree of t is rooted at the child of l = cca({t.source, t.dest})
on the source side (or at t.source itself when it is a child of l) and is
sliced by c: only paths leading to an active atomic state remain. The
entry tree is rooted on the destination side of l, follows t.dest's
ancestor chain downward (expanding off-path shell regions by their initial
subtrees), and expands initial subtrees at and below t.dest.

Code values form a small algebra: Seq (ordered), Conc (concurrent,
order-insignificant) and CFGCode leaves, each leaf tagged with a
CodeBlockId naming which block of which state/transition it is. Seq
constructors splice nested Seqs and drop empties, so a transition's code
prints flat: for example

    firing G -> N from {A, C} gives
    <[<A.X, E.X> | <C.X, F.X>], G.X, t_GN.a, N.N, [<L.N, H.N> | <M.N, J.N>]>

where `S.X`/`S.N` denote S's exit/entry block in angle-bracket (Seq) and
`[x | y]` (Conc) notation.

Two transitions conflict in c when their codes share a code block; a step
may only fire a conflict-free transition set, which guarantees every block
executes at most once per step.

`CodeIndex` fixes one root code value and exposes the control-point
structure the simulator walks: each leaf's CFG nodes get dotted labels
("3" for the leaf's entry node, "3.1", "3.2", ... for the rest), plus the
fork/join wiring between leaves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Union

from .cfg import CFG, CFGNode, build_cfg
from .model import Assign, Block, Model, State, StateType, Transition
from .structural import closest_common_ancestor, substates

__all__ = [
    "StateTree", "CfgTree", "BlockKind", "CodeBlockId", "Seq", "Conc",
    "CFGCode", "Code", "EMPTY_CODE", "seq", "conc", "ConflictError",
    "EmptySliceError", "subtree", "sliced_subtree", "initial_subtree",
    "source_state_tree", "dest_state_tree", "cfg_tree_source",
    "cfg_tree_dest", "entry_block_with_inits", "code_of", "rev",
    "transition_code", "step_code", "conflict", "code_block_ids",
    "code_notation", "first", "next_cfg_codes", "CodeIndex", "ControlPoint",
]


class EmptySliceError(Exception):
    """Slicing a subtree against a set that misses all of its leaves."""


class ConflictError(Exception):
    """Two transitions in one step would run the same code block."""

    def __init__(self, t1: str, t2: str, shared: tuple[str, ...]):
        super().__init__(
            f"transitions {t1!r} and {t2!r} conflict on code blocks: {', '.join(shared)}"
        )
        self.t1 = t1
        self.t2 = t2
        self.shared = shared


# ---------------------------------------------------------------------------
# State trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateTree:
    """A fragment of the containment hierarchy; children keep declaration order."""

    state: str
    children: tuple["StateTree", ...] = ()

    def leaves(self) -> tuple[str, ...]:
        if not self.children:
            return (self.state,)
        out: list[str] = []
        for c in self.children:
            out.extend(c.leaves())
        return tuple(out)

    def states(self) -> tuple[str, ...]:
        out = [self.state]
        for c in self.children:
            out.extend(c.states())
        return tuple(out)


def subtree(model: Model, s: State | str) -> StateTree:
    """The full containment tree rooted at s."""
    name = s if isinstance(s, str) else s.name
    model.state(name)
    return StateTree(name, tuple(subtree(model, c) for c in model.children(name)))


def sliced_subtree(model: Model, s: State | str, members) -> StateTree:
    """The subtree at s pruned to paths that end in a member state."""
    name = s if isinstance(s, str) else s.name
    member_set = {m if isinstance(m, str) else m.name for m in members}

    def prune(node: str) -> StateTree | None:
        kids = [prune(c) for c in model.children(node)]
        kept = tuple(k for k in kids if k is not None)
        if kept:
            return StateTree(node, kept)
        if node in member_set:
            return StateTree(node)
        return None

    result = prune(name)
    if result is None:
        raise EmptySliceError(f"no member of {sorted(member_set)} lies under {name!r}")
    return result


def initial_subtree(model: Model, s: State | str) -> StateTree:
    """The tree entered by default: initial child below composites, all
    regions below shells, nothing below atomics."""
    name = s if isinstance(s, str) else s.name
    st = model.state(name)
    return StateTree(name, tuple(initial_subtree(model, c) for c in st.initial))


def source_state_tree(model: Model, t: Transition | str, config) -> StateTree:
    """States exited by firing t from configuration `config`."""
    tr = model.transition(t) if isinstance(t, str) else t
    l = closest_common_ancestor(model, [tr.source, tr.dest])
    root = _child_toward(model, l.name, tr.source)
    return sliced_subtree(model, root, config)


def dest_state_tree(model: Model, t: Transition | str) -> StateTree:
    """States entered by firing t."""
    tr = model.transition(t) if isinstance(t, str) else t
    l = closest_common_ancestor(model, [tr.source, tr.dest])
    root = _child_toward(model, l.name, tr.dest)

    def expand(name: str) -> StateTree:
        if name == tr.dest:
            return initial_subtree(model, name)
        on_path = _child_toward(model, name, tr.dest)
        st = model.state(name)
        if st.stype == StateType.SHELL:
            # entering any region of a shell enters all of them
            kids = tuple(
                expand(c) if c == on_path else initial_subtree(model, c)
                for c in model.children(name)
            )
        else:
            kids = (expand(on_path),)
        return StateTree(name, kids)

    return expand(root)


def _child_toward(model: Model, ancestor: str, descendant: str) -> str:
    """The child of `ancestor` whose subtree contains `descendant`."""
    current = descendant
    while True:
        parent = model.states[current].parent
        if parent == ancestor:
            return current
        if parent is None:
            raise ValueError(f"{descendant!r} is not below {ancestor!r}")
        current = parent


# ---------------------------------------------------------------------------
# Code blocks and the code algebra
# ---------------------------------------------------------------------------

class BlockKind(Enum):
    # ENTRY covers the variable initializers plus the entry block; a state's
    # entry code never runs without its initializers.
    ENTRY = "entry"
    EXIT = "exit"
    ACTION = "action"


@dataclass(frozen=True)
class CodeBlockId:
    """Identity of one code block: equality here is what makes two
    transitions conflict. Exit and entry of the same state do not collide
    because the kinds differ."""

    owner: str  # state name for entry/exit, transition name for action
    kind: BlockKind

    def label(self) -> str:
        return f"{self.owner}.{self.kind.value}"

    def notation(self) -> str:
        glyph = {"entry": "\U0001d4a9", "exit": "\U0001d4b3", "action": "a"}[self.kind.value]
        return f"{self.owner}.{glyph}"


@dataclass(frozen=True)
class Seq:
    items: tuple["Code", ...]


@dataclass(frozen=True)
class Conc:
    # Branches are kept in construction order for deterministic printing
    # and scheduling, but the order carries no meaning.
    items: tuple["Code", ...]


@dataclass(frozen=True)
class CFGCode:
    cfg: CFG
    block_id: CodeBlockId

    def __eq__(self, other: object) -> bool:  # CFGs compare by block identity
        return isinstance(other, CFGCode) and self.block_id == other.block_id

    def __hash__(self) -> int:
        return hash(self.block_id)


Code = Union[Seq, Conc, CFGCode]

EMPTY_CODE = Seq(())


def seq(items) -> Code:
    """Seq constructor: splices nested Seqs, drops empties, unwraps singletons."""
    flat: list[Code] = []
    for item in items:
        if isinstance(item, Seq):
            flat.extend(item.items)
        else:
            flat.append(item)
    if not flat:
        return EMPTY_CODE
    if len(flat) == 1:
        return flat[0]
    return Seq(tuple(flat))


def conc(items) -> Code:
    flat: list[Code] = []
    for item in items:
        if isinstance(item, Conc):
            flat.extend(item.items)
        elif isinstance(item, Seq) and not item.items:
            continue
        else:
            flat.append(item)
    if not flat:
        return EMPTY_CODE
    if len(flat) == 1:
        return flat[0]
    return Conc(tuple(flat))


# ---------------------------------------------------------------------------
# CFG trees: state trees with the relevant code block at every node
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CfgTree:
    state: str
    code: CFGCode
    children: tuple["CfgTree", ...] = ()


def entry_block_with_inits(model: Model, s: State | str) -> Block:
    """Local/parameter initializers (declaration order) followed by the
    entry block; statics are initialized once at model start, not here."""
    st = model.state(s) if isinstance(s, str) else s
    inits = tuple(
        Assign(v.name, v.init, v.span)
        for v in st.vars
        if v.storage.value in ("local", "param")
    )
    return inits + st.entry


def _treemap(model: Model, tree: StateTree, kind: BlockKind) -> CfgTree:
    st = model.state(tree.state)
    block = st.exit if kind == BlockKind.EXIT else entry_block_with_inits(model, st)
    code = CFGCode(build_cfg(block), CodeBlockId(tree.state, kind))
    return CfgTree(tree.state, code, tuple(_treemap(model, c, kind) for c in tree.children))


def cfg_tree_source(model: Model, t: Transition | str, config) -> CfgTree:
    """Exit tree with each node's exit CFG attached (same shape as the state tree)."""
    return _treemap(model, source_state_tree(model, t, config), BlockKind.EXIT)


def cfg_tree_dest(model: Model, t: Transition | str) -> CfgTree:
    """Entry tree with each node's initializers+entry CFG attached."""
    return _treemap(model, dest_state_tree(model, t), BlockKind.ENTRY)


def code_of(tree: CfgTree) -> Code:
    """Parent-first linearization: node code, then children (concurrently
    if there are several)."""
    if not tree.children:
        return tree.code
    if len(tree.children) == 1:
        return seq([tree.code, code_of(tree.children[0])])
    return seq([tree.code, conc([code_of(c) for c in tree.children])])


def rev(code: Code) -> Code:
    """Reverse sequential order everywhere; concurrent branches keep their
    identity and leaves are unchanged."""
    match code:
        case Seq(items=items):
            return seq([rev(c) for c in reversed(items)])
        case Conc(items=items):
            return conc([rev(c) for c in items])
        case CFGCode():
            return code
    raise TypeError(f"not code: {code!r}")


def transition_code(model: Model, t: Transition | str, config) -> Code:
    """Exit code (innermost first), action, entry code (outermost first)."""
    tr = model.transition(t) if isinstance(t, str) else t
    source_code = rev(code_of(cfg_tree_source(model, tr, config)))
    action = CFGCode(build_cfg(tr.action), CodeBlockId(tr.name, BlockKind.ACTION))
    dest_code = code_of(cfg_tree_dest(model, tr))
    return seq([source_code, action, dest_code])


def code_block_ids(code: Code) -> tuple[CodeBlockId, ...]:
    return tuple(leaf.block_id for leaf in iter_leaves(code))


def iter_leaves(code: Code) -> Iterator[CFGCode]:
    match code:
        case CFGCode():
            yield code
        case Seq(items=items) | Conc(items=items):
            for c in items:
                yield from iter_leaves(c)


def conflict(model: Model, t1: Transition | str, t2: Transition | str, config) -> bool:
    """True when the two transitions' codes share a block in this configuration."""
    ids1 = set(code_block_ids(transition_code(model, t1, config)))
    ids2 = set(code_block_ids(transition_code(model, t2, config)))
    return bool(ids1 & ids2)


def step_code(model: Model, transitions, config) -> Code:
    """Concurrent composition of the codes of a transition set.

    Branches are ordered by transition name. Raises ConflictError naming
    the first conflicting pair and their shared blocks; an empty set means
    no code at all.
    """
    ts = sorted(
        (model.transition(t) if isinstance(t, str) else t for t in transitions),
        key=lambda tr: tr.name,
    )
    codes = [(tr, transition_code(model, tr, config)) for tr in ts]
    for i in range(len(codes)):
        for j in range(i + 1, len(codes)):
            shared = set(code_block_ids(codes[i][1])) & set(code_block_ids(codes[j][1]))
            if shared:
                labels = tuple(sorted(b.label() for b in shared))
                raise ConflictError(codes[i][0].name, codes[j][0].name, labels)
    return conc([c for _, c in codes])


def code_notation(code: Code) -> str:
    """Angle-bracket/pipe rendering of a code value."""
    match code:
        case CFGCode(block_id=b):
            return b.notation()
        case Seq(items=items):
            return "⟨" + ", ".join(code_notation(c) for c in items) + "⟩"
        case Conc(items=items):
            return "[" + " | ".join(code_notation(c) for c in items) + "]"
    raise TypeError(f"not code: {code!r}")


# ---------------------------------------------------------------------------
# Control points
# ---------------------------------------------------------------------------

def first(code: Code) -> tuple[CFGCode, ...]:
    """The leaves whose entry nodes are eligible before anything has run."""
    match code:
        case CFGCode():
            return (code,)
        case Seq(items=items):
            return first(items[0]) if items else ()
        case Conc(items=items):
            out: list[CFGCode] = []
            for c in items:
                out.extend(first(c))
            return tuple(out)
    raise TypeError(f"not code: {code!r}")


def next_cfg_codes(root: Code, leaf: CFGCode) -> tuple[CFGCode, ...]:
    """The leaves that become eligible once `leaf` finishes, within `root`."""
    path = _path_to(root, leaf)
    if path is None:
        raise ValueError("leaf is not part of the code value")
    node: Code = leaf
    for parent in reversed(path):
        if isinstance(parent, Seq):
            i = _index_of(parent.items, node)
            if i < len(parent.items) - 1:
                return first(parent.items[i + 1])
        node = parent
    return ()


def _index_of(items: tuple[Code, ...], target: Code) -> int:
    for i, item in enumerate(items):
        if item is target:
            return i
    raise ValueError("node not found in parent")


def _path_to(code: Code, leaf: CFGCode, path: tuple = ()) -> tuple | None:
    if code is leaf:
        return path
    if isinstance(code, (Seq, Conc)):
        for c in code.items:
            found = _path_to(c, leaf, path + (code,))
            if found is not None:
                return found
    return None


@dataclass(frozen=True)
class ControlPoint:
    """A position in a fixed step code: one CFG node of one leaf.

    The label is "<leaf ordinal>" for a leaf's entry node and
    "<ordinal>.<k>" for its k-th later node, e.g. "3" then "3.1".
    """

    label: str
    ordinal: int  # leaf ordinal, 1-based in structural order
    node_id: str

    def __str__(self) -> str:
        return self.label


@dataclass
class _Leaf:
    ordinal: int
    code: CFGCode
    labels: dict[str, str] = field(default_factory=dict)  # node id -> label
    next_ordinals: tuple[int, ...] = ()
    pred_ordinals: tuple[int, ...] = ()


class CodeIndex:
    """Static control-point structure of one step's code value.

    Precomputes leaf ordering, per-node labels, and the fork/join wiring:
    which leaves start when a leaf finishes (`next_ordinals`) and which
    leaves must finish before one may start (`pred_ordinals`).
    """

    def __init__(self, code: Code):
        self.code = code
        self._leaves: list[_Leaf] = []
        self._by_id: dict[int, _Leaf] = {}
        self._by_label: dict[str, ControlPoint] = {}
        for i, leaf_code in enumerate(iter_leaves(code), start=1):
            leaf = _Leaf(i, leaf_code)
            node_ids = list(leaf_code.cfg.nodes)
            for k, node_id in enumerate(node_ids):
                label = str(i) if k == 0 else f"{i}.{k}"
                leaf.labels[node_id] = label
                self._by_label[label] = ControlPoint(label, i, node_id)
            self._leaves.append(leaf)
            self._by_id[id(leaf_code)] = leaf
        ordinal_of = {id(l.code): l.ordinal for l in self._leaves}
        preds: dict[int, list[int]] = {l.ordinal: [] for l in self._leaves}
        for leaf in self._leaves:
            nexts = tuple(ordinal_of[id(n)] for n in next_cfg_codes(code, leaf.code))
            leaf.next_ordinals = nexts
            for n in nexts:
                preds[n].append(leaf.ordinal)
        for leaf in self._leaves:
            leaf.pred_ordinals = tuple(preds[leaf.ordinal])

    @property
    def leaves(self) -> tuple[CFGCode, ...]:
        return tuple(l.code for l in self._leaves)

    def leaf(self, ordinal: int) -> _Leaf:
        return self._leaves[ordinal - 1]

    def point(self, label: str) -> ControlPoint:
        return self._by_label[label]

    def has_point(self, label: str) -> bool:
        return label in self._by_label

    def entry_point(self, ordinal: int) -> ControlPoint:
        leaf = self.leaf(ordinal)
        return self._by_label[leaf.labels[leaf.code.cfg.entry]]

    def exit_label(self, ordinal: int) -> str:
        leaf = self.leaf(ordinal)
        return leaf.labels[leaf.code.cfg.exit]

    def label_for(self, ordinal: int, node_id: str) -> str:
        return self.leaf(ordinal).labels[node_id]

    def node(self, point: ControlPoint) -> CFGNode:
        return self.leaf(point.ordinal).code.cfg.node(point.node_id)

    def block_id(self, ordinal: int) -> CodeBlockId:
        return self.leaf(ordinal).code.block_id

    def initial_points(self) -> tuple[ControlPoint, ...]:
        return tuple(
            self.entry_point(self._by_id[id(leaf_code)].ordinal)
            for leaf_code in first(self.code)
        )

    def ordinal_of_block(self, block_label: str) -> int:
        """Leaf ordinal by block label; requires unique blocks (valid steps)."""
        matches = [l.ordinal for l in self._leaves if l.code.block_id.label() == block_label]
        if len(matches) != 1:
            raise ValueError(f"block {block_label!r} is not unique in this code")
        return matches[0]

    def next_points(
        self, point: ControlPoint, cond_eval: Callable[[CFGNode], bool] | None = None
    ) -> tuple[ControlPoint, ...] | None:
        """Successor points after executing `point`, or None when the point
        is its leaf's exit (then fork/join wiring applies instead)."""
        leaf = self.leaf(point.ordinal)
        node = leaf.code.cfg.node(point.node_id)
        if point.node_id == leaf.code.cfg.exit:
            return None
        if node.kind == "inst":
            assert node.succ is not None
            return (self._by_label[leaf.labels[node.succ]],)
        assert cond_eval is not None, "decision nodes need an evaluator"
        branch = node.then_succ if cond_eval(node) else node.else_succ
        assert branch is not None
        return (self._by_label[leaf.labels[branch]],)
