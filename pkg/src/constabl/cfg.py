"""Control-flow graphs for code blocks.

Every block compiles to a CFG with a single entry node and a single exit
node. Instruction nodes carry an assignment or skip and have at most one
successor; decision nodes carry a boolean condition and a then/else
successor each. The exit is always an instruction node with no successor:
when the natural last node of a block would be a decision, or the block is
empty, or several paths dangle (for example both arms of a final if), a
skip node is synthesized to close the graph.

Node ids (`i1`, `d2`, ...) are assigned in construction order, which is a
deterministic function of the block's AST, so rebuilding the same block
yields identical ids.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Assign, Block, Expr, If, Skip, Stmt, While
from .parser import format_expr, format_stmt


@dataclass
class CFGNode:
    """One node; `inst` set for instruction nodes, `cond` for decisions.

    Mutable only during construction; treat as frozen afterwards.
    """

    id: str
    kind: str  # "inst" | "dec"
    inst: Stmt | None = None
    cond: Expr | None = None
    succ: str | None = None
    then_succ: str | None = None
    else_succ: str | None = None

    def successors(self) -> tuple[str, ...]:
        if self.kind == "inst":
            return (self.succ,) if self.succ is not None else ()
        return tuple(s for s in (self.then_succ, self.else_succ) if s is not None)

    def label(self) -> str:
        if self.kind == "inst":
            assert self.inst is not None
            return format_stmt(self.inst)
        assert self.cond is not None
        return format_expr(self.cond)


@dataclass
class CFG:
    """nodes preserve construction order; entry and exit are node ids."""

    nodes: dict[str, CFGNode]
    entry: str
    exit: str

    def node(self, node_id: str) -> CFGNode:
        return self.nodes[node_id]


# A dangling edge: (node id, slot) where slot names the unset successor field.
_Dangling = tuple[str, str]


def build_cfg(block: Block) -> CFG:
    """Compile a statement block to its CFG."""
    builder = _Builder()
    entry, dangling = builder.emit_block(block)
    nodes = builder.nodes
    if entry is None:
        # empty block: one skip node serves as both entry and exit
        node = builder.new_inst(Skip())
        return CFG({node.id: node}, node.id, node.id)
    if len(dangling) == 1:
        node_id, slot = dangling[0]
        if slot == "succ" and nodes[node_id].kind == "inst":
            return CFG(dict(nodes), entry, node_id)
    exit_node = builder.new_inst(Skip())
    for node_id, slot in dangling:
        setattr(nodes[node_id], slot, exit_node.id)
    return CFG(dict(nodes), entry, exit_node.id)


class _Builder:
    def __init__(self) -> None:
        self.nodes: dict[str, CFGNode] = {}
        self._inst_count = 0
        self._dec_count = 0

    def new_inst(self, stmt: Stmt) -> CFGNode:
        self._inst_count += 1
        node = CFGNode(f"i{self._inst_count}", "inst", inst=stmt)
        self.nodes[node.id] = node
        return node

    def new_dec(self, cond: Expr) -> CFGNode:
        self._dec_count += 1
        node = CFGNode(f"d{self._dec_count}", "dec", cond=cond)
        self.nodes[node.id] = node
        return node

    def wire(self, dangling: list[_Dangling], target: str) -> None:
        for node_id, slot in dangling:
            setattr(self.nodes[node_id], slot, target)

    def emit_block(self, block: Block) -> tuple[str | None, list[_Dangling]]:
        entry: str | None = None
        dangling: list[_Dangling] = []
        for stmt in block:
            s_entry, s_dangling = self.emit_stmt(stmt)
            if entry is None:
                entry = s_entry
            else:
                self.wire(dangling, s_entry)
            dangling = s_dangling
        return entry, dangling

    def emit_stmt(self, stmt: Stmt) -> tuple[str, list[_Dangling]]:
        match stmt:
            case Assign() | Skip():
                node = self.new_inst(stmt)
                return node.id, [(node.id, "succ")]
            case If(cond=cond, then_body=then_body, else_body=else_body):
                dec = self.new_dec(cond)
                dangling: list[_Dangling] = []
                t_entry, t_dangling = self.emit_block(then_body)
                if t_entry is None:
                    dangling.append((dec.id, "then_succ"))
                else:
                    dec.then_succ = t_entry
                    dangling.extend(t_dangling)
                e_entry, e_dangling = self.emit_block(else_body)
                if e_entry is None:
                    dangling.append((dec.id, "else_succ"))
                else:
                    dec.else_succ = e_entry
                    dangling.extend(e_dangling)
                return dec.id, dangling
            case While(cond=cond, body=body):
                dec = self.new_dec(cond)
                b_entry, b_dangling = self.emit_block(body)
                if b_entry is None:
                    dec.then_succ = dec.id
                else:
                    dec.then_succ = b_entry
                    self.wire(b_dangling, dec.id)
                return dec.id, [(dec.id, "else_succ")]
        raise TypeError(f"not a statement: {stmt!r}")


def dump_cfg(cfg: CFG) -> str:
    """Edge-list text for debugging and golden tests."""
    lines = []
    for node in cfg.nodes.values():
        succ = " ".join(node.successors())
        lines.append(f'{node.id} {node.kind} "{node.label()}" -> {succ}'.rstrip())
    return "\n".join(lines)
