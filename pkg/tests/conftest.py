"""Shared fixtures and independent oracles.

Every golden number in the suite is either asserted against a value the
oracles here recompute by a route disjoint from the implementation, or
frozen from a hand derivation noted next to the assertion. The oracles:

  chain_common_ancestors   ancestor sets by parent-link walking
  merge_sequences          interleavings by brute-force merging
  bfs_shortest_witness     shortest event witness by breadth-first search
  count_decisions/assigns  CFG size expectations by a direct AST walk
"""

from __future__ import annotations

import itertools
from pathlib import Path

import pytest

from constabl import cst_states, parse_model_file, simulate
from constabl.model import Assign, Block, If, Model, Skip, While

ROOT = Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"

ACCEPTANCE_LINES: list[str] = []


def model_path(name: str) -> str:
    return str(MODELS / f"{name}.cstl")


def _fixture(name: str):
    @pytest.fixture(scope="session", name=name)
    def fx() -> Model:
        return parse_model_file(model_path(name))

    return fx


m1 = _fixture("m1")
m1_blocks = _fixture("m1_blocks")
m4 = _fixture("m4")
deep_tree = _fixture("deep_tree")
nested_conflict = _fixture("nested_conflict")
nested_conflict_safe = _fixture("nested_conflict_safe")
region_conflict = _fixture("region_conflict")
region_conflict_safe = _fixture("region_conflict_safe")
traffic = _fixture("traffic")
synthetic = _fixture("synthetic")
loop_forever = _fixture("loop_forever")


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def parent_chain(model: Model, name: str) -> list[str]:
    """Proper ancestors of a state, nearest first, by parent links only."""
    out: list[str] = []
    cur = model.states[name].parent
    while cur is not None:
        out.append(cur)
        cur = model.states[cur].parent
    return out


def chain_common_ancestors(model: Model, names) -> set[str]:
    sets = [set(parent_chain(model, n)) for n in names]
    return set.intersection(*sets) if sets else set()


def chain_cca(model: Model, names) -> str:
    """Deepest common proper ancestor; common ancestors form a chain, so
    the one with the longest own chain is unique."""
    common = chain_common_ancestors(model, names)
    return max(common, key=lambda n: len(parent_chain(model, n)))


def merge_sequences(seqs) -> set[tuple]:
    """All order-preserving merges of the given sequences (brute force)."""
    out: set[tuple] = set()

    def go(state: tuple[tuple, ...], acc: tuple) -> None:
        live = [s for s in state if s]
        if not live:
            out.add(acc)
            return
        for i, s in enumerate(state):
            if s:
                go(state[:i] + (s[1:],) + state[i + 1 :], acc + (s[0],))

    go(tuple(tuple(s) for s in seqs), ())
    return out


def bfs_shortest_witness(
    model: Model, goal_states, max_len: int = 6
) -> tuple[str, ...] | None:
    """Shortest event sequence after which the configuration covers all of
    goal_states, by exhaustive breadth-first search over event sequences.
    A shorter satisfying prefix would have been found at its own length,
    so checking only the final configuration is sound."""
    goal = frozenset(goal_states)
    for length in range(max_len + 1):
        for cand in itertools.product(model.events, repeat=length):
            res = simulate(model, list(cand), 0)
            if res.error is not None:
                continue
            final = res.outcomes[-1].config if res.outcomes else res.config
            if goal <= cst_states(model, final):
                return cand
    return None


def count_decisions(block: Block) -> int:
    """Number of branching statements, recursively: one decision node each."""
    n = 0
    for stmt in block:
        if isinstance(stmt, If):
            n += 1 + count_decisions(stmt.then_body) + count_decisions(stmt.else_body)
        elif isinstance(stmt, While):
            n += 1 + count_decisions(stmt.body)
    return n


def count_assigns(block: Block) -> int:
    n = 0
    for stmt in block:
        if isinstance(stmt, Assign):
            n += 1
        elif isinstance(stmt, If):
            n += count_assigns(stmt.then_body) + count_assigns(stmt.else_body)
        elif isinstance(stmt, While):
            n += count_assigns(stmt.body)
    return n


def count_skips(block: Block) -> int:
    n = 0
    for stmt in block:
        if isinstance(stmt, Skip):
            n += 1
        elif isinstance(stmt, If):
            n += count_skips(stmt.then_body) + count_skips(stmt.else_body)
        elif isinstance(stmt, While):
            n += count_skips(stmt.body)
    return n


# ---------------------------------------------------------------------------
# Acceptance reporting: one line per criterion, echoed after the run
# ---------------------------------------------------------------------------

def record_criterion(name: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {name}: {status} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
