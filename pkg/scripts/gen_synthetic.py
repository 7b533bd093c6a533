#!/usr/bin/env python3
"""Regenerate models/synthetic.cstl.

A six-region ring machine used by the fuzzing tests. Region i holds a ring
of atoms s{i}_0 .. s{i}_{K-1} that advances on tick{i} (wrapping), steps
back on tick{(i+1) % 6} from any position except 0, and snaps back to 0 on
reset from the upper half of the ring (positions RESET_FROM and up; that
cutoff keeps the state and transition counts near the experiment scale of
roughly 80 and 175). Each region counts its own moves in a region-local
static, so the only cross-region data flow is the two seeded defects:

  * both syncA transitions (regions 0 and 1) write the root static
    shared_speed in the same step: a write-write race, minimal witness
    [syncA]
  * the pair guarded by gv in region 5 enables together once N5 is
    active: a block conflict on one ancestor chain, minimal witness
    [evN, evN]

The third seeded defect is configurational, not structural: {s2_1, s3_1}
is reachable only by tick3 before tick2 (tick3 would knock region 2 back
off s2_1), minimal witness [tick3, tick2].

Region 4 also nests a two-atom composite P4 (enter: evN from s4_1, leave:
reset) so reachability goals have something worth hunting for.

The output is deterministic; run from the repository root:

    python3 scripts/gen_synthetic.py
"""

from __future__ import annotations

from pathlib import Path

SIZES = [11, 11, 11, 11, 11, 11]
RESET_FROM = 4


def region(i: int, size: int) -> list[str]:
    tick = f"tick{i}"
    back = f"tick{(i + 1) % 6}"
    c = f"c{i}"
    lines = [f"  state region{i} {{"]
    lines.append(f"    static {c}: int = 0;")
    for j in range(size):
        lines.append(f"    state s{i}_{j} {{ }}")
    if i == 4:
        lines += [
            "    state P4 {",
            "      state q4_0 { }",
            "      state q4_1 { }",
            "      init q4_0;",
            f"      transition tq4: q4_0 -> q4_1 on tick4 / {{ {c} := {c} + 1; }};",
            "    }",
        ]
    if i == 5:
        lines += [
            "    state N5 {",
            "      state n5a { }",
            "      init n5a;",
            "    }",
        ]
    lines.append(f"    init s{i}_0;")
    for j in range(size):
        nxt = (j + 1) % size
        lines.append(
            f"    transition t_adv{i}_{j}: s{i}_{j} -> s{i}_{nxt} on {tick}"
            f" / {{ {c} := {c} + 1; }};"
        )
    for j in range(1, size):
        lines.append(
            f"    transition t_rev{i}_{j}: s{i}_{j} -> s{i}_{j - 1} on {back}"
            f" / {{ {c} := {c} - 1; }};"
        )
    for j in range(RESET_FROM, size):
        lines.append(
            f"    transition t_rst{i}_{j}: s{i}_{j} -> s{i}_0 on reset"
            f" / {{ {c} := 0; }};"
        )
    if i == 0:
        lines.append(
            "    transition t_syncA_a: s0_0 -> s0_1 on syncA"
            " / { shared_speed := shared_speed + 1; };"
        )
    if i == 1:
        lines.append(
            "    transition t_syncA_b: s1_0 -> s1_1 on syncA"
            " / { shared_speed := shared_speed * 2; };"
        )
    if i == 4:
        lines.append("    transition t_intoP4: s4_1 -> P4 on evN;")
        lines.append("    transition t_outP4: P4 -> s4_0 on reset;")
    if i == 5:
        lines.append("    transition t_goN5: s5_0 -> N5 on evN;")
        lines.append("    transition t_evN_outer: N5 -> s5_1 on evN [gv >= 0];")
        lines.append("    transition t_evN_inner: n5a -> s5_2 on evN [gv <= 0];")
    lines.append("  }")
    return lines


def generate() -> str:
    lines = [
        "// Generated by scripts/gen_synthetic.py; edit the generator, not this file.",
        "statechart synth {",
        "  events tick0, tick1, tick2, tick3, tick4, tick5, reset, syncA, evN;",
        "  static shared_speed: int = 0;",
        "  static gv: int = 0;",
        "",
        "  state rings: shell {",
    ]
    for i, size in enumerate(SIZES):
        lines += ["  " + l for l in region(i, size)]
    lines += [
        "  }",
        "",
        "  init rings;",
        "}",
        "",
    ]
    return "\n".join(lines)


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "models" / "synthetic.cstl"
    out.write_text(generate(), encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
