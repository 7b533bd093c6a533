/**
 * Pure projections from a session snapshot to render-ready rows.
 *
 * Nothing in here re-implements semantics: active states, enabledness,
 * control fronts and variable values all arrive precomputed in the
 * snapshot; these functions only reshape them for the DOM layer.
 */

import type {
  ControlPointInfo,
  HierarchyNode,
  Snapshot,
  StepOutcome,
  Value,
} from "./protocol.js";

export interface TreeRow {
  name: string;
  depth: number;
  kind: string;
  active: boolean; // on the configuration's ancestor tree
  leaf: boolean; // in the configuration itself
}

export function treeRows(snap: Snapshot): TreeRow[] {
  const active = new Set(snap.active);
  const leaves = new Set(snap.config);
  const rows: TreeRow[] = [];
  const walk = (node: HierarchyNode, depth: number): void => {
    rows.push({
      name: node.state,
      depth,
      kind: node.kind,
      active: active.has(node.state),
      leaf: leaves.has(node.state),
    });
    for (const child of node.children) walk(child, depth + 1);
  };
  walk(snap.hierarchy, 0);
  return rows;
}

export interface FrameRow {
  state: string;
  storage: "static" | "local";
  variable: string;
  value: Value;
}

export function frameRows(snap: Snapshot): FrameRow[] {
  const rows: FrameRow[] = [];
  for (const storage of ["static", "local"] as const) {
    const frames = snap.frames[storage];
    for (const state of Object.keys(frames).sort()) {
      const vars = frames[state] ?? {};
      for (const variable of Object.keys(vars).sort()) {
        rows.push({ state, storage, variable, value: vars[variable] as Value });
      }
    }
  }
  return rows;
}

export interface EventView {
  name: string;
  enabled: string[];
  error: string | null;
}

export function eventViews(snap: Snapshot): EventView[] {
  return snap.events.map((name) => ({
    name,
    enabled: snap.enabled[name] ?? [],
    error: snap.enabled_errors[name] ?? null,
  }));
}

export function controlPoints(snap: Snapshot): ControlPointInfo[] {
  return snap.cp;
}

export interface JoinView {
  label: string;
  waitingOn: string[];
}

export function joinViews(snap: Snapshot): JoinView[] {
  return Object.keys(snap.jp)
    .sort()
    .map((label) => ({ label, waitingOn: snap.jp[label] ?? [] }));
}

/** One trace-pane line per settled step, in the simulator CLI's wording. */
export function formatOutcome(outcome: StepOutcome): string {
  if (outcome.lost) return `step ${outcome.step} ${outcome.event}: lost`;
  const fired = (outcome.fired ?? []).join(",");
  const config = (outcome.config ?? []).join(", ");
  return `step ${outcome.step} ${outcome.event}: fired ${fired} -> {${config}}`;
}

export function statusLine(snap: Snapshot): string {
  const config = `{${snap.config.join(", ")}}`;
  if (snap.mid_step) {
    return `step ${snap.step + 1} (${snap.pending_event}): picking control points - config ${config}`;
  }
  return `after step ${snap.step} - config ${config}`;
}
