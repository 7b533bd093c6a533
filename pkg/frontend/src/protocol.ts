/**
 * Typed client for the session server's WebSocket protocol.
 *
 * The client is transport-agnostic: it talks to anything that can send a
 * string, and the owner feeds incoming text back through `handleMessage`.
 * That keeps it constructible in unit tests (fake socket), in node
 * integration tests (the `ws` package) and in the browser (`WebSocket`),
 * without this module importing any of them.
 *
 * Requests carry a client-chosen id; replies echo it with either a result
 * or a structured error. The server additionally pushes
 * `{"push": "step-complete" | "step-error", ...}` after a step settles.
 */

export interface TreeNode {
  state: string;
  children: TreeNode[];
}

export interface HierarchyNode {
  state: string;
  kind: string; // statechart | composite | shell | atomic
  children: HierarchyNode[];
}

export interface ControlPointInfo {
  label: string;
  block: string;
  node: string;
  kind: string; // inst | dec
  preview: string;
}

export type Value = number | boolean;

/**
 * Reply payload of step-event / choose / run-step. A settled step carries
 * event, lost/fired and the new config; a still-open instruction-mode step
 * carries the control front (cp, jp) instead.
 */
export interface StepOutcome {
  step: number;
  event?: string;
  lost?: boolean;
  fired?: string[];
  entered?: string[];
  exited?: string[];
  config?: string[];
  done?: boolean;
  cp?: string[];
  jp?: Record<string, string[]>;
}

export interface SessionErrorInfo {
  step: number;
  reason: string;
  message: string;
  detail: Record<string, unknown>;
}

export interface Snapshot {
  model: string;
  mode: "event" | "instruction";
  seed: number;
  step: number;
  mid_step: boolean;
  pending_event: string | null;
  config: string[];
  tree: TreeNode;
  hierarchy: HierarchyNode;
  active: string[];
  frames: {
    static: Record<string, Record<string, Value>>;
    local: Record<string, Record<string, Value>>;
  };
  cp: ControlPointInfo[];
  jp: Record<string, string[]>;
  enabled: Record<string, string[]>;
  enabled_errors: Record<string, string>;
  events: string[];
  last_outcome: StepOutcome | null;
  last_error: SessionErrorInfo | null;
}

export interface PushMessage {
  push: "step-complete" | "step-error";
  session: string;
  state: Snapshot;
}

export interface SessionSocket {
  send(text: string): void;
  close(): void;
}

export class ProtocolError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly data: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ProtocolError";
  }
}

interface Pending {
  resolve: (result: unknown) => void;
  reject: (error: Error) => void;
}

export class SessionClient {
  private socket: SessionSocket | null = null;
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private pushHandlers = new Set<(push: PushMessage) => void>();

  attach(socket: SessionSocket): void {
    this.socket = socket;
  }

  /** Subscribe to server pushes; returns the unsubscribe function. */
  onPush(handler: (push: PushMessage) => void): () => void {
    this.pushHandlers.add(handler);
    return () => this.pushHandlers.delete(handler);
  }

  /** Feed one incoming frame. Unknown frames are ignored. */
  handleMessage(text: string): void {
    let msg: unknown;
    try {
      msg = JSON.parse(text);
    } catch {
      return;
    }
    if (typeof msg !== "object" || msg === null) return;
    const frame = msg as Record<string, unknown>;
    if (typeof frame.push === "string") {
      for (const handler of this.pushHandlers) handler(frame as unknown as PushMessage);
      return;
    }
    if (typeof frame.id !== "number") return;
    const entry = this.pending.get(frame.id);
    if (!entry) return;
    this.pending.delete(frame.id);
    if (frame.ok) {
      entry.resolve(frame.result);
    } else {
      const err = (frame.error ?? {}) as Record<string, unknown>;
      entry.reject(
        new ProtocolError(
          String(err.code ?? "error"),
          String(err.message ?? "request failed"),
          (err.data as Record<string, unknown>) ?? {},
        ),
      );
    }
  }

  /** The transport died: every in-flight request fails. */
  handleClose(reason = "connection closed"): void {
    const open = [...this.pending.values()];
    this.pending.clear();
    this.socket = null;
    for (const entry of open) {
      entry.reject(new ProtocolError("connection-closed", reason));
    }
  }

  request<T>(op: string, params: Record<string, unknown> = {}): Promise<T> {
    if (this.socket === null) {
      return Promise.reject(new ProtocolError("not-attached", "no socket attached"));
    }
    const id = this.nextId++;
    const socket = this.socket;
    return new Promise<T>((resolve, reject) => {
      this.pending.set(id, { resolve: resolve as (r: unknown) => void, reject });
      socket.send(JSON.stringify({ id, op, ...params }));
    });
  }

  createSession(
    model: string,
    opts: { seed?: number; mode?: "event" | "instruction"; track_reads?: boolean } = {},
  ): Promise<{ session: string; state: Snapshot }> {
    return this.request("create-session", { model, ...opts });
  }

  stepEvent(
    session: string,
    event: string,
  ): Promise<{ outcome: StepOutcome; state: Snapshot }> {
    return this.request("step-event", { session, event });
  }

  choose(
    session: string,
    cp: string,
  ): Promise<{ outcome: StepOutcome; state: Snapshot }> {
    return this.request("choose", { session, cp });
  }

  runStep(session: string): Promise<{ outcome: StepOutcome; state: Snapshot }> {
    return this.request("run-step", { session });
  }

  state(session: string): Promise<{ state: Snapshot }> {
    return this.request("state", { session });
  }

  trace(session: string): Promise<{ ndjson: string }> {
    return this.request("trace", { session });
  }

  check(model: string): Promise<{ diagnostics: string[]; ok: boolean }> {
    return this.request("check", { model });
  }

  destroySession(session: string): Promise<{ destroyed: string }> {
    return this.request("destroy-session", { session });
  }
}
