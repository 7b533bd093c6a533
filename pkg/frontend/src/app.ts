/**
 * Browser entry point: wires a WebSocket to the protocol client, owns the
 * small amount of UI state (current session, settled outcomes, last error)
 * and re-renders the panes after every server interaction.
 *
 * All semantic state lives server-side; this layer never interprets the
 * model beyond what the snapshot already spells out.
 */

import type { PushMessage, Snapshot, StepOutcome } from "./protocol.js";
import { ProtocolError, SessionClient } from "./protocol.js";
import { renderApp } from "./render.js";

interface UiState {
  snapshot: Snapshot | null;
  outcomes: StepOutcome[];
  error: string | null;
  session: string | null;
}

function isSettledOutcome(outcome: StepOutcome): boolean {
  return outcome.lost === true || (Array.isArray(outcome.fired) && !("cp" in outcome));
}

export class App {
  private readonly client = new SessionClient();
  private readonly state: UiState = {
    snapshot: null,
    outcomes: [],
    error: null,
    session: null,
  };

  constructor(
    private readonly root: HTMLElement,
    private readonly controls: {
      source: HTMLTextAreaElement;
      seed: HTMLInputElement;
      mode: HTMLSelectElement;
      create: HTMLButtonElement;
      check: HTMLButtonElement;
      output: HTMLElement;
    },
    private readonly wsUrl: string,
  ) {}

  start(): void {
    const socket = new WebSocket(this.wsUrl);
    socket.onmessage = (msg) => this.client.handleMessage(String(msg.data));
    socket.onclose = () => {
      this.client.handleClose("socket closed");
      this.state.error = "connection closed";
      this.render();
    };
    socket.onopen = () => {
      this.client.attach({
        send: (text) => socket.send(text),
        close: () => socket.close(),
      });
      this.render();
    };
    this.client.onPush((push) => this.onPush(push));
    this.controls.create.addEventListener("click", () => void this.createSession());
    this.controls.check.addEventListener("click", () => void this.checkModel());
    this.root.addEventListener("click", (ev) => void this.onClick(ev));
    this.render();
  }

  private onPush(push: PushMessage): void {
    if (push.session !== this.state.session) return;
    this.state.snapshot = push.state;
    if (push.push === "step-error") this.state.error = "step failed; see trace";
    this.render();
  }

  private async createSession(): Promise<void> {
    await this.guard(async () => {
      if (this.state.session) {
        await this.client.destroySession(this.state.session).catch(() => undefined);
      }
      const seedText = this.controls.seed.value.trim();
      const mode = this.controls.mode.value === "instruction" ? "instruction" : "event";
      const opts: { seed?: number; mode: "event" | "instruction" } = { mode };
      if (seedText !== "") opts.seed = Number(seedText);
      const created = await this.client.createSession(this.controls.source.value, opts);
      this.state.session = created.session;
      this.state.outcomes = [];
      this.state.snapshot = created.state;
    });
  }

  private async checkModel(): Promise<void> {
    await this.guard(async () => {
      const report = await this.client.check(this.controls.source.value);
      const lines = report.diagnostics.length ? report.diagnostics : ["ok"];
      this.controls.output.textContent = lines.join("\n");
    });
  }

  private async onClick(ev: Event): Promise<void> {
    const target = ev.target instanceof Element ? ev.target.closest("[data-action]") : null;
    if (!target || !this.state.session) return;
    const session = this.state.session;
    const action = target.getAttribute("data-action");
    await this.guard(async () => {
      let reply: { outcome: StepOutcome; state: Snapshot };
      if (action === "step-event") {
        reply = await this.client.stepEvent(session, target.getAttribute("data-event") ?? "");
      } else if (action === "choose") {
        reply = await this.client.choose(session, target.getAttribute("data-cp") ?? "");
      } else {
        return;
      }
      if (isSettledOutcome(reply.outcome)) this.state.outcomes.push(reply.outcome);
      this.state.snapshot = reply.state;
    });
  }

  private async guard(body: () => Promise<void>): Promise<void> {
    this.state.error = null;
    try {
      await body();
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.state.error = `${err.code}: ${err.message}`;
      } else {
        this.state.error = String(err);
      }
    }
    this.render();
  }

  private render(): void {
    this.root.innerHTML = renderApp({
      snapshot: this.state.snapshot,
      outcomes: this.state.outcomes,
      error: this.state.error,
    });
  }
}

export function mount(): void {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
  };
  const port = new URLSearchParams(window.location.search).get("port") ?? "8765";
  const app = new App(
    byId("panes"),
    {
      source: byId<HTMLTextAreaElement>("model-source"),
      seed: byId<HTMLInputElement>("seed"),
      mode: byId<HTMLSelectElement>("mode"),
      create: byId<HTMLButtonElement>("create-session"),
      check: byId<HTMLButtonElement>("check-model"),
      output: byId("check-output"),
    },
    `ws://${window.location.hostname || "localhost"}:${port}/ws`,
  );
  app.start();
}
