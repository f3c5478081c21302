/**
 * Rig service client: session creation, sequenced commands, and the
 * live stream (WebSocket in the browser, polling fallback for headless
 * use).  Every payload the client sees is forwarded to a single frame
 * sink; the view layer owns the reducer.
 */

import type { CommandReply, ConsoleFrame, Snapshot } from "./types.js";
import { SCHEMA_VERSION } from "./types.js";

export type FrameSink = (frame: ConsoleFrame) => void;

export interface RigClientOptions {
  /** e.g. "http://127.0.0.1:8123" */
  baseUrl: string;
  onFrame: FrameSink;
  /** Reconnect backoff cap [ms]. */
  maxBackoffMs?: number;
}

export class RigClient {
  private readonly baseUrl: string;
  private readonly onFrame: FrameSink;
  private readonly maxBackoffMs: number;
  private sessionId: string | null = null;
  private seq = 0;
  private socket: WebSocket | null = null;
  private reconnectDelay = 500;
  private closed = false;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(options: RigClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/$/, "");
    this.onFrame = options.onFrame;
    this.maxBackoffMs = options.maxBackoffMs ?? 10_000;
  }

  get session(): string | null {
    return this.sessionId;
  }

  async createSession(
    seed: number,
    config: Record<string, unknown> = {},
  ): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/v1/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ seed, config }),
    });
    if (!resp.ok) {
      throw new Error(`session creation failed: ${resp.status} ${await resp.text()}`);
    }
    const body = (await resp.json()) as { session_id: string; snapshot: Snapshot };
    this.sessionId = body.session_id;
    this.seq = 0;
    this.onFrame({ type: "connected", payload: { sessionId: body.session_id } });
    this.onFrame({ type: "snapshot", payload: body.snapshot });
    return body.session_id;
  }

  attach(sessionId: string): void {
    this.sessionId = sessionId;
  }

  /**
   * Send one command with the next sequence number.  The reply is both
   * returned and forwarded as a "command" frame so the reducer ingests
   * results and surfaces errors.
   */
  async command(
    name: string,
    params: Record<string, unknown> = {},
  ): Promise<CommandReply> {
    if (this.sessionId === null) throw new Error("no session attached");
    this.seq += 1;
    const resp = await fetch(
      `${this.baseUrl}/v1/sessions/${this.sessionId}/command`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({
          v: SCHEMA_VERSION,
          seq: this.seq,
          name,
          params,
        }),
      },
    );
    if (!resp.ok) {
      throw new Error(`command ${name} rejected: ${resp.status} ${await resp.text()}`);
    }
    const reply = (await resp.json()) as CommandReply;
    this.onFrame({ type: "command", payload: reply });
    return reply;
  }

  async fetchSnapshot(): Promise<Snapshot> {
    if (this.sessionId === null) throw new Error("no session attached");
    const resp = await fetch(`${this.baseUrl}/v1/sessions/${this.sessionId}/state`);
    if (!resp.ok) throw new Error(`state fetch failed: ${resp.status}`);
    const body = (await resp.json()) as { snapshot: Snapshot };
    this.onFrame({ type: "snapshot", payload: body.snapshot });
    return body.snapshot;
  }

  async closeSession(): Promise<void> {
    if (this.sessionId === null) return;
    await fetch(`${this.baseUrl}/v1/sessions/${this.sessionId}`, {
      method: "DELETE",
    });
    this.sessionId = null;
  }

  /** Browser path: subscribe to the live monitoring stream. */
  connectStream(): void {
    if (this.sessionId === null) throw new Error("no session attached");
    this.closed = false;
    const wsUrl =
      this.baseUrl.replace(/^http/, "ws") +
      `/v1/sessions/${this.sessionId}/stream`;
    const socket = new WebSocket(wsUrl);
    this.socket = socket;
    socket.onopen = () => {
      this.reconnectDelay = 500;
      this.onFrame({
        type: "connected",
        payload: { sessionId: this.sessionId ?? "" },
      });
    };
    socket.onmessage = (msg) => {
      const frame = JSON.parse(String(msg.data)) as {
        type: string;
        payload: unknown;
      };
      if (
        frame.type === "snapshot" ||
        frame.type === "spectrum" ||
        frame.type === "events"
      ) {
        this.onFrame(frame as ConsoleFrame);
      }
    };
    socket.onclose = () => {
      this.onFrame({
        type: "disconnected",
        payload: { reason: "stream closed" },
      });
      if (!this.closed) {
        setTimeout(() => this.connectStream(), this.reconnectDelay);
        this.reconnectDelay = Math.min(this.reconnectDelay * 2, this.maxBackoffMs);
      }
    };
    socket.onerror = () => {
      socket.close();
    };
  }

  /** Headless path: periodic snapshot polling instead of a socket. */
  startPolling(intervalMs = 500): void {
    this.stop();
    this.pollTimer = setInterval(() => {
      this.fetchSnapshot().catch(() => {
        this.onFrame({
          type: "disconnected",
          payload: { reason: "poll failed" },
        });
      });
    }, intervalMs);
  }

  stop(): void {
    this.closed = true;
    if (this.socket) {
      this.socket.close();
      this.socket = null;
    }
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }
}
