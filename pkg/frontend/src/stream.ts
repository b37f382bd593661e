/**
 * WebSocket subscription to a session's telemetry stream.
 *
 * Reconnects with growing backoff when the connection drops, reports
 * its status through the reducer so the page always shows whether the
 * data is live, and drops malformed messages without dying.
 */

import type { Action } from "./state.js";
import { parseServerMessage } from "./types.js";

/**
 * The subset of the WebSocket interface the stream needs. Handler
 * parameters are typed `any` so both the browser WebSocket and the ws
 * package satisfy the interface under strict function variance.
 */
export interface SocketLike {
  onopen: ((event?: any) => void) | null;
  onmessage: ((event: any) => void) | null;
  onclose: ((event?: any) => void) | null;
  onerror: ((event?: any) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export const DEFAULT_BACKOFF_MS: readonly number[] = [
  500, 1000, 2000, 5000, 10000,
];

export class TelemetryStream {
  private socket: SocketLike | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private attempts = 0;
  private stopped = true;

  constructor(
    private readonly url: string,
    private readonly dispatch: (action: Action) => void,
    private readonly factory: SocketFactory,
    private readonly backoff: readonly number[] = DEFAULT_BACKOFF_MS,
  ) {}

  start(): void {
    this.stopped = false;
    this.attempts = 0;
    this.open();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.socket !== null) {
      const socket = this.socket;
      this.socket = null;
      socket.onclose = null;
      socket.close();
    }
    this.dispatch({ type: "connection", status: "idle" });
  }

  private open(): void {
    this.timer = null;
    this.dispatch({ type: "connection", status: "connecting" });
    let socket: SocketLike;
    try {
      socket = this.factory(this.url);
    } catch {
      this.dispatch({ type: "connection", status: "disconnected" });
      this.schedule();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.dispatch({ type: "connection", status: "live" });
    };
    socket.onmessage = (event) => this.handle((event as { data: unknown }).data);
    // A close event always follows a failed connection, in browsers and
    // in the ws package alike, so recovery lives in onclose alone. The
    // handler just keeps the error from escaping.
    socket.onerror = () => {};
    socket.onclose = () => {
      if (this.socket === socket) this.socket = null;
      if (this.stopped) return;
      this.dispatch({ type: "connection", status: "disconnected" });
      this.schedule();
    };
  }

  private schedule(): void {
    if (this.stopped || this.timer !== null) return;
    const index = Math.min(this.attempts, this.backoff.length - 1);
    const delay = this.backoff[index] ?? 1000;
    this.attempts += 1;
    this.timer = setTimeout(() => this.open(), delay);
  }

  private handle(data: unknown): void {
    const text = typeof data === "string" ? data : String(data);
    const message = parseServerMessage(text);
    if (message === null) {
      this.dispatch({ type: "malformed" });
      return;
    }
    switch (message.type) {
      case "frame":
        this.dispatch({ type: "frame", frame: message.data });
        break;
      case "diagnosis":
        this.dispatch({ type: "diagnosis", diagnosis: message.data });
        break;
      case "event":
        this.dispatch({ type: "event", event: message.data });
        break;
    }
  }
}
