import { describe, expect, it } from "vitest";

import type { Action } from "../src/state.js";
import { TelemetryStream, type SocketLike } from "../src/stream.js";

class FakeSocket implements SocketLike {
  onopen: ((event?: unknown) => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onclose: ((event?: unknown) => void) | null = null;
  onerror: ((event?: unknown) => void) | null = null;
  closed = false;

  close(): void {
    this.closed = true;
  }
}

function collect(): { actions: Action[]; dispatch: (a: Action) => void } {
  const actions: Action[] = [];
  return { actions, dispatch: (a) => actions.push(a) };
}

function statuses(actions: Action[]): string[] {
  return actions
    .filter((a) => a.type === "connection")
    .map((a) => (a as { status: string }).status);
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

describe("telemetry stream", () => {
  it("reports live once the socket opens and routes messages", () => {
    const sockets: FakeSocket[] = [];
    const { actions, dispatch } = collect();
    const stream = new TelemetryStream("ws://x/stream", dispatch, () => {
      const socket = new FakeSocket();
      sockets.push(socket);
      return socket;
    });
    stream.start();
    const socket = sockets[0]!;
    socket.onopen?.();
    socket.onmessage?.({
      data: '{"type": "frame", "data": {"time": 1.0, "index": 1, "values": [1]}}',
    });
    socket.onmessage?.({
      data: '{"type": "event", "data": {"timestamp": 1.0, "kind": "SessionControl", "payload": {"action": "pause"}}}',
    });
    expect(statuses(actions)).toEqual(["connecting", "live"]);
    expect(actions.filter((a) => a.type === "frame").length).toBe(1);
    expect(actions.filter((a) => a.type === "event").length).toBe(1);
    stream.stop();
  });

  it("drops malformed payloads and counts them, staying subscribed", () => {
    const sockets: FakeSocket[] = [];
    const { actions, dispatch } = collect();
    const stream = new TelemetryStream("ws://x/stream", dispatch, () => {
      const socket = new FakeSocket();
      sockets.push(socket);
      return socket;
    });
    stream.start();
    const socket = sockets[0]!;
    socket.onopen?.();
    socket.onmessage?.({ data: "{broken" });
    socket.onmessage?.({ data: '{"type": "frame", "data": {"bad": true}}' });
    socket.onmessage?.({
      data: '{"type": "frame", "data": {"time": 2.0, "index": 2, "values": [1]}}',
    });
    const kinds = actions.map((a) => a.type);
    expect(kinds.filter((k) => k === "malformed").length).toBe(2);
    // The good frame after the garbage still lands.
    expect(kinds[kinds.length - 1]).toBe("frame");
    expect(socket.closed).toBe(false);
    stream.stop();
  });

  it("goes disconnected on close and reconnects with backoff", async () => {
    const sockets: FakeSocket[] = [];
    const { actions, dispatch } = collect();
    const stream = new TelemetryStream(
      "ws://x/stream",
      dispatch,
      () => {
        const socket = new FakeSocket();
        sockets.push(socket);
        return socket;
      },
      [10, 20],
    );
    stream.start();
    sockets[0]!.onopen?.();
    sockets[0]!.onclose?.();
    expect(statuses(actions)).toEqual(["connecting", "live", "disconnected"]);

    await sleep(30);
    expect(sockets.length).toBe(2);
    sockets[1]!.onopen?.();
    expect(statuses(actions)).toEqual([
      "connecting",
      "live",
      "disconnected",
      "connecting",
      "live",
    ]);
    stream.stop();
  });

  it("keeps retrying while the service stays unreachable", async () => {
    let attempts = 0;
    const { actions, dispatch } = collect();
    const stream = new TelemetryStream(
      "ws://x/stream",
      dispatch,
      () => {
        attempts += 1;
        throw new Error("connection refused");
      },
      [5, 5],
    );
    stream.start();
    await sleep(40);
    stream.stop();
    expect(attempts).toBeGreaterThanOrEqual(3);
    // The page shows disconnected the whole time, never a silent gap.
    expect(statuses(actions)).toContain("disconnected");
    expect(statuses(actions)).not.toContain("live");
  });

  it("stops cleanly and closes the socket", () => {
    const sockets: FakeSocket[] = [];
    const { actions, dispatch } = collect();
    const stream = new TelemetryStream("ws://x/stream", dispatch, () => {
      const socket = new FakeSocket();
      sockets.push(socket);
      return socket;
    });
    stream.start();
    sockets[0]!.onopen?.();
    stream.stop();
    expect(sockets[0]!.closed).toBe(true);
    expect(statuses(actions).at(-1)).toBe("idle");
  });
});
