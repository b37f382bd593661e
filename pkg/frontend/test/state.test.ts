import { describe, expect, it } from "vitest";

import {
  DEFAULT_CHANNELS,
  FRAME_BUFFER_LIMIT,
  alarmLoopHint,
  alarmsDisagreeWithDiagnosis,
  diagnosisAgeWindows,
  diagnosisIsStale,
  initialState,
  reduce,
  type Action,
  type ConsoleState,
} from "../src/state.js";
import { parseServerMessage } from "../src/types.js";
import type { Diagnosis, Frame, LogEvent, SessionInfo } from "../src/types.js";

function run(actions: Action[], start?: ConsoleState): ConsoleState {
  let state = start ?? initialState();
  for (const action of actions) {
    state = reduce(state, action);
  }
  return state;
}

function frame(index: number, time = index): Frame {
  return { time, index, values: [155.0, 292.3] };
}

function diagnosis(time: number, size = 40.0, code = 2): Diagnosis {
  return {
    time,
    size_percent: size,
    location_code: code,
    location_name: code === 2 ? "steam generator B" : "none",
    raw_output: [size / 100, code / 2],
    window_frames: 50,
  };
}

function alarmEvent(channel: string, timestamp: number): LogEvent {
  return {
    timestamp,
    kind: "ThresholdAlarm",
    payload: { channel, value: 1.0, steady: 0.0, deviation: 1.0, threshold: 0.1 },
  };
}

function sessionInfo(overrides: Partial<SessionInfo> = {}): SessionInfo {
  return {
    session_id: "abc123",
    scenario: {
      fault_kind: "Normal",
      severity_percent: 0.0,
      onset_time: 50.0,
      duration_steps: 1000,
      dt: 1.0,
      noise_sigma: 0.01,
      rng_seed: 0,
      eccs_enabled: false,
    },
    status: "running",
    time: 0.0,
    frame_index: 0,
    speed: 5,
    tick_period_ms: 200.0,
    channel_order: ["P", "TAVG"],
    fault_active: false,
    window_frames: 50,
    window_stride: 10,
    model_loaded: true,
    last_diagnosis: null,
    event_count: 0,
    ...overrides,
  };
}

describe("telemetry buffer", () => {
  it("keeps at most the configured number of frames, oldest out first", () => {
    const actions: Action[] = [];
    for (let i = 1; i <= FRAME_BUFFER_LIMIT + 50; i += 1) {
      actions.push({ type: "frame", frame: frame(i) });
    }
    const state = run(actions);
    expect(state.frames.length).toBe(FRAME_BUFFER_LIMIT);
    expect(state.frames[0]?.index).toBe(51);
    expect(state.frames.at(-1)?.index).toBe(FRAME_BUFFER_LIMIT + 50);
  });

  it("stores frame values exactly as the service sent them", () => {
    const sent = frame(1);
    const state = run([{ type: "frame", frame: sent }]);
    expect(state.frames[0]?.values).toBe(sent.values);
  });
});

describe("malformed messages", () => {
  it.each([
    "{oops",
    '"just a string"',
    '{"type": "surprise", "data": {}}',
    '{"type": "frame", "data": {"time": 1}}',
    '{"type": "frame", "data": {"time": 1, "index": 1, "values": ["x"]}}',
    '{"type": "diagnosis", "data": {"time": 1}}',
    '{"type": "event", "data": {"timestamp": 1, "kind": "Reboot", "payload": {}}}',
  ])("rejects %s", (text) => {
    expect(parseServerMessage(text)).toBeNull();
  });

  it("accepts well formed messages", () => {
    const ok = parseServerMessage(
      '{"type": "frame", "data": {"time": 1.0, "index": 1, "values": [1, 2]}}',
    );
    expect(ok?.type).toBe("frame");
  });

  it("counts drops without touching anything else", () => {
    const before = run([{ type: "frame", frame: frame(1) }]);
    const after = reduce(before, { type: "malformed" });
    expect(after.dropped).toBe(1);
    expect(after.frames).toEqual(before.frames);
    expect(after.connection).toBe(before.connection);
  });
});

describe("diagnosis state", () => {
  it("keeps the emission timestamp with the displayed diagnosis", () => {
    const state = run([{ type: "diagnosis", diagnosis: diagnosis(120.0) }]);
    expect(state.diagnosis?.time).toBe(120.0);
    expect(state.sizeHistory).toEqual([{ time: 120.0, size: 40.0 }]);
  });

  it("adopts a pre-attach diagnosis from session info", () => {
    const info = sessionInfo({ last_diagnosis: diagnosis(80.0) });
    const state = run([{ type: "session", info }]);
    expect(state.diagnosis?.time).toBe(80.0);
  });

  it("is fresh up to five windows and stale beyond", () => {
    // stride 10 frames at dt 1 s makes a window 10 s long.
    const base = run([
      { type: "session", info: sessionInfo() },
      { type: "diagnosis", diagnosis: diagnosis(100.0) },
    ]);
    const fresh = reduce(base, { type: "frame", frame: frame(150, 150.0) });
    expect(diagnosisAgeWindows(fresh)).toBeCloseTo(5.0);
    expect(diagnosisIsStale(fresh)).toBe(false);
    const stale = reduce(base, { type: "frame", frame: frame(151, 151.0) });
    expect(diagnosisIsStale(stale)).toBe(true);
  });

  it("has no staleness opinion without frames or info", () => {
    const state = run([{ type: "diagnosis", diagnosis: diagnosis(1.0) }]);
    expect(diagnosisAgeWindows(state)).toBeNull();
    expect(diagnosisIsStale(state)).toBe(false);
  });
});

describe("alarms and the event log", () => {
  it("latches each alarmed channel once, first firing wins", () => {
    const state = run([
      { type: "event", event: alarmEvent("WTRB", 61.0) },
      { type: "event", event: alarmEvent("PSGB", 63.0) },
      { type: "event", event: alarmEvent("WTRB", 70.0) },
    ]);
    expect(state.alarms).toEqual([
      { channel: "WTRB", time: 61.0 },
      { channel: "PSGB", time: 63.0 },
    ]);
    expect(state.events.length).toBe(3);
  });

  it("drops a live event that repeats the snapshot tail", () => {
    const repeated = alarmEvent("WTRB", 61.0);
    const state = run([
      { type: "logSnapshot", events: [repeated] },
      { type: "event", event: repeated },
      { type: "event", event: alarmEvent("WTRB", 61.5) },
    ]);
    expect(state.events.length).toBe(2);
  });

  it("rebuilds alarm state from a log snapshot", () => {
    const state = run([
      {
        type: "logSnapshot",
        events: [
          alarmEvent("WTRA", 10.0),
          {
            timestamp: 20.0,
            kind: "SessionControl",
            payload: { action: "reset" },
          },
          alarmEvent("WTRB", 30.0),
        ],
      },
    ]);
    expect(state.alarms).toEqual([{ channel: "WTRB", time: 30.0 }]);
    expect(state.events.length).toBe(3);
  });

  it("clears plant-derived state on reset but keeps the log", () => {
    const state = run([
      { type: "frame", frame: frame(1) },
      { type: "diagnosis", diagnosis: diagnosis(10.0) },
      { type: "event", event: alarmEvent("WTRB", 5.0) },
      {
        type: "event",
        event: {
          timestamp: 11.0,
          kind: "SessionControl",
          payload: { action: "reset" },
        },
      },
    ]);
    expect(state.frames).toEqual([]);
    expect(state.diagnosis).toBeNull();
    expect(state.alarms).toEqual([]);
    expect(state.sizeHistory).toEqual([]);
    expect(state.events.length).toBe(2);
  });
});

describe("alarm and diagnosis cross-check", () => {
  it("hints at the loop with the alarm majority", () => {
    const state = run([
      { type: "event", event: alarmEvent("WTRB", 1.0) },
      { type: "event", event: alarmEvent("PSGB", 2.0) },
      { type: "event", event: alarmEvent("TCA", 3.0) },
    ]);
    expect(alarmLoopHint(state)).toBe("B");
  });

  it("flags a diagnosis that points at the quiet loop", () => {
    const agree = run([
      { type: "event", event: alarmEvent("WTRB", 1.0) },
      { type: "diagnosis", diagnosis: diagnosis(10.0, 40.0, 2) },
    ]);
    expect(alarmsDisagreeWithDiagnosis(agree)).toBe(false);
    const clash = run([
      { type: "event", event: alarmEvent("WTRA", 1.0) },
      { type: "diagnosis", diagnosis: diagnosis(10.0, 40.0, 2) },
    ]);
    expect(alarmsDisagreeWithDiagnosis(clash)).toBe(true);
  });

  it("stays quiet with no diagnosis or no loop-specific alarms", () => {
    const noDiag = run([{ type: "event", event: alarmEvent("WTRA", 1.0) }]);
    expect(alarmsDisagreeWithDiagnosis(noDiag)).toBe(false);
    const normalDiag = run([
      { type: "event", event: alarmEvent("WTRA", 1.0) },
      { type: "diagnosis", diagnosis: diagnosis(10.0, 0.2, 0) },
    ]);
    expect(alarmsDisagreeWithDiagnosis(normalDiag)).toBe(false);
  });
});

describe("view state", () => {
  it("starts with the documented default channel selection", () => {
    expect(initialState().selectedChannels).toEqual([...DEFAULT_CHANNELS]);
  });

  it("toggles channels and switches groups", () => {
    const state = run([
      { type: "toggleChannel", channel: "WTRB" },
      { type: "toggleChannel", channel: "PWR" },
      { type: "selectGroup", group: "reactivity" },
    ]);
    expect(state.selectedChannels).not.toContain("WTRB");
    expect(state.selectedChannels).toContain("PWR");
    expect(state.selectedGroup).toBe("reactivity");
  });

  it("keeps view preferences but drops session data on attach", () => {
    const before = run([
      { type: "frame", frame: frame(1) },
      { type: "selectGroup", group: "pressurizer" },
      { type: "event", event: alarmEvent("WTRB", 1.0) },
    ]);
    const after = reduce(before, { type: "attached", sessionId: "fresh1" });
    expect(after.sessionId).toBe("fresh1");
    expect(after.frames).toEqual([]);
    expect(after.events).toEqual([]);
    expect(after.selectedGroup).toBe("pressurizer");
  });

  it("tracks connection status and inline action errors", () => {
    const state = run([
      { type: "connection", status: "connecting" },
      { type: "connection", status: "live" },
      { type: "actionError", message: "fault_active: already running one" },
    ]);
    expect(state.connection).toBe("live");
    expect(state.actionError).toBe("fault_active: already running one");
    const cleared = reduce(state, { type: "actionError", message: null });
    expect(cleared.actionError).toBeNull();
  });

  it("reflects model availability from session info and model actions", () => {
    const viaInfo = run([
      { type: "session", info: sessionInfo({ model_loaded: false }) },
    ]);
    expect(viaInfo.modelLoaded).toBe(false);
    const viaModel = reduce(viaInfo, { type: "model", loaded: true });
    expect(viaModel.modelLoaded).toBe(true);
  });
});
