/**
 * Wire types for the fault diagnosis service API.
 *
 * Everything the console displays arrives through these shapes. The
 * console never computes plant quantities itself; it renders values
 * exactly as the service sent them.
 */

export type EventKind =
  | "FaultInjected"
  | "DiagnosisIssued"
  | "ThresholdAlarm"
  | "SessionControl";

/** One entry of a session's append-only event log. */
export interface LogEvent {
  timestamp: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

/** One telemetry frame as broadcast on the WebSocket stream. */
export interface Frame {
  time: number;
  index: number;
  values: number[];
}

/** A diagnosis decision as broadcast by the service. */
export interface Diagnosis {
  time: number;
  size_percent: number;
  location_code: number;
  location_name: string;
  raw_output: number[];
  window_frames: number;
}

export interface ScenarioInfo {
  fault_kind: string;
  severity_percent: number;
  onset_time: number;
  duration_steps: number;
  dt: number;
  noise_sigma: number;
  rng_seed: number;
  eccs_enabled: boolean;
}

export type SessionStatus = "running" | "paused" | "finished";

/** Response of GET /sessions/{id}. */
export interface SessionInfo {
  session_id: string;
  scenario: ScenarioInfo;
  status: SessionStatus;
  time: number;
  frame_index: number;
  speed: number;
  tick_period_ms: number;
  channel_order: string[];
  fault_active: boolean;
  window_frames: number;
  window_stride: number;
  model_loaded: boolean;
  last_diagnosis: Diagnosis | null;
  event_count: number;
}

/** Response of GET /sessions/{id}/log. */
export interface EventLogPage {
  session_id: string;
  total: number;
  events: LogEvent[];
}

export type ServerMessage =
  | { type: "frame"; data: Frame }
  | { type: "diagnosis"; data: Diagnosis }
  | { type: "event"; data: LogEvent };

const EVENT_KINDS: ReadonlySet<string> = new Set([
  "FaultInjected",
  "DiagnosisIssued",
  "ThresholdAlarm",
  "SessionControl",
]);

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isFiniteNumber(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value);
}

function isNumberArray(value: unknown): value is number[] {
  return Array.isArray(value) && value.every(isFiniteNumber);
}

export function isFrame(value: unknown): value is Frame {
  return (
    isRecord(value) &&
    isFiniteNumber(value.time) &&
    isFiniteNumber(value.index) &&
    isNumberArray(value.values) &&
    value.values.length > 0
  );
}

export function isDiagnosis(value: unknown): value is Diagnosis {
  return (
    isRecord(value) &&
    isFiniteNumber(value.time) &&
    isFiniteNumber(value.size_percent) &&
    isFiniteNumber(value.location_code) &&
    typeof value.location_name === "string" &&
    isNumberArray(value.raw_output) &&
    isFiniteNumber(value.window_frames)
  );
}

export function isLogEvent(value: unknown): value is LogEvent {
  return (
    isRecord(value) &&
    isFiniteNumber(value.timestamp) &&
    typeof value.kind === "string" &&
    EVENT_KINDS.has(value.kind) &&
    isRecord(value.payload)
  );
}

/**
 * Parse one WebSocket message. Returns null for anything that is not a
 * well formed service message; callers count those and drop them rather
 * than letting a bad payload take the console down.
 */
export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (!isRecord(raw)) return null;
  switch (raw.type) {
    case "frame":
      return isFrame(raw.data) ? { type: "frame", data: raw.data } : null;
    case "diagnosis":
      return isDiagnosis(raw.data)
        ? { type: "diagnosis", data: raw.data }
        : null;
    case "event":
      return isLogEvent(raw.data) ? { type: "event", data: raw.data } : null;
    default:
      return null;
  }
}
