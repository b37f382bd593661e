/**
 * Console view state and its single reducer.
 *
 * Every state transition in the console goes through reduce(), so the
 * whole UI state is a pure function of the action sequence. Feeding a
 * captured message log back through the reducer reproduces the exact
 * display state, which is how the "no local inference" property is
 * checked: the reducer moves numbers around but never makes any up.
 */

import { diagnosisLoop, LOOP_A_CHANNELS, LOOP_B_CHANNELS } from "./format.js";
import type { Diagnosis, Frame, LogEvent, SessionInfo } from "./types.js";

export type ConnectionStatus = "idle" | "connecting" | "live" | "disconnected";

export interface AlarmEntry {
  channel: string;
  time: number;
}

export interface SizePoint {
  time: number;
  size: number;
}

export interface ConsoleState {
  connection: ConnectionStatus;
  sessionId: string | null;
  info: SessionInfo | null;
  /** Rolling telemetry buffer, oldest first, capped at bufferLimit. */
  frames: Frame[];
  bufferLimit: number;
  /** Latest diagnosis; carries the service's emission timestamp. */
  diagnosis: Diagnosis | null;
  /** Diagnosis size history for the sparkline. */
  sizeHistory: SizePoint[];
  /** Latched alarm channels with the time each first fired. */
  alarms: AlarmEntry[];
  /** Event log view, oldest first. */
  events: LogEvent[];
  /** Count of malformed stream messages that were dropped. */
  dropped: number;
  modelLoaded: boolean;
  /** Inline error from the last rejected operator action, if any. */
  actionError: string | null;
  selectedGroup: string;
  selectedChannels: string[];
}

export const FRAME_BUFFER_LIMIT = 2000;
export const EVENT_VIEW_LIMIT = 1000;
export const SIZE_HISTORY_LIMIT = 200;

/** Channels shown before the operator picks their own set. */
export const DEFAULT_CHANNELS: readonly string[] = [
  "P",
  "TAVG",
  "QMGA",
  "QMGB",
  "WTRA",
  "WTRB",
  "LVPZ",
  "VOL",
];

export function initialState(
  bufferLimit: number = FRAME_BUFFER_LIMIT,
): ConsoleState {
  return {
    connection: "idle",
    sessionId: null,
    info: null,
    frames: [],
    bufferLimit,
    diagnosis: null,
    sizeHistory: [],
    alarms: [],
    events: [],
    dropped: 0,
    modelLoaded: false,
    actionError: null,
    selectedGroup: "primary loop",
    selectedChannels: [...DEFAULT_CHANNELS],
  };
}

export type Action =
  | { type: "connection"; status: ConnectionStatus }
  | { type: "attached"; sessionId: string }
  | { type: "session"; info: SessionInfo }
  | { type: "frame"; frame: Frame }
  | { type: "diagnosis"; diagnosis: Diagnosis }
  | { type: "event"; event: LogEvent }
  | { type: "logSnapshot"; events: LogEvent[] }
  | { type: "malformed" }
  | { type: "model"; loaded: boolean }
  | { type: "actionError"; message: string | null }
  | { type: "selectGroup"; group: string }
  | { type: "toggleChannel"; channel: string };

function eventKey(e: LogEvent): string {
  return `${e.timestamp}|${e.kind}|${JSON.stringify(e.payload)}`;
}

/**
 * Fold one event into the derived views (alarm list, reset handling).
 * Shared between the live stream path and the log snapshot path so both
 * arrive at the same state.
 */
function applyEvent(state: ConsoleState, event: LogEvent): ConsoleState {
  let next = state;
  if (event.kind === "ThresholdAlarm") {
    const channel = String(event.payload.channel);
    if (!next.alarms.some((a) => a.channel === channel)) {
      next = {
        ...next,
        alarms: [...next.alarms, { channel, time: event.timestamp }],
      };
    }
  } else if (
    event.kind === "SessionControl" &&
    event.payload.action === "reset"
  ) {
    // The service wiped the plant state, its window and its latches;
    // mirror that. The event log itself is append-only and stays.
    next = {
      ...next,
      frames: [],
      diagnosis: null,
      sizeHistory: [],
      alarms: [],
    };
  }
  return next;
}

export function reduce(state: ConsoleState, action: Action): ConsoleState {
  switch (action.type) {
    case "connection":
      return { ...state, connection: action.status };

    case "attached":
      return {
        ...initialState(state.bufferLimit),
        connection: state.connection,
        sessionId: action.sessionId,
        selectedGroup: state.selectedGroup,
        selectedChannels: state.selectedChannels,
      };

    case "session": {
      const next = {
        ...state,
        info: action.info,
        sessionId: action.info.session_id,
        modelLoaded: action.info.model_loaded,
      };
      // Adopt a diagnosis issued before we attached; it carries its own
      // emission timestamp, so staleness still reads correctly.
      if (next.diagnosis === null && action.info.last_diagnosis !== null) {
        next.diagnosis = action.info.last_diagnosis;
      }
      return next;
    }

    case "frame": {
      const frames = [...state.frames, action.frame];
      if (frames.length > state.bufferLimit) {
        frames.splice(0, frames.length - state.bufferLimit);
      }
      return { ...state, frames };
    }

    case "diagnosis": {
      const point = {
        time: action.diagnosis.time,
        size: action.diagnosis.size_percent,
      };
      const sizeHistory = [...state.sizeHistory, point];
      if (sizeHistory.length > SIZE_HISTORY_LIMIT) {
        sizeHistory.splice(0, sizeHistory.length - SIZE_HISTORY_LIMIT);
      }
      return { ...state, diagnosis: action.diagnosis, sizeHistory };
    }

    case "event": {
      // The log snapshot fetched at attach time can overlap the first
      // few live events; drop exact repeats from the recent tail.
      const key = eventKey(action.event);
      const tail = state.events.slice(-20);
      if (tail.some((e) => eventKey(e) === key)) return state;
      const events = [...state.events, action.event];
      if (events.length > EVENT_VIEW_LIMIT) {
        events.splice(0, events.length - EVENT_VIEW_LIMIT);
      }
      return applyEvent({ ...state, events }, action.event);
    }

    case "logSnapshot": {
      let next: ConsoleState = {
        ...state,
        events: [],
        alarms: [],
      };
      for (const event of action.events) {
        next = { ...next, events: [...next.events, event] };
        next = applyEvent(next, event);
      }
      if (next.events.length > EVENT_VIEW_LIMIT) {
        const events = [...next.events];
        events.splice(0, events.length - EVENT_VIEW_LIMIT);
        next = { ...next, events };
      }
      return next;
    }

    case "malformed":
      return { ...state, dropped: state.dropped + 1 };

    case "model":
      return { ...state, modelLoaded: action.loaded };

    case "actionError":
      return { ...state, actionError: action.message };

    case "selectGroup":
      return { ...state, selectedGroup: action.group };

    case "toggleChannel": {
      const selected = state.selectedChannels.includes(action.channel)
        ? state.selectedChannels.filter((c) => c !== action.channel)
        : [...state.selectedChannels, action.channel];
      return { ...state, selectedChannels: selected };
    }
  }
}

// ---------------------------------------------------------------------------
// Selectors
// ---------------------------------------------------------------------------

export function latestFrameTime(state: ConsoleState): number | null {
  const last = state.frames[state.frames.length - 1];
  return last === undefined ? null : last.time;
}

/**
 * Age of the current diagnosis in diagnosis windows (one window is one
 * stride of simulated time). Null when there is nothing to compare.
 */
export function diagnosisAgeWindows(state: ConsoleState): number | null {
  if (state.diagnosis === null || state.info === null) return null;
  const now = latestFrameTime(state);
  if (now === null) return null;
  const windowSeconds = state.info.window_stride * state.info.scenario.dt;
  if (windowSeconds <= 0) return null;
  return (now - state.diagnosis.time) / windowSeconds;
}

/** A diagnosis older than five windows is flagged as stale. */
export function diagnosisIsStale(state: ConsoleState): boolean {
  const age = diagnosisAgeWindows(state);
  return age !== null && age > 5;
}

/** The loop the latched alarms point at, by simple majority. */
export function alarmLoopHint(state: ConsoleState): "A" | "B" | null {
  let a = 0;
  let b = 0;
  for (const alarm of state.alarms) {
    if (LOOP_A_CHANNELS.has(alarm.channel)) a += 1;
    else if (LOOP_B_CHANNELS.has(alarm.channel)) b += 1;
  }
  if (a > b) return "A";
  if (b > a) return "B";
  return null;
}

/**
 * True when the alarm pattern and the model disagree about which loop
 * is faulted. The panel highlights this so the operator looks twice.
 */
export function alarmsDisagreeWithDiagnosis(state: ConsoleState): boolean {
  if (state.diagnosis === null) return false;
  const diagnosed = diagnosisLoop(state.diagnosis.location_code);
  const hinted = alarmLoopHint(state);
  return diagnosed !== null && hinted !== null && diagnosed !== hinted;
}
