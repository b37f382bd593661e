/**
 * Browser entry point: wires the static page to the store, the HTTP
 * client and the telemetry stream.
 *
 * The page talks to the service named by the `api` query parameter
 * (default http://127.0.0.1:8000). All rendering is driven off store
 * state; handlers translate clicks into API calls and dispatches.
 */

import { ApiError, ServiceClient } from "./api.js";
import {
  CHANNEL_GROUPS,
  GROUP_NAMES,
  describeDiagnosis,
  describeEvent,
  formatSize,
  formatTime,
} from "./format.js";
import type { ConsoleState } from "./state.js";
import {
  alarmLoopHint,
  alarmsDisagreeWithDiagnosis,
  diagnosisAgeWindows,
  diagnosisIsStale,
} from "./state.js";
import { Store } from "./store.js";
import { TelemetryStream } from "./stream.js";

const params = new URLSearchParams(window.location.search);
const apiBase = (params.get("api") ?? "http://127.0.0.1:8000").replace(/\/$/, "");
const wsBase = apiBase.replace(/^http/, "ws");

const store = new Store();
const client = new ServiceClient(apiBase);

let stream: TelemetryStream | null = null;
let infoTimer: ReturnType<typeof setInterval> | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// ---------------------------------------------------------------------------
// Session wiring
// ---------------------------------------------------------------------------

async function refreshInfo(sessionId: string): Promise<void> {
  try {
    const info = await client.sessionInfo(sessionId);
    store.dispatch({ type: "session", info });
  } catch {
    // The stream owns connectivity reporting; a failed poll is not news.
  }
}

async function attach(sessionId: string): Promise<void> {
  if (stream !== null) stream.stop();
  if (infoTimer !== null) clearInterval(infoTimer);
  store.dispatch({ type: "attached", sessionId });

  stream = new TelemetryStream(
    `${wsBase}/sessions/${sessionId}/stream`,
    store.dispatch,
    (url) => new WebSocket(url),
  );
  stream.start();

  await refreshInfo(sessionId);
  try {
    const page = await client.eventLog(sessionId);
    store.dispatch({ type: "logSnapshot", events: page.events });
  } catch {
    // Keep going with live events only.
  }
  infoTimer = setInterval(() => {
    void refreshInfo(sessionId);
  }, 2000);
  el<HTMLInputElement>("attach-id").value = sessionId;
}

async function createSession(): Promise<void> {
  const speed = Number(el<HTMLInputElement>("new-speed").value);
  const steps = Number(el<HTMLInputElement>("new-steps").value);
  const noise = Number(el<HTMLInputElement>("new-noise").value);
  const seed = Number(el<HTMLInputElement>("new-seed").value);
  const paused = el<HTMLInputElement>("new-paused").checked;
  try {
    const created = await client.createSession({
      speed,
      start_paused: paused,
      scenario: {
        duration_steps: steps,
        noise_sigma: noise,
        rng_seed: seed,
      },
    });
    store.dispatch({ type: "actionError", message: null });
    await attach(created.session_id);
  } catch (error) {
    reportActionError(error);
  }
}

function reportActionError(error: unknown): void {
  const message =
    error instanceof ApiError
      ? `${error.code}: ${error.message}`
      : "service unreachable";
  store.dispatch({ type: "actionError", message });
}

function requireSession(): string | null {
  const id = store.getState().sessionId;
  if (id === null) {
    store.dispatch({ type: "actionError", message: "no session attached" });
  }
  return id;
}

async function injectFault(): Promise<void> {
  const id = requireSession();
  if (id === null) return;
  const kind = el<HTMLSelectElement>("fault-kind").value;
  const severity = Number(el<HTMLInputElement>("fault-severity").value);
  const eccs = el<HTMLInputElement>("fault-eccs").checked;
  // The slider already pins severity to [0, 100]; the zero case is the
  // one combination the service would accept as meaningless, so it is
  // rejected here before any call goes out.
  if (!Number.isFinite(severity) || severity < 0 || severity > 100) {
    store.dispatch({
      type: "actionError",
      message: "severity must be between 0 and 100",
    });
    return;
  }
  if (severity === 0 && kind !== "Normal") {
    store.dispatch({
      type: "actionError",
      message: "severity 0 makes no fault; pick a positive severity",
    });
    return;
  }
  try {
    await client.injectFault(id, kind, severity, eccs ? true : undefined);
    store.dispatch({ type: "actionError", message: null });
    void refreshInfo(id);
  } catch (error) {
    reportActionError(error);
  }
}

async function controlSession(action: "pause" | "resume" | "reset"): Promise<void> {
  const id = requireSession();
  if (id === null) return;
  try {
    await client.control(id, action);
    store.dispatch({ type: "actionError", message: null });
    void refreshInfo(id);
  } catch (error) {
    reportActionError(error);
  }
}

async function diagnoseNow(): Promise<void> {
  const id = requireSession();
  if (id === null) return;
  try {
    const diagnosis = await client.diagnoseNow(id);
    store.dispatch({ type: "diagnosis", diagnosis });
    store.dispatch({ type: "actionError", message: null });
  } catch (error) {
    reportActionError(error);
  }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

function sparkPath(
  values: readonly number[],
  width: number,
  height: number,
): string {
  if (values.length < 2) return "";
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const span = hi - lo || 1;
  const pad = 3;
  const step = width / (values.length - 1);
  const points: string[] = [];
  for (let i = 0; i < values.length; i += 1) {
    const v = values[i] ?? lo;
    const x = i * step;
    const y = height - pad - ((v - lo) / span) * (height - 2 * pad);
    points.push(`${x.toFixed(1)},${y.toFixed(1)}`);
  }
  return points.join(" ");
}

function renderHeader(state: ConsoleState): void {
  const badge = el<HTMLSpanElement>("conn-badge");
  badge.textContent = state.connection;
  badge.className = `badge ${state.connection}`;

  const model = el<HTMLSpanElement>("model-badge");
  model.textContent = state.modelLoaded ? "model loaded" : "no model loaded";

  const dropped = el<HTMLSpanElement>("dropped-badge");
  dropped.hidden = state.dropped === 0;
  dropped.textContent = `${state.dropped} dropped`;
  dropped.className = "badge dropped";

  el<HTMLSpanElement>("session-label").textContent =
    state.sessionId === null ? "" : `session ${state.sessionId}`;

  const status = el<HTMLSpanElement>("status-line");
  if (state.info === null) {
    status.textContent = "";
  } else {
    status.textContent =
      `${state.info.status}, frame ${state.info.frame_index}, ` +
      `${formatTime(state.info.time)}, speed x${state.info.speed}`;
  }
}

function renderTabs(state: ConsoleState): void {
  const tabs = el<HTMLDivElement>("group-tabs");
  if (tabs.childElementCount === 0) {
    for (const name of GROUP_NAMES) {
      const button = document.createElement("button");
      button.textContent = name;
      button.addEventListener("click", () =>
        store.dispatch({ type: "selectGroup", group: name }),
      );
      tabs.appendChild(button);
    }
  }
  const buttons = tabs.querySelectorAll("button");
  buttons.forEach((button) => {
    button.className = button.textContent === state.selectedGroup ? "active" : "";
  });

  const picks = el<HTMLDivElement>("channel-picks");
  // Rebuilding checkboxes mid-click would eat the click, so only redo
  // them when the group or the selection actually changed.
  const key = `${state.selectedGroup}|${state.selectedChannels.join(",")}`;
  if (picks.dataset.key === key) return;
  picks.dataset.key = key;
  const channels = CHANNEL_GROUPS[state.selectedGroup] ?? [];
  picks.innerHTML = channels
    .map((name) => {
      const checked = state.selectedChannels.includes(name) ? " checked" : "";
      return (
        `<label><input type="checkbox" data-channel="${name}"${checked}> ` +
        `${name}</label>`
      );
    })
    .join("");
  picks.querySelectorAll("input").forEach((box) => {
    box.addEventListener("change", () => {
      const channel = box.dataset.channel;
      if (channel !== undefined) {
        store.dispatch({ type: "toggleChannel", channel });
      }
    });
  });
}

const CHART_POINTS = 300;

function renderCharts(state: ConsoleState): void {
  const container = el<HTMLDivElement>("chart-rows");
  if (state.info === null) {
    container.innerHTML = '<span class="quiet">attach a session to see telemetry</span>';
    return;
  }
  const order = state.info.channel_order;
  const group = CHANNEL_GROUPS[state.selectedGroup] ?? [];
  const shown = group.filter((name) => state.selectedChannels.includes(name));
  const tail = state.frames.slice(-CHART_POINTS);
  const rows: string[] = [];
  for (const name of shown) {
    const index = order.indexOf(name);
    if (index < 0) continue;
    const series = tail.map((frame) => frame.values[index] ?? 0);
    const last = series[series.length - 1];
    const value = last === undefined ? "" : last.toPrecision(6);
    rows.push(
      `<div class="chart-row"><span class="name">${name}</span>` +
        `<svg preserveAspectRatio="none" viewBox="0 0 300 42">` +
        `<polyline class="spark-line" points="${sparkPath(series, 300, 42)}"/>` +
        `</svg><span class="value">${value}</span></div>`,
    );
  }
  container.innerHTML =
    rows.length > 0
      ? rows.join("")
      : '<span class="quiet">no channels selected in this group</span>';
}

function renderDiagnosis(state: ConsoleState): void {
  const headline = el<HTMLDivElement>("diagnosis-headline");
  const meta = el<HTMLDivElement>("diagnosis-meta");
  const spark = el<SVGSVGElement & HTMLElement>("size-spark");

  if (!state.modelLoaded) {
    headline.textContent = "no model loaded";
    headline.className = "none";
    meta.textContent = "upload a model to POST /models to enable diagnosis";
    spark.innerHTML = "";
    return;
  }
  const d = state.diagnosis;
  if (d === null) {
    headline.textContent = "no diagnosis yet";
    headline.className = "none";
    meta.textContent = "";
    spark.innerHTML = "";
    return;
  }

  headline.textContent = describeDiagnosis(d);
  headline.className = d.location_code === 0 ? "normal" : "fault";

  const flags: string[] = [];
  if (diagnosisIsStale(state)) {
    const age = diagnosisAgeWindows(state);
    const windows = age === null ? "" : ` (${age.toFixed(1)} windows old)`;
    flags.push(`<span class="flag stale">stale${windows}</span>`);
  }
  if (alarmsDisagreeWithDiagnosis(state)) {
    const hint = alarmLoopHint(state);
    flags.push(
      `<span class="flag conflict">alarms point at loop ${hint}</span>`,
    );
  }
  const raw = d.raw_output.map((x) => x.toFixed(4)).join(", ");
  meta.innerHTML =
    `${escapeHtml(d.location_name)}, issued at ${formatTime(d.time)} ` +
    `over ${d.window_frames} frames; raw output [${raw}]` +
    flags.join("");

  const sizes = state.sizeHistory.map((p) => p.size);
  spark.innerHTML =
    sizes.length >= 2
      ? `<polyline class="spark-line" points="${sparkPath(sizes, 300, 46)}"/>`
      : "";
}

function renderAlarms(state: ConsoleState): void {
  const list = el<HTMLDivElement>("alarm-list");
  if (state.alarms.length === 0) {
    list.innerHTML = '<span class="quiet">none</span>';
    return;
  }
  list.innerHTML = state.alarms
    .map(
      (alarm) =>
        `<span class="alarm">${escapeHtml(alarm.channel)} @ ` +
        `${formatTime(alarm.time)}</span>`,
    )
    .join("");
}

const LOG_VIEW_ROWS = 200;

function renderLog(state: ConsoleState): void {
  const body = el<HTMLTableSectionElement>("log-body");
  const view = el<HTMLDivElement>("log-view");
  const nearBottom =
    view.scrollTop + view.clientHeight >= view.scrollHeight - 20;
  body.innerHTML = state.events
    .slice(-LOG_VIEW_ROWS)
    .map(
      (event) =>
        `<tr class="${event.kind}"><td>${formatTime(event.timestamp)}</td>` +
        `<td>${event.kind}</td>` +
        `<td class="what">${escapeHtml(describeEvent(event))}</td></tr>`,
    )
    .join("");
  if (nearBottom) view.scrollTop = view.scrollHeight;
}

function renderError(state: ConsoleState): void {
  el<HTMLDivElement>("action-error").textContent = state.actionError ?? "";
}

let renderQueued = false;

function render(): void {
  renderQueued = false;
  const state = store.getState();
  renderHeader(state);
  renderTabs(state);
  renderCharts(state);
  renderDiagnosis(state);
  renderAlarms(state);
  renderLog(state);
  renderError(state);
}

store.subscribe(() => {
  if (!renderQueued) {
    renderQueued = true;
    requestAnimationFrame(render);
  }
});

// ---------------------------------------------------------------------------
// Controls
// ---------------------------------------------------------------------------

el<HTMLButtonElement>("create-btn").addEventListener("click", () => {
  void createSession();
});
el<HTMLButtonElement>("attach-btn").addEventListener("click", () => {
  const id = el<HTMLInputElement>("attach-id").value.trim();
  if (id !== "") void attach(id);
});
el<HTMLButtonElement>("inject-btn").addEventListener("click", () => {
  void injectFault();
});
el<HTMLButtonElement>("diagnose-btn").addEventListener("click", () => {
  void diagnoseNow();
});
el<HTMLButtonElement>("pause-btn").addEventListener("click", () => {
  void controlSession("pause");
});
el<HTMLButtonElement>("resume-btn").addEventListener("click", () => {
  void controlSession("resume");
});
el<HTMLButtonElement>("reset-btn").addEventListener("click", () => {
  void controlSession("reset");
});
el<HTMLInputElement>("fault-severity").addEventListener("input", () => {
  el<HTMLSpanElement>("severity-value").textContent =
    `${el<HTMLInputElement>("fault-severity").value}%`;
});

render();
