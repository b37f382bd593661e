/**
 * HTTP client for the diagnosis service.
 *
 * Each method maps one to one onto a documented route, and every call
 * made is appended to `calls`. Replaying that capture against a fresh
 * session (see replayCalls) drives the service through the identical
 * sequence, which is what makes console sessions reproducible.
 */

import type { Diagnosis, EventLogPage, SessionInfo } from "./types.js";

export interface ApiCall {
  method: string;
  path: string;
  body?: unknown;
}

export interface CreateSessionOptions {
  speed?: number;
  window_frames?: number;
  window_stride?: number;
  start_paused?: boolean;
  scenario?: Record<string, unknown>;
}

export interface CreatedSession {
  session_id: string;
  tick_period_ms: number;
  channel_order: string[];
}

export interface ModelState {
  loaded: boolean;
  [key: string]: unknown;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

function errorDetail(body: unknown): { code: string; message: string } {
  if (typeof body === "object" && body !== null && "detail" in body) {
    const detail = (body as { detail: unknown }).detail;
    if (typeof detail === "object" && detail !== null) {
      const d = detail as Record<string, unknown>;
      return {
        code: typeof d.code === "string" ? d.code : "error",
        message: typeof d.message === "string" ? d.message : String(detail),
      };
    }
    return { code: "error", message: String(detail) };
  }
  return { code: "error", message: "request failed" };
}

export class ServiceClient {
  /** Every call issued through this client, in order. */
  readonly calls: ApiCall[] = [];

  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const call: ApiCall = { method, path };
    if (body !== undefined) call.body = body;
    this.calls.push(call);
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const data: unknown = await resp.json();
    if (!resp.ok) {
      const { code, message } = errorDetail(data);
      throw new ApiError(resp.status, code, message);
    }
    return data;
  }

  createSession(options: CreateSessionOptions = {}): Promise<CreatedSession> {
    return this.request("POST", "/sessions", options) as Promise<CreatedSession>;
  }

  sessionInfo(sessionId: string): Promise<SessionInfo> {
    return this.request("GET", `/sessions/${sessionId}`) as Promise<SessionInfo>;
  }

  injectFault(
    sessionId: string,
    kind: string,
    severityPercent: number,
    eccsEnabled?: boolean,
  ): Promise<unknown> {
    const body: Record<string, unknown> = {
      kind,
      severity: severityPercent,
    };
    if (eccsEnabled !== undefined) body.eccs_enabled = eccsEnabled;
    return this.request("POST", `/sessions/${sessionId}/fault`, body);
  }

  control(
    sessionId: string,
    action: "pause" | "resume" | "reset",
  ): Promise<{ status: string; time: number }> {
    return this.request("POST", `/sessions/${sessionId}/control`, {
      action,
    }) as Promise<{ status: string; time: number }>;
  }

  diagnoseNow(sessionId: string): Promise<Diagnosis> {
    return this.request(
      "POST",
      `/sessions/${sessionId}/diagnose`,
    ) as Promise<Diagnosis>;
  }

  eventLog(sessionId: string, after?: number): Promise<EventLogPage> {
    const suffix = after === undefined ? "" : `?after=${after}`;
    return this.request(
      "GET",
      `/sessions/${sessionId}/log${suffix}`,
    ) as Promise<EventLogPage>;
  }

  currentModel(): Promise<ModelState> {
    return this.request("GET", "/models/current") as Promise<ModelState>;
  }

  uploadModel(document: unknown): Promise<ModelState> {
    return this.request("POST", "/models", document) as Promise<ModelState>;
  }
}

/**
 * Re-issue a captured call sequence against a fresh session.
 *
 * The capture contains the original session id inside paths; once the
 * replayed create call returns a new id, later paths are rewritten to
 * it. Returns the new session id, or null if the capture never created
 * a session.
 */
export async function replayCalls(
  client: ServiceClient,
  calls: readonly ApiCall[],
): Promise<string | null> {
  let oldId: string | null = null;
  let newId: string | null = null;
  for (const call of calls) {
    let path = call.path;
    const match = path.match(/^\/sessions\/([^/?]+)/);
    if (match !== null && match[1] !== undefined) {
      if (oldId === null) oldId = match[1];
      if (match[1] === oldId && newId !== null) {
        path = path.replace(`/sessions/${oldId}`, `/sessions/${newId}`);
      }
    }
    const result = await client.request(call.method, path, call.body);
    if (call.method === "POST" && call.path === "/sessions") {
      newId = (result as CreatedSession).session_id;
    }
  }
  return newId;
}
