/**
 * Display text for diagnosis decisions, events and channel groupings.
 *
 * All numbers passed in here come from service messages. These helpers
 * only turn them into strings.
 */

import type { LogEvent } from "./types.js";

/** Fault location names indexed by the service's location code. */
export const LOCATION_NAMES: readonly string[] = [
  "Normal",
  "SG-A",
  "SG-B",
  "RCS pump #1",
];

export function locationName(code: number): string {
  return LOCATION_NAMES[code] ?? `location ${code}`;
}

/** Render a leak size in percent: whole numbers lose the decimal. */
export function formatSize(sizePercent: number): string {
  return sizePercent.toFixed(1).replace(/\.0$/, "");
}

/**
 * One-line description of a diagnosis, e.g. "SG-A tube rupture, 40%"
 * or "Normal operation".
 */
export function describeDiagnosis(d: {
  size_percent: number;
  location_code: number;
}): string {
  const size = formatSize(d.size_percent);
  switch (d.location_code) {
    case 0:
      return "Normal operation";
    case 1:
      return `SG-A tube rupture, ${size}%`;
    case 2:
      return `SG-B tube rupture, ${size}%`;
    case 3:
      return `RCS pump #1 locked rotor, ${size}%`;
    default:
      return `location ${d.location_code}, ${size}%`;
  }
}

export function formatTime(t: number): string {
  return `t=${formatSize(t)}s`;
}

function num(value: unknown): string {
  return typeof value === "number" ? formatSize(value) : String(value);
}

/** One-line summary of an event log entry for the log view. */
export function describeEvent(e: LogEvent): string {
  const p = e.payload;
  switch (e.kind) {
    case "FaultInjected":
      return `${String(p.kind)} injected, severity ${num(p.severity_percent)}%`;
    case "ThresholdAlarm":
      return `${String(p.channel)} deviates ${num(p.deviation)} (limit ${num(p.threshold)})`;
    case "DiagnosisIssued":
      return describeDiagnosis({
        size_percent: Number(p.size_percent),
        location_code: Number(p.location_code),
      });
    case "SessionControl":
      return `session ${String(p.action)}`;
  }
}

/**
 * Chart tabs. The 38 channels split into the four views an operator
 * flips between; together the groups cover every channel exactly once.
 */
export const CHANNEL_GROUPS: Readonly<Record<string, readonly string[]>> = {
  "primary loop": [
    "P",
    "TAVG",
    "TCA",
    "TCB",
    "THA",
    "THB",
    "WRCA",
    "WRCB",
    "VOL",
    "QMWT",
    "WEC",
    "HUP",
    "HLW",
  ],
  "steam generators": [
    "QMGA",
    "QMGB",
    "NSGA",
    "NSGB",
    "LSGA",
    "LSGB",
    "WFWA",
    "WFWB",
    "WSTA",
    "WSTB",
    "PSGA",
    "PSGB",
    "WTRA",
    "WTRB",
  ],
  pressurizer: ["LVPZ", "WSPY", "HTR"],
  reactivity: ["PWR", "RBLK", "TF", "DNBR", "VOID", "RHFL", "RHMT", "RHRD"],
};

export const GROUP_NAMES: readonly string[] = Object.keys(CHANNEL_GROUPS);

/** Channels specific to one loop, used to cross-check a diagnosis. */
export const LOOP_A_CHANNELS: ReadonlySet<string> = new Set([
  "TCA",
  "THA",
  "QMGA",
  "NSGA",
  "WFWA",
  "WRCA",
  "WSTA",
  "LSGA",
  "WTRA",
  "PSGA",
]);

export const LOOP_B_CHANNELS: ReadonlySet<string> = new Set([
  "TCB",
  "THB",
  "QMGB",
  "NSGB",
  "WFWB",
  "WRCB",
  "WSTB",
  "LSGB",
  "WTRB",
  "PSGB",
]);

/** The loop a diagnosed location implicates, if any. */
export function diagnosisLoop(locationCode: number): "A" | "B" | null {
  if (locationCode === 1) return "A";
  if (locationCode === 2) return "B";
  if (locationCode === 3) return "A"; // pump #1 sits in loop A
  return null;
}
