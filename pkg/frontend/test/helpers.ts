/**
 * Integration test harness: trains a small model through the package's
 * Python API, starts the real service with `python -m pwrdiag.cli
 * serve`, and tears it down afterwards.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface RunningService {
  baseUrl: string;
  wsUrl: string;
  stop: () => Promise<void>;
}

const TRAIN_SCRIPT = `
import sys
from pwrdiag import pipeline, plantsim
from pwrdiag.plantsim import FaultKind, ScenarioSpec
from pwrdiag.rbfn import RbfnConfig

def spec(kind, severity, seed):
    return ScenarioSpec(fault_kind=kind, severity_percent=severity,
                        onset_time=0.0, duration_steps=120,
                        noise_sigma=0.01, rng_seed=seed)

corpus = plantsim.generate_corpus([
    spec(FaultKind.NORMAL, 0.0, 11),
    spec(FaultKind.SGTR_A, 40.0, 12),
    spec(FaultKind.SGTR_B, 30.0, 13),
    spec(FaultKind.SGTR_B, 40.0, 14),
    spec(FaultKind.SGTR_B, 50.0, 15),
])
model = pipeline.train_diagnoser(
    corpus, RbfnConfig(mse_goal=5e-4, spread=4.0, max_neurons=200))
pipeline.save_model(model, sys.argv[1])
`;

export function trainModelFixture(): string {
  const dir = mkdtempSync(join(tmpdir(), "pwrdiag-console-"));
  const path = join(dir, "model.json");
  const result = spawnSync("python3", ["-c", TRAIN_SCRIPT, path], {
    encoding: "utf8",
    timeout: 120_000,
  });
  if (result.status !== 0) {
    throw new Error(`model fixture training failed:\n${result.stderr}`);
  }
  return path;
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        probe.close();
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

export async function startService(modelPath?: string): Promise<RunningService> {
  const port = await freePort();
  const args = [
    "-m",
    "pwrdiag.cli",
    "serve",
    "--host",
    "127.0.0.1",
    "--port",
    String(port),
    "--log-level",
    "error",
  ];
  if (modelPath !== undefined) args.push("--model", modelPath);
  const child: ChildProcess = spawn("python3", args, {
    stdio: ["ignore", "pipe", "pipe"],
  });
  let stderr = "";
  child.stderr?.on("data", (chunk: Buffer) => {
    stderr += chunk.toString();
  });

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30_000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`service exited early (${child.exitCode}):\n${stderr}`);
    }
    try {
      const resp = await fetch(`${baseUrl}/models/current`);
      if (resp.ok) break;
    } catch {
      // Not listening yet.
    }
    if (Date.now() > deadline) {
      child.kill("SIGKILL");
      throw new Error(`service never came up:\n${stderr}`);
    }
    await sleep(100);
  }

  return {
    baseUrl,
    wsUrl: `ws://127.0.0.1:${port}`,
    stop: () =>
      new Promise<void>((resolve) => {
        child.once("exit", () => resolve());
        child.kill("SIGTERM");
        setTimeout(() => {
          if (child.exitCode === null) child.kill("SIGKILL");
        }, 5000).unref();
      }),
  };
}

export function cleanupFixture(modelPath: string): void {
  rmSync(join(modelPath, ".."), { recursive: true, force: true });
}

export const sleep = (ms: number): Promise<void> =>
  new Promise((resolve) => setTimeout(resolve, ms));

export async function waitFor(
  check: () => boolean | Promise<boolean>,
  timeoutMs: number,
  intervalMs = 25,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    if (await check()) return;
    if (Date.now() > deadline) {
      throw new Error(`condition not met within ${timeoutMs} ms`);
    }
    await sleep(intervalMs);
  }
}
