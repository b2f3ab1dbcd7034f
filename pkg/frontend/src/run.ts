/**
 * One place that knows how to spawn the core CLI.
 *
 * Every binding funnels through runCli: stdout is the single JSON line
 * the CLI prints, stderr is progress noise, and non-zero exits become
 * typed errors carrying the core error code.
 */

import { spawnSync } from "node:child_process";

import { CliError, errorFromCode, MuellerKitError } from "./errors.js";

/** Override with MUELLERKIT_PYTHON when the interpreter is not python3. */
export function pythonExecutable(): string {
  return process.env.MUELLERKIT_PYTHON ?? "python3";
}

export interface CliResult {
  exitCode: number;
  /** Parsed object from the CLI's JSON stdout line. */
  payload: Record<string, unknown>;
  stderr: string;
}

export interface RunOptions {
  /** Exit codes accepted as success besides 0 (validate yields 2 on findings). */
  okExitCodes?: number[];
  env?: Record<string, string>;
}

export function runCli(args: string[], opts: RunOptions = {}): CliResult {
  const proc = spawnSync(pythonExecutable(), ["-m", "muellerkit", ...args], {
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
    env: { ...process.env, ...opts.env },
  });
  if (proc.error) {
    throw new CliError(
      `failed to spawn ${pythonExecutable()}: ${proc.error.message}`,
      -1,
      "",
    );
  }
  const exitCode = proc.status ?? -1;
  const stderr = proc.stderr ?? "";
  const payload = parsePayload(proc.stdout ?? "");

  const ok = exitCode === 0 || (opts.okExitCodes ?? []).includes(exitCode);
  if (!ok) {
    if (typeof payload.error === "string") {
      const detail =
        typeof payload.detail === "string" ? payload.detail : payload.error;
      throw attachExit(errorFromCode(payload.error, detail), exitCode, stderr);
    }
    const tail = stderr.trim().split("\n").slice(-3).join("\n");
    throw new CliError(
      `muellerkit ${args[0] ?? ""} exited ${exitCode}: ${tail}`,
      exitCode,
      stderr,
    );
  }
  return { exitCode, payload, stderr };
}

function parsePayload(stdout: string): Record<string, unknown> {
  const line = stdout.trim().split("\n").pop() ?? "";
  if (!line.startsWith("{")) return {};
  try {
    return JSON.parse(line) as Record<string, unknown>;
  } catch {
    return {};
  }
}

function attachExit(
  err: MuellerKitError,
  exitCode: number,
  stderr: string,
): MuellerKitError {
  Object.assign(err, { exitCode, stderr });
  return err;
}
