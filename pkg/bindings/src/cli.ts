/**
 * Subprocess plumbing for the discretedp CLI.
 *
 * Every binding call is one CLI invocation; no sampling or arithmetic
 * logic lives on this side of the boundary.
 */

import { execFile } from "node:child_process";

/**
 * Executable to invoke. Override with the DISCRETEDP_CLI environment
 * variable when the entry point is not on PATH.
 */
const CLI = process.env.DISCRETEDP_CLI ?? "discretedp";

/**
 * Interval-arithmetic precision, pinned once at import time. Later changes
 * to process.env do not reach the subprocess; a per-call override is
 * deliberately not exposed.
 */
const PRECISION_BITS = process.env.DISCRETE_DP_PRECISION_BITS;

/** Raw outcome of one CLI invocation. */
export interface CliResult {
  /** Exact stdout bytes, unmodified. */
  stdout: Buffer;
  stderr: string;
  exitCode: number;
}

/**
 * A CLI invocation that did not produce a usable result.
 *
 * The primary error taxonomy crosses the boundary through the documented
 * exit codes (2 bad configuration, 3 budget exhausted) and the
 * `error: ...` line on stderr; both are preserved verbatim. Exit code -1
 * marks a spawn-level failure (executable missing, killed by signal).
 */
export class CliError extends Error {
  readonly exitCode: number;
  readonly stderr: string;
  readonly args: readonly string[];

  constructor(args: readonly string[], exitCode: number, stderr: string) {
    const detail = stderr.trim() || `exit code ${exitCode}`;
    super(`discretedp ${args[0] ?? ""}: ${detail}`);
    this.name = "CliError";
    this.exitCode = exitCode;
    this.stderr = stderr;
    this.args = args;
  }
}

/**
 * Run the CLI once and capture raw bytes. Exit codes in `okExits`
 * resolve; anything else rejects with CliError.
 */
export function runCli(
  args: readonly string[],
  okExits: ReadonlySet<number>,
): Promise<CliResult> {
  const env = { ...process.env };
  if (PRECISION_BITS === undefined) {
    delete env.DISCRETE_DP_PRECISION_BITS;
  } else {
    env.DISCRETE_DP_PRECISION_BITS = PRECISION_BITS;
  }
  return new Promise((resolve, reject) => {
    execFile(
      CLI,
      args,
      { encoding: "buffer", maxBuffer: 1 << 26, env },
      (error, stdout, stderr) => {
        const stderrText = stderr.toString("utf8");
        if (error && typeof error.code !== "number") {
          reject(new CliError(args, -1, stderrText || error.message));
          return;
        }
        const exitCode = error ? (error.code as number) : 0;
        if (!okExits.has(exitCode)) {
          reject(new CliError(args, exitCode, stderrText));
          return;
        }
        resolve({ stdout, stderr: stderrText, exitCode });
      },
    );
  });
}
