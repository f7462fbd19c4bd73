/**
 * Typed bindings for the discretedp command line tool.
 *
 * `sample`/`sampleRaw` wrap `discretedp sample`, `audit` wraps
 * `discretedp audit <kind> --json`, and `createSampler` owns a draw
 * stream. The binding only marshals arguments and parses output; every
 * number comes from the CLI process, so results are byte-for-byte the
 * CLI's own.
 */

import { CliError, runCli } from "./cli.js";

export { CliError } from "./cli.js";
export type { CliResult } from "./cli.js";

/** Distributions understood by `discretedp sample`. */
export type DistName =
  | "uniform"
  | "bernoulli"
  | "bernoulli-exp-neg"
  | "geometric"
  | "laplace"
  | "gaussian";

/** Laplace/Gaussian algorithm choice; `auto` picks by scale. */
export type AlgoName = "algo1" | "algo2" | "auto";

/** One `discretedp sample` invocation. */
export interface SampleConfig {
  dist: DistName;
  /** Rational parameter numerator (scale, sigma, or probability). */
  num?: number;
  /** Rational parameter denominator; also the uniform range bound. */
  den?: number;
  /** Gaussian center. */
  mu?: number;
  /** Number of draws; the CLI defaults to 1. */
  count?: number;
  /** Seeded deterministic stream; OS entropy when omitted. */
  seed?: number;
  algo?: AlgoName;
}

/** Verdict report mirroring the CLI's AuditReport JSON. */
export interface AuditReport {
  test: string;
  /** Exact rationals arrive as "num/den" text, enclosures as decimal strings. */
  statistic: unknown;
  threshold: unknown;
  slack: unknown;
  verdict: "pass" | "fail";
  witness: unknown;
  seed: number | null;
  draws: number | null;
}

/** Goodness of fit of a sampler against its exact distribution. */
export interface PmfAuditConfig {
  kind: "pmf";
  dist: DistName;
  num?: number;
  den?: number;
  mu?: number;
  samples?: number;
  seed?: number;
  /** Significance level as rational text, e.g. "1/1000". */
  alpha?: string;
}

/** Homogeneity test between the two Laplace algorithms at one scale. */
export interface TwoSampleAuditConfig {
  kind: "two-sample";
  num?: number;
  den?: number;
  samples?: number;
  seed?: number;
  alpha?: string;
}

/** Exhaustive pure-DP likelihood-ratio audit over a tiny universe. */
export interface DpAuditConfig {
  kind: "dp";
  mechanism?: "noised-count" | "histogram" | "svt";
  /** Noise pair num/den the mechanism is built with, e.g. "1/2". */
  budget?: string;
  /** Bound to audit against; defaults to the mechanism's claim. */
  epsilon?: string;
  universe?: number[];
  maxlen?: number;
  bins?: number;
  threshold?: number;
  slackTol?: string;
  pairCap?: number;
}

/** Renyi-divergence audit of the Gaussian-noised count's zCDP claim. */
export interface RenyiAuditConfig {
  kind: "renyi";
  budget?: string;
  /** zCDP bound to check; defaults to the claim. */
  rho?: string;
  /** Renyi orders as rational text, e.g. ["3/2", "2"]. */
  alphas?: string[];
  universe?: number[];
  maxlen?: number;
  slackTol?: string;
  pairCap?: number;
}

/** Exact stability of one loop-terminal mass across unrolling cuts. */
export interface CutsAuditConfig {
  kind: "cuts";
  spec: "geometric" | "uniform";
  point: number;
  cut: number;
  extra?: number;
  num?: number;
  den?: number;
  /** Exact mass num/den; derived from the parameters when omitted. */
  expected?: string;
}

export type AuditConfig =
  | PmfAuditConfig
  | TwoSampleAuditConfig
  | DpAuditConfig
  | RenyiAuditConfig
  | CutsAuditConfig;

const SAMPLE_OK = new Set([0]);
const REPORT_OK = new Set([0, 1]);

function intArg(name: string, value: number): string {
  if (!Number.isSafeInteger(value)) {
    throw new RangeError(`${name} must be an integer, got ${value}`);
  }
  return String(value);
}

function pushOpt(
  args: string[],
  flag: string,
  name: string,
  value: number | undefined,
): void {
  if (value !== undefined) {
    args.push(flag, intArg(name, value));
  }
}

function sampleArgs(config: SampleConfig): string[] {
  const args = ["sample", "--dist", config.dist];
  pushOpt(args, "--num", "num", config.num);
  pushOpt(args, "--den", "den", config.den);
  pushOpt(args, "--mu", "mu", config.mu);
  pushOpt(args, "--count", "count", config.count);
  pushOpt(args, "--seed", "seed", config.seed);
  if (config.algo !== undefined) {
    args.push("--algo", config.algo);
  }
  return args;
}

function auditArgs(config: AuditConfig): string[] {
  const args = ["audit", config.kind];
  switch (config.kind) {
    case "pmf":
      args.push("--dist", config.dist);
      pushOpt(args, "--num", "num", config.num);
      pushOpt(args, "--den", "den", config.den);
      pushOpt(args, "--mu", "mu", config.mu);
      pushOpt(args, "--samples", "samples", config.samples);
      pushOpt(args, "--seed", "seed", config.seed);
      if (config.alpha !== undefined) args.push("--alpha", config.alpha);
      break;
    case "two-sample":
      pushOpt(args, "--num", "num", config.num);
      pushOpt(args, "--den", "den", config.den);
      pushOpt(args, "--samples", "samples", config.samples);
      pushOpt(args, "--seed", "seed", config.seed);
      if (config.alpha !== undefined) args.push("--alpha", config.alpha);
      break;
    case "dp":
      if (config.mechanism !== undefined) args.push("--mechanism", config.mechanism);
      if (config.budget !== undefined) args.push("--budget", config.budget);
      if (config.epsilon !== undefined) args.push("--epsilon", config.epsilon);
      if (config.universe !== undefined) {
        args.push("--universe", config.universe.map((v) => intArg("universe", v)).join(","));
      }
      pushOpt(args, "--maxlen", "maxlen", config.maxlen);
      pushOpt(args, "--bins", "bins", config.bins);
      pushOpt(args, "--threshold", "threshold", config.threshold);
      if (config.slackTol !== undefined) args.push("--slack-tol", config.slackTol);
      pushOpt(args, "--pair-cap", "pairCap", config.pairCap);
      break;
    case "renyi":
      if (config.budget !== undefined) args.push("--budget", config.budget);
      if (config.rho !== undefined) args.push("--rho", config.rho);
      if (config.alphas !== undefined) args.push("--alphas", config.alphas.join(","));
      if (config.universe !== undefined) {
        args.push("--universe", config.universe.map((v) => intArg("universe", v)).join(","));
      }
      pushOpt(args, "--maxlen", "maxlen", config.maxlen);
      if (config.slackTol !== undefined) args.push("--slack-tol", config.slackTol);
      pushOpt(args, "--pair-cap", "pairCap", config.pairCap);
      break;
    case "cuts":
      args.push("--spec", config.spec);
      args.push("--point", intArg("point", config.point));
      args.push("--cut", intArg("cut", config.cut));
      pushOpt(args, "--extra", "extra", config.extra);
      pushOpt(args, "--num", "num", config.num);
      pushOpt(args, "--den", "den", config.den);
      if (config.expected !== undefined) args.push("--expected", config.expected);
      break;
  }
  args.push("--json");
  return args;
}

/**
 * Raw stdout of `discretedp sample`: one decimal integer per line,
 * byte-for-byte what the CLI printed.
 */
export async function sampleRaw(config: SampleConfig): Promise<Buffer> {
  const result = await runCli(sampleArgs(config), SAMPLE_OK);
  return result.stdout;
}

/** Draws from `discretedp sample`, parsed, in order. */
export async function sample(config: SampleConfig): Promise<number[]> {
  const raw = await sampleRaw(config);
  const text = raw.toString("utf8");
  const body = text.endsWith("\n") ? text.slice(0, -1) : text;
  if (body === "") {
    return [];
  }
  return body.split("\n").map((line) => {
    const value = Number(line);
    if (!Number.isSafeInteger(value)) {
      throw new TypeError(`unparseable draw line from the CLI: ${JSON.stringify(line)}`);
    }
    return value;
  });
}

/**
 * Run one audit and return its parsed JSON report. A `fail` verdict is a
 * result, not an error; bad configuration rejects with CliError and no
 * partial report.
 */
export async function audit(config: AuditConfig): Promise<AuditReport> {
  const result = await runCli(auditArgs(config), REPORT_OK);
  return JSON.parse(result.stdout.toString("utf8")) as AuditReport;
}

/**
 * A sampler bound to one entropy source.
 *
 * Seeded handles draw a single deterministic stream: consecutive
 * `draw` calls continue where the previous one stopped, so
 * `draw(3)` then `draw(2)` yields the same values as one `draw(5)`.
 * Handles serialize their draws internally and are not shareable
 * across concurrent callers.
 */
export interface BoundSampler {
  draw(count: number): Promise<number[]>;
  /** Total draws taken from the handle's stream so far. */
  readonly consumed: number;
}

/**
 * Bind a sampler configuration to an owned entropy source.
 *
 * With a seed, continuation is implemented by replaying the stream from
 * the start on every call (the CLI is one-shot), trading time for exact
 * fidelity; without a seed each call draws fresh OS entropy.
 */
export function createSampler(config: Omit<SampleConfig, "count">): BoundSampler {
  let consumed = 0;
  let queue: Promise<unknown> = Promise.resolve();
  const seeded = config.seed !== undefined;
  const handle = {
    get consumed(): number {
      return consumed;
    },
    draw(count: number): Promise<number[]> {
      if (!Number.isSafeInteger(count) || count < 0) {
        return Promise.reject(new RangeError(`count must be a nonnegative integer, got ${count}`));
      }
      const run = queue.then(async () => {
        if (!seeded) {
          const batch = await sample({ ...config, count });
          consumed += count;
          return batch;
        }
        const replay = await sample({ ...config, count: consumed + count });
        const batch = replay.slice(consumed);
        consumed += count;
        return batch;
      });
      queue = run.catch(() => undefined);
      return run;
    },
  };
  return handle;
}
