/**
 * JSON-lines objective server.
 *
 * Reads one request object per stdin line, answers one response object per
 * stdout line, protocol_version 1. Every response carries either a score in
 * [0, 1] or an error string, never both; any per-trial exception becomes an
 * error response and the process stays alive. {"shutdown": true} exits 0.
 */

import { DegenerateConfigError, policyFromValues, ValidationError } from "./policy.js";
import { DEFAULT_CONFIG, runTrial, ToyTrainerConfig } from "./simsiam.js";

export const PROTOCOL_VERSION = 1;
const SPLITS = ["validation", "test"];
export const SUPPORTED_SPACE = "group_augment";

export type WireResponse =
  | { trial_id: number; score: number; collapsed: boolean; metrics: Record<string, number> }
  | { trial_id: number; error: string };

export interface HandleResult {
  response: WireResponse | null;
  shutdown: boolean;
}

function isInt(v: unknown): v is number {
  return typeof v === "number" && Number.isInteger(v);
}

class RequestError extends Error {}

function parseRequest(doc: Record<string, unknown>): {
  trialId: number;
  values: Record<string, unknown>;
  seed: number;
} {
  if (doc.protocol_version !== PROTOCOL_VERSION) {
    throw new RequestError(`unsupported protocol_version ${JSON.stringify(doc.protocol_version)}`);
  }
  if (typeof doc.space_name !== "string" || doc.space_name !== SUPPORTED_SPACE) {
    throw new RequestError(
      `unsupported space ${JSON.stringify(doc.space_name)}; this adapter serves '${SUPPORTED_SPACE}'`,
    );
  }
  if (doc.values === null || typeof doc.values !== "object" || Array.isArray(doc.values)) {
    throw new RequestError("request needs a values object");
  }
  if (!isInt(doc.seed)) {
    throw new RequestError("request needs an integer seed");
  }
  if (typeof doc.split !== "string" || !SPLITS.includes(doc.split)) {
    throw new RequestError(`split must be one of ${SPLITS.join("/")}`);
  }
  return {
    trialId: doc.trial_id as number,
    values: doc.values as Record<string, unknown>,
    seed: doc.seed,
  };
}

/** One request line in, one response (or shutdown) out. Never throws. */
export function handleLine(line: string, config: ToyTrainerConfig = DEFAULT_CONFIG): HandleResult {
  if (line.trim() === "") {
    return { response: null, shutdown: false };
  }
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch (err) {
    return {
      response: { trial_id: -1, error: `request is not valid JSON: ${String(err)}` },
      shutdown: false,
    };
  }
  if (doc === null || typeof doc !== "object" || Array.isArray(doc)) {
    return {
      response: { trial_id: -1, error: "request must be a JSON object" },
      shutdown: false,
    };
  }
  const record = doc as Record<string, unknown>;
  if (record.shutdown === true) {
    return { response: null, shutdown: true };
  }
  const trialId = isInt(record.trial_id) && typeof record.trial_id !== "boolean"
    ? record.trial_id
    : -1;
  if (trialId < 0 && !isInt(record.trial_id)) {
    return {
      response: { trial_id: -1, error: "request needs an integer trial_id" },
      shutdown: false,
    };
  }
  try {
    const req = parseRequest(record);
    const policy = policyFromValues(req.values);
    const outcome = runTrial(policy, req.seed, config);
    return {
      response: {
        trial_id: req.trialId,
        score: outcome.score,
        collapsed: outcome.collapsed,
        metrics: outcome.metrics,
      },
      shutdown: false,
    };
  } catch (err) {
    const reason =
      err instanceof RequestError ||
      err instanceof ValidationError ||
      err instanceof DegenerateConfigError ||
      err instanceof RangeError
        ? err.message
        : String(err);
    return { response: { trial_id: trialId, error: reason }, shutdown: false };
  }
}
