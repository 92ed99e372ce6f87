/**
 * Wire-protocol conformance of the request handler: schema-valid responses,
 * score XOR error, matching trial ids, resilience to malformed input, and
 * the shutdown signal.
 */

import { describe, expect, it } from "vitest";
import { handleLine } from "../src/server.js";
import { DEFAULT_CONFIG } from "../src/simsiam.js";

const FAST = { ...DEFAULT_CONFIG, pretrainEpochs: 2, evalEpochs: 5 };

function request(overrides: Record<string, unknown> = {}): string {
  return JSON.stringify({
    protocol_version: 1,
    trial_id: 0,
    space_name: "group_augment",
    values: {
      p_color_transformations: 0.6,
      p_geometric_transformations: 0.4,
      p_non_rigid_transformations: 0.0,
      p_quality_transformations: 0.0,
      p_exotic_transformations: 0.0,
      num_color_transformations: 1,
      num_geometric_transformations: 1,
      num_non_rigid_transformations: 1,
      num_quality_transformations: 1,
      num_exotic_transformations: 1,
      num_total_group_samples: 1,
    },
    seed: 0,
    split: "validation",
    ...overrides,
  });
}

describe("request handling", () => {
  it("answers a valid request with a schema-valid scored response", { timeout: 60_000 }, () => {
    const { response, shutdown } = handleLine(request({ trial_id: 42 }), FAST);
    expect(shutdown).toBe(false);
    expect(response).not.toBeNull();
    expect(response!.trial_id).toBe(42);
    if ("error" in response!) {
      throw new Error(`unexpected error response: ${response!.error}`);
    }
    expect(response!.score).toBeGreaterThanOrEqual(0);
    expect(response!.score).toBeLessThanOrEqual(1);
    expect(typeof response!.collapsed).toBe("boolean");
    expect(typeof response!.metrics).toBe("object");
  });

  it("same request twice gives identical scores", { timeout: 60_000 }, () => {
    const a = handleLine(request(), FAST).response!;
    const b = handleLine(request(), FAST).response!;
    expect(a).toEqual(b);
  });

  it("signals shutdown and answers nothing", () => {
    const result = handleLine(JSON.stringify({ shutdown: true }));
    expect(result.shutdown).toBe(true);
    expect(result.response).toBeNull();
  });

  it("answers an unsupported space with an error, same trial id", () => {
    const { response } = handleLine(request({ space_name: "randaugment", trial_id: 9 }), FAST);
    expect(response!.trial_id).toBe(9);
    expect("error" in response! && response!.error).toMatch(/unsupported space/);
    expect("score" in response!).toBe(false);
  });

  it("answers degenerate all-zero probabilities with an error", () => {
    const values = JSON.parse(request()).values as Record<string, number>;
    for (const key of Object.keys(values)) {
      if (key.startsWith("p_")) {
        values[key] = 0.0;
      }
    }
    const { response } = handleLine(request({ values, trial_id: 3 }), FAST);
    expect(response!.trial_id).toBe(3);
    expect("error" in response!).toBe(true);
  });

  it("survives malformed lines with error responses", () => {
    for (const line of ["{ nope", "[1,2]", '"just a string"', JSON.stringify({ trial_id: true })]) {
      const { response, shutdown } = handleLine(line);
      expect(shutdown).toBe(false);
      expect("error" in response!).toBe(true);
    }
    expect(handleLine("").response).toBeNull();
  });

  it("rejects wrong protocol versions and bad splits", () => {
    expect("error" in handleLine(request({ protocol_version: 2 })).response!).toBe(true);
    expect("error" in handleLine(request({ split: "train" })).response!).toBe(true);
    expect("error" in handleLine(request({ seed: "zero" })).response!).toBe(true);
    expect("error" in handleLine(request({ values: null })).response!).toBe(true);
  });
});
