/**
 * Sequence-parity probe: print the policy's sampled sequence names for a
 * run of seeds, one JSON line per seed, for comparison against the sibling
 * implementation's draws.
 *
 *   node dist/parity.js <policy.json> [count=20] [firstSeed=0]
 *
 * Seed s uses the stream derived from keys (s, "policy-draw"); both
 * implementations must derive identically for the lines to match.
 */

import { readFileSync } from "node:fs";
import { policyFromJson } from "./policy.js";
import { RngStream } from "./rng.js";

function main(): void {
  const [path, countArg, firstArg] = process.argv.slice(2);
  if (!path) {
    process.stderr.write("usage: parity <policy.json> [count] [firstSeed]\n");
    process.exit(2);
  }
  const count = countArg === undefined ? 20 : Number(countArg);
  const first = firstArg === undefined ? 0 : Number(firstArg);
  if (!Number.isInteger(count) || count < 1 || !Number.isInteger(first)) {
    process.stderr.write("count/firstSeed must be integers, count >= 1\n");
    process.exit(2);
  }
  const policy = policyFromJson(readFileSync(path, "utf-8"));
  for (let s = first; s < first + count; s++) {
    const rng = RngStream.fromKeys(s, "policy-draw");
    const sequences = policy.sampleSequences(rng).map((seq) => seq.map((spec) => spec.name));
    process.stdout.write(JSON.stringify({ seed: s, sequences }) + "\n");
  }
}

main();
