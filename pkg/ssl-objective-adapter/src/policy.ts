/**
 * Group-structured augmentation policy, mirroring the search toolkit's
 * policy engine. Sequence sampling must match the sibling implementation
 * draw for draw: per sequence, one categorical uniform picks the group,
 * then one uniform per without-replacement member pick (even for the
 * forced last pick). Kernel parameter draws are NOT part of the parity
 * contract; only sequence identity is.
 */

import { RngStream } from "./rng.js";

export class DegenerateConfigError extends Error {}
export class ValidationError extends Error {}

export interface AugmentationSpec {
  name: string;
  params: Record<string, number>;
}

export interface AugmentationGroup {
  id: string;
  members: AugmentationSpec[];
}

export const GROUP_ORDER = [
  "color",
  "geometric",
  "non_rigid",
  "quality",
  "exotic",
] as const;

/** Fixed member order matches the sibling registry; changing it breaks parity. */
const CATALOG_MEMBERS: Record<string, [string, Record<string, number>][]> = {
  color: [
    ["color_jitter", { brightness: 0.4, contrast: 0.4, saturation: 0.4, hue: 0.1 }],
    ["to_gray", {}],
    ["solarize", { threshold: 128 }],
    ["equalize", {}],
    ["channel_shuffle", {}],
  ],
  geometric: [
    ["shift_scale_rotate", { shift_limit: 0.0625, scale_limit: 0.1, rotate_limit: 45 }],
    ["horizontal_flip", {}],
  ],
  non_rigid: [
    ["elastic", { alpha: 1.0, sigma: 50.0, alpha_affine: 50.0 }],
    ["grid_distortion", { num_steps: 5, distort_limit: 0.3 }],
    ["optical_distortion", { distort_limit: 0.05, shift_limit: 0.05 }],
  ],
  quality: [
    ["gaussian_blur", { sigma_lo: 0.1, sigma_hi: 2.0 }],
    ["gauss_noise", { var_lo: 10.0, var_hi: 50.0 }],
  ],
  exotic: [
    ["random_grid_shuffle", { grid: 2 }],
    ["cutout", { num_holes: 1, max_h_frac: 0.25, max_w_frac: 0.25 }],
  ],
};

export function defaultCatalog(): AugmentationGroup[] {
  return GROUP_ORDER.map((gid) => ({
    id: gid,
    members: CATALOG_MEMBERS[gid].map(([name, params]) => ({ name, params: { ...params } })),
  }));
}

/** Scale nonnegative weights to sum to 1, preserving order and ratios. */
export function normalizeProbs(raw: readonly number[]): number[] {
  for (const p of raw) {
    if (!(p >= 0)) {
      throw new ValidationError(`negative weight in [${raw.join(", ")}]`);
    }
  }
  let total = 0.0;
  for (const p of raw) {
    total += p;
  }
  if (total <= 0.0) {
    throw new DegenerateConfigError("all group probabilities are zero; nothing can be sampled");
  }
  return raw.map((p) => p / total);
}

export class GroupAugmentPolicy {
  readonly groups: AugmentationGroup[];
  readonly probs: number[];
  readonly counts: number[];
  readonly total: number;

  constructor(
    probs: readonly number[],
    counts: readonly number[],
    total: number,
    groups?: AugmentationGroup[],
  ) {
    this.groups = groups ?? defaultCatalog();
    this.probs = normalizeProbs(probs);
    this.counts = counts.map((c) => Math.trunc(c));
    this.total = Math.trunc(total);
    if (this.groups.length !== this.probs.length || this.probs.length !== this.counts.length) {
      throw new ValidationError(
        `groups/probs/counts lengths differ: ${this.groups.length}/${this.probs.length}/${this.counts.length}`,
      );
    }
    if (this.total < 1) {
      throw new ValidationError(`total sequence count must be >= 1, got ${total}`);
    }
    for (let g = 0; g < this.groups.length; g++) {
      if (this.counts[g] < 1) {
        throw new ValidationError(
          `draw count for group '${this.groups[g].id}' must be >= 1, got ${this.counts[g]}`,
        );
      }
      if (this.counts[g] > this.groups[g].members.length) {
        throw new ValidationError(
          `draw count ${this.counts[g]} exceeds group '${this.groups[g].id}' size ${this.groups[g].members.length}`,
        );
      }
    }
  }

  sampleSequences(rng: RngStream): AugmentationSpec[][] {
    const sequences: AugmentationSpec[][] = [];
    for (let t = 0; t < this.total; t++) {
      const g = rng.categorical(this.probs);
      const group = this.groups[g];
      const picks = rng.sampleWithoutReplacement(group.members.length, this.counts[g]);
      sequences.push(picks.map((i) => group.members[i]));
    }
    return sequences;
  }
}

/** Build the policy from a group_augment search-space configuration. */
export function policyFromValues(values: Record<string, unknown>): GroupAugmentPolicy {
  const probs: number[] = [];
  const counts: number[] = [];
  for (const gid of GROUP_ORDER) {
    probs.push(requireNumber(values, `p_${gid}_transformations`));
    counts.push(requireNumber(values, `num_${gid}_transformations`));
  }
  return new GroupAugmentPolicy(probs, counts, requireNumber(values, "num_total_group_samples"));
}

function requireNumber(values: Record<string, unknown>, key: string): number {
  const v = values[key];
  if (typeof v !== "number" || Number.isNaN(v)) {
    throw new ValidationError(`values needs numeric '${key}'`);
  }
  return v;
}

interface PolicyDoc {
  kind?: unknown;
  probs?: unknown;
  counts?: unknown;
  total?: unknown;
  groups?: unknown;
}

/** Parse the serialized policy envelope (group_augment kind only). */
export function policyFromJson(text: string): GroupAugmentPolicy {
  let doc: PolicyDoc;
  try {
    doc = JSON.parse(text) as PolicyDoc;
  } catch (err) {
    throw new ValidationError(`policy is not valid JSON: ${String(err)}`);
  }
  if (doc === null || typeof doc !== "object") {
    throw new ValidationError("policy document must be an object");
  }
  if (doc.kind !== "group_augment") {
    throw new ValidationError(`unsupported policy kind ${JSON.stringify(doc.kind)}`);
  }
  const probs = numberArray(doc.probs, "probs");
  const counts = numberArray(doc.counts, "counts");
  if (typeof doc.total !== "number") {
    throw new ValidationError("policy needs a numeric total");
  }
  let groups: AugmentationGroup[] | undefined;
  if (doc.groups !== undefined) {
    if (!Array.isArray(doc.groups)) {
      throw new ValidationError("groups must be an array");
    }
    groups = doc.groups.map((g) => parseGroup(g));
  }
  return new GroupAugmentPolicy(probs, counts, doc.total, groups);
}

function numberArray(v: unknown, label: string): number[] {
  if (!Array.isArray(v) || v.some((x) => typeof x !== "number")) {
    throw new ValidationError(`policy needs a numeric array '${label}'`);
  }
  return v as number[];
}

function parseGroup(g: unknown): AugmentationGroup {
  if (g === null || typeof g !== "object") {
    throw new ValidationError("group entries must be objects");
  }
  const doc = g as { id?: unknown; members?: unknown };
  if (typeof doc.id !== "string" || !Array.isArray(doc.members)) {
    throw new ValidationError("group entries need an id and a members array");
  }
  const members = doc.members.map((m) => {
    const spec = m as { name?: unknown; params?: unknown };
    if (spec === null || typeof spec !== "object" || typeof spec.name !== "string") {
      throw new ValidationError("group members need a name");
    }
    const params = (spec.params ?? {}) as Record<string, number>;
    return { name: spec.name, params: { ...params } };
  });
  return { id: doc.id, members };
}
