/**
 * Deterministic splittable random streams.
 *
 * Port of the SplittableRandom generator (Steele, Lea & Flood 2014) used by
 * the Python search toolkit. The two implementations must produce identical
 * draw sequences bit for bit: state lives in 64-bit integers (BigInt here),
 * and uniform() is (next_u64() >> 11) * 2^-53, exact in IEEE-754 doubles.
 * Any change to this file breaks cross-language sequence parity.
 */

const MASK64 = (1n << 64n) - 1n;
export const GOLDEN_GAMMA = 0x9e3779b97f4a7c15n;

export function mix64(z: bigint): bigint {
  z &= MASK64;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return z ^ (z >> 31n);
}

function popcount64(z: bigint): number {
  let count = 0;
  z &= MASK64;
  while (z > 0n) {
    count += Number(z & 1n);
    z >>= 1n;
  }
  return count;
}

function mixGamma(z: bigint): bigint {
  // MurmurHash3 finalizer, forced odd; low-entropy gammas get patched
  // exactly as in SplittableRandom.
  z &= MASK64;
  z = ((z ^ (z >> 33n)) * 0xff51afd7ed558ccdn) & MASK64;
  z = ((z ^ (z >> 33n)) * 0xc4ceb9fe1a85ec53n) & MASK64;
  z = (z ^ (z >> 33n)) | 1n;
  if (popcount64(z ^ (z >> 1n)) < 24) {
    z ^= 0xaaaaaaaaaaaaaaaan;
  }
  return z & MASK64;
}

export type SeedKey = number | bigint | string;

function keyToU64(key: SeedKey): bigint {
  if (typeof key === "string") {
    const data = new TextEncoder().encode(key);
    let h = BigInt(data.length) & MASK64;
    for (let i = 0; i < data.length; i += 8) {
      let chunk = 0n;
      for (let j = 0; j < 8 && i + j < data.length; j++) {
        chunk |= BigInt(data[i + j]) << BigInt(8 * j); // little-endian fold
      }
      h = mix64(((h + GOLDEN_GAMMA) & MASK64) ^ mix64(chunk));
    }
    return h;
  }
  return BigInt(key) & MASK64;
}

/** Stable 64-bit seed from a root seed and integer/string keys. */
export function deriveSeed(rootSeed: SeedKey, ...keys: SeedKey[]): bigint {
  let s = mix64(BigInt(rootSeed) & MASK64);
  for (const k of keys) {
    s = mix64(((s + GOLDEN_GAMMA) & MASK64) ^ mix64(keyToU64(k)));
  }
  return s;
}

/** Single-owner deterministic stream; split for concurrent work. */
export class RngStream {
  private seed: bigint;
  private gamma: bigint;

  constructor(seed: bigint, gamma: bigint = GOLDEN_GAMMA) {
    this.seed = seed & MASK64;
    this.gamma = gamma;
  }

  static fromKeys(rootSeed: SeedKey, ...keys: SeedKey[]): RngStream {
    return new RngStream(deriveSeed(rootSeed, ...keys));
  }

  private nextSeed(): bigint {
    this.seed = (this.seed + this.gamma) & MASK64;
    return this.seed;
  }

  nextU64(): bigint {
    return mix64(this.nextSeed());
  }

  split(): RngStream {
    const seed = mix64(this.nextSeed());
    const gamma = mixGamma(this.nextSeed());
    return new RngStream(seed, gamma);
  }

  /** Uniform double in [0, 1) with 53 random bits. */
  uniform(): number {
    return Number(this.nextU64() >> 11n) * 2 ** -53;
  }

  uniformRange(lo: number, hi: number): number {
    return lo + this.uniform() * (hi - lo);
  }

  /** Uniform integer in [0, n). floor(u*n), clamped. */
  randbelow(n: number): number {
    if (n <= 0) {
      throw new RangeError("randbelow requires n >= 1");
    }
    const k = Math.floor(this.uniform() * n);
    return k < n ? k : n - 1;
  }

  /** Uniform integer in [lo, hi] inclusive. */
  randint(lo: number, hi: number): number {
    return lo + this.randbelow(hi - lo + 1);
  }

  /**
   * Index drawn from a normalized probability vector. Walks the cumulative
   * sum left to right; if floating-point slack leaves u past the total,
   * falls back to the last index with positive mass.
   */
  categorical(probs: readonly number[]): number {
    const u = this.uniform();
    let acc = 0.0;
    let last = -1;
    for (let i = 0; i < probs.length; i++) {
      const p = probs[i];
      if (p > 0.0) {
        last = i;
      }
      acc += p;
      if (u < acc) {
        return i;
      }
    }
    if (last < 0) {
      throw new RangeError("categorical requires some positive mass");
    }
    return last;
  }

  /** k distinct indices from range(n), partial Fisher-Yates order. */
  sampleWithoutReplacement(n: number, k: number): number[] {
    if (k < 0 || k > n) {
      throw new RangeError(`cannot draw ${k} distinct items from ${n}`);
    }
    const idx = Array.from({ length: n }, (_, i) => i);
    for (let i = 0; i < k; i++) {
      const j = i + this.randbelow(n - i);
      const tmp = idx[i];
      idx[i] = idx[j];
      idx[j] = tmp;
    }
    return idx.slice(0, k);
  }

  /** A uniform permutation of range(n). */
  shuffled(n: number): number[] {
    return this.sampleWithoutReplacement(n, n);
  }

  /** Standard normal via Box-Muller; two uniforms per pair of outputs. */
  private spareNormal: number | null = null;

  normal(): number {
    if (this.spareNormal !== null) {
      const v = this.spareNormal;
      this.spareNormal = null;
      return v;
    }
    let u1 = this.uniform();
    if (u1 <= 0) {
      u1 = 2 ** -53;
    }
    const u2 = this.uniform();
    const r = Math.sqrt(-2.0 * Math.log(u1));
    this.spareNormal = r * Math.sin(2.0 * Math.PI * u2);
    return r * Math.cos(2.0 * Math.PI * u2);
  }
}
