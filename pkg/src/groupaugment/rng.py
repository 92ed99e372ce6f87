"""Deterministic, splittable random streams.

Every sampling decision in this package draws from an :class:`RngStream`, a
faithful port of the SplittableRandom generator (Steele, Lea & Flood 2014;
the algorithm behind ``java.util.SplittableRandom``).  The algorithm is part
of this package's reproducibility contract and must never change silently:

* state advances by a per-stream odd increment (``gamma``), outputs are the
  SplitMix64 finalizer of the state,
* ``split()`` consumes two outputs of the parent and yields a statistically
  independent child stream,
* ``uniform()`` is ``(next_u64() >> 11) * 2**-53``, exact in IEEE-754
  doubles, so any language with 64-bit integers and doubles reproduces the
  exact same draw sequence (the sibling evaluator implementation relies on
  this).

Bulk array draws (noise fields and the like) go through
:meth:`RngStream.numpy_rng`, which seeds a NumPy ``Generator`` from the next
output; those draws are deterministic within this package but are not part
of the cross-implementation contract.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 output scrambler (Stafford's Mix13 variant)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix_gamma(z: int) -> int:
    # MurmurHash3 finalizer, forced odd; low-entropy gammas get patched
    # exactly as in SplittableRandom.
    z &= _MASK64
    z = ((z ^ (z >> 33)) * 0xFF51AFD7ED558CCD) & _MASK64
    z = ((z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53) & _MASK64
    z = (z ^ (z >> 33)) | 1
    if bin(z ^ (z >> 1)).count("1") < 24:
        z ^= 0xAAAAAAAAAAAAAAAA
    return z & _MASK64


def _key_to_u64(key) -> int:
    """Fold an integer or string key into 64 bits, stable across runs."""
    if isinstance(key, str):
        data = key.encode("utf-8")
        h = len(data) & _MASK64
        for i in range(0, len(data), 8):
            chunk = int.from_bytes(data[i : i + 8], "little")
            h = mix64(((h + GOLDEN_GAMMA) & _MASK64) ^ mix64(chunk))
        return h
    return key & _MASK64


def derive_seed(root_seed: int, *keys) -> int:
    """Derive a stable 64-bit seed from a root seed and integer/string keys.

    Used to hand independent streams to keyed subtasks (one per trial id,
    per repeat, ...) without consuming the root stream, so replaying or
    resuming a run regenerates the same per-task streams.
    """
    s = mix64(root_seed & _MASK64)
    for k in keys:
        s = mix64((s + GOLDEN_GAMMA) ^ mix64(_key_to_u64(k)))
    return s


class RngStream:
    """Single-owner deterministic stream; split for concurrent work."""

    __slots__ = ("_seed", "_gamma")

    def __init__(self, seed: int, _gamma: int = GOLDEN_GAMMA):
        self._seed = seed & _MASK64
        self._gamma = _gamma

    @classmethod
    def from_keys(cls, root_seed: int, *keys) -> "RngStream":
        return cls(derive_seed(root_seed, *keys))

    def _next_seed(self) -> int:
        self._seed = (self._seed + self._gamma) & _MASK64
        return self._seed

    def next_u64(self) -> int:
        return mix64(self._next_seed())

    def split(self) -> "RngStream":
        """Child stream; deterministic given the parent's position."""
        seed = mix64(self._next_seed())
        gamma = _mix_gamma(self._next_seed())
        return RngStream(seed, gamma)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + self.uniform() * (hi - lo)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n). ``floor(u*n)``, clamped."""
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        k = int(self.uniform() * n)
        return k if k < n else n - 1

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + self.randbelow(hi - lo + 1)

    def categorical(self, probs) -> int:
        """Index drawn from a normalized probability vector.

        Walks the cumulative sum left to right; if floating-point slack
        leaves ``u`` past the total, falls back to the last index with
        positive mass.
        """
        u = self.uniform()
        acc = 0.0
        last = -1
        for i, p in enumerate(probs):
            if p > 0.0:
                last = i
            acc += p
            if u < acc:
                return i
        if last < 0:
            raise ValueError("categorical requires some positive mass")
        return last

    def sample_without_replacement(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), partial Fisher-Yates order."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} distinct items from {n}")
        idx = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:k]

    def shuffled(self, n: int) -> list[int]:
        """A uniform permutation of range(n)."""
        return self.sample_without_replacement(n, n)

    def numpy_rng(self) -> np.random.Generator:
        """NumPy Generator for bulk draws, seeded from this stream."""
        return np.random.Generator(np.random.PCG64(self.next_u64()))
