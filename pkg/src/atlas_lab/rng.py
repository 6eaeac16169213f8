"""Seeded, splittable noise streams.

Every stochastic routine in this package draws from a :class:`NoiseStream`.
A stream is addressed by a 64-bit seed plus a tuple key; child streams extend
the key, so the same (seed, key) always replays the same draws no matter which
run requested them.  That addressing is what makes synchronous couplings and
truncation-doubling comparisons possible: two runs that ask for the stream of
rank ``r`` under the same root seed receive bit-identical Gaussian increments.

Exponential variates are produced by inverting the CDF on uniform draws
rather than by ``Generator.exponential``; the inverse-CDF path keeps coupled
samplers monotone in the underlying uniforms and is stable across numpy
versions in the sense that it only consumes ``random()`` output.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = ["NoiseStream"]


class NoiseStream:
    """A deterministic, splittable source of Gaussian and uniform draws.

    Parameters
    ----------
    seed:
        Root entropy, any Python int (64-bit range recommended).
    key:
        Tuple of non-negative ints addressing this stream under the root
        seed.  The root stream has ``key=()``; children append components.

    Two streams with the same ``(seed, key)`` produce identical draw
    sequences.  Streams with different keys are statistically independent
    (numpy ``SeedSequence`` spawn-key guarantees).
    """

    __slots__ = ("seed", "key", "position", "_gen")

    def __init__(self, seed: int, key: Sequence[int] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        if any(k < 0 for k in self.key):
            raise ValueError("stream key components must be non-negative")
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self.position = 0

    @property
    def stream_id(self) -> tuple[int, ...]:
        """Splitting key of this stream (empty tuple for the root)."""
        return self.key

    def child(self, *ids: int) -> "NoiseStream":
        """Return the stream addressed by appending ``ids`` to this key.

        Deterministic: the child's draws depend only on (seed, full key),
        not on the parent's consumption position.
        """
        return NoiseStream(self.seed, self.key + ids)

    def normals(self, shape) -> np.ndarray:
        """Standard normal draws of the given shape."""
        out = self._gen.standard_normal(shape)
        self.position += out.size
        return out

    def uniforms(self, shape) -> np.ndarray:
        """Uniform [0, 1) draws of the given shape."""
        out = self._gen.random(shape)
        self.position += out.size
        return out

    def exponentials(self, rates) -> np.ndarray:
        """One exponential draw per entry of ``rates`` via inverse CDF.

        rates must be strictly positive; entry i has mean 1/rates[i].
        """
        rates = np.asarray(rates, dtype=float)
        if np.any(rates <= 0.0):
            raise ValueError("exponential rates must be strictly positive")
        u = self.uniforms(rates.shape)
        # -log1p(-u) is exact for u near 0 and never hits log(0) since u < 1.
        return -np.log1p(-u) / rates

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"NoiseStream(seed={self.seed}, key={self.key}, position={self.position})"
