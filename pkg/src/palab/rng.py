"""Counter-based random numbers.

Every draw is a pure function of an integer key tuple, e.g.
``(seed, replica, stream, round, draw_index)``, so any single round of a
simulation can be replayed in isolation and results never depend on how
replicas are scheduled across workers.

The mixer is splitmix64's finalizer applied once per key component. The
scalar path (plain ints) and the vectorized path (numpy uint64, which wraps
modulo 2**64) produce bit-identical outputs.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TO_UNIT = 2.0 ** -53

# stream ids used by the simulator; learners use LEARNER_STREAM + context
ENV_STREAM = 1
AGENT_STREAM = 2
LEARNER_STREAM = 1000


def _mix(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def hash_key(*parts: int) -> int:
    h = 0
    for p in parts:
        h = _mix(h ^ (int(p) & MASK64))
    return h


def uniform(*parts: int) -> float:
    """Uniform draw in [0, 1) for one key."""
    return (hash_key(*parts) >> 11) * _TO_UNIT


def _mix_vec(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = z + np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def uniform_array(*parts) -> np.ndarray:
    """Vectorized :func:`uniform`; any part may be an integer array.

    Arrays broadcast against each other, so ``uniform_array(seed, rep,
    ENV_STREAM, np.arange(T), 0)`` gives the draw-0 uniforms of rounds
    0..T-1, identical to calling :func:`uniform` round by round.
    """
    arrays = [np.asarray(int(p) & MASK64, dtype=np.uint64) if np.ndim(p) == 0
              else np.asarray(p, dtype=np.int64).astype(np.uint64) for p in parts]
    h = np.zeros(np.broadcast_shapes(*(a.shape for a in arrays)), dtype=np.uint64)
    for a in arrays:
        h = _mix_vec(h ^ a)
    return (h >> np.uint64(11)).astype(np.float64) * _TO_UNIT


class CounterRNG:
    """Sequential view of a counter-based stream.

    Draw ``k`` of stream ``key`` is ``uniform(*key, k)``; the object only
    remembers how many draws were consumed.
    """

    __slots__ = ("key", "counter", "_base")

    def __init__(self, *key: int):
        self.key = tuple(int(k) for k in key)
        self.counter = 0
        self._base = hash_key(*self.key)

    def random(self) -> float:
        h = _mix(self._base ^ self.counter)
        self.counter += 1
        return (h >> 11) * _TO_UNIT

    def choice(self, probs) -> int:
        """Sample an index from a probability vector by inversion."""
        u = self.random()
        acc = 0.0
        last = len(probs) - 1
        for i, p in enumerate(probs):
            acc += p
            if u < acc:
                return i
        # rounding left u above the running total; take the last positive entry
        for i in range(last, -1, -1):
            if probs[i] > 0:
                return i
        return last

    def randbelow(self, n: int) -> int:
        return min(int(self.random() * n), n - 1)
