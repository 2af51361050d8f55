"""Portable, seedable uniform source.

The generator is SplitMix64 (Steele, Lea & Flood 2014): the state is a 64-bit
Weyl counter advanced by ``GOLDEN`` on every draw and each output is a fixed
bit-mixing of the new state.  A uniform in [0, 1) is the top 53 bits of the
output times 2**-53, and ``bernoulli(q)`` is ``uniform() < q``.  Everything is
plain 64-bit integer arithmetic, so sequences are bit-identical on every
platform.

Row streams
-----------
Batch generation gives row ``r`` of a run with seed ``s`` its own stream whose
seed is ``child_seed(s, r) = mix64(s + (r + 1) * GOLDEN)``, i.e. the ``r``-th
output of the parent stream.  Rows therefore do not depend on generation order.
"""

from __future__ import annotations

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0

_G = np.uint64(GOLDEN)
_M1 = np.uint64(_MIX1)
_M2 = np.uint64(_MIX2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def child_seed(seed: int, row: int) -> int:
    return mix64((seed + (row + 1) * GOLDEN) & MASK64)


class RandomStream:
    """Single-owner SplitMix64 stream.  Not safe to share between threads."""

    __slots__ = ("seed", "state")

    def __init__(self, seed: int):
        if not 0 <= int(seed) <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = int(seed)
        self.state = int(seed)

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV_2_53

    def bernoulli(self, q: float) -> int:
        return 1 if self.uniform() < q else 0

    def uniforms(self, size: int) -> np.ndarray:
        """``size`` consecutive uniforms, advancing the stream accordingly."""
        out = np.empty(int(size), dtype=np.float64)
        self.state = int(_fill_uniforms(np.uint64(self.state), out))
        return out

    def bernoullis(self, q: float, size: int) -> np.ndarray:
        return (self.uniforms(size) < q).astype(np.uint8)

    def child(self, row: int) -> "RandomStream":
        return RandomStream(child_seed(self.seed, row))

    def draws_since(self, state0: int) -> int:
        """Number of draws taken between ``state0`` and the current state."""
        return ((self.state - state0) * pow(GOLDEN, -1, 1 << 64)) & MASK64

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed})"


def new_stream(seed: int) -> RandomStream:
    return RandomStream(seed)


# ---------------------------------------------------------------------------
# numba kernels; keep bit-for-bit in step with the Python methods above


@numba.njit(inline="always", cache=True)
def nb_mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(inline="always", cache=True)
def nb_uniform(state):
    """Advance ``state`` once; return (new_state, uniform)."""
    state = state + _G
    return state, (nb_mix64(state) >> _S11) * _INV_2_53


@numba.njit(inline="always", cache=True)
def nb_child_seed(seed, row):
    return nb_mix64(seed + (np.uint64(row) + np.uint64(1)) * _G)


@numba.njit(cache=True)
def _fill_uniforms(state, out):
    for i in range(out.size):
        state, out[i] = nb_uniform(state)
    return state
