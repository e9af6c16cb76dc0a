"""Deterministic per-neuron noise substreams.

Every LIF neuron owns a splitmix-style 64-bit substream keyed by the run
seed and the neuron's *global* index, so the same neuron sees the same
noise no matter which core it lands on.  One 17-bit signed sample is
consumed per LIF neuron per step, even when the shift silences it.
"""

from __future__ import annotations

import numpy as np

_M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

INT32_MIN = -(1 << 31)
INT32_MAX = (1 << 31) - 1


def mix64(x: int) -> int:
    x &= _M64
    x ^= x >> 30
    x = (x * _MIX1) & _M64
    x ^= x >> 27
    x = (x * _MIX2) & _M64
    x ^= x >> 31
    return x


def substream_state(seed: int, stream: int) -> int:
    """Initial state of substream `stream` under `seed`."""
    return mix64((mix64(seed) + (stream + 1) * GOLDEN) & _M64)


def substream_states(seed: int, streams: np.ndarray) -> np.ndarray:
    """Vectorized substream_state over an array of stream ids."""
    base = np.uint64(mix64(seed))
    s = (streams.astype(np.uint64) + np.uint64(1)) * np.uint64(GOLDEN)
    return mix64_vec(base + s)


def mix64_vec(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= np.uint64(_MIX1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_MIX2)
    x ^= x >> np.uint64(31)
    return x


def draw17(state: int) -> tuple[int, int]:
    """Advance one substream; return (new_state, sample in [-2^16, 2^16-1])."""
    state = (state + GOLDEN) & _M64
    out = mix64(state)
    return state, (out & 0x1FFFF) - (1 << 16)


def draw17_vec(states: np.ndarray) -> np.ndarray:
    """Advance substreams in place; return int64 samples in [-2^16, 2^16-1]."""
    states += np.uint64(GOLDEN)
    out = mix64_vec(states)
    return (out & np.uint64(0x1FFFF)).astype(np.int64) - np.int64(1 << 16)


def apply_shift(sample: int, shift: int) -> int:
    """Scale a 17-bit sample: right shift if negative, left shift (saturating) if not."""
    if shift < 0:
        mag = -shift
        if sample >= 0:
            return sample >> mag
        return -((-sample) >> mag)
    scaled = sample << shift
    return min(max(scaled, INT32_MIN), INT32_MAX)


def apply_shift_vec(samples: np.ndarray, shift: int) -> np.ndarray:
    if shift < 0:
        mag = np.int64(-shift)
        return np.where(samples >= 0, samples >> mag, -((-samples) >> mag))
    scaled = samples << np.int64(shift)
    return np.clip(scaled, INT32_MIN, INT32_MAX)


class NoiseStream:
    """Scalar substream handle for one neuron."""

    def __init__(self, seed: int, global_index: int):
        self.state = substream_state(seed, global_index)

    def next_sample(self) -> int:
        self.state, sample = draw17(self.state)
        return sample


def noise(stream: NoiseStream, shift: int) -> int:
    """Draw one 17-bit sample from `stream` and scale it by `shift`."""
    return apply_shift(stream.next_sample(), shift)
