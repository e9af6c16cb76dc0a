"""Pure-Python simulation backend.

Self-contained stand-in used when the native engine package is not
installed.  Implements the identical step contract: integer accumulation
with 32-bit saturation, per-neuron noise substreams keyed by (seed,
sorted-key index), strict-greater threshold with reset, truncating leak,
binary statelessness, and the one-step spike delay.
"""

from __future__ import annotations

INT32_MIN = -(1 << 31)
INT32_MAX = (1 << 31) - 1

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64(x: int) -> int:
    x &= _M64
    x ^= x >> 30
    x = (x * _MIX1) & _M64
    x ^= x >> 27
    x = (x * _MIX2) & _M64
    x ^= x >> 31
    return x


def _sat32(v: int) -> int:
    return min(max(v, INT32_MIN), INT32_MAX)


def _apply_shift(sample: int, shift: int) -> int:
    if shift < 0:
        mag = -shift
        return sample >> mag if sample >= 0 else -((-sample) >> mag)
    return _sat32(sample << shift)


class FallbackBackend:
    def __init__(self, build, seed: int):
        self.build = build
        self.membrane = {k: 0 for k in build.neuron_keys}
        self.fired_prev: set[str] = set()
        # Substreams hang off the sorted-key index, matching the engine.
        base = _mix64(seed)
        self._state = {
            k: _mix64((base + (i + 1) * _GOLDEN) & _M64)
            for i, k in enumerate(build.neuron_keys)
        }

    def _noise(self, key: str, shift: int) -> int:
        state = (self._state[key] + _GOLDEN) & _M64
        self._state[key] = state
        sample = (_mix64(state) & 0x1FFFF) - (1 << 16)
        return _apply_shift(sample, shift)

    def step(self, inputs: set[str]) -> tuple[list[str], dict[str, int]]:
        build = self.build
        acc = {k: 0 for k in build.neuron_keys}
        for key in self.fired_prev:
            for target, w in build.neuron_adj[key]:
                acc[target] += w
        for key in inputs:
            for target, w in build.axon_adj[key]:
                acc[target] += w

        fired_now: set[str] = set()
        for key in build.neuron_keys:
            model = build.model_of[key]
            v = _sat32(self.membrane[key] + acc[key])
            kind, threshold, shift, leak = model
            if kind == "binary":
                if v > threshold:
                    fired_now.add(key)
                v = 0
            else:
                v = _sat32(v + self._noise(key, shift))
                if v > threshold:
                    fired_now.add(key)
                    v = 0
                else:
                    v = v - (v >> leak if v >= 0 else -((-v) >> leak))
            self.membrane[key] = v

        self.fired_prev = fired_now
        spiked = sorted(fired_now & build.outputs)
        return spiked, dict(self.membrane)

    def membranes(self) -> dict[str, int]:
        return dict(self.membrane)

    def read_synapse(self, pre: str, post: str) -> int:
        adj = self.build.adjacency_of(pre, post)
        for target, w in adj:
            if target == post:
                return w
        raise KeyError((pre, post))

    def write_synapse(self, pre: str, post: str, weight: int) -> None:
        adj = self.build.adjacency_of(pre, post)
        for i, (target, w) in enumerate(adj):
            if target == post:
                adj[i] = (target, weight)
                return
        raise KeyError((pre, post))
