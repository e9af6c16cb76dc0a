"""Golden-model simulator over the validated network.

Runs the same step contract as the core runtime but by sparse
matrix-vector accumulation straight from the adjacency lists, never
touching a memory image, so the compiler and runtime are outside its
trusted base.  Any divergence between the two paths is a bug in one of
them.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from . import rand
from .errors import InputOutOfRange, UnknownKey
from .network import LIF, SpikeRaster, ValidatedNetwork
from .runtime import RunResult, sat32


def _weight_matrix(adjacency, sources: int, targets: int) -> sparse.csr_matrix:
    """CSR of shape (targets, sources): column = presynaptic source."""
    rows, cols, vals = [], [], []
    for s, adj in enumerate(adjacency):
        for t, w in adj:
            rows.append(t)
            cols.append(s)
            vals.append(w)
    m = sparse.csr_matrix(
        (np.asarray(vals, dtype=np.int64), (rows, cols)),
        shape=(targets, sources),
        dtype=np.int64,
    )
    m.sum_duplicates()
    return m


class Oracle:
    """Reference state: membrane vector plus axon/neuron weight matrices."""

    def __init__(self, net: ValidatedNetwork, seed: int = 0):
        self.net = net
        n, a = net.num_neurons, net.num_axons
        self.axon_w = _weight_matrix(net.axon_adj, a, n)
        self.neuron_w = _weight_matrix(net.neuron_adj, n, n)

        models = [net.models[m] for m in net.neuron_model]
        self.threshold = np.array([m.threshold for m in models], dtype=np.int64)
        self.leak = np.array([m.leak for m in models], dtype=np.int64)
        self.shift = np.array([m.shift for m in models], dtype=np.int64)
        self.is_lif = np.array([m.kind == LIF for m in models], dtype=bool)
        self.lif_idx = np.nonzero(self.is_lif)[0]
        self.binary_idx = np.nonzero(~self.is_lif)[0]
        self._shift_groups = []
        if len(self.lif_idx):
            for s in sorted(set(int(x) for x in self.shift[self.lif_idx])):
                members = np.nonzero(self.shift[self.lif_idx] == s)[0]
                self._shift_groups.append((s, members))

        self.noise_state = rand.substream_states(seed, np.arange(n, dtype=np.int64))
        self.membrane = np.zeros(n, dtype=np.int32)
        self.fired_prev = np.zeros(n, dtype=np.int64)

    def membranes(self) -> dict[str, int]:
        return {k: int(self.membrane[i]) for i, k in enumerate(self.net.neuron_keys)}

    def step(self, inputs) -> np.ndarray:
        """One timestep; returns fired neuron indices (validated order)."""
        a = self.net.num_axons
        x = np.zeros(a, dtype=np.int64)
        for i in inputs:
            if not (0 <= i < a):
                raise InputOutOfRange(int(i))
            x[i] = 1

        acc = self.axon_w @ x + self.neuron_w @ self.fired_prev
        v = sat32(self.membrane.astype(np.int64) + acc)

        if len(self.lif_idx):
            sub = self.noise_state[self.lif_idx]
            samples = rand.draw17_vec(sub)
            self.noise_state[self.lif_idx] = sub
            noise_vals = np.zeros(len(self.lif_idx), dtype=np.int64)
            for shift, members in self._shift_groups:
                noise_vals[members] = rand.apply_shift_vec(samples[members], shift)
            v[self.lif_idx] = sat32(v[self.lif_idx] + noise_vals)

        fired_mask = v > self.threshold
        fired = np.nonzero(fired_mask)[0]
        v[fired] = 0
        if len(self.binary_idx):
            v[self.binary_idx] = 0
        decay_mask = self.is_lif & ~fired_mask
        if decay_mask.any():
            idx = np.nonzero(decay_mask)[0]
            vv = v[idx]
            shifts = self.leak[idx]
            v[idx] = vv - np.where(vv >= 0, vv >> shifts, -((-vv) >> shifts))

        self.membrane = v.astype(np.int32)
        self.fired_prev = np.zeros(self.net.num_neurons, dtype=np.int64)
        self.fired_prev[fired] = 1
        return fired


def oracle_run(
    net: ValidatedNetwork,
    raster: SpikeRaster,
    steps: int,
    seed: int = 0,
    collect_membranes: bool = False,
) -> RunResult:
    """Batch driver over Oracle.step with the shared output-raster contract."""
    state = Oracle(net, seed)
    out = SpikeRaster()
    traces: list[dict[str, int]] | None = [] if collect_membranes else None
    axon_of = {k: i for i, k in enumerate(net.axon_keys)}
    outputs = net.outputs
    keys = net.neuron_keys
    for t in range(steps):
        inputs = []
        for key in raster.keys_at(t):
            if key not in axon_of:
                raise UnknownKey("axon", key)
            inputs.append(axon_of[key])
        fired = state.step(sorted(inputs))
        for i in fired:
            if i in outputs:
                out.add(t, keys[i])
        if traces is not None:
            traces.append(state.membranes())
    return RunResult(
        raster=out,
        counters=None,
        per_step_accesses=[],
        final_membranes=state.membranes(),
        membrane_traces=traces,
    )
