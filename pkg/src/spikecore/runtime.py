"""Event-driven core runtime executing directly from a memory image.

Each step runs the two-phase routing algorithm: phase one reads the
locator of every neuron that fired last step and every driven axon into a
queue; phase two reads the queued synapse rows and accumulates weights
into target membranes.  Neuron updates are bit-exact 32-bit integer
arithmetic with saturating addition, optional shifted 17-bit noise, and
truncating leak, in this fixed order: integrate, noise, strict-greater
threshold (fire resets to zero), leak on non-fired LIF neurons.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rand
from .errors import InputOutOfRange, NoSuchSynapse, UnknownKey
from .memimage import MemoryImage, SLOTS_PER_ROW
from .network import BINARY, LIF, NeuronModelSpec, SpikeRaster, WEIGHT_MAX, WEIGHT_MIN

INT32_MIN = rand.INT32_MIN
INT32_MAX = rand.INT32_MAX


def sat32(v: np.ndarray) -> np.ndarray:
    return np.clip(v, INT32_MIN, INT32_MAX)


def trunc_div_pow2(v: int, leak: int) -> int:
    """v / 2^leak truncated toward zero, for signed v."""
    if v >= 0:
        return v >> leak
    return -((-v) >> leak)


def neuron_update(
    v: int, model: NeuronModelSpec, stream: rand.NoiseStream | None = None
) -> tuple[int, bool]:
    """Scalar per-neuron update; `v` already holds this step's accumulation.

    Binary neurons threshold and reset unconditionally; LIF neurons add
    noise, fire on strict greater-than, and otherwise decay by
    v -> v - trunc(v / 2^leak).
    """
    if model.kind == BINARY:
        return 0, v > model.threshold
    if stream is not None:
        v = min(max(v + rand.noise(stream, model.shift), INT32_MIN), INT32_MAX)
    if v > model.threshold:
        return 0, True
    return v - trunc_div_pow2(v, model.leak), False


@dataclass
class AccessCounters:
    """Memory traffic tallies; energy is modeled from these."""

    locator_reads: int = 0
    synapse_row_reads: int = 0
    image_writes: int = 0

    def total(self) -> int:
        return self.locator_reads + self.synapse_row_reads + self.image_writes

    def copy(self) -> "AccessCounters":
        return AccessCounters(self.locator_reads, self.synapse_row_reads, self.image_writes)

    def add(self, other: "AccessCounters") -> None:
        self.locator_reads += other.locator_reads
        self.synapse_row_reads += other.synapse_row_reads
        self.image_writes += other.image_writes


@dataclass
class TrafficStats:
    """Cross-core event counts per hierarchy level, per step."""

    per_step_levels: list[tuple[int, int, int]] = field(default_factory=list)
    max_inbox: int = 0

    def totals(self) -> tuple[int, int, int]:
        sums = [0, 0, 0]
        for lv in self.per_step_levels:
            for i in range(3):
                sums[i] += lv[i]
        return tuple(sums)


@dataclass
class RunResult:
    raster: SpikeRaster
    counters: AccessCounters | None
    per_step_accesses: list[int]
    final_membranes: dict[str, int]
    membrane_traces: list[dict[str, int]] | None = None
    traffic: TrafficStats | None = None


class Core:
    """Single-owner runtime state for one core's memory image."""

    def __init__(self, image: MemoryImage, seed: int = 0):
        self.image = image
        self.seed = seed
        n = image.num_neurons
        self._flat = image.syn_rows.reshape(-1)

        self._axon_index = {k: i for i, k in enumerate(image.axon_keys)}
        self._neuron_index = {k: i for i, k in enumerate(image.neuron_keys)}

        # Per-neuron model parameters, local order.
        model_ids = [image.locator("neuron", i).model_id for i in range(n)]
        self.threshold = np.array(
            [image.models[m].threshold for m in model_ids], dtype=np.int64
        )
        self.leak = np.array([image.models[m].leak for m in model_ids], dtype=np.int64)
        self.shift = np.array([image.models[m].shift for m in model_ids], dtype=np.int64)
        self.is_lif = np.array(
            [image.models[m].kind == LIF for m in model_ids], dtype=bool
        )
        self.lif_idx = np.nonzero(self.is_lif)[0]
        self.binary_idx = np.nonzero(~self.is_lif)[0]
        self._shift_groups = []
        if len(self.lif_idx):
            for s in sorted(set(int(x) for x in self.shift[self.lif_idx])):
                members = np.nonzero(self.shift[self.lif_idx] == s)[0]
                self._shift_groups.append((s, members))

        # Noise substreams are keyed by global neuron index so partitioning
        # does not change any neuron's noise.
        self.noise_state = rand.substream_states(
            seed, image.neuron_globals.astype(np.int64)
        )

        # Precompute per-source entry slot ids (row-major) and row counts.
        def source_tables(kind: str, count: int):
            ids, ptr, rows = [], [0], np.zeros(count, dtype=np.int64)
            for i in range(count):
                sid = image.entry_slot_ids(kind, i)
                ids.append(sid)
                ptr.append(ptr[-1] + len(sid))
                rows[i] = image.locator(kind, i).row_count
            flat_ids = np.concatenate(ids) if ids else np.empty(0, dtype=np.int64)
            return flat_ids, np.asarray(ptr, dtype=np.int64), rows

        self._axon_ids, self._axon_ptr, self._axon_rows = source_tables(
            "axon", image.num_axons
        )
        self._neuron_ids, self._neuron_ptr, self._neuron_rows = source_tables(
            "neuron", n
        )

        out = image.output_neurons()
        self.output_mask = np.zeros(n, dtype=bool)
        for i in out:
            self.output_mask[i] = True

        self.membrane = np.zeros(n, dtype=np.int32)
        self.fired_prev = np.empty(0, dtype=np.int64)
        self.counters = AccessCounters()
        self.per_step_accesses: list[int] = []

    @property
    def num_neurons(self) -> int:
        return self.image.num_neurons

    @property
    def num_axons(self) -> int:
        return self.image.num_axons

    def axon_id(self, key: str) -> int:
        try:
            return self._axon_index[key]
        except KeyError:
            raise UnknownKey("axon", key) from None

    def membranes(self) -> dict[str, int]:
        return {k: int(self.membrane[i]) for i, k in enumerate(self.image.neuron_keys)}

    # --- stepping -----------------------------------------------------------

    def step(self, inputs) -> np.ndarray:
        """Advance one timestep; returns fired local neuron indices (sorted)."""
        axon_in = sorted(set(int(i) for i in inputs))
        for i in axon_in:
            if not (0 <= i < self.num_axons):
                raise InputOutOfRange(i)

        before = self.counters.locator_reads + self.counters.synapse_row_reads

        # Phase 1: gather locators of last step's fired neurons and driven axons.
        slices = []
        rows_read = 0
        for nidx in self.fired_prev:
            slices.append(self._neuron_ids[self._neuron_ptr[nidx] : self._neuron_ptr[nidx + 1]])
            rows_read += int(self._neuron_rows[nidx])
        for aidx in axon_in:
            slices.append(self._axon_ids[self._axon_ptr[aidx] : self._axon_ptr[aidx + 1]])
            rows_read += int(self._axon_rows[aidx])
        self.counters.locator_reads += len(self.fired_prev) + len(axon_in)

        # Phase 2: read the queued synapse rows, accumulate into targets.
        n = self.num_neurons
        acc = np.zeros(n, dtype=np.int64)
        self.counters.synapse_row_reads += rows_read
        if slices:
            ids = np.concatenate(slices)
            if len(ids):
                words = self._flat[ids]
                valid = (words >> np.uint64(63)) != 0
                words = words[valid]
                targets = ((words >> np.uint64(16)) & np.uint64(0xFFFFFF)).astype(np.int64)
                weights = (words & np.uint64(0xFFFF)).astype(np.int64)
                weights -= (weights >> 15) << 16  # sign-extend 16-bit
                in_range = targets < n  # padding filler may name lane ids beyond N
                np.add.at(acc, targets[in_range], weights[in_range])

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
            dec = np.where(vv >= 0, vv >> shifts, -((-vv) >> shifts))
            v[idx] = vv - dec

        self.membrane = v.astype(np.int32)
        self.fired_prev = fired
        after = self.counters.locator_reads + self.counters.synapse_row_reads
        self.per_step_accesses.append(after - before)
        return fired

    def run(
        self, raster: SpikeRaster, steps: int, collect_membranes: bool = False
    ) -> RunResult:
        out = SpikeRaster()
        traces: list[dict[str, int]] | None = [] if collect_membranes else None
        keys = self.image.neuron_keys
        for t in range(steps):
            inputs = sorted(self.axon_id(k) for k in raster.keys_at(t))
            fired = self.step(inputs)
            for i in fired:
                if self.output_mask[i]:
                    out.add(t, keys[i])
            if traces is not None:
                traces.append(self.membranes())
        return RunResult(
            raster=out,
            counters=self.counters.copy(),
            per_step_accesses=list(self.per_step_accesses),
            final_membranes=self.membranes(),
            membrane_traces=traces,
        )

    # --- host-driven synapse access ------------------------------------------

    def _resolve_source(self, pre: str, post: str) -> tuple[str, int]:
        if pre in self._axon_index:
            return "axon", self._axon_index[pre]
        if pre in self._neuron_index:
            return "neuron", self._neuron_index[pre]
        raise NoSuchSynapse(pre, post)

    def _scan(self, pre: str, post: str) -> int:
        """Locate the first entry for (pre, post); returns the slot id.

        Charges synapse_row_reads for every region row up to and including
        the row where the entry was found (whole region on a miss).
        """
        kind, src = self._resolve_source(pre, post)
        if post not in self._neuron_index:
            raise NoSuchSynapse(pre, post)
        target = self._neuron_index[post]
        loc = self.image.locator(kind, src)
        if loc.is_padding or loc.row_count == 0:
            raise NoSuchSynapse(pre, post)
        if kind == "axon":
            ids = self._axon_ids[self._axon_ptr[src] : self._axon_ptr[src + 1]]
        else:
            ids = self._neuron_ids[self._neuron_ptr[src] : self._neuron_ptr[src + 1]]
        for sid in ids:
            word = int(self._flat[sid])
            if (word >> 16) & 0xFFFFFF == target:
                rows_scanned = sid // SLOTS_PER_ROW - loc.base_row + 1
                self.counters.synapse_row_reads += int(rows_scanned)
                return int(sid)
        self.counters.synapse_row_reads += loc.row_count
        raise NoSuchSynapse(pre, post)

    def read_synapse(self, pre: str, post: str) -> int:
        sid = self._scan(pre, post)
        weight = int(self._flat[sid]) & 0xFFFF
        return weight - (1 << 16) if weight >= 1 << 15 else weight

    def write_synapse(self, pre: str, post: str, weight: int) -> None:
        if not (WEIGHT_MIN <= weight <= WEIGHT_MAX):
            raise ValueError(f"weight {weight} does not fit in 16 bits")
        sid = self._scan(pre, post)
        word = int(self._flat[sid])
        self._flat[sid] = np.uint64((word & ~0xFFFF) | (weight & 0xFFFF))
        self.counters.image_writes += 1
