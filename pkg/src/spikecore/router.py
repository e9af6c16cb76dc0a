"""Multi-core execution: hierarchical spike routing between core runtimes.

Cross-core spikes are delivered as relay-axon events on the destination
core for the *next* step, exactly like a local spike's one-step delay, so
a partitioned run is spike-for-spike identical to the single-core run.
The topology level (board / server / cross-server) only affects traffic
accounting, not timing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compiler import SystemImage
from .errors import NoSuchSynapse, UnknownKey
from .memimage import FLAG_RELAY
from .network import SpikeRaster
from .runtime import AccessCounters, Core, RunResult, TrafficStats


@dataclass(frozen=True)
class RoutingTable:
    """(src core, src neuron) -> multicast list of (dst core, relay axon, level)."""

    routes: dict[tuple[int, int], tuple[tuple[int, int, int], ...]]
    cores: int

    def destinations(self, core: int, neuron: int):
        return self.routes.get((core, neuron), ())


def build_routing(system: SystemImage) -> RoutingTable:
    """Attach hierarchy levels to the compiled multicast routes."""
    topo = system.topology
    grouped: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for src_core, src_local, dst_core, relay_axon in system.routes:
        grouped.setdefault((src_core, src_local), []).append(
            (dst_core, relay_axon, topo.level(src_core, dst_core))
        )
    return RoutingTable(
        routes={k: tuple(sorted(v)) for k, v in grouped.items()},
        cores=system.cores,
    )


def exchange(
    fired_per_core: list[np.ndarray], table: RoutingTable
) -> tuple[list[set[int]], tuple[int, int, int]]:
    """Deliver fired events; returns next-step inboxes and per-level counts."""
    inboxes: list[set[int]] = [set() for _ in range(table.cores)]
    levels = [0, 0, 0]
    for core, fired in enumerate(fired_per_core):
        for neuron in fired:
            for dst_core, relay_axon, level in table.destinations(core, int(neuron)):
                inboxes[dst_core].add(relay_axon)
                levels[level] += 1
    return inboxes, (levels[0], levels[1], levels[2])


class System:
    """All cores of one compiled system stepping in lockstep."""

    def __init__(self, system: SystemImage, seed: int = 0):
        self.system = system
        self.cores = [Core(image, seed) for image in system.images]
        self.table = build_routing(system)

        # User axon key -> its replicas; relay axons are reached via routes only.
        self.axon_sites: dict[str, list[tuple[int, int]]] = {}
        self.neuron_site: dict[str, tuple[int, int]] = {}
        for core_id, image in enumerate(system.images):
            for local, key in enumerate(image.axon_keys):
                if not image.locator("axon", local).flags & FLAG_RELAY:
                    self.axon_sites.setdefault(key, []).append((core_id, local))
            for local, key in enumerate(image.neuron_keys):
                self.neuron_site[key] = (core_id, local)
        self.inboxes: list[set[int]] = [set() for _ in self.cores]
        self.traffic = TrafficStats()

    def step(self, input_keys) -> list[np.ndarray]:
        """Step every core once, then exchange spikes for the next step."""
        per_core: list[set[int]] = [set(inbox) for inbox in self.inboxes]
        for key in input_keys:
            if key not in self.axon_sites:
                raise UnknownKey("axon", key)
            for core_id, local in self.axon_sites[key]:
                per_core[core_id].add(local)

        fired = [
            core.step(sorted(per_core[i])) for i, core in enumerate(self.cores)
        ]
        self.inboxes, levels = exchange(fired, self.table)
        self.traffic.per_step_levels.append(levels)
        self.traffic.max_inbox = max(
            [self.traffic.max_inbox] + [len(b) for b in self.inboxes]
        )
        return fired

    def membranes(self) -> dict[str, int]:
        merged: dict[str, int] = {}
        for core in self.cores:
            merged.update(core.membranes())
        return merged

    def run(
        self, raster: SpikeRaster, steps: int, collect_membranes: bool = False
    ) -> RunResult:
        out = SpikeRaster()
        traces: list[dict[str, int]] | None = [] if collect_membranes else None
        for t in range(steps):
            fired = self.step(sorted(raster.keys_at(t)))
            for core_id, idx in enumerate(fired):
                core = self.cores[core_id]
                for i in idx:
                    if core.output_mask[i]:
                        out.add(t, core.image.neuron_keys[i])
            if traces is not None:
                traces.append(self.membranes())

        counters = AccessCounters()
        for core in self.cores:
            counters.add(core.counters)
        per_step = [0] * steps
        for core in self.cores:
            for t, n in enumerate(core.per_step_accesses):
                per_step[t] += n
        return RunResult(
            raster=out,
            counters=counters,
            per_step_accesses=per_step,
            final_membranes=self.membranes(),
            membrane_traces=traces,
            traffic=self.traffic,
        )

    # --- host-driven synapse access across cores -----------------------------

    def _site_of_pre(self, pre: str, post: str) -> tuple[int, str, int]:
        for core_id, core in enumerate(self.cores):
            if pre in core._axon_index:
                return core_id, "axon", core._axon_index[pre]
        if pre in self.neuron_site:
            core_id, local = self.neuron_site[pre]
            return core_id, "neuron", local
        raise NoSuchSynapse(pre, post)

    def read_synapse(self, pre: str, post: str) -> int:
        core_id, kind, local = self._site_of_pre(pre, post)
        if post not in self.neuron_site:
            raise NoSuchSynapse(pre, post)
        post_core, _ = self.neuron_site[post]
        if kind == "axon":
            # The axon replica on the target's core holds the synapse.
            for c, _local in self.axon_sites.get(pre, ()):
                if c == post_core:
                    return self.cores[c].read_synapse(pre, post)
            raise NoSuchSynapse(pre, post)
        if core_id == post_core:
            return self.cores[core_id].read_synapse(pre, post)
        relay = self._relay_key(core_id, local)
        return self.cores[post_core].read_synapse(relay, post)

    def write_synapse(self, pre: str, post: str, weight: int) -> None:
        core_id, kind, local = self._site_of_pre(pre, post)
        if post not in self.neuron_site:
            raise NoSuchSynapse(pre, post)
        post_core, _ = self.neuron_site[post]
        if kind == "axon":
            for c, _local in self.axon_sites.get(pre, ()):
                if c == post_core:
                    self.cores[c].write_synapse(pre, post, weight)
                    return
            raise NoSuchSynapse(pre, post)
        if core_id == post_core:
            self.cores[core_id].write_synapse(pre, post, weight)
            return
        relay = self._relay_key(core_id, local)
        self.cores[post_core].write_synapse(relay, post, weight)

    def _relay_key(self, src_core: int, src_local: int) -> str:
        from .compiler import RELAY_PREFIX

        g = int(self.system.images[src_core].neuron_globals[src_local])
        return f"{RELAY_PREFIX}{src_core}:{g}"


def run_system(
    system: SystemImage,
    raster: SpikeRaster,
    steps: int,
    seed: int = 0,
    collect_membranes: bool = False,
) -> RunResult:
    """Batch driver: step all cores for `steps`, merging outputs and counters."""
    return System(system, seed=seed).run(raster, steps, collect_membranes=collect_membranes)
