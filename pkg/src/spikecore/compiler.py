"""Network partitioning and memory-image compilation.

Pipeline per core: collect the core's sources (user axons, relay axons
standing in for remote neurons, local neurons), assign local neuron
indices grouped by model and balanced across the 16 slot columns, derive
per-source column demand profiles, pack them into the synapse region with
first-fit-decreasing segment sharing, then write slots and locators.
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import (
    CapacityExceeded,
    ImageFormatError,
    SchemaError,
    SynapseRegionOverflow,
    TopologyMismatch,
)
from .memimage import (
    FLAG_PADDING,
    FLAG_RELAY,
    MAX_ROW_COUNT,
    ROWS_PER_SEGMENT,
    SLOTS_PER_ROW,
    SLOTS_PER_SEGMENT,
    MemoryGeometry,
    MemoryImage,
    axon_locator_rows,
    emit_image,
    encode_locator,
    encode_synapse,
    load_image,
    neuron_locator_rows,
    profile_slot_ids,
)
from .network import ValidatedNetwork

RELAY_PREFIX = "~relay:"


@dataclass(frozen=True)
class Topology:
    """Routing hierarchy shape: cores per board, boards per server, servers."""

    cores_per_board: int = 32
    boards_per_server: int = 8
    servers: int = 5

    def capacity(self) -> int:
        return self.cores_per_board * self.boards_per_server * self.servers

    def level(self, core_a: int, core_b: int) -> int:
        """0 same board, 1 same server, 2 cross server."""
        board_a, board_b = core_a // self.cores_per_board, core_b // self.cores_per_board
        if board_a == board_b:
            return 0
        if board_a // self.boards_per_server == board_b // self.boards_per_server:
            return 1
        return 2

    def check(self, cores: int) -> None:
        if cores > self.capacity():
            raise TopologyMismatch(
                f"{cores} cores exceed topology capacity {self.capacity()}"
            )


@dataclass(frozen=True)
class Placement:
    """Core assignment for every neuron and axon, plus the cross-core edges."""

    cores: int
    capacity: int
    neuron_core: tuple[int, ...]
    core_neurons: tuple[tuple[int, ...], ...]
    axon_replicas: tuple[tuple[int, ...], ...]
    # (src_core, src_neuron, dst_core, dst_neuron, weight), neuron ids global.
    cross_edges: tuple[tuple[int, int, int, int, int], ...]


def partition(net: ValidatedNetwork, cores: int, capacity: int) -> Placement:
    """Contiguous-block greedy placement by validated neuron index."""
    if cores < 1:
        raise ValueError("cores must be >= 1")
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    n = net.num_neurons
    if n > cores * capacity:
        raise CapacityExceeded(n, cores * capacity)

    neuron_core = tuple(i // capacity for i in range(n))
    core_neurons: list[list[int]] = [[] for _ in range(cores)]
    for i, c in enumerate(neuron_core):
        core_neurons[c].append(i)

    axon_replicas = []
    for adj in net.axon_adj:
        targets = sorted({neuron_core[t] for t, _ in adj})
        axon_replicas.append(tuple(targets) if targets else (0,))

    cross = []
    for s in range(n):
        src_core = neuron_core[s]
        for t, w in net.neuron_adj[s]:
            if neuron_core[t] != src_core:
                cross.append((src_core, s, neuron_core[t], t, w))

    return Placement(
        cores=cores,
        capacity=capacity,
        neuron_core=neuron_core,
        core_neurons=tuple(tuple(v) for v in core_neurons),
        axon_replicas=tuple(axon_replicas),
        cross_edges=tuple(cross),
    )


@dataclass(frozen=True)
class CoreNet:
    """One core's slice of the network, targets still in global neuron ids."""

    core_id: int
    models: tuple
    neuron_globals: tuple[int, ...]
    neuron_keys: tuple[str, ...]
    neuron_models: tuple[int, ...]
    neuron_adj: tuple[tuple[tuple[int, int], ...], ...]
    axon_keys: tuple[str, ...]
    axon_relay: tuple[bool, ...]
    axon_adj: tuple[tuple[tuple[int, int], ...], ...]
    outputs: frozenset[int]


@dataclass(frozen=True)
class CorePartition:
    """Compiled view of a core in local index space; ground truth for checks."""

    core_id: int
    axon_keys: tuple[str, ...]
    axon_relay: tuple[bool, ...]
    axon_adj: tuple[tuple[tuple[int, int], ...], ...]
    neuron_keys: tuple[str, ...]
    neuron_globals: tuple[int, ...]
    neuron_models: tuple[int, ...]
    neuron_adj: tuple[tuple[tuple[int, int], ...], ...]
    outputs: frozenset[int]


def _core_net(net: ValidatedNetwork, placement: Placement, core_id: int) -> CoreNet:
    globals_here = placement.core_neurons[core_id]
    here = set(globals_here)

    neuron_adj = tuple(
        tuple((t, w) for t, w in net.neuron_adj[g] if t in here) for g in globals_here
    )

    axon_keys: list[str] = []
    axon_relay: list[bool] = []
    axon_adj: list[tuple[tuple[int, int], ...]] = []
    for a, key in enumerate(net.axon_keys):
        if core_id in placement.axon_replicas[a]:
            local = tuple((t, w) for t, w in net.axon_adj[a] if t in here)
            if local or placement.axon_replicas[a] == (core_id,):
                axon_keys.append(key)
                axon_relay.append(False)
                axon_adj.append(local)

    relay_sources: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for src_core, s, dst_core, t, w in placement.cross_edges:
        if dst_core == core_id:
            relay_sources.setdefault((src_core, s), []).append((t, w))
    for (src_core, s) in sorted(relay_sources):
        axon_keys.append(f"{RELAY_PREFIX}{src_core}:{s}")
        axon_relay.append(True)
        axon_adj.append(tuple(relay_sources[(src_core, s)]))

    return CoreNet(
        core_id=core_id,
        models=net.models,
        neuron_globals=tuple(globals_here),
        neuron_keys=tuple(net.neuron_keys[g] for g in globals_here),
        neuron_models=tuple(net.neuron_model[g] for g in globals_here),
        neuron_adj=neuron_adj,
        axon_keys=tuple(axon_keys),
        axon_relay=tuple(axon_relay),
        axon_adj=tuple(axon_adj),
        outputs=frozenset(g for g in net.outputs if g in here),
    )


def assign_local_indices(corenet: CoreNet) -> tuple[int, ...]:
    """Map local index -> corenet position.

    Neurons are grouped by model id (locator grouping requirement); inside
    each group's contiguous index block, neurons are handed out greedily in
    decreasing in-degree order, each taking an index in the currently
    least-loaded residue class mod 16, so hot targets spread across slot
    columns and pack into fewer segments.
    """
    n = len(corenet.neuron_globals)
    indeg = [0] * n
    pos_of_global = {g: i for i, g in enumerate(corenet.neuron_globals)}
    for adj in corenet.axon_adj:
        for t, _ in adj:
            indeg[pos_of_global[t]] += 1
    for adj in corenet.neuron_adj:
        for t, _ in adj:
            indeg[pos_of_global[t]] += 1

    groups: dict[int, list[int]] = {}
    for pos, model in enumerate(corenet.neuron_models):
        groups.setdefault(model, []).append(pos)

    order = [0] * n
    column_load = [0] * SLOTS_PER_SEGMENT
    block_start = 0
    for model in sorted(groups):
        members = groups[model]
        block = range(block_start, block_start + len(members))
        buckets: dict[int, deque[int]] = {}
        for idx in block:
            buckets.setdefault(idx % SLOTS_PER_SEGMENT, deque()).append(idx)
        for pos in sorted(members, key=lambda p: (-indeg[p], corenet.neuron_globals[p])):
            residue = min(buckets, key=lambda r: (column_load[r], r))
            idx = buckets[residue].popleft()
            if not buckets[residue]:
                del buckets[residue]
            order[idx] = pos
            column_load[residue] += indeg[pos]
        block_start += len(members)
    return tuple(order)


def pack_region(
    profiles: list[np.ndarray], packed: bool = True
) -> tuple[list[int], int]:
    """Allocate a base segment per source profile; return (bases, total segments).

    Packed mode is first-fit-decreasing with segment sharing: two sources
    may overlap only where their occupied columns are disjoint in every
    shared row.  Naive mode gives each source its own fresh segment run.
    """
    seg_need = [int(p.max()) if len(p) else 0 for p in profiles]
    bases = [0] * len(profiles)

    if not packed:
        bump = 0
        for s in range(len(profiles)):
            if seg_need[s] == 0:
                continue
            bases[s] = bump
            bump += seg_need[s]
        return bases, bump

    order = sorted(
        (s for s in range(len(profiles)) if seg_need[s] > 0),
        key=lambda s: (-seg_need[s], s),
    )
    occupancy: list[int] = []
    col_free = [0] * SLOTS_PER_SEGMENT  # lazy first-free-segment hints
    total = 0
    for s in order:
        m = seg_need[s]
        counts = profiles[s]
        masks = []
        for j in range(m):
            mask = 0
            for c in range(SLOTS_PER_SEGMENT):
                if counts[c] > j:
                    mask |= 1 << c
            masks.append(mask)

        needed_cols = [c for c in range(SLOTS_PER_SEGMENT) if counts[c] > 0]
        for c in needed_cols:
            while col_free[c] < len(occupancy) and occupancy[col_free[c]] & (1 << c):
                col_free[c] += 1
        b = max(col_free[c] for c in needed_cols)
        while True:
            while len(occupancy) < b + m:
                occupancy.append(0)
            if all(occupancy[b + j] & masks[j] == 0 for j in range(m)):
                break
            b += 1
        for j in range(m):
            occupancy[b + j] |= masks[j]
        bases[s] = b
        total = max(total, b + m)
    return bases, total


_PADDING_PROFILE = np.ones(SLOTS_PER_SEGMENT, dtype=np.int64)


def _source_profiles(
    axon_adj_local: list[tuple[tuple[int, int], ...]],
    neuron_adj_local: list[tuple[tuple[int, int], ...]],
) -> list[np.ndarray]:
    """Column demand per source: axons first, then neurons in local order."""
    profiles = []
    for adj in axon_adj_local:
        counts = np.zeros(SLOTS_PER_SEGMENT, dtype=np.int64)
        for t, _ in adj:
            counts[t % SLOTS_PER_SEGMENT] += 1
        profiles.append(counts)
    for adj in neuron_adj_local:
        if adj:
            counts = np.zeros(SLOTS_PER_SEGMENT, dtype=np.int64)
            for t, _ in adj:
                counts[t % SLOTS_PER_SEGMENT] += 1
            profiles.append(counts)
        else:
            profiles.append(_PADDING_PROFILE)  # 16 zero-weight synapses
    return profiles


def build_memory_image(
    corenet: CoreNet,
    geometry: MemoryGeometry | None = None,
    local_order: tuple[int, ...] | None = None,
    packed: bool = True,
) -> tuple[MemoryImage, CorePartition]:
    """Map one core's partition into its slot-aligned memory image."""
    geometry = geometry or MemoryGeometry()
    if local_order is None:
        local_order = assign_local_indices(corenet)

    n = len(corenet.neuron_globals)
    a = len(corenet.axon_keys)
    local_of_global = {
        corenet.neuron_globals[pos]: local for local, pos in enumerate(local_order)
    }

    axon_adj_local = [
        tuple((local_of_global[t], w) for t, w in adj) for adj in corenet.axon_adj
    ]
    neuron_adj_local = [
        tuple((local_of_global[t], w) for t, w in corenet.neuron_adj[local_order[i]])
        for i in range(n)
    ]
    outputs_local = frozenset(local_of_global[g] for g in corenet.outputs)

    profiles = _source_profiles(axon_adj_local, neuron_adj_local)
    max_count = max((int(p.max()) for p in profiles), default=0)
    if max_count * ROWS_PER_SEGMENT > MAX_ROW_COUNT:
        raise SynapseRegionOverflow(max_count * ROWS_PER_SEGMENT, MAX_ROW_COUNT)
    bases, total_segments = pack_region(profiles, packed=packed)

    region_start = axon_locator_rows(a) + neuron_locator_rows(n)
    rows_needed = total_segments * ROWS_PER_SEGMENT
    rows_available = geometry.total_rows - region_start
    if rows_needed > rows_available:
        raise SynapseRegionOverflow(rows_needed, rows_available)

    syn_rows = np.zeros((rows_needed, SLOTS_PER_ROW), dtype=np.uint64)
    flat = syn_rows.reshape(-1)

    def write_source(profile_idx: int, adj, padding: bool) -> tuple[int, int]:
        """Write one source's entries; return (base_row, row_count)."""
        base = bases[profile_idx]
        counts = profiles[profile_idx]
        segments = int(counts.max()) if len(counts) else 0
        if not padding and not adj:
            return 0, 0
        depth = [0] * SLOTS_PER_SEGMENT
        if padding:
            items = [(c, 0) for c in range(SLOTS_PER_SEGMENT)]
        else:
            items = adj
        for t, w in items:
            c = t % SLOTS_PER_SEGMENT
            j = depth[c]
            depth[c] += 1
            row = ROWS_PER_SEGMENT * (base + j) + (c >> 3)
            slot_id = row * SLOTS_PER_ROW + (c & 7)
            assert flat[slot_id] == 0, "slot collision"
            flat[slot_id] = np.uint64(encode_synapse(t, w))
        return base * ROWS_PER_SEGMENT, segments * ROWS_PER_SEGMENT

    axon_locators = np.zeros(a, dtype=np.uint64)
    axon_profiles = np.zeros((a, SLOTS_PER_SEGMENT), dtype=np.uint16)
    for i in range(a):
        base_row, row_count = write_source(i, axon_adj_local[i], padding=False)
        flags = FLAG_RELAY if corenet.axon_relay[i] else 0
        axon_locators[i] = np.uint64(encode_locator(base_row, row_count, 0, flags))
        axon_profiles[i] = profiles[i].astype(np.uint16)

    neuron_locators = np.zeros(n, dtype=np.uint64)
    neuron_profiles = np.zeros((n, SLOTS_PER_SEGMENT), dtype=np.uint16)
    neuron_models_local = tuple(corenet.neuron_models[local_order[i]] for i in range(n))
    for i in range(n):
        padding = not neuron_adj_local[i]
        base_row, row_count = write_source(a + i, neuron_adj_local[i], padding=padding)
        flags = FLAG_PADDING if padding else 0
        neuron_locators[i] = np.uint64(
            encode_locator(base_row, row_count, neuron_models_local[i], flags)
        )
        neuron_profiles[i] = profiles[a + i].astype(np.uint16)

    # Output flag rides on the first valid entry of the neuron's own region.
    for i in sorted(outputs_local):
        ids = profile_slot_ids(bases[a + i], profiles[a + i])
        flat[ids[0]] |= np.uint64(1) << np.uint64(62)

    image = MemoryImage(
        geometry=geometry,
        core_id=corenet.core_id,
        models=corenet.models,
        axon_keys=corenet.axon_keys,
        neuron_keys=tuple(corenet.neuron_keys[local_order[i]] for i in range(n)),
        neuron_globals=np.array(
            [corenet.neuron_globals[local_order[i]] for i in range(n)], dtype=np.uint64
        ),
        axon_locators=axon_locators,
        neuron_locators=neuron_locators,
        axon_profiles=axon_profiles,
        neuron_profiles=neuron_profiles,
        syn_rows=syn_rows,
    )
    part = CorePartition(
        core_id=corenet.core_id,
        axon_keys=corenet.axon_keys,
        axon_relay=corenet.axon_relay,
        axon_adj=tuple(axon_adj_local),
        neuron_keys=image.neuron_keys,
        neuron_globals=tuple(int(g) for g in image.neuron_globals),
        neuron_models=neuron_models_local,
        neuron_adj=tuple(neuron_adj_local),
        outputs=outputs_local,
    )
    return image, part


@dataclass
class SystemImage:
    """All compiled cores plus the routing data tying them together."""

    images: tuple[MemoryImage, ...]
    topology: Topology
    # (src_core, src_local_neuron, dst_core, relay_local_axon)
    routes: tuple[tuple[int, int, int, int], ...]
    core_partitions: tuple[CorePartition, ...] | None = None
    placement: Placement | None = None

    @property
    def cores(self) -> int:
        return len(self.images)


def compile_system(
    net: ValidatedNetwork,
    cores: int = 1,
    capacity: int | None = None,
    geometry: MemoryGeometry | None = None,
    topology: Topology | None = None,
    packed: bool = True,
) -> SystemImage:
    """Partition, place, and compile a network onto one or more cores."""
    for key in net.axon_keys:
        if key.startswith(RELAY_PREFIX):
            raise SchemaError(f"axons[{key!r}]", f"axon keys may not start with {RELAY_PREFIX!r}")

    if capacity is None:
        capacity = max(1, -(-net.num_neurons // cores))
    topology = topology or Topology()
    topology.check(cores)
    placement = partition(net, cores, capacity)

    images = []
    parts = []
    relay_index: dict[tuple[int, int, int], int] = {}
    for core_id in range(cores):
        corenet = _core_net(net, placement, core_id)
        image, part = build_memory_image(corenet, geometry, packed=packed)
        images.append(image)
        parts.append(part)
        for local, key in enumerate(part.axon_keys):
            if part.axon_relay[local]:
                src_core, src_global = key[len(RELAY_PREFIX):].split(":")
                relay_index[(core_id, int(src_core), int(src_global))] = local

    neuron_local: dict[int, int] = {}
    for part in parts:
        for local, g in enumerate(part.neuron_globals):
            neuron_local[g] = local

    route_set = set()
    for src_core, s, dst_core, _t, _w in placement.cross_edges:
        route_set.add(
            (src_core, neuron_local[s], dst_core, relay_index[(dst_core, src_core, s)])
        )

    return SystemImage(
        images=tuple(images),
        topology=topology,
        routes=tuple(sorted(route_set)),
        core_partitions=tuple(parts),
        placement=placement,
    )


# --- pack file (multi-core container) ---------------------------------------

MAGIC_PACK = b"HAERPAK1"
FORMAT_VERSION_PACK = 1
_PACK_HEADER = struct.Struct("<8sHHHHHHI")


def emit_pack(system: SystemImage) -> bytes:
    topo = system.topology
    parts = [
        _PACK_HEADER.pack(
            MAGIC_PACK,
            FORMAT_VERSION_PACK,
            len(system.images),
            topo.cores_per_board,
            topo.boards_per_server,
            topo.servers,
            0,
            len(system.routes),
        )
    ]
    for src_core, src_local, dst_core, dst_axon in system.routes:
        parts.append(struct.pack("<HIHI", src_core, src_local, dst_core, dst_axon))
    for image in system.images:
        blob = emit_image(image)
        parts.append(struct.pack("<Q", len(blob)))
        parts.append(blob)
    return b"".join(parts)


def load_pack(blob: bytes) -> SystemImage:
    if len(blob) < _PACK_HEADER.size:
        raise ImageFormatError("truncated pack")
    magic, version, cores, cpb, bps, servers, _r, nroutes = _PACK_HEADER.unpack(
        blob[: _PACK_HEADER.size]
    )
    if magic != MAGIC_PACK:
        raise ImageFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION_PACK:
        raise ImageFormatError(f"unsupported pack version {version}")
    pos = _PACK_HEADER.size
    routes = []
    for _ in range(nroutes):
        if pos + 12 > len(blob):
            raise ImageFormatError("truncated route table")
        routes.append(struct.unpack("<HIHI", blob[pos : pos + 12]))
        pos += 12
    images = []
    for _ in range(cores):
        if pos + 8 > len(blob):
            raise ImageFormatError("truncated image table")
        (size,) = struct.unpack("<Q", blob[pos : pos + 8])
        pos += 8
        images.append(load_image(blob[pos : pos + size]))
        pos += size
    if pos != len(blob):
        raise ImageFormatError(f"{len(blob) - pos} trailing bytes")
    return SystemImage(
        images=tuple(images),
        topology=Topology(cpb, bps, servers),
        routes=tuple(routes),
    )


def load_any(blob: bytes) -> SystemImage:
    """Accept either a bare single-core image or a multi-core pack."""
    if blob[:8] == MAGIC_PACK:
        return load_pack(blob)
    image = load_image(blob)
    return SystemImage(images=(image,), topology=Topology(), routes=())


# --- analytical capacity footprint -------------------------------------------

@dataclass(frozen=True)
class FootprintReport:
    neurons: int
    axons: int
    mean_fanout: int
    synapses: int
    total_rows: int
    axon_region_rows: int
    neuron_region_rows: int
    rows_available: int
    naive_synapse_rows: int
    packed_bound_rows: int
    fits_naive: bool
    fits_packed_bound: bool
    margin_rows_naive: int
    margin_rows_packed: int

    def as_text(self) -> str:
        def pct(margin: int) -> float:
            return 100.0 * margin / self.rows_available if self.rows_available else 0.0

        lines = [
            f"neurons: {self.neurons}",
            f"axons: {self.axons}",
            f"mean_fanout: {self.mean_fanout}",
            f"synapses: {self.synapses}",
            f"total_rows: {self.total_rows}",
            f"axon_region_rows: {self.axon_region_rows}",
            f"neuron_region_rows: {self.neuron_region_rows}",
            f"synapse_rows_available: {self.rows_available}",
            f"synapse_rows_naive: {self.naive_synapse_rows}",
            f"synapse_rows_perfect_packing: {self.packed_bound_rows}",
            f"fits_with_naive_allocation: {'yes' if self.fits_naive else 'no'}"
            f" (margin {self.margin_rows_naive} rows, {pct(self.margin_rows_naive):.2f}%)",
            f"fits_at_perfect_packing: {'yes' if self.fits_packed_bound else 'no'}"
            f" (margin {self.margin_rows_packed} rows, {pct(self.margin_rows_packed):.2f}%)",
        ]
        return "\n".join(lines) + "\n"


def analytical_footprint(
    neurons: int,
    mean_fanout: int,
    axons: int = 0,
    axon_fanout: int = 0,
    geometry: MemoryGeometry | None = None,
) -> FootprintReport:
    """Row arithmetic for a synthetic network, no slot allocation performed.

    Assumes target residues are balanced across the 16 columns, which is
    what the index assignment heuristic works toward: a fanout-f source
    then needs ceil(f/16) segments.
    """
    geometry = geometry or MemoryGeometry()
    a_rows = axon_locator_rows(axons)
    n_rows = neuron_locator_rows(neurons)
    rows_available = geometry.total_rows - a_rows - n_rows

    def source_segments(fanout: int, is_neuron: bool) -> int:
        if fanout <= 0:
            return 1 if is_neuron else 0
        return -(-fanout // SLOTS_PER_SEGMENT)

    synapses = neurons * mean_fanout + axons * axon_fanout
    naive_segments = neurons * source_segments(mean_fanout, True)
    naive_segments += axons * source_segments(axon_fanout, False)
    packed_segments = -(-synapses // SLOTS_PER_SEGMENT) if synapses else neurons
    naive_rows = naive_segments * ROWS_PER_SEGMENT
    packed_rows = packed_segments * ROWS_PER_SEGMENT

    return FootprintReport(
        neurons=neurons,
        axons=axons,
        mean_fanout=mean_fanout,
        synapses=synapses,
        total_rows=geometry.total_rows,
        axon_region_rows=a_rows,
        neuron_region_rows=n_rows,
        rows_available=rows_available,
        naive_synapse_rows=naive_rows,
        packed_bound_rows=packed_rows,
        fits_naive=naive_rows <= rows_available,
        fits_packed_bound=packed_rows <= rows_available,
        margin_rows_naive=rows_available - naive_rows,
        margin_rows_packed=rows_available - packed_rows,
    )
