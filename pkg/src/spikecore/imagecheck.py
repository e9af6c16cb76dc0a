"""Structural invariant suite for compiled memory images.

Checked on every image the tests compile: slot alignment, locator
contiguity, model grouping, collision freedom, the zero-fanout filler
rule, and (given the source partition) exact decode coverage.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from .compiler import CorePartition
from .errors import SpikecoreError
from .memimage import (
    ROWS_PER_SEGMENT,
    SLOTS_PER_ROW,
    SLOTS_PER_SEGMENT,
    MemoryImage,
    decode_synapse,
)


class ImageInvariantError(SpikecoreError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


def check_image(image: MemoryImage, part: CorePartition | None = None) -> None:
    problems: list[str] = []
    flat = image.syn_rows.reshape(-1)
    n, a = image.num_neurons, image.num_axons
    rows_used = image.synapse_rows_used

    # Raw scan: alignment and zeroed invalid slots, independent of locators.
    valid_mask = (flat >> np.uint64(63)) != 0
    bad_invalid = np.nonzero(~valid_mask & (flat != 0))[0]
    for sid in bad_invalid[:8]:
        problems.append(f"slot {sid}: invalid entry is not all-zero")
    sids = np.nonzero(valid_mask)[0]
    words = flat[sids]
    reserved = (words >> np.uint64(40)) & np.uint64((1 << 22) - 1)
    for sid in sids[np.nonzero(reserved)[0]][:8]:
        problems.append(f"slot {sid}: reserved bits set")
    targets = ((words >> np.uint64(16)) & np.uint64(0xFFFFFF)).astype(np.int64)
    rows, slots = np.divmod(sids, SLOTS_PER_ROW)
    columns = (rows % 2) * SLOTS_PER_ROW + slots
    for sid in sids[np.nonzero(targets % SLOTS_PER_SEGMENT != columns)[0]][:8]:
        problems.append(f"slot {sid}: target misaligned with column")

    # Locator checks plus per-source attribution.
    claimed: dict[int, tuple[str, int]] = {}
    prev_model = -1
    for kind, count in (("axon", a), ("neuron", n)):
        for i in range(count):
            loc = image.locator(kind, i)
            if kind == "neuron":
                if loc.model_id < prev_model:
                    problems.append(f"neuron {i}: model ids not grouped")
                prev_model = loc.model_id
                if loc.row_count < ROWS_PER_SEGMENT:
                    problems.append(f"neuron {i}: row_count {loc.row_count} < one segment")
            if loc.row_count % ROWS_PER_SEGMENT or loc.base_row % ROWS_PER_SEGMENT:
                problems.append(f"{kind} {i}: region not segment-granular")
            if loc.row_count and loc.base_row + loc.row_count > rows_used:
                problems.append(f"{kind} {i}: region exceeds used rows")
            profile = image.profile(kind, i)
            if loc.row_count and int(profile.max()) * ROWS_PER_SEGMENT != loc.row_count:
                problems.append(f"{kind} {i}: row_count disagrees with profile")
            if loc.row_count == 0 and profile.any():
                problems.append(f"{kind} {i}: empty region with nonzero profile")
            for sid in image.entry_slot_ids(kind, i):
                sid = int(sid)
                if sid in claimed:
                    problems.append(f"slot {sid}: claimed by {claimed[sid]} and {(kind, i)}")
                claimed[sid] = (kind, i)
                if not int(flat[sid]) >> 63:
                    problems.append(f"slot {sid}: profile names an invalid slot")
            if kind == "neuron" and loc.is_padding:
                ids = image.entry_slot_ids(kind, i)
                if len(ids) != SLOTS_PER_SEGMENT or loc.row_count != ROWS_PER_SEGMENT:
                    problems.append(f"neuron {i}: filler region is not one full segment")
                for sid in ids:
                    _v, _o, _t, w = decode_synapse(flat[sid])
                    if w != 0:
                        problems.append(f"neuron {i}: filler entry has weight {w}")

    orphans = set(int(s) for s in image.valid_slot_scan()) - set(claimed)
    if orphans:
        problems.append(f"{len(orphans)} valid slots not claimed by any locator")

    if part is not None:
        _check_coverage(image, part, problems)

    if problems:
        raise ImageInvariantError(problems)


def _check_coverage(image: MemoryImage, part: CorePartition, problems: list[str]) -> None:
    """Decoded synapse multiset must equal the partition's, exactly."""
    for kind, adjacency in (("axon", part.axon_adj), ("neuron", part.neuron_adj)):
        for i, adj in enumerate(adjacency):
            got = Counter(image.source_synapses(kind, i))
            want = Counter(adj)
            if got != want:
                problems.append(f"{kind} {i}: decoded synapses {got} != source {want}")
            loc = image.locator(kind, i)
            if kind == "neuron" and loc.is_padding != (len(adj) == 0):
                problems.append(f"neuron {i}: filler flag inconsistent with fanout")
            if kind == "axon" and loc.row_count == 0 and adj:
                problems.append(f"axon {i}: empty region but source has synapses")

    decoded_outputs = image.output_neurons()
    if decoded_outputs != part.outputs:
        problems.append(
            f"outputs decode {sorted(decoded_outputs)} != {sorted(part.outputs)}"
        )
