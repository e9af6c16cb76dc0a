"""Segmented, slot-aligned memory images.

Memory is a grid of 64-bit slots, 8 per row; two consecutive rows form a
16-slot segment whose columns 0..15 are the parallelism lanes.  An image
holds three ordered regions: axon locators, neuron locators, synapses.
Every synapse entry must sit in the slot column equal to its target's
local index mod 16.

Because the packer lets sources share segments (disjoint columns), the
raw slot grid alone cannot attribute shared-row entries to their source;
each locator therefore carries a per-column entry-count profile alongside
the slot data, and decode/read paths use it.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ImageFormatError
from .network import NeuronModelSpec

SLOT_BITS = 64
SLOTS_PER_ROW = 8
ROWS_PER_SEGMENT = 2
SLOTS_PER_SEGMENT = SLOTS_PER_ROW * ROWS_PER_SEGMENT  # 16 lanes
DEFAULT_TOTAL_ROWS = 1 << 27  # 8 GiB of 64-bit slots

MAGIC_IMAGE = b"HAERIMG1"
FORMAT_VERSION = 1

# Synapse entry bit layout (LSB up): weight:16, target:24, reserved:22,
# output_flag:1, valid:1.
ENTRY_VALID = np.uint64(1) << np.uint64(63)
ENTRY_OUTPUT = np.uint64(1) << np.uint64(62)
TARGET_SHIFT = 16
TARGET_MASK = (1 << 24) - 1
WEIGHT_MASK = 0xFFFF

# Locator bit layout (LSB up): base_row:32, row_count:16, model_id:8, flags:8.
LOC_ROWS_SHIFT = 32
LOC_MODEL_SHIFT = 48
LOC_FLAGS_SHIFT = 56
FLAG_PADDING = 1  # region holds only the 16-zero-weight filler segment
FLAG_RELAY = 2    # compiler-generated axon standing in for a remote neuron

MAX_LOCAL_INDEX = TARGET_MASK
MAX_ROW_COUNT = (1 << 16) - 1


@dataclass(frozen=True)
class MemoryGeometry:
    """Fixed slot grid shape plus the configurable total size."""

    total_rows: int = DEFAULT_TOTAL_ROWS
    slot_bits: int = SLOT_BITS
    slots_per_row: int = SLOTS_PER_ROW
    rows_per_segment: int = ROWS_PER_SEGMENT

    def __post_init__(self):
        if self.slots_per_row * self.rows_per_segment != SLOTS_PER_SEGMENT:
            raise ValueError("a segment must span exactly 16 slots")
        if (self.slot_bits, self.slots_per_row, self.rows_per_segment) != (
            SLOT_BITS,
            SLOTS_PER_ROW,
            ROWS_PER_SEGMENT,
        ):
            raise ValueError("only the 64-bit/8-slot/2-row encoding is implemented")
        if self.total_rows < 2 or self.total_rows % 2:
            raise ValueError("total_rows must be a positive even row count")

    @property
    def total_bytes(self) -> int:
        return self.total_rows * self.slots_per_row * self.slot_bits // 8


def parse_geometry(spec: str) -> MemoryGeometry:
    """Parse a --geometry size spec: '8GiB', '64MiB', '4096rows', or a row count."""
    text = spec.strip()
    if text.startswith("total_rows="):
        text = text[len("total_rows="):]
    units = {"GiB": 1 << 30, "MiB": 1 << 20, "KiB": 1 << 10}
    for unit, scale in units.items():
        if text.endswith(unit):
            size = int(text[: -len(unit)]) * scale
            return MemoryGeometry(total_rows=size // (SLOTS_PER_ROW * SLOT_BITS // 8))
    if text.endswith("rows"):
        return MemoryGeometry(total_rows=int(text[: -len("rows")]))
    return MemoryGeometry(total_rows=int(text))


def encode_synapse(target: int, weight: int, output: bool = False) -> int:
    if not (0 <= target <= TARGET_MASK):
        raise ValueError(f"target index {target} exceeds 24 bits")
    word = (1 << 63) | (target << TARGET_SHIFT) | (weight & WEIGHT_MASK)
    if output:
        word |= 1 << 62
    return word


def decode_synapse(word: int) -> tuple[bool, bool, int, int]:
    """Return (valid, output_flag, target, weight)."""
    word = int(word)
    valid = bool(word >> 63)
    output = bool((word >> 62) & 1)
    target = (word >> TARGET_SHIFT) & TARGET_MASK
    weight = word & WEIGHT_MASK
    if weight >= 1 << 15:
        weight -= 1 << 16
    return valid, output, target, weight


def encode_locator(base_row: int, row_count: int, model_id: int = 0, flags: int = 0) -> int:
    if not (0 <= base_row < 1 << 32):
        raise ValueError("base_row exceeds 32 bits")
    if not (0 <= row_count <= MAX_ROW_COUNT):
        raise ValueError("row_count exceeds 16 bits")
    return (
        base_row
        | (row_count << LOC_ROWS_SHIFT)
        | (model_id << LOC_MODEL_SHIFT)
        | (flags << LOC_FLAGS_SHIFT)
    )


@dataclass(frozen=True)
class LocatorFields:
    base_row: int
    row_count: int
    model_id: int
    flags: int

    @property
    def base_segment(self) -> int:
        return self.base_row // ROWS_PER_SEGMENT

    @property
    def segments(self) -> int:
        return self.row_count // ROWS_PER_SEGMENT

    @property
    def is_padding(self) -> bool:
        return bool(self.flags & FLAG_PADDING)

    @property
    def is_relay(self) -> bool:
        return bool(self.flags & FLAG_RELAY)


def decode_locator(word: int) -> LocatorFields:
    word = int(word)
    return LocatorFields(
        base_row=word & ((1 << 32) - 1),
        row_count=(word >> LOC_ROWS_SHIFT) & 0xFFFF,
        model_id=(word >> LOC_MODEL_SHIFT) & 0xFF,
        flags=(word >> LOC_FLAGS_SHIFT) & 0xFF,
    )


def column_of(rel_row: int, slot: int) -> int:
    """Lane index of a slot, for a segment-aligned region base."""
    return (rel_row % 2) * SLOTS_PER_ROW + slot


def profile_slot_ids(base_segment: int, counts) -> np.ndarray:
    """Linear slot ids (row*8+slot) of a source's entries, row-major order.

    The j-th entry for column c sits in segment base+j; this dense-from-base
    rule is what makes profiles sufficient to attribute shared rows.
    """
    ids = []
    for c in range(SLOTS_PER_SEGMENT):
        k = int(counts[c])
        for j in range(k):
            row = ROWS_PER_SEGMENT * (base_segment + j) + (c >> 3)
            ids.append(row * SLOTS_PER_ROW + (c & 7))
    ids.sort()
    return np.asarray(ids, dtype=np.int64)


def axon_locator_rows(num_axons: int) -> int:
    """Axon locators are laid out sequentially; region padded to whole segments."""
    rows = -(-num_axons // SLOTS_PER_ROW)
    return rows + (rows % 2)


def neuron_locator_rows(num_neurons: int) -> int:
    """Neuron locator n occupies column n mod 16 of segment n div 16."""
    return -(-num_neurons // SLOTS_PER_SEGMENT) * ROWS_PER_SEGMENT


class MemoryImage:
    """One core's compiled memory: locator regions, synapse slots, key tables."""

    def __init__(
        self,
        geometry: MemoryGeometry,
        core_id: int,
        models: tuple[NeuronModelSpec, ...],
        axon_keys: tuple[str, ...],
        neuron_keys: tuple[str, ...],
        neuron_globals: np.ndarray,
        axon_locators: np.ndarray,
        neuron_locators: np.ndarray,
        axon_profiles: np.ndarray,
        neuron_profiles: np.ndarray,
        syn_rows: np.ndarray,
    ):
        self.geometry = geometry
        self.core_id = core_id
        self.models = tuple(models)
        self.axon_keys = tuple(axon_keys)
        self.neuron_keys = tuple(neuron_keys)
        self.neuron_globals = np.asarray(neuron_globals, dtype=np.uint64)
        self.axon_locators = np.asarray(axon_locators, dtype=np.uint64)
        self.neuron_locators = np.asarray(neuron_locators, dtype=np.uint64)
        self.axon_profiles = np.asarray(axon_profiles, dtype=np.uint16)
        self.neuron_profiles = np.asarray(neuron_profiles, dtype=np.uint16)
        self.syn_rows = np.asarray(syn_rows, dtype=np.uint64)
        if self.syn_rows.ndim != 2 or self.syn_rows.shape[1] != SLOTS_PER_ROW:
            raise ValueError("syn_rows must have shape (rows, 8)")

    # --- region bounds ---------------------------------------------------

    @property
    def num_axons(self) -> int:
        return len(self.axon_keys)

    @property
    def num_neurons(self) -> int:
        return len(self.neuron_keys)

    @property
    def axon_region_rows(self) -> int:
        return axon_locator_rows(self.num_axons)

    @property
    def neuron_region_rows(self) -> int:
        return neuron_locator_rows(self.num_neurons)

    @property
    def synapse_region_start(self) -> int:
        return self.axon_region_rows + self.neuron_region_rows

    @property
    def synapse_rows_used(self) -> int:
        return self.syn_rows.shape[0]

    @property
    def synapse_rows_available(self) -> int:
        return self.geometry.total_rows - self.synapse_region_start

    def axon_locator_coord(self, i: int) -> tuple[int, int]:
        return i // SLOTS_PER_ROW, i % SLOTS_PER_ROW

    def neuron_locator_coord(self, n: int) -> tuple[int, int]:
        col = n % SLOTS_PER_SEGMENT
        row = ROWS_PER_SEGMENT * (n // SLOTS_PER_SEGMENT) + (col >> 3)
        return row, col & 7

    # --- decode ------------------------------------------------------------

    def locator(self, kind: str, index: int) -> LocatorFields:
        table = self.axon_locators if kind == "axon" else self.neuron_locators
        return decode_locator(table[index])

    def profile(self, kind: str, index: int) -> np.ndarray:
        table = self.axon_profiles if kind == "axon" else self.neuron_profiles
        return table[index]

    def entry_slot_ids(self, kind: str, index: int) -> np.ndarray:
        loc = self.locator(kind, index)
        if loc.row_count == 0:
            return np.empty(0, dtype=np.int64)
        return profile_slot_ids(loc.base_segment, self.profile(kind, index))

    def entries(self, kind: str, index: int) -> list[tuple[bool, bool, int, int]]:
        """Decoded (valid, output, target, weight) of this source, row-major."""
        flat = self.syn_rows.reshape(-1)
        return [decode_synapse(flat[i]) for i in self.entry_slot_ids(kind, index)]

    def source_synapses(self, kind: str, index: int) -> list[tuple[int, int]]:
        """User synapses (target, weight) of one source; padding decodes to none."""
        loc = self.locator(kind, index)
        if loc.is_padding:
            return []
        return [(t, w) for valid, _, t, w in self.entries(kind, index) if valid]

    def output_neurons(self) -> frozenset[int]:
        """Neurons whose region's first valid entry carries the output flag."""
        out = set()
        flat = self.syn_rows.reshape(-1)
        for n in range(self.num_neurons):
            ids = self.entry_slot_ids("neuron", n)
            if len(ids) and (int(flat[ids[0]]) >> 62) & 1:
                out.add(n)
        return frozenset(out)

    def valid_slot_scan(self) -> np.ndarray:
        """Linear ids of every slot with the valid bit set (independent scan)."""
        flat = self.syn_rows.reshape(-1)
        return np.nonzero((flat & ENTRY_VALID) != 0)[0]

    # --- equality (round-trip tests) --------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, MemoryImage):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.core_id == other.core_id
            and self.models == other.models
            and self.axon_keys == other.axon_keys
            and self.neuron_keys == other.neuron_keys
            and np.array_equal(self.neuron_globals, other.neuron_globals)
            and np.array_equal(self.axon_locators, other.axon_locators)
            and np.array_equal(self.neuron_locators, other.neuron_locators)
            and np.array_equal(self.axon_profiles, other.axon_profiles)
            and np.array_equal(self.neuron_profiles, other.neuron_profiles)
            and np.array_equal(self.syn_rows, other.syn_rows)
        )


# --- stats -----------------------------------------------------------------

@dataclass(frozen=True)
class ImageStats:
    axon_count: int
    neuron_count: int
    valid_entries: int
    synapse_slots_allocated: int
    density: float
    axon_region_rows: int
    neuron_region_rows: int
    synapse_rows_used: int
    total_rows: int

    def as_text(self) -> str:
        lines = [
            f"axons: {self.axon_count}",
            f"neurons: {self.neuron_count}",
            f"axon_region_rows: {self.axon_region_rows}",
            f"neuron_region_rows: {self.neuron_region_rows}",
            f"synapse_rows_used: {self.synapse_rows_used}",
            f"total_rows: {self.total_rows}",
            f"valid_entries: {self.valid_entries}",
            f"synapse_slots_allocated: {self.synapse_slots_allocated}",
            f"packing_density: {self.density:.6f}",
        ]
        return "\n".join(lines) + "\n"


def image_stats(image: MemoryImage) -> ImageStats:
    allocated = image.synapse_rows_used * SLOTS_PER_ROW
    valid = int(len(image.valid_slot_scan()))
    return ImageStats(
        axon_count=image.num_axons,
        neuron_count=image.num_neurons,
        valid_entries=valid,
        synapse_slots_allocated=allocated,
        density=(valid / allocated) if allocated else 0.0,
        axon_region_rows=image.axon_region_rows,
        neuron_region_rows=image.neuron_region_rows,
        synapse_rows_used=image.synapse_rows_used,
        total_rows=image.geometry.total_rows,
    )


# --- binary format -----------------------------------------------------------

_HEADER = struct.Struct("<8s4H4Q2I2HI")
assert _HEADER.size == 64


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise ImageFormatError("truncated image blob")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def text(self) -> str:
        n = self.u32()
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ImageFormatError(f"bad key encoding: {exc}") from exc

    def array(self, dtype, count: int) -> np.ndarray:
        raw = self.take(count * np.dtype(dtype).itemsize)
        return np.frombuffer(raw, dtype=np.dtype(dtype).newbyteorder("<")).astype(dtype)


def _locator_region_bytes(locators: np.ndarray, coords, rows: int) -> bytes:
    """Render locator words into their full region rows (zero elsewhere)."""
    grid = np.zeros((rows, SLOTS_PER_ROW), dtype=np.uint64)
    for i, word in enumerate(locators):
        r, s = coords(i)
        grid[r, s] = word
    return grid.astype("<u8").tobytes()


def emit_image(image: MemoryImage) -> bytes:
    header = _HEADER.pack(
        MAGIC_IMAGE,
        FORMAT_VERSION,
        SLOTS_PER_ROW,
        ROWS_PER_SEGMENT,
        SLOT_BITS,
        image.geometry.total_rows,
        image.axon_region_rows,
        image.neuron_region_rows,
        image.synapse_rows_used,
        image.num_axons,
        image.num_neurons,
        len(image.models),
        image.core_id,
        0,
    )
    parts = [header]
    for m in image.models:
        kind = 0 if m.kind == "binary" else 1
        parts.append(struct.pack("<BbBBi", kind, m.shift, m.leak, 0, m.threshold))
    for key in image.axon_keys:
        raw = key.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
    for n, key in enumerate(image.neuron_keys):
        raw = key.encode("utf-8")
        parts.append(struct.pack("<QI", int(image.neuron_globals[n]), len(raw)) + raw)
    parts.append(image.axon_profiles.astype("<u2").tobytes())
    parts.append(image.neuron_profiles.astype("<u2").tobytes())
    parts.append(
        _locator_region_bytes(image.axon_locators, image.axon_locator_coord, image.axon_region_rows)
    )
    parts.append(
        _locator_region_bytes(
            image.neuron_locators, image.neuron_locator_coord, image.neuron_region_rows
        )
    )
    parts.append(image.syn_rows.astype("<u8").tobytes())
    return b"".join(parts)


def load_image(blob: bytes) -> MemoryImage:
    r = _Reader(blob)
    (
        magic,
        version,
        slots_per_row,
        rows_per_segment,
        slot_bits,
        total_rows,
        axon_rows,
        neuron_rows,
        syn_rows_used,
        axon_count,
        neuron_count,
        model_count,
        core_id,
        _reserved,
    ) = _HEADER.unpack(r.take(_HEADER.size))
    if magic != MAGIC_IMAGE:
        raise ImageFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ImageFormatError(f"unsupported format version {version}")
    if (slots_per_row, rows_per_segment, slot_bits) != (
        SLOTS_PER_ROW,
        ROWS_PER_SEGMENT,
        SLOT_BITS,
    ):
        raise ImageFormatError("unsupported geometry constants")

    models = []
    for _ in range(model_count):
        kind, shift, leak, _pad, threshold = struct.unpack("<BbBBi", r.take(8))
        if kind == 0:
            models.append(NeuronModelSpec.binary(threshold))
        else:
            models.append(NeuronModelSpec.lif(threshold, shift, leak))

    axon_keys = tuple(r.text() for _ in range(axon_count))
    neuron_globals = np.zeros(neuron_count, dtype=np.uint64)
    neuron_keys = []
    for n in range(neuron_count):
        neuron_globals[n] = r.u64()
        neuron_keys.append(r.text())

    axon_profiles = r.array(np.uint16, axon_count * 16).reshape(axon_count, 16)
    neuron_profiles = r.array(np.uint16, neuron_count * 16).reshape(neuron_count, 16)

    axon_grid = r.array(np.uint64, axon_rows * SLOTS_PER_ROW).reshape(axon_rows, SLOTS_PER_ROW)
    neuron_grid = r.array(np.uint64, neuron_rows * SLOTS_PER_ROW).reshape(
        neuron_rows, SLOTS_PER_ROW
    )
    syn = r.array(np.uint64, syn_rows_used * SLOTS_PER_ROW).reshape(
        syn_rows_used, SLOTS_PER_ROW
    )
    if r.pos != len(blob):
        raise ImageFormatError(f"{len(blob) - r.pos} trailing bytes")

    image = MemoryImage(
        geometry=MemoryGeometry(total_rows=total_rows),
        core_id=core_id,
        models=tuple(models),
        axon_keys=axon_keys,
        neuron_keys=tuple(neuron_keys),
        neuron_globals=neuron_globals,
        axon_locators=np.array(
            [axon_grid[i // SLOTS_PER_ROW, i % SLOTS_PER_ROW] for i in range(axon_count)],
            dtype=np.uint64,
        ),
        neuron_locators=np.array(
            [
                neuron_grid[
                    ROWS_PER_SEGMENT * (n // 16) + ((n % 16) >> 3), (n % 16) & 7
                ]
                for n in range(neuron_count)
            ],
            dtype=np.uint64,
        ),
        axon_profiles=axon_profiles,
        neuron_profiles=neuron_profiles,
        syn_rows=syn,
    )
    if image.axon_region_rows != axon_rows or image.neuron_region_rows != neuron_rows:
        raise ImageFormatError("region bounds inconsistent with counts")
    return image
