"""Event-driven spiking-network emulator and memory compiler.

Workflow: define or parse a network, validate it, compile it into one or
more slot-aligned memory images, then execute with the event-driven core
runtime (or the sparse-matrix golden model) and read off spike rasters,
access counters, and energy estimates.
"""

from .compiler import (
    CorePartition,
    Placement,
    SystemImage,
    Topology,
    analytical_footprint,
    assign_local_indices,
    build_memory_image,
    compile_system,
    emit_pack,
    load_any,
    load_pack,
    pack_region,
    partition,
)
from .errors import (
    CapacityExceeded,
    ImageFormatError,
    InputOutOfRange,
    InvalidCostModel,
    NetworkSyntaxError,
    NetworkValidationError,
    NoSuchSynapse,
    RasterSyntaxError,
    SchemaError,
    SpikecoreError,
    SynapseRegionOverflow,
    TopologyMismatch,
    UnknownKey,
    Violation,
)
from .memimage import (
    MemoryGeometry,
    MemoryImage,
    emit_image,
    image_stats,
    load_image,
    parse_geometry,
)
from .metrics import CostModel, EnergyEstimate, estimate, report
from .network import (
    BINARY,
    LIF,
    NetworkDef,
    NeuronModelSpec,
    SpikeRaster,
    ValidatedNetwork,
    parse_network,
    serialize_network,
    validate_network,
)
from .oracle import Oracle, oracle_run
from .router import RoutingTable, System, build_routing, exchange, run_system
from .runtime import AccessCounters, Core, RunResult, TrafficStats, neuron_update

__version__ = "0.1.0"

__all__ = [
    "AccessCounters",
    "BINARY",
    "CapacityExceeded",
    "Core",
    "CorePartition",
    "CostModel",
    "EnergyEstimate",
    "ImageFormatError",
    "InputOutOfRange",
    "InvalidCostModel",
    "LIF",
    "MemoryGeometry",
    "MemoryImage",
    "NetworkDef",
    "NetworkSyntaxError",
    "NetworkValidationError",
    "NeuronModelSpec",
    "NoSuchSynapse",
    "Oracle",
    "Placement",
    "RasterSyntaxError",
    "RoutingTable",
    "RunResult",
    "SchemaError",
    "SpikeRaster",
    "SpikecoreError",
    "SynapseRegionOverflow",
    "System",
    "SystemImage",
    "Topology",
    "TopologyMismatch",
    "TrafficStats",
    "UnknownKey",
    "ValidatedNetwork",
    "Violation",
    "analytical_footprint",
    "assign_local_indices",
    "build_memory_image",
    "build_routing",
    "compile_system",
    "emit_image",
    "emit_pack",
    "estimate",
    "exchange",
    "image_stats",
    "load_any",
    "load_image",
    "load_pack",
    "neuron_update",
    "oracle_run",
    "pack_region",
    "parse_geometry",
    "parse_network",
    "partition",
    "report",
    "run_system",
    "serialize_network",
    "validate_network",
]
