"""Scripting front end for spiking networks.

Build a network from plain dicts and lists, step it one millisecond at a
time, and read or rewrite synapse weights in place.  Scripts run on the
native emulator when it is installed and on the built-in pure-Python
fallback otherwise; results are identical for a fixed seed.

    from spikebind import LIF, Network

    n1 = LIF(threshold=3, shift=-17, leak=63)
    net = Network(
        axons={"alpha": [("a", 3)]},
        neurons={"a": (n1, [])},
        outputs=["a"],
    )
    spiked = net.step(["alpha"])
"""

from .models import Binary, LIF, NetworkBuildError
from .network import (
    Network,
    construct,
    engine_available,
    read_synapse,
    step,
    write_synapse,
)

__version__ = "0.1.0"

__all__ = [
    "Binary",
    "LIF",
    "Network",
    "NetworkBuildError",
    "construct",
    "engine_available",
    "read_synapse",
    "step",
    "write_synapse",
]
