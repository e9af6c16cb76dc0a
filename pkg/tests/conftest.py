"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

import spikecore as sc
from spikecore.imagecheck import check_image

DATA = Path(__file__).parent / "data"

SMALL_GEOMETRY = sc.MemoryGeometry(total_rows=1 << 16)

# Every image compiled through compile_checked passes the invariant suite;
# the acceptance test reports this running total.
CHECKED_IMAGES = [0]


def example4() -> sc.NetworkDef:
    """The 4-neuron, 2-axon example network used throughout."""
    n1 = sc.NeuronModelSpec.lif(threshold=3, shift=-17, leak=63)
    n2 = sc.NeuronModelSpec.lif(threshold=5, shift=-17, leak=1)
    return sc.NetworkDef(
        axons={"alpha": [("a", 3), ("c", 2)], "beta": [("b", 3)]},
        neurons={
            "a": (n1, [("b", 1), ("d", 2)]),
            "b": (n1, []),
            "c": (n1, []),
            "d": (n2, [("c", 1)]),
        },
        outputs={"a", "b"},
    )


def example4_raster() -> sc.SpikeRaster:
    return sc.SpikeRaster({0: ["alpha", "beta"], 1: ["alpha", "beta"]})


def random_models(rng: random.Random, noise: bool) -> list[sc.NeuronModelSpec]:
    models = []
    for _ in range(rng.randint(1, 4)):
        threshold = rng.choice([0, 1, 2, 3, 5, 10, 40, 200])
        if rng.random() < 0.25:
            models.append(sc.NeuronModelSpec.binary(threshold))
        else:
            shift = rng.choice([-17, -12, -8, -3, 0, 2]) if noise else -17
            leak = rng.choice([0, 1, 2, 5, 20, 63])
            models.append(sc.NeuronModelSpec.lif(threshold, shift, leak))
    return models


def random_network(
    rng: random.Random,
    max_neurons: int = 150,
    mean_fanout: float = 3.0,
    noise: bool = False,
    max_synapses: int | None = None,
) -> sc.NetworkDef:
    n_neurons = rng.randint(1, max_neurons)
    n_axons = rng.randint(0 if n_neurons > 1 else 1, max(1, n_neurons // 3))
    neuron_keys = [f"n{i:05d}" for i in range(n_neurons)]
    axon_keys = [f"x{i:05d}" for i in range(n_axons)]
    models = random_models(rng, noise)
    budget = [max_synapses if max_synapses is not None else 1 << 60]

    def fanout() -> list[tuple[str, int]]:
        count = min(n_neurons * 4, int(rng.expovariate(1.0 / mean_fanout)), budget[0])
        budget[0] -= count
        return [
            (rng.choice(neuron_keys), rng.randint(-20, 20)) for _ in range(count)
        ]

    axons = {k: fanout() for k in axon_keys}
    neurons = {k: (rng.choice(models), fanout()) for k in neuron_keys}
    n_outputs = rng.randint(1, n_neurons)
    outputs = set(rng.sample(neuron_keys, n_outputs))
    return sc.NetworkDef(axons=axons, neurons=neurons, outputs=outputs)


def random_raster(
    rng: random.Random, net: sc.ValidatedNetwork, steps: int, rate: float = 0.25
) -> sc.SpikeRaster:
    raster = sc.SpikeRaster()
    if not net.num_axons:
        return raster
    for t in range(steps):
        if rng.random() < rate:
            for key in rng.sample(net.axon_keys, rng.randint(1, net.num_axons)):
                raster.add(t, key)
    return raster


def compile_checked(
    valid: sc.ValidatedNetwork,
    cores: int = 1,
    capacity: int | None = None,
    geometry: sc.MemoryGeometry | None = None,
    packed: bool = True,
) -> sc.SystemImage:
    """Compile and run the full invariant suite on every produced image."""
    system = sc.compile_system(
        valid,
        cores=cores,
        capacity=capacity,
        geometry=geometry or SMALL_GEOMETRY,
        packed=packed,
    )
    for image, part in zip(system.images, system.core_partitions):
        check_image(image, part)
        CHECKED_IMAGES[0] += 1
    return system


@pytest.fixture
def valid4() -> sc.ValidatedNetwork:
    return sc.validate_network(example4())


@pytest.fixture
def image4(valid4) -> sc.MemoryImage:
    return compile_checked(valid4).images[0]
