"""The network handle: construct from keyed collections, step, edit synapses.

The same script runs unchanged on the native engine or on the built-in
pure-Python fallback; the backend is auto-detected and can be overridden.
For a fixed seed both backends are spike-for-spike identical.
"""

from __future__ import annotations

import importlib.util
import json
from typing import Iterable, Mapping, Sequence

from .fallback import FallbackBackend
from .models import WEIGHT_MAX, WEIGHT_MIN, Binary, LIF, NetworkBuildError

_RESERVED_PREFIX = "~relay:"


def engine_available() -> bool:
    return importlib.util.find_spec("spikecore") is not None


class _Build:
    """Normalized, validated network shared by both backends."""

    def __init__(self, axon_adj, neuron_adj, model_of, outputs):
        self.axon_adj: dict[str, list[tuple[str, int]]] = axon_adj
        self.neuron_adj: dict[str, list[tuple[str, int]]] = neuron_adj
        self.model_of: dict[str, tuple] = model_of
        self.outputs: set[str] = outputs
        self.axon_keys = sorted(axon_adj)
        self.neuron_keys = sorted(neuron_adj)

    def adjacency_of(self, pre: str, post: str) -> list[tuple[str, int]]:
        # Axon namespace shadows the neuron namespace, as in the engine.
        if pre in self.axon_adj:
            return self.axon_adj[pre]
        if pre in self.neuron_adj:
            return self.neuron_adj[pre]
        raise KeyError((pre, post))


def _check_key(key, what: str) -> str:
    if not isinstance(key, str):
        raise NetworkBuildError(f"{what} key {key!r} must be a string")
    if key.startswith(_RESERVED_PREFIX):
        raise NetworkBuildError(f"{what} key {key!r} uses the reserved prefix {_RESERVED_PREFIX!r}")
    return key


def _check_synapses(pre: str, raw, neuron_keys: set[str]) -> list[tuple[str, int]]:
    out = []
    for item in raw:
        if not (isinstance(item, (tuple, list)) and len(item) == 2):
            raise NetworkBuildError(f"synapse of {pre!r} must be a (target, weight) pair")
        target, weight = item
        if target not in neuron_keys:
            raise NetworkBuildError(f"synapse of {pre!r} targets unknown neuron {target!r}")
        if not isinstance(weight, int) or isinstance(weight, bool):
            raise NetworkBuildError(f"weight of ({pre!r}, {target!r}) must be an integer")
        if not (WEIGHT_MIN <= weight <= WEIGHT_MAX):
            raise NetworkBuildError(f"weight {weight} of ({pre!r}, {target!r}) exceeds 16 bits")
        out.append((target, weight))
    return out


def _split_neuron_value(key: str, value, models: Sequence | None):
    """Accept (model, synapses) or (synapses, model); model may index `models`."""
    if not (isinstance(value, (tuple, list)) and len(value) == 2):
        raise NetworkBuildError(f"neuron {key!r} must map to (model, synapses)")
    first, second = value

    def resolve(item):
        if isinstance(item, int) and not isinstance(item, bool):
            if models is None or not (0 <= item < len(models)):
                raise NetworkBuildError(f"neuron {key!r}: model index {item} out of range")
            return models[item]
        return item

    first, second = resolve(first), resolve(second)
    if isinstance(first, (LIF, Binary)):
        model, synapses = first, second
    elif isinstance(second, (LIF, Binary)):
        model, synapses = second, first
    else:
        raise NetworkBuildError(f"neuron {key!r} has no LIF or Binary model")
    if not isinstance(synapses, (tuple, list)):
        raise NetworkBuildError(f"neuron {key!r}: synapses must be a list")
    return model, synapses


class Network:
    """A runnable spiking network built from plain keyed collections.

    axons:   {axon_key: [(neuron_key, weight), ...]}
    neurons: {neuron_key: (model, [(neuron_key, weight), ...])}
    outputs: neuron keys whose spikes step() reports

    `config` is an opaque mapping; the keys "backend", "seed", and "cores"
    are recognized.  Explicit keyword arguments win over config entries.
    """

    def __init__(
        self,
        axons: Mapping | None = None,
        neurons: Mapping | None = None,
        outputs: Iterable | None = None,
        config: Mapping | None = None,
        models: Sequence | None = None,
        backend: str | None = None,
        seed: int | None = None,
    ):
        axons = dict(axons or {})
        neurons = dict(neurons or {})
        outputs = list(outputs or [])
        config = dict(config or {})
        if not neurons and not axons:
            raise NetworkBuildError("network has no axons and no neurons")

        neuron_adj: dict[str, list[tuple[str, int]]] = {}
        model_of: dict[str, tuple] = {}
        parsed = {}
        for key, value in neurons.items():
            _check_key(key, "neuron")
            parsed[key] = _split_neuron_value(key, value, models)
        neuron_keys = set(parsed)
        for key, (model, synapses) in parsed.items():
            model.check(f"neuron {key!r}")
            model_of[key] = model.canonical()
            neuron_adj[key] = _check_synapses(key, synapses, neuron_keys)

        axon_adj: dict[str, list[tuple[str, int]]] = {}
        for key, synapses in axons.items():
            _check_key(key, "axon")
            axon_adj[key] = _check_synapses(key, synapses, neuron_keys)

        out_set = set()
        for key in outputs:
            if key not in neuron_keys:
                raise NetworkBuildError(f"output {key!r} is not a neuron")
            out_set.add(key)

        self._build = _Build(axon_adj, neuron_adj, model_of, out_set)
        self.seed = int(config.get("seed", 0) if seed is None else seed)
        self.step_count = 0

        choice = backend or config.get("backend")
        if choice is None:
            choice = "engine" if engine_available() else "fallback"
        if choice == "engine":
            if not engine_available():
                raise NetworkBuildError("native engine requested but not installed")
            from .engine import EngineBackend

            self._backend = EngineBackend(
                self._build, self.seed, cores=int(config.get("cores", 1))
            )
        elif choice == "fallback":
            self._backend = FallbackBackend(self._build, self.seed)
        else:
            raise NetworkBuildError(f"unknown backend {choice!r}")
        self.backend = choice

    # --- execution --------------------------------------------------------

    def step(self, inputs: Iterable[str] = (), membrane_potential: bool = False):
        """Advance one timestep; returns the output neurons that spiked.

        With membrane_potential=True, returns (spiked, {neuron_key: v}).
        """
        driven = set()
        for key in inputs:
            if key not in self._build.axon_adj:
                raise KeyError(f"unknown axon key {key!r}")
            driven.add(key)
        spiked, potentials = self._backend.step(driven)
        self.step_count += 1
        if membrane_potential:
            return spiked, potentials
        return spiked

    def membranes(self) -> dict[str, int]:
        return self._backend.membranes()

    # --- synapse access -----------------------------------------------------

    def read_synapse(self, pre: str, post: str) -> int:
        return self._backend.read_synapse(pre, post)

    def write_synapse(self, pre: str, post: str, weight: int) -> None:
        if not isinstance(weight, int) or isinstance(weight, bool):
            raise NetworkBuildError("weight must be an integer")
        if not (WEIGHT_MIN <= weight <= WEIGHT_MAX):
            raise NetworkBuildError(f"weight {weight} exceeds 16 bits")
        self._backend.write_synapse(pre, post, weight)

    # --- serialization -------------------------------------------------------

    def serialize(self) -> str:
        """Canonical network document, byte-identical to the engine's form."""
        build = self._build
        model_list = sorted(set(build.model_of.values()))
        model_index = {m: i for i, m in enumerate(model_list)}
        doc = {
            "models": [
                {"kind": kind, "threshold": thr, "shift": shift, "leak": leak}
                for kind, thr, shift, leak in model_list
            ],
            "axons": {k: [[t, w] for t, w in build.axon_adj[k]] for k in build.axon_keys},
            "neurons": {
                k: {
                    "model": model_index[build.model_of[k]],
                    "synapses": [[t, w] for t, w in build.neuron_adj[k]],
                }
                for k in build.neuron_keys
            },
            "outputs": sorted(build.outputs),
        }
        return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def construct(
    axons=None, neurons=None, outputs=None, models=None, config=None, backend=None, seed=None
) -> Network:
    """Build a network handle from keyed collections."""
    return Network(
        axons=axons,
        neurons=neurons,
        outputs=outputs,
        models=models,
        config=config,
        backend=backend,
        seed=seed,
    )


def step(handle: Network, inputs=(), membrane_potential: bool = False):
    return handle.step(inputs, membrane_potential=membrane_potential)


def read_synapse(handle: Network, pre: str, post: str) -> int:
    return handle.read_synapse(pre, post)


def write_synapse(handle: Network, pre: str, post: str, weight: int) -> None:
    handle.write_synapse(pre, post, weight)
