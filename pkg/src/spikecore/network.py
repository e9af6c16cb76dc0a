"""User-level network definitions: neuron models, topology, spike rasters.

This is the shared front end: the compiler, both simulators, and the
scripting bindings all consume the validated form produced here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import (
    BAD_KEY,
    DANGLING_TARGET,
    DUPLICATE_KEY,
    EMPTY_NETWORK,
    MODEL_OUT_OF_RANGE,
    TOO_MANY_MODELS,
    UNKNOWN_OUTPUT,
    WEIGHT_OUT_OF_RANGE,
    NetworkSyntaxError,
    NetworkValidationError,
    RasterSyntaxError,
    SchemaError,
    Violation,
)

BINARY = "binary"
LIF = "lif"

WEIGHT_MIN = -(1 << 15)
WEIGHT_MAX = (1 << 15) - 1
SHIFT_MIN, SHIFT_MAX = -17, 17
LEAK_MIN, LEAK_MAX = 0, 63
THRESHOLD_MAX = (1 << 31) - 1
MAX_MODELS = 256  # model id is stored in one byte


@dataclass(frozen=True, order=True)
class NeuronModelSpec:
    """Threshold/shift/leak parameters for one neuron dynamics variant.

    Binary neurons ignore shift and leak entirely; their canonical form
    zeroes both so that equal behaviour means equal value.
    """

    kind: str
    threshold: int
    shift: int = -17
    leak: int = 63

    @staticmethod
    def lif(threshold: int, shift: int = -17, leak: int = 63) -> "NeuronModelSpec":
        return NeuronModelSpec(LIF, threshold, shift, leak)

    @staticmethod
    def binary(threshold: int) -> "NeuronModelSpec":
        return NeuronModelSpec(BINARY, threshold, 0, 0)

    def canonical(self) -> "NeuronModelSpec":
        if self.kind == BINARY:
            return NeuronModelSpec(BINARY, self.threshold, 0, 0)
        return self

    def check(self, where: str, out: list[Violation]) -> None:
        if self.kind not in (BINARY, LIF):
            out.append(Violation(MODEL_OUT_OF_RANGE, (where, "kind"), str(self.kind)))
            return
        if not (0 <= self.threshold <= THRESHOLD_MAX):
            out.append(
                Violation(MODEL_OUT_OF_RANGE, (where, "threshold"), str(self.threshold))
            )
        if self.kind == LIF:
            if not (SHIFT_MIN <= self.shift <= SHIFT_MAX):
                out.append(Violation(MODEL_OUT_OF_RANGE, (where, "shift"), str(self.shift)))
            if not (LEAK_MIN <= self.leak <= LEAK_MAX):
                out.append(Violation(MODEL_OUT_OF_RANGE, (where, "leak"), str(self.leak)))


Synapse = tuple[str, int]


@dataclass
class NetworkDef:
    """Raw user-level network: axons, neurons (model + fanout), outputs.

    Keys are arbitrary strings, unique within their namespace.  Synapse
    lists are ordered multisets: duplicate (pre, post) pairs are legal and
    order is preserved end to end.
    """

    axons: dict[str, list[Synapse]] = field(default_factory=dict)
    neurons: dict[str, tuple[NeuronModelSpec, list[Synapse]]] = field(default_factory=dict)
    outputs: set[str] = field(default_factory=set)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkDef):
            return NotImplemented
        if self.axons != other.axons or self.outputs != other.outputs:
            return False
        if self.neurons.keys() != other.neurons.keys():
            return False
        for key, (model, syns) in self.neurons.items():
            om, os = other.neurons[key]
            if model.canonical() != om.canonical() or syns != os:
                return False
        return True


@dataclass(frozen=True)
class ValidatedNetwork:
    """Structurally checked network with stable integer indices.

    Axon and neuron indices are assigned in lexicographic key order, so
    the same definition always produces the same layout.  Models are
    deduplicated by canonical value and sorted.
    """

    axon_keys: tuple[str, ...]
    neuron_keys: tuple[str, ...]
    models: tuple[NeuronModelSpec, ...]
    neuron_model: tuple[int, ...]
    axon_adj: tuple[tuple[tuple[int, int], ...], ...]
    neuron_adj: tuple[tuple[tuple[int, int], ...], ...]
    outputs: frozenset[int]
    definition: NetworkDef

    @property
    def num_axons(self) -> int:
        return len(self.axon_keys)

    @property
    def num_neurons(self) -> int:
        return len(self.neuron_keys)

    @property
    def num_synapses(self) -> int:
        return sum(len(a) for a in self.axon_adj) + sum(len(a) for a in self.neuron_adj)

    def axon_index(self, key: str) -> int:
        return self._axon_lookup[key]

    def neuron_index(self, key: str) -> int:
        return self._neuron_lookup[key]

    def __post_init__(self):
        object.__setattr__(
            self, "_axon_lookup", {k: i for i, k in enumerate(self.axon_keys)}
        )
        object.__setattr__(
            self, "_neuron_lookup", {k: i for i, k in enumerate(self.neuron_keys)}
        )


def _check_keys(keys: Iterable, namespace: str, out: list[Violation]) -> None:
    for key in keys:
        if not isinstance(key, str):
            out.append(Violation(BAD_KEY, (namespace, repr(key)), "keys must be strings"))


def validate_network(definition: NetworkDef) -> ValidatedNetwork:
    """Check every structural invariant; raise with all violations at once."""
    violations: list[Violation] = []
    axons = definition.axons
    neurons = definition.neurons

    if not axons and not neurons:
        violations.append(Violation(EMPTY_NETWORK, ()))
        raise NetworkValidationError(violations)

    _check_keys(axons.keys(), "axon", violations)
    _check_keys(neurons.keys(), "neuron", violations)
    if violations:
        raise NetworkValidationError(violations)

    def check_adj(pre: str, adj: list[Synapse]) -> None:
        for target, weight in adj:
            if not isinstance(target, str) or target not in neurons:
                violations.append(Violation(DANGLING_TARGET, (target,), f"from {pre!r}"))
            if not isinstance(weight, int) or not (WEIGHT_MIN <= weight <= WEIGHT_MAX):
                violations.append(Violation(WEIGHT_OUT_OF_RANGE, (pre, target), str(weight)))

    for key, adj in axons.items():
        check_adj(key, adj)
    for key, (model, adj) in neurons.items():
        model.check(key, violations)
        check_adj(key, adj)
    for key in definition.outputs:
        if key not in neurons:
            violations.append(Violation(UNKNOWN_OUTPUT, (key,)))

    model_values = sorted({spec.canonical() for spec, _ in neurons.values()})
    if len(model_values) > MAX_MODELS:
        violations.append(Violation(TOO_MANY_MODELS, (len(model_values),)))

    if violations:
        raise NetworkValidationError(violations)

    axon_keys = tuple(sorted(axons))
    neuron_keys = tuple(sorted(neurons))
    neuron_of = {k: i for i, k in enumerate(neuron_keys)}
    model_of = {spec: i for i, spec in enumerate(model_values)}

    neuron_model = tuple(
        model_of[neurons[k][0].canonical()] for k in neuron_keys
    )
    axon_adj = tuple(
        tuple((neuron_of[t], w) for t, w in axons[k]) for k in axon_keys
    )
    neuron_adj = tuple(
        tuple((neuron_of[t], w) for t, w in neurons[k][1]) for k in neuron_keys
    )
    outputs = frozenset(neuron_of[k] for k in definition.outputs)

    return ValidatedNetwork(
        axon_keys=axon_keys,
        neuron_keys=neuron_keys,
        models=tuple(model_values),
        neuron_model=neuron_model,
        axon_adj=axon_adj,
        neuron_adj=neuron_adj,
        outputs=outputs,
        definition=definition,
    )


# --- network document (structured text) ---------------------------------

def serialize_network(definition: NetworkDef | ValidatedNetwork) -> str:
    """Canonical document: sorted keys, canonical model table, byte-deterministic."""
    valid = definition if isinstance(definition, ValidatedNetwork) else validate_network(definition)
    net = valid.definition
    model_of = {spec: i for i, spec in enumerate(valid.models)}

    doc = {
        "models": [
            {"kind": m.kind, "threshold": m.threshold, "shift": m.shift, "leak": m.leak}
            for m in valid.models
        ],
        "axons": {k: [[t, w] for t, w in net.axons[k]] for k in valid.axon_keys},
        "neurons": {
            k: {
                "model": model_of[net.neurons[k][0].canonical()],
                "synapses": [[t, w] for t, w in net.neurons[k][1]],
            }
            for k in valid.neuron_keys
        },
        "outputs": sorted(net.outputs),
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _reject_duplicate_keys(pairs):
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise NetworkValidationError([Violation(DUPLICATE_KEY, (key,))])
        seen.add(key)
    return dict(pairs)


def _expect(cond: bool, path: str, reason: str) -> None:
    if not cond:
        raise SchemaError(path, reason)


def _parse_synapse_list(raw, path: str) -> list[Synapse]:
    _expect(isinstance(raw, list), path, "expected a list of [target, weight] pairs")
    out = []
    for i, item in enumerate(raw):
        here = f"{path}[{i}]"
        _expect(isinstance(item, list) and len(item) == 2, here, "expected [target, weight]")
        target, weight = item
        _expect(isinstance(target, str), here, "target must be a string")
        _expect(isinstance(weight, int) and not isinstance(weight, bool), here, "weight must be an integer")
        out.append((target, weight))
    return out


def parse_network(text: str) -> NetworkDef:
    """Parse a network document; inverse of serialize_network."""
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise NetworkSyntaxError(exc.lineno, exc.msg) from exc

    _expect(isinstance(raw, dict), "$", "document root must be an object")
    for section in ("models", "axons", "neurons", "outputs"):
        _expect(section in raw, "$", f"missing section {section!r}")

    models_raw = raw["models"]
    _expect(isinstance(models_raw, list), "models", "expected a list")
    models: list[NeuronModelSpec] = []
    for i, m in enumerate(models_raw):
        path = f"models[{i}]"
        _expect(isinstance(m, dict), path, "expected an object")
        for fld in ("kind", "threshold", "shift", "leak"):
            _expect(fld in m, path, f"missing field {fld!r}")
        kind = m["kind"]
        _expect(kind in (BINARY, LIF), f"{path}.kind", f"unknown kind {kind!r}")
        for fld in ("threshold", "shift", "leak"):
            _expect(
                isinstance(m[fld], int) and not isinstance(m[fld], bool),
                f"{path}.{fld}",
                "must be an integer",
            )
        _expect(0 <= m["threshold"] <= THRESHOLD_MAX, f"{path}.threshold", "out of range")
        if kind == LIF:
            _expect(SHIFT_MIN <= m["shift"] <= SHIFT_MAX, f"{path}.shift", "out of range [-17, 17]")
            _expect(LEAK_MIN <= m["leak"] <= LEAK_MAX, f"{path}.leak", "out of range [0, 63]")
        spec = NeuronModelSpec(kind, m["threshold"], m["shift"], m["leak"]).canonical()
        models.append(spec)

    axons_raw = raw["axons"]
    _expect(isinstance(axons_raw, dict), "axons", "expected an object")
    axons = {k: _parse_synapse_list(v, f"axons[{k!r}]") for k, v in axons_raw.items()}

    neurons_raw = raw["neurons"]
    _expect(isinstance(neurons_raw, dict), "neurons", "expected an object")
    neurons: dict[str, tuple[NeuronModelSpec, list[Synapse]]] = {}
    for k, v in neurons_raw.items():
        path = f"neurons[{k!r}]"
        _expect(isinstance(v, dict), path, "expected an object")
        _expect("model" in v and "synapses" in v, path, "needs 'model' and 'synapses'")
        idx = v["model"]
        _expect(
            isinstance(idx, int) and not isinstance(idx, bool) and 0 <= idx < len(models),
            f"{path}.model",
            "model index out of range",
        )
        neurons[k] = (models[idx], _parse_synapse_list(v["synapses"], f"{path}.synapses"))

    outputs_raw = raw["outputs"]
    _expect(isinstance(outputs_raw, list), "outputs", "expected a list")
    for i, k in enumerate(outputs_raw):
        _expect(isinstance(k, str), f"outputs[{i}]", "must be a string")

    return NetworkDef(axons=axons, neurons=neurons, outputs=set(outputs_raw))


# --- spike rasters -------------------------------------------------------

class SpikeRaster:
    """Time-indexed spike events: one set of keys per timestep (1 ms each)."""

    def __init__(self, events: Mapping[int, Iterable[str]] | None = None):
        self.events: dict[int, set[str]] = {}
        if events:
            for t, keys in events.items():
                for key in keys:
                    self.add(t, key)

    def add(self, t: int, key: str) -> None:
        if t < 0:
            raise ValueError(f"timestep must be non-negative, got {t}")
        self.events.setdefault(int(t), set()).add(key)

    def keys_at(self, t: int) -> frozenset[str]:
        return frozenset(self.events.get(t, ()))

    def steps(self) -> list[int]:
        return sorted(self.events)

    def max_step(self) -> int:
        return max(self.events) if self.events else -1

    def all_keys(self) -> set[str]:
        out: set[str] = set()
        for keys in self.events.values():
            out |= keys
        return out

    def __len__(self) -> int:
        return sum(len(v) for v in self.events.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpikeRaster):
            return NotImplemented
        return self.events == other.events

    def __repr__(self) -> str:
        return f"SpikeRaster({len(self)} events over {len(self.events)} steps)"

    @staticmethod
    def parse(text: str) -> "SpikeRaster":
        raster = SpikeRaster()
        for lineno, line in enumerate(text.splitlines(), start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            parts = body.split(maxsplit=1)
            if len(parts) != 2:
                raise RasterSyntaxError(lineno, "expected '<timestep> <key>'")
            t_raw, key = parts
            try:
                t = int(t_raw)
            except ValueError:
                raise RasterSyntaxError(lineno, f"bad timestep {t_raw!r}") from None
            if t < 0:
                raise RasterSyntaxError(lineno, "timestep must be non-negative")
            raster.add(t, key)
        return raster

    def serialize(self) -> str:
        lines = []
        for t in sorted(self.events):
            for key in sorted(self.events[t]):
                lines.append(f"{t} {key}")
        return "\n".join(lines) + ("\n" if lines else "")
