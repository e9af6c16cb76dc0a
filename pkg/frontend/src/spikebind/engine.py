"""Thin bridge onto the native emulator package.

Builds the network definition, compiles it to a memory image, and steps
the event-driven runtime in place.  Import is deferred so this module is
only touched when the engine package is actually present.
"""

from __future__ import annotations


class EngineBackend:
    def __init__(self, build, seed: int, cores: int = 1):
        import spikecore as sc

        def spec(canonical: tuple) -> sc.NeuronModelSpec:
            kind, threshold, shift, leak = canonical
            if kind == "binary":
                return sc.NeuronModelSpec.binary(threshold)
            return sc.NeuronModelSpec.lif(threshold, shift, leak)

        definition = sc.NetworkDef(
            axons={k: list(v) for k, v in build.axon_adj.items()},
            neurons={
                k: (spec(build.model_of[k]), list(build.neuron_adj[k]))
                for k in build.neuron_keys
            },
            outputs=set(build.outputs),
        )
        self._sc = sc
        self.validated = sc.validate_network(definition)
        self.system = sc.compile_system(self.validated, cores=cores)
        self.runner = sc.System(self.system, seed=seed)

    def step(self, inputs: set[str]) -> tuple[list[str], dict[str, int]]:
        fired = self.runner.step(sorted(inputs))
        spiked = []
        for core_id, indices in enumerate(fired):
            core = self.runner.cores[core_id]
            for i in indices:
                if core.output_mask[i]:
                    spiked.append(core.image.neuron_keys[i])
        return sorted(spiked), self.runner.membranes()

    def membranes(self) -> dict[str, int]:
        return self.runner.membranes()

    def read_synapse(self, pre: str, post: str) -> int:
        try:
            return self.runner.read_synapse(pre, post)
        except self._sc.NoSuchSynapse:
            raise KeyError((pre, post)) from None

    def write_synapse(self, pre: str, post: str, weight: int) -> None:
        try:
            self.runner.write_synapse(pre, post, weight)
        except self._sc.NoSuchSynapse:
            raise KeyError((pre, post)) from None
