"""Backend equivalence and CLI reproducibility."""

import random
import subprocess
import sys

import pytest

import spikebind
from spikebind import Network

from binding_helpers import example_network, random_script

needs_engine = pytest.mark.skipif(
    not spikebind.engine_available(), reason="engine not installed"
)


@needs_engine
class TestBackendEquivalence:
    def test_example_trace_identical(self):
        nets = {b: example_network(backend=b, seed=7) for b in ("engine", "fallback")}
        for t in range(6):
            inputs = ["alpha", "beta"] if t < 2 else []
            results = {
                b: net.step(inputs, membrane_potential=True) for b, net in nets.items()
            }
            assert results["engine"] == results["fallback"], f"step {t}"

    def test_100_random_scripts(self):
        rng = random.Random(0x5EED)
        for case in range(100):
            axons, neurons, outputs, schedule = random_script(rng)
            seed = rng.randrange(1 << 32)
            engine = Network(axons, neurons, outputs, backend="engine", seed=seed)
            fallback = Network(axons, neurons, outputs, backend="fallback", seed=seed)
            for t, inputs in enumerate(schedule):
                got = engine.step(inputs, membrane_potential=True)
                want = fallback.step(inputs, membrane_potential=True)
                assert got == want, f"case {case} diverged at step {t}"

    def test_equivalence_survives_weight_edits(self):
        rng = random.Random(0xED17)
        for _ in range(10):
            axons, neurons, outputs, schedule = random_script(rng, max_neurons=15)
            seed = rng.randrange(1 << 32)
            engine = Network(axons, neurons, outputs, backend="engine", seed=seed)
            fallback = Network(axons, neurons, outputs, backend="fallback", seed=seed)
            edits = [
                (pre, post)
                for pre, adj in list(axons.items()) + list(neurons.items())
                for post, _ in (adj if isinstance(adj, list) else adj[1])
            ]
            for t, inputs in enumerate(schedule):
                if edits and t % 2 == 1:
                    pre, post = edits[t % len(edits)]
                    w = rng.randint(-12, 12)
                    try:
                        engine.write_synapse(pre, post, w)
                        fallback.write_synapse(pre, post, w)
                    except KeyError:
                        pass  # shadowed duplicate; both sides agree it is absent
                assert engine.step(inputs, membrane_potential=True) == fallback.step(
                    inputs, membrane_potential=True
                )

    def test_reads_agree(self):
        rng = random.Random(0xAB)
        for _ in range(20):
            axons, neurons, outputs, _ = random_script(rng, max_neurons=12)
            engine = Network(axons, neurons, outputs, backend="engine")
            fallback = Network(axons, neurons, outputs, backend="fallback")
            for pre, adj in list(axons.items()) + [
                (k, syn) for k, (_m, syn) in neurons.items()
            ]:
                for post, _w in adj:
                    assert engine.read_synapse(pre, post) == fallback.read_synapse(
                        pre, post
                    )


@needs_engine
class TestCliReproducibility:
    def test_step_results_reproducible_via_cli(self, tmp_path):
        # The binding adds no semantics: serializing the network and replaying
        # the schedule through the command-line runtime gives the same spikes.
        rng = random.Random(0xC11)
        for case in range(3):
            axons, neurons, outputs, schedule = random_script(rng, max_neurons=12, noise=False)
            net = Network(axons, neurons, outputs, backend="engine", seed=0)

            observed = []
            for inputs in schedule:
                observed.append(net.step(inputs))

            net_path = tmp_path / f"net{case}.json"
            net_path.write_text(net.serialize(), encoding="utf-8")
            spikes_path = tmp_path / f"in{case}.spikes"
            spikes_path.write_text(
                "".join(
                    f"{t} {key}\n" for t, inputs in enumerate(schedule) for key in inputs
                ),
                encoding="utf-8",
            )
            img_path = tmp_path / f"net{case}.img"
            subprocess.run(
                [sys.executable, "-m", "spikecore.cli", "compile",
                 "--net", str(net_path), "-o", str(img_path)],
                check=True, capture_output=True,
            )
            proc = subprocess.run(
                [sys.executable, "-m", "spikecore.cli", "run",
                 "--img", str(img_path), "--spikes", str(spikes_path),
                 "--steps", str(len(schedule)), "--seed", "0"],
                check=True, capture_output=True, text=True,
            )
            replayed: dict[int, set] = {}
            for line in proc.stdout.splitlines():
                t, key = line.split(maxsplit=1)
                replayed.setdefault(int(t), set()).add(key)
            scripted = {
                t: set(spiked) for t, spiked in enumerate(observed) if spiked
            }
            assert replayed == scripted


class TestFallbackStandalone:
    def test_fallback_deterministic(self):
        rng = random.Random(3)
        axons, neurons, outputs, schedule = random_script(rng)
        a = Network(axons, neurons, outputs, backend="fallback", seed=5)
        b = Network(axons, neurons, outputs, backend="fallback", seed=5)
        for inputs in schedule:
            assert a.step(inputs, membrane_potential=True) == b.step(
                inputs, membrane_potential=True
            )

    def test_fallback_seed_sensitivity_with_noise(self):
        from spikebind import LIF

        net = {"n": (LIF(threshold=2, shift=0, leak=63), [])}
        a = Network(axons={"x": [("n", 1)]}, neurons=net, outputs=["n"],
                    backend="fallback", seed=1)
        b = Network(axons={"x": [("n", 1)]}, neurons=net, outputs=["n"],
                    backend="fallback", seed=2)
        outs_a = [a.step(["x"]) for _ in range(40)]
        outs_b = [b.step(["x"]) for _ in range(40)]
        assert outs_a != outs_b
