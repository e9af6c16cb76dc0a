"""Core runtime tests: neuron arithmetic, two-phase stepping, counters."""

import random

import numpy as np
import pytest

import spikecore as sc
from spikecore import errors, rand
from spikecore.oracle import oracle_run
from spikecore.runtime import neuron_update, trunc_div_pow2

from conftest import (
    compile_checked,
    example4,
    example4_raster,
    random_network,
    random_raster,
)

INT32_MAX = (1 << 31) - 1


class TestNeuronUpdate:
    def test_leak_1024_by_3(self):
        model = sc.NeuronModelSpec.lif(threshold=10**9, leak=3)
        v, fired = neuron_update(1024, model)
        assert not fired
        assert v == 1024 - 128 == 896

    def test_threshold_is_strict(self):
        model = sc.NeuronModelSpec.lif(threshold=3, leak=63)
        assert neuron_update(3, model) == (3, False)
        assert neuron_update(4, model) == (0, True)

    def test_binary_resets_always(self):
        model = sc.NeuronModelSpec.binary(3)
        assert neuron_update(5, model) == (0, True)
        assert neuron_update(2, model) == (0, False)
        assert neuron_update(-7, model) == (0, False)

    def test_leak_zero_is_fixed_point_at_zero(self):
        model = sc.NeuronModelSpec.lif(threshold=100, leak=0)
        assert neuron_update(0, model) == (0, False)
        # leak=0 drains everything: v - v/2^0 = 0.
        assert neuron_update(37, model) == (0, False)

    def test_leak_63_identity_in_32_bits(self):
        model = sc.NeuronModelSpec.lif(threshold=INT32_MAX, leak=63)
        for v in (1, -1, 12345, -98765, INT32_MAX - 1, -(1 << 31)):
            got, fired = neuron_update(v, model)
            assert not fired
            assert got == v

    def test_negative_membrane_decays_toward_zero(self):
        model = sc.NeuronModelSpec.lif(threshold=100, leak=1)
        assert neuron_update(-10, model) == (-5, False)
        assert neuron_update(-1, model) == (-1, False)  # trunc(-0.5) = 0

    def test_trunc_div_matches_python_trunc(self):
        rng = random.Random(0)
        for _ in range(500):
            v = rng.randint(-(1 << 31), (1 << 31) - 1)
            leak = rng.randint(0, 63)
            assert trunc_div_pow2(v, leak) == int(v / (1 << leak))


class TestNoise:
    def test_shift_minus17_always_zero(self):
        for s in (-65536, -1, 0, 1, 65535):
            assert rand.apply_shift(s, -17) == 0

    def test_shift_minus16(self):
        assert rand.apply_shift(-65536, -16) == -1
        assert rand.apply_shift(65535, -16) == 0

    def test_shift_zero_identity(self):
        for s in (-65536, -12345, 0, 7, 65535):
            assert rand.apply_shift(s, 0) == s

    def test_positive_shift_saturates(self):
        assert rand.apply_shift(65535, 17) == INT32_MAX
        assert rand.apply_shift(-65536, 17) == -(1 << 31)
        assert rand.apply_shift(3, 2) == 12

    def test_vector_matches_scalar(self):
        rng = random.Random(4)
        samples = np.array([rng.randint(-65536, 65535) for _ in range(200)], dtype=np.int64)
        for shift in (-17, -8, -1, 0, 3, 17):
            vec = rand.apply_shift_vec(samples, shift)
            for s, out in zip(samples, vec):
                assert int(out) == rand.apply_shift(int(s), shift)

    def test_stream_deterministic_and_in_range(self):
        a = rand.NoiseStream(seed=42, global_index=7)
        b = rand.NoiseStream(seed=42, global_index=7)
        c = rand.NoiseStream(seed=42, global_index=8)
        xs = [a.next_sample() for _ in range(100)]
        assert xs == [b.next_sample() for _ in range(100)]
        assert xs != [c.next_sample() for _ in range(100)]
        assert all(-(1 << 16) <= x < (1 << 16) for x in xs)

    def test_noise_op(self):
        stream = rand.NoiseStream(seed=1, global_index=0)
        assert rand.noise(stream, -17) == 0


def build_core(net: sc.NetworkDef, seed: int = 0) -> tuple[sc.Core, sc.ValidatedNetwork]:
    valid = sc.validate_network(net)
    system = compile_checked(valid)
    return sc.Core(system.images[0], seed=seed), valid


class TestStep:
    def test_example4_trace(self):
        core, _ = build_core(example4())
        res = core.run(example4_raster(), 3, collect_membranes=True)
        assert res.raster.events == {1: {"a", "b"}}
        assert res.membrane_traces[0] == {"a": 3, "b": 3, "c": 2, "d": 0}
        assert res.membrane_traces[1] == {"a": 0, "b": 0, "c": 0, "d": 0}
        assert res.membrane_traces[2] == {"a": 0, "b": 1, "c": 0, "d": 1}

    def test_single_axon_hand_trace(self):
        model = sc.NeuronModelSpec.lif(threshold=3, leak=63)
        net = sc.NetworkDef(
            axons={"in": [("n", 7)]}, neurons={"n": (model, [])}, outputs={"n"}
        )
        core, _ = build_core(net)
        fired = core.step([0])
        assert list(fired) == [0]
        assert core.counters.locator_reads == 1
        assert core.counters.synapse_row_reads == core.image.locator("axon", 0).row_count
        assert core.membrane[0] == 0  # reset after firing

    def test_empty_inputs_only_leak(self):
        model = sc.NeuronModelSpec.lif(threshold=100, leak=1)
        net = sc.NetworkDef(
            axons={"in": [("n", 64)]}, neurons={"n": (model, [])}, outputs={"n"}
        )
        core, _ = build_core(net)
        core.step([0])
        assert core.membrane[0] == 32  # 64 leaked once
        before = core.counters.total()
        core.step([])
        assert core.membrane[0] == 16
        assert core.counters.total() == before  # silent step costs nothing

    def test_one_step_delay_chain(self):
        model = sc.NeuronModelSpec.lif(threshold=1, leak=63)
        net = sc.NetworkDef(
            axons={"in": [("n0", 10)]},
            neurons={
                "n0": (model, [("n1", 10)]),
                "n1": (model, [("n2", 10)]),
                "n2": (model, []),
            },
            outputs={"n0", "n1", "n2"},
        )
        core, _ = build_core(net)
        res = core.run(sc.SpikeRaster({0: ["in"]}), 4)
        assert res.raster.events == {0: {"n0"}, 1: {"n1"}, 2: {"n2"}}

    def test_input_out_of_range(self):
        core, _ = build_core(example4())
        with pytest.raises(errors.InputOutOfRange):
            core.step([99])

    def test_locator_reads_track_events_exactly(self):
        rng = random.Random(8)
        valid = sc.validate_network(random_network(rng, max_neurons=40))
        system = compile_checked(valid)
        core = sc.Core(system.images[0], seed=3)
        raster = random_raster(rng, valid, 30, rate=0.5)
        prev_fired = 0
        for t in range(30):
            inputs = sorted(core.axon_id(k) for k in raster.keys_at(t))
            before = core.counters.locator_reads
            fired = core.step(inputs)
            assert core.counters.locator_reads - before == prev_fired + len(inputs)
            prev_fired = len(fired)

    def test_binary_carries_no_state(self):
        model = sc.NeuronModelSpec.binary(5)
        net = sc.NetworkDef(
            axons={"in": [("n", 3)]}, neurons={"n": (model, [])}, outputs={"n"}
        )
        core, _ = build_core(net)
        for _ in range(10):
            core.step([0])
            assert core.membrane[0] == 0  # 3 < 5 never fires, never accumulates
        fired = core.step([0])
        assert len(fired) == 0

    def test_run_zero_steps(self):
        core, _ = build_core(example4())
        res = core.run(example4_raster(), 0)
        assert res.raster == sc.SpikeRaster()
        assert res.per_step_accesses == []

    def test_unknown_raster_key(self):
        core, _ = build_core(example4())
        with pytest.raises(errors.UnknownKey):
            core.run(sc.SpikeRaster({0: ["nope"]}), 1)

    def test_saturation_matches_oracle(self):
        model = sc.NeuronModelSpec.lif(threshold=INT32_MAX, leak=63)
        net = sc.NetworkDef(
            axons={f"x{i:03d}": [("n", 32767)] for i in range(200)},
            neurons={"n": (model, [])},
            outputs={"n"},
        )
        core, valid = build_core(net)
        raster = sc.SpikeRaster(
            {t: [f"x{i:03d}" for i in range(200)] for t in range(400)}
        )
        res = core.run(raster, 400)
        gold = oracle_run(valid, raster, 400)
        assert res.final_membranes == gold.final_membranes
        assert res.final_membranes["n"] == INT32_MAX  # pinned at the rail


class TestSynapseAccess:
    def test_read_example4(self):
        core, _ = build_core(example4())
        assert core.read_synapse("a", "b") == 1
        assert core.read_synapse("alpha", "c") == 2
        assert core.read_synapse("d", "c") == 1

    def test_read_missing(self):
        core, _ = build_core(example4())
        with pytest.raises(errors.NoSuchSynapse):
            core.read_synapse("a", "c")
        with pytest.raises(errors.NoSuchSynapse):
            core.read_synapse("ghost", "a")
        with pytest.raises(errors.NoSuchSynapse):
            core.read_synapse("a", "ghost")

    def test_filler_entries_are_not_synapses(self):
        core, _ = build_core(example4())
        # 'b' has a filler segment whose entries name targets 0..15; none of
        # them are user synapses.
        for post in ("a", "b", "c", "d"):
            with pytest.raises(errors.NoSuchSynapse):
                core.read_synapse("b", post)

    def test_write_then_read(self):
        core, _ = build_core(example4())
        w = core.read_synapse("a", "b")
        core.write_synapse("a", "b", w + 1)
        assert core.read_synapse("a", "b") == w + 1
        assert core.counters.image_writes == 1

    def test_write_range_checked(self):
        core, _ = build_core(example4())
        with pytest.raises(ValueError):
            core.write_synapse("a", "b", 1 << 15)

    def test_write_changes_behaviour_proportionally(self):
        model = sc.NeuronModelSpec.lif(threshold=10**6, leak=63)
        net = sc.NetworkDef(
            axons={"in": [("src", 10)]},
            neurons={"src": (model, [("dst", 6)]), "dst": (model, [])},
            outputs={"dst"},
        )
        # Doubling the weight doubles the next-step membrane contribution.
        def contribution(weight: int) -> int:
            core, _ = build_core(net)
            core.write_synapse("src", "dst", weight)
            core.membrane[core.image.neuron_keys.index("src")] = 0
            core.fired_prev = np.array(
                [core.image.neuron_keys.index("src")], dtype=np.int64
            )
            core.step([])
            return int(core.membrane[core.image.neuron_keys.index("dst")])

        assert contribution(12) == 2 * contribution(6)

    def test_write_preserves_topology_and_flags(self):
        core, _ = build_core(example4())
        image = core.image
        a = image.neuron_keys.index("a")
        before = [(v, o, t) for v, o, t, _ in image.entries("neuron", a)]
        core.write_synapse("a", "b", -5)
        after = [(v, o, t) for v, o, t, _ in image.entries("neuron", a)]
        assert before == after
        assert core.read_synapse("a", "b") == -5

    def test_duplicate_pair_reads_first_occurrence(self):
        model = sc.NeuronModelSpec.lif(threshold=100, leak=63)
        net = sc.NetworkDef(
            neurons={"s": (model, [("t", 2), ("t", 9)]), "t": (model, [])},
            outputs={"t"},
        )
        core, _ = build_core(net)
        assert core.read_synapse("s", "t") == 2
        core.write_synapse("s", "t", 4)
        assert core.read_synapse("s", "t") == 4
        # Second copy untouched; both still accumulate.
        s = core.image.neuron_keys.index("s")
        weights = sorted(w for _, w in core.image.source_synapses("neuron", s))
        assert weights == [4, 9]


class TestDeterminism:
    def test_same_seed_same_everything(self):
        rng = random.Random(55)
        net = random_network(rng, max_neurons=60, noise=True)
        valid = sc.validate_network(net)
        system = compile_checked(valid)
        raster = random_raster(rng, valid, 40)

        runs = []
        for _ in range(2):
            core = sc.Core(system.images[0], seed=11)
            res = core.run(raster, 40)
            runs.append(
                (
                    res.raster.serialize(),
                    res.final_membranes,
                    res.counters.locator_reads,
                    res.counters.synapse_row_reads,
                    res.per_step_accesses,
                )
            )
        assert runs[0] == runs[1]

    def test_different_seed_diverges_with_noise(self):
        model = sc.NeuronModelSpec.lif(threshold=2, shift=0, leak=63)
        net = sc.NetworkDef(
            axons={"in": [("n", 1)]}, neurons={"n": (model, [])}, outputs={"n"}
        )
        valid = sc.validate_network(net)
        system = compile_checked(valid)
        raster = sc.SpikeRaster({t: ["in"] for t in range(50)})
        a = sc.Core(system.images[0], seed=1).run(raster, 50)
        b = sc.Core(system.images[0], seed=2).run(raster, 50)
        assert a.raster != b.raster or a.final_membranes != b.final_membranes
