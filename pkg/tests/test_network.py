"""Network definition, validation, and document round-trip tests."""

import random

import pytest
from hypothesis import given, settings, strategies as st

import spikecore as sc
from spikecore import errors

from conftest import example4, random_network


class TestValidation:
    def test_example4_indices(self):
        valid = sc.validate_network(example4())
        assert valid.num_axons == 2
        assert valid.num_neurons == 4
        assert valid.axon_keys == ("alpha", "beta")
        assert valid.neuron_keys == ("a", "b", "c", "d")
        # Two distinct models, sorted by (kind, threshold, shift, leak).
        assert len(valid.models) == 2
        assert valid.models[0].threshold == 3
        assert valid.models[1].threshold == 5
        assert valid.neuron_model == (0, 0, 0, 1)
        assert valid.outputs == frozenset({0, 1})

    def test_dangling_target(self):
        net = example4()
        net.neurons["a"][1].append(("z", 1))
        with pytest.raises(errors.NetworkValidationError) as exc:
            sc.validate_network(net)
        assert errors.DANGLING_TARGET in exc.value.kinds()
        assert any(v.subject == ("z",) for v in exc.value.violations)

    def test_empty_network(self):
        with pytest.raises(errors.NetworkValidationError) as exc:
            sc.validate_network(sc.NetworkDef())
        assert exc.value.kinds() == {errors.EMPTY_NETWORK}

    def test_unknown_output(self):
        net = example4()
        net.outputs.add("ghost")
        with pytest.raises(errors.NetworkValidationError) as exc:
            sc.validate_network(net)
        assert errors.UNKNOWN_OUTPUT in exc.value.kinds()

    def test_weight_out_of_range(self):
        net = example4()
        net.axons["alpha"].append(("a", 1 << 15))
        with pytest.raises(errors.NetworkValidationError) as exc:
            sc.validate_network(net)
        assert errors.WEIGHT_OUT_OF_RANGE in exc.value.kinds()

    def test_model_out_of_range(self):
        bad = sc.NeuronModelSpec.lif(threshold=1, shift=-18)
        net = sc.NetworkDef(neurons={"a": (bad, [])}, outputs=set())
        with pytest.raises(errors.NetworkValidationError) as exc:
            sc.validate_network(net)
        assert errors.MODEL_OUT_OF_RANGE in exc.value.kinds()

    def test_all_violations_reported_at_once(self):
        net = example4()
        net.neurons["a"][1].append(("z", 1))
        net.axons["alpha"].append(("a", 99999))
        net.outputs.add("ghost")
        with pytest.raises(errors.NetworkValidationError) as exc:
            sc.validate_network(net)
        assert {
            errors.DANGLING_TARGET,
            errors.WEIGHT_OUT_OF_RANGE,
            errors.UNKNOWN_OUTPUT,
        } <= exc.value.kinds()

    def test_self_synapse_and_duplicate_pair_allowed(self):
        n1 = sc.NeuronModelSpec.lif(3)
        net = sc.NetworkDef(
            neurons={"a": (n1, [("a", 1), ("a", 1)])}, outputs={"a"}
        )
        valid = sc.validate_network(net)
        assert valid.neuron_adj[0] == ((0, 1), (0, 1))

    def test_minimal_single_neuron(self):
        net = sc.NetworkDef(neurons={"only": (sc.NeuronModelSpec.binary(1), [])})
        valid = sc.validate_network(net)
        assert valid.num_neurons == 1
        assert valid.num_axons == 0

    def test_index_assignment_is_key_sorted_bijection(self):
        rng = random.Random(7)
        for _ in range(20):
            net = random_network(rng, max_neurons=40)
            valid = sc.validate_network(net)
            assert list(valid.neuron_keys) == sorted(net.neurons)
            assert list(valid.axon_keys) == sorted(net.axons)
            assert {valid.neuron_index(k) for k in valid.neuron_keys} == set(
                range(valid.num_neurons)
            )

    def test_mutated_network_is_rejected(self):
        # Corrupt one field at a time; validation must catch each mutation.
        mutations = [
            lambda n: n.neurons["a"][1].append(("nope", 2)),
            lambda n: n.axons["beta"].append(("b", -(1 << 15) - 1)),
            lambda n: n.outputs.add("nope"),
            lambda n: n.neurons.update(
                {"bad": (sc.NeuronModelSpec(sc.LIF, 1, 0, 64), [])}
            ),
            lambda n: n.neurons.update(
                {"bad": (sc.NeuronModelSpec(sc.LIF, -1, 0, 1), [])}
            ),
        ]
        for mutate in mutations:
            net = example4()
            mutate(net)
            with pytest.raises(errors.NetworkValidationError):
                sc.validate_network(net)


class TestDocument:
    def test_round_trip_example4(self):
        net = example4()
        text = sc.serialize_network(net)
        back = sc.parse_network(text)
        assert back == net
        assert sc.serialize_network(back) == text

    def test_canonical_bytes_insertion_order(self):
        net = example4()
        shuffled = sc.NetworkDef(
            axons=dict(reversed(net.axons.items())),
            neurons=dict(reversed(net.neurons.items())),
            outputs=set(net.outputs),
        )
        assert sc.serialize_network(net) == sc.serialize_network(shuffled)

    def test_negative_leak_is_schema_error(self):
        text = sc.serialize_network(example4()).replace('"leak": 1', '"leak": -1')
        with pytest.raises(errors.SchemaError) as exc:
            sc.parse_network(text)
        assert "leak" in str(exc.value)

    def test_syntax_error_carries_line(self):
        with pytest.raises(errors.NetworkSyntaxError) as exc:
            sc.parse_network('{\n  "models": [,]\n}')
        assert exc.value.line == 2

    def test_duplicate_json_key_rejected(self):
        text = '{"models": [], "axons": {"x": [], "x": []}, "neurons": {}, "outputs": []}'
        with pytest.raises(errors.NetworkValidationError) as exc:
            sc.parse_network(text)
        assert errors.DUPLICATE_KEY in exc.value.kinds()

    def test_missing_section(self):
        with pytest.raises(errors.SchemaError):
            sc.parse_network('{"models": [], "axons": {}, "neurons": {}}')

    def test_round_trip_generated(self):
        rng = random.Random(2024)
        for _ in range(25):
            net = random_network(rng, max_neurons=120)
            text = sc.serialize_network(net)
            assert sc.parse_network(text) == net

    def test_round_trip_1000_neurons(self):
        rng = random.Random(5)
        net = random_network(rng, max_neurons=1000)
        while len(net.neurons) < 1000:
            net = random_network(rng, max_neurons=1000)
        assert sc.parse_network(sc.serialize_network(net)) == net


@st.composite
def tiny_networks(draw):
    n = draw(st.integers(1, 12))
    keys = [f"n{i}" for i in range(n)]
    models = [
        sc.NeuronModelSpec.lif(
            draw(st.integers(0, 50)), draw(st.integers(-17, 17)), draw(st.integers(0, 63))
        ),
        sc.NeuronModelSpec.binary(draw(st.integers(0, 50))),
    ]
    neurons = {}
    for k in keys:
        fan = draw(
            st.lists(
                st.tuples(st.sampled_from(keys), st.integers(-(1 << 15), (1 << 15) - 1)),
                max_size=5,
            )
        )
        neurons[k] = (models[draw(st.integers(0, 1))], fan)
    axons = {}
    for i in range(draw(st.integers(0, 3))):
        fan = draw(
            st.lists(st.tuples(st.sampled_from(keys), st.integers(-100, 100)), max_size=4)
        )
        axons[f"x{i}"] = fan
    outputs = set(draw(st.lists(st.sampled_from(keys), min_size=1, unique=True)))
    return sc.NetworkDef(axons=axons, neurons=neurons, outputs=outputs)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(tiny_networks())
    def test_parse_serialize_identity(self, net):
        assert sc.parse_network(sc.serialize_network(net)) == net

    @settings(max_examples=60, deadline=None)
    @given(tiny_networks())
    def test_validation_bijection(self, net):
        valid = sc.validate_network(net)
        assert sorted(valid.neuron_keys) == list(valid.neuron_keys)
        assert len(set(valid.neuron_keys)) == valid.num_neurons


class TestRaster:
    def test_parse_serialize(self):
        text = "# comment\n\n3 alpha\n1 beta\n1 alpha\n"
        raster = sc.SpikeRaster.parse(text)
        assert raster.keys_at(1) == {"alpha", "beta"}
        assert raster.keys_at(3) == {"alpha"}
        assert raster.serialize() == "1 alpha\n1 beta\n3 alpha\n"
        assert sc.SpikeRaster.parse(raster.serialize()) == raster

    def test_bad_lines(self):
        with pytest.raises(errors.RasterSyntaxError):
            sc.SpikeRaster.parse("oops\n")
        with pytest.raises(errors.RasterSyntaxError):
            sc.SpikeRaster.parse("-1 alpha\n")
        with pytest.raises(errors.RasterSyntaxError):
            sc.SpikeRaster.parse("x alpha\n")

    def test_steps_sorted_unique(self):
        raster = sc.SpikeRaster({5: ["a"], 2: ["b", "a"]})
        assert raster.steps() == [2, 5]
        assert len(raster) == 3
