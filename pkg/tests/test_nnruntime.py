import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sortnetc.nnruntime import DenseLayer, DenseNetwork, forward, parameter_count, relu, sigmoid


def test_identity_layer():
    net = DenseNetwork([DenseLayer(np.eye(3), np.zeros(3), "identity")])
    x = np.array([0.25, -1.5, 7.0])
    assert np.array_equal(net.forward(x), x)


def test_single_relu_neuron():
    net = DenseNetwork([DenseLayer([[1.0, -1.0]], [0.0], "relu")])
    assert net.forward([0.2, 0.7]).tolist() == [0.0]


def test_empty_network():
    net = DenseNetwork([])
    assert net.parameter_count() == 0
    assert net.parameter_count("weights_only") == 0
    assert np.array_equal(net.forward([1.0, 2.0]), [1.0, 2.0])


def test_parameter_modes():
    net = DenseNetwork([DenseLayer(np.ones((4, 3)), np.zeros(4)), DenseLayer(np.ones((2, 4)), np.zeros(2), "identity")])
    assert parameter_count(net, "weights_only") == 12 + 8
    assert parameter_count(net) == 12 + 8 + 4 + 2


def test_dimension_checks():
    with pytest.raises(ValueError):
        DenseNetwork([DenseLayer(np.ones((4, 3)), np.zeros(4)), DenseLayer(np.ones((2, 5)), np.zeros(2))])
    with pytest.raises(ValueError):
        DenseLayer(np.ones((2, 3)), np.zeros(3))
    with pytest.raises(ValueError):
        DenseLayer(np.ones((2, 3)), np.zeros(2), "tanh")
    net = DenseNetwork([DenseLayer(np.ones((2, 3)), np.zeros(2))])
    with pytest.raises(ValueError):
        net.forward([1.0, 2.0])


def test_batch_equals_rows():
    rng = np.random.default_rng(0)
    net = DenseNetwork([DenseLayer(rng.normal(size=(5, 3)), rng.normal(size=5)), DenseLayer(rng.normal(size=(2, 5)), rng.normal(size=2), "sigmoid")])
    X = rng.normal(size=(10, 3))
    batch = forward(net, X)
    assert batch.shape == (10, 2)
    for row, out in zip(X, batch):
        # matrix and vector products may take different BLAS paths
        np.testing.assert_allclose(net.forward(row), out, rtol=1e-13)


def test_activations():
    assert relu(np.array([-1.0, 0.0, 2.0])).tolist() == [0.0, 0.0, 2.0]
    s = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    assert s.tolist() == [0.0, 0.5, 1.0]
    assert np.all(np.isfinite(s))


@given(st.lists(st.integers(1, 6), min_size=2, max_size=5), st.integers(0, 2**32 - 1))
def test_json_round_trip(sizes, seed):
    rng = np.random.default_rng(seed)
    acts = ["relu", "identity", "sigmoid"]
    net = DenseNetwork(
        [DenseLayer(rng.normal(size=(b, a)), rng.normal(size=b), acts[i % 3]) for i, (a, b) in enumerate(zip(sizes, sizes[1:]))]
    )
    again = DenseNetwork.from_dict(json.loads(json.dumps(net.to_dict())))
    assert again.to_dict() == net.to_dict()
    X = rng.normal(size=(4, sizes[0]))
    np.testing.assert_array_equal(again.forward(X), net.forward(X))


def test_save_load_format(tmp_path):
    net = DenseNetwork([DenseLayer([[1.0, 2.0]], [0.5], "relu")])
    net.save(tmp_path / "m.json")
    data = json.loads((tmp_path / "m.json").read_text())
    assert data == {"layers": [{"activation": "relu", "weights": [[1.0, 2.0]], "biases": [0.5]}]}
    assert DenseNetwork.load(tmp_path / "m.json").to_dict() == data


def test_copy_independent():
    net = DenseNetwork([DenseLayer([[1.0]], [0.0])])
    c = net.copy()
    c.layers[0].weights[0, 0] = 5.0
    assert net.layers[0].weights[0, 0] == 1.0
