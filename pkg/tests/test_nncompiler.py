import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ulp_close
from sortnetc.nncompiler import (
    compile_network,
    compile_single_comparator,
    estimate_parameters,
    feedforward_parameters,
    hidden_width,
    iterative_parameters,
)
from sortnetc.sortnet import SortingNetwork, apply_batch, make_brick_network, make_merge_network, make_optimal_small

CASES = [("optimal", x) for x in range(2, 5)] + [(k, x) for k in ("merge", "brick") for x in range(2, 9)]
MAKERS = {"optimal": make_optimal_small, "merge": make_merge_network, "brick": make_brick_network}


def binary_inputs(x):
    return np.array(list(itertools.product((0.0, 1.0), repeat=x)))


def test_three_sorter_unpruned_90():
    model = compile_network(make_optimal_small(3))
    assert model.parameter_count("weights_only") == 2 * 3 * math.ceil(4.5) * 3 == 90


def test_three_sorter_pruned_72():
    model = compile_network(make_optimal_small(3), prune=True)
    assert model.parameter_count("weights_only") == 72
    assert len(model.layers) == 6
    assert model.widths == [3, 4, 3, 4, 3, 4, 3]


def test_five_sorter_pruned():
    # the merge network for five wires has 9 comparators in 5 layers
    net = make_merge_network(5)
    model = compile_network(net, prune=True)
    expected = sum(2 * 5 * (5 + len(l)) for l in net.layers)
    assert model.parameter_count("weights_only") == expected


def test_identity_network_two_wires():
    net = SortingNetwork(2, ((),))
    model = compile_network(net)
    X = np.random.default_rng(0).random((100, 2))
    np.testing.assert_array_equal(model.forward(X), X)


def test_single_comparator():
    c = compile_single_comparator()
    assert c.widths == [2, 3, 2]
    assert c.parameter_count("weights_only") == 12
    assert c.forward([0.2, 0.7]).tolist() == [0.2, 0.7]
    assert c.forward([0.7, 0.2]).tolist() == [0.2, 0.7]
    assert c.forward([0.5, 0.5]).tolist() == [0.5, 0.5]
    for a, b in itertools.product((0.0, 1.0), repeat=2):
        assert c.forward([a, b]).tolist() == sorted([a, b])


def test_gadget_negative_domain_not_sorted():
    out = compile_single_comparator().forward([-1.0, -2.0])
    assert out.tolist() != [-2.0, -1.0]


@pytest.mark.parametrize("kind,x", CASES)
def test_binary_bit_exact(kind, x):
    net = MAKERS[kind](x)
    X = binary_inputs(x)
    for prune in (False, True):
        assert np.array_equal(compile_network(net, prune).forward(X), apply_batch(net, X))


@pytest.mark.parametrize("kind,x", CASES)
def test_uniform_within_4_ulp(kind, x):
    net = MAKERS[kind](x)
    X = np.random.default_rng(x).random((1000, x))
    assert ulp_close(compile_network(net).forward(X), apply_batch(net, X))


@pytest.mark.parametrize("kind,x", CASES)
def test_off_grid_within_4_ulp_of_scale(kind, x):
    net = MAKERS[kind](x)
    X = np.random.default_rng(100 + x).random((1000, x)) ** 3 / 3
    scale = np.abs(X).max(axis=1, keepdims=True)
    assert ulp_close(compile_network(net).forward(X), apply_batch(net, X), scale=scale)


@pytest.mark.parametrize("kind,x", CASES)
def test_parameter_formula(kind, x):
    net = MAKERS[kind](x)
    assert compile_network(net).parameter_count("weights_only") == feedforward_parameters(x, net.depth)
    assert feedforward_parameters(x, net.depth) == 2 * net.depth * math.ceil(1.5 * x) * x


@pytest.mark.parametrize("kind,x", CASES)
def test_pruning_soundness(kind, x):
    net = MAKERS[kind](x)
    full, pruned = compile_network(net), compile_network(net, prune=True)
    X = np.vstack([binary_inputs(x), np.random.default_rng(3).random((200, x))])
    assert np.array_equal(full.forward(X), pruned.forward(X))
    assert pruned.parameter_count() <= full.parameter_count()


@given(st.integers(2, 8), st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_homogeneity(x, s, seed):
    # exact when s is a power of two; otherwise within rounding of the scaled values
    model = compile_network(make_merge_network(x))
    X = np.random.default_rng(seed).random((20, x))
    p = 2.0 ** round(math.log2(s))
    assert np.array_equal(model.forward(p * X), p * model.forward(X))
    assert np.allclose(model.forward(s * X), s * model.forward(X), rtol=1e-12, atol=0)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_output_is_permutation_within_ulp(x, seed):
    X = np.random.default_rng(seed).random((50, x))
    out = compile_network(make_merge_network(x)).forward(X)
    assert ulp_close(out, np.sort(X, axis=1))


def test_hidden_width():
    assert [hidden_width(x) for x in (2, 3, 4, 5, 784)] == [3, 5, 6, 8, 1176]


def test_estimate_attention():
    sc = estimate_parameters(224, 8, True, 10)
    assert sc.x == 784
    assert sc.p_feedforward == 18_439_680
    assert sc.p_iterative == 4 * 1176 * 784 == 3_687_936


def test_estimate_no_attention():
    sc = estimate_parameters(224, 8, False, 16)
    assert sc.x == 46_656
    assert sc.p_feedforward == 104_485_552_128
    text = " ".join(sc.warnings)
    assert "65.3" in text and "36864" in text


def test_estimate_default_depth():
    assert estimate_parameters(224, 8, True).depth == 10
    assert estimate_parameters(224, 8, False).depth == 16


def test_estimate_7_3_million_warning():
    text = " ".join(estimate_parameters(224, 8, True, 10).warnings)
    assert "7.3" in text and str(2 * 3_687_936) in text


def test_estimate_other_config_no_headline_warnings():
    sc = estimate_parameters(64, 4, True, None)
    assert sc.x == 256
    assert not any("65.3" in w or "7.3" in w for w in sc.warnings)


def test_estimate_preconditions():
    with pytest.raises(ValueError):
        estimate_parameters(4, 8, True)


def test_iterative_parameters():
    assert iterative_parameters(784) == 3_687_936
    assert iterative_parameters(3) == feedforward_parameters(3, 2)


def test_constructed_column_of_sorter_table():
    three = compile_network(make_optimal_small(3), prune=True).parameter_count("weights_only")
    four_full = compile_network(make_optimal_small(4)).parameter_count("weights_only")
    four_pruned = compile_network(make_optimal_small(4), prune=True).parameter_count("weights_only")
    five = compile_network(make_merge_network(5), prune=True).parameter_count("weights_only")
    assert (three, five) == (72, 340)
    # the published 144 for four wires is the unpruned count; pruning gives 136
    assert four_full == 144 and four_pruned == 136


def test_learned_column_counts():
    from sortnetc.microtrain import init_he

    assert init_he([4, 7, 7, 7, 7, 4], 0).parameter_count() == 235
    assert init_he([5] + [11] * 11 + [5], 0).parameter_count() == 1446
