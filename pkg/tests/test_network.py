import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critlift import ACTIVATIONS, Architecture, ParamVec, forward, is_generic, layer_outputs
from critlift.errors import ConfigError, DegenerateInput, ShapeError
from critlift.network import get_activation, neuron_independence_check, permute_layer

from conftest import random_net


def test_param_count():
    arch = Architecture(3, 2, (4, 5))
    # a: 2*5, W2: 5*4, W1: 4*3
    assert arch.n_params == 10 + 20 + 12
    assert arch.layer_shapes == [(4, 3), (5, 4)]


def test_flatten_order_is_a_then_top_down():
    arch = Architecture(1, 1, (2, 1))
    theta = ParamVec(np.array([[7.0]]), (np.array([[1.0], [2.0]]), np.array([[3.0, 4.0]])))
    np.testing.assert_array_equal(theta.flatten(), [7.0, 3.0, 4.0, 1.0, 2.0])
    assert ParamVec.unflatten(arch, theta.flatten()).allclose(theta)


def test_forward_single_neuron_tanh():
    arch = Architecture(1, 1, (1,), "tanh")
    theta = ParamVec(np.array([[1.0]]), (np.array([[1.0258]]),))
    assert forward(arch, theta, np.array([1.0]))[0] == pytest.approx(math.tanh(1.0258), abs=1e-15)


def test_forward_matches_explicit_loops():
    rng = np.random.default_rng(3)
    arch, theta = random_net(rng, 3, 2, (4, 3), "sigmoid")
    x = rng.standard_normal(3)
    h = x
    for W in theta.ws:
        h = np.array([1.0 / (1.0 + math.exp(-sum(W[k, j] * h[j] for j in range(len(h)))))
                      for k in range(W.shape[0])])
    expected = theta.a @ h
    np.testing.assert_allclose(forward(arch, theta, x), expected, rtol=1e-13)
    X = rng.standard_normal((5, 3))
    np.testing.assert_allclose(forward(arch, theta, X)[2], forward(arch, theta, X[2]), rtol=1e-14)


def test_layer_outputs_shapes():
    rng = np.random.default_rng(4)
    arch, theta = random_net(rng, 2, 1, (3, 4))
    hs = layer_outputs(arch, theta, rng.standard_normal((6, 2)))
    assert [h.shape for h in hs] == [(6, 2), (6, 3), (6, 4)]


@pytest.mark.parametrize("name", sorted(ACTIVATIONS))
def test_activation_derivatives_by_finite_differences(name):
    act = get_activation(name)
    z = np.linspace(-4, 4, 41)
    h = 1e-6
    np.testing.assert_allclose(act.deriv(z), (act(z + h) - act(z - h)) / (2 * h), atol=1e-8)


def test_activation_parity_and_zero():
    z = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(ACTIVATIONS["tanh"](-z), -ACTIVATIONS["tanh"](z))
    np.testing.assert_allclose(ACTIVATIONS["gauss"](-z), ACTIVATIONS["gauss"](z))
    assert ACTIVATIONS["tanh"].vanishes_at_zero and ACTIVATIONS["swish"].vanishes_at_zero
    assert not ACTIVATIONS["sigmoid"].vanishes_at_zero
    assert not ACTIVATIONS["gauss"].vanishes_at_zero


def test_sigmoid_does_not_overflow():
    with np.errstate(over="raise"):
        v = ACTIVATIONS["sigmoid"](np.array([-1000.0, 0.0, 1000.0]))
    np.testing.assert_allclose(v, [0.0, 0.5, 1.0])


def test_unknown_activation_and_bias_rejected():
    with pytest.raises(ConfigError):
        get_activation("relu6")
    with pytest.raises(ConfigError):
        Architecture.from_dict({"input_dim": 1, "output_dim": 1, "hidden_widths": [1], "bias": True})


def test_shape_errors():
    arch = Architecture(2, 1, (3,))
    theta = ParamVec.zeros(arch)
    with pytest.raises(ShapeError):
        forward(arch, theta, np.ones(3))
    with pytest.raises(ShapeError):
        ParamVec(np.ones((1, 2)), (np.ones((3, 2)),))
    with pytest.raises(ShapeError):
        ParamVec.unflatten(arch, np.ones(5))
    with pytest.raises(ShapeError):
        ParamVec.zeros(Architecture(2, 1, (4,))).check(arch)


def test_param_arrays_are_read_only():
    theta = ParamVec.zeros(Architecture(1, 1, (2,)))
    with pytest.raises(ValueError):
        theta.a[0, 0] = 1.0


def test_json_round_trip_is_exact():
    rng = np.random.default_rng(5)
    _, theta = random_net(rng, 3, 2, (4, 2))
    back = ParamVec.from_json(theta.to_json())
    np.testing.assert_array_equal(back.flatten(), theta.flatten())
    d = theta.to_dict()
    assert d["w_shapes"] == [[4, 3], [2, 4]] and d["a_shape"] == [2, 2]


def test_json_rejects_nan():
    theta = ParamVec(np.array([[np.nan]]), (np.array([[1.0]]),))
    with pytest.raises(ValueError):
        theta.to_json()


def test_architecture_round_trip_and_order():
    arch = Architecture(2, 3, (4, 5), "gauss")
    assert Architecture.from_dict(arch.to_dict()) == arch
    assert Architecture(2, 3, (3, 5), "gauss").is_narrower_than(arch)
    assert not arch.is_narrower_than(Architecture(2, 3, (4, 5), "tanh"))


def test_genericity():
    assert is_generic([0.25, 1.0, 4.0, 16.0])
    assert not is_generic([0.0, 1.0])
    assert not is_generic([1.0, -1.0])
    assert not is_generic([2.0, 2.0])
    assert not is_generic(np.array([[1.0, 2.0], [-1.0, -2.0]]))


def test_neuron_independence():
    assert neuron_independence_check([0.25, 1.0, 4.0, 16.0], "tanh") == {"independent": True, "rank": 4}
    # gauss is even, so x and -x give the same neuron function
    res = neuron_independence_check([1.0, -1.0, 2.0], "gauss")
    assert res["rank"] == 2 and not res["independent"]
    with pytest.raises(DegenerateInput):
        neuron_independence_check([0.0, 1.0], "tanh")
    with pytest.raises(ValueError):
        neuron_independence_check([1.0, 2.0, 3.0], "tanh", trials=2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(sorted(ACTIVATIONS)))
def test_permutation_keeps_function(seed, act):
    rng = np.random.default_rng(seed)
    arch, theta = random_net(rng, 2, 2, (3, 4), act)
    X = rng.standard_normal((5, 2))
    for layer in (1, 2):
        perm = rng.permutation(arch.hidden_widths[layer - 1])
        moved = permute_layer(theta, layer, perm)
        np.testing.assert_allclose(forward(arch, moved, X), forward(arch, theta, X), rtol=1e-12, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_flatten_round_trip(seed):
    rng = np.random.default_rng(seed)
    widths = tuple(int(m) for m in rng.integers(1, 5, rng.integers(1, 4)))
    arch, theta = random_net(rng, int(rng.integers(1, 4)), int(rng.integers(1, 3)), widths)
    v = theta.flatten()
    assert v.shape == (arch.n_params,)
    np.testing.assert_array_equal(ParamVec.unflatten(arch, v).flatten(), v)
