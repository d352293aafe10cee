import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critlift import (
    Architecture,
    BinaryCrossEntropy,
    EvenPower,
    ParamVec,
    SampleSet,
    SquaredError,
    fd_grad_loss,
    grad_loss,
    invert_loss_gradient,
    jacobian_params,
    jacobians,
    loss_grad_p,
    loss_value,
    residual_grads,
    total_loss,
)
from critlift.calculus import LossKind, numeric_gradient
from critlift.errors import DomainError, RangeError, ShapeError

from conftest import random_net


def test_squared_loss_has_no_half():
    assert loss_value(SquaredError(), [3.0], [1.0]) == 4.0
    np.testing.assert_array_equal(loss_grad_p(SquaredError(), [3.0], [1.0]), [4.0])


def test_even_power():
    assert loss_value(EvenPower(4), [2.0, 0.0], [1.0, 1.0]) == 2.0
    np.testing.assert_array_equal(loss_grad_p(EvenPower(4), [3.0], [1.0]), [32.0])
    with pytest.raises(ValueError):
        EvenPower(3)


def test_bce_value_and_gradient():
    p, q = 0.3, 0.6
    expected = q * math.log(q / p) + (1 - q) * math.log((1 - q) / (1 - p))
    assert loss_value(BinaryCrossEntropy(), [p], [q]) == pytest.approx(expected, rel=1e-14)
    assert loss_value(BinaryCrossEntropy(), [p], [p]) == 0.0
    h = 1e-6
    fd = (loss_value(BinaryCrossEntropy(), [p + h], [q]) - loss_value(BinaryCrossEntropy(), [p - h], [q])) / (2 * h)
    assert loss_grad_p(BinaryCrossEntropy(), [p], [q])[0] == pytest.approx(fd, rel=1e-8)


def test_bce_domain():
    with pytest.raises(DomainError):
        loss_value(BinaryCrossEntropy(), [0.0], [0.5])
    with pytest.raises(DomainError):
        loss_value(BinaryCrossEntropy(), [0.5], [1.0])
    with pytest.raises(DomainError):
        loss_value(BinaryCrossEntropy(), [0.5, 0.5], [0.5, 0.5])


def test_bce_inverse_example():
    # gradient (p - q) / (p (1 - p)) = 0.4 at p = 0.5 gives q = 0.4
    np.testing.assert_allclose(invert_loss_gradient(BinaryCrossEntropy(), [0.5], [0.4]), [0.4])


def test_bce_inverse_out_of_range_reports_scale():
    with pytest.raises(RangeError) as info:
        invert_loss_gradient(BinaryCrossEntropy(), [0.5], [5.0])
    lam = info.value.max_scale
    assert lam == pytest.approx(0.4)
    invert_loss_gradient(BinaryCrossEntropy(), [0.5], [0.99 * lam * 5.0])


@pytest.mark.parametrize("kind", [SquaredError(), EvenPower(2), EvenPower(4), EvenPower(6)])
def test_inverse_round_trip(kind):
    rng = np.random.default_rng(7)
    p = rng.standard_normal((10, 3))
    g = rng.standard_normal((10, 3))
    q = invert_loss_gradient(kind, p, g)
    np.testing.assert_allclose(loss_grad_p(kind, p, q), g, rtol=1e-10, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(-1.0, 1.0))
def test_bce_inverse_round_trip(p, g):
    q = invert_loss_gradient(BinaryCrossEntropy(), [p], [g])
    assert 0.0 < q[0] < 1.0
    assert loss_grad_p(BinaryCrossEntropy(), [p], q)[0] == pytest.approx(g, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["squared", "even4", "bce"]), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_loss_zero_iff_equal(name, p, q):
    kind = {"squared": SquaredError(), "even4": EvenPower(4), "bce": BinaryCrossEntropy()}[name]
    assert loss_value(kind, [p], [p]) == 0.0
    assert loss_grad_p(kind, [p], [p])[0] == 0.0
    if abs(p - q) > 1e-3:
        assert loss_value(kind, [p], [q]) > 0.0
        assert loss_grad_p(kind, [p], [q])[0] != 0.0


def test_loss_kind_dict_round_trip():
    for kind in (SquaredError(), EvenPower(4), BinaryCrossEntropy()):
        assert LossKind.from_dict(kind.to_dict()) == kind
    assert LossKind.from_dict({"kind": "BinaryCrossEntropy"}) == BinaryCrossEntropy()


@pytest.mark.parametrize("act", ["tanh", "sigmoid", "gauss", "swish"])
@pytest.mark.parametrize("widths", [(3,), (3, 2), (2, 3, 2)])
def test_backprop_matches_finite_differences(act, widths):
    rng = np.random.default_rng(11)
    arch, theta = random_net(rng, 2, 2, widths, act)
    S = SampleSet(rng.standard_normal((5, 2)), rng.standard_normal((5, 2)))
    g = grad_loss(arch, theta, S, SquaredError())
    fd = fd_grad_loss(arch, theta, S, SquaredError())
    assert np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(fd))) < 1e-7


def test_gradient_of_toy_network_by_hand():
    # R = sum (a tanh(w x) - y)^2
    arch = Architecture(1, 1, (1,), "tanh")
    a, w = 0.7, 1.3
    theta = ParamVec(np.array([[a]]), (np.array([[w]]),))
    xs, ys = np.array([0.5, -1.0, 2.0]), np.array([0.1, 0.2, -0.3])
    r = a * np.tanh(w * xs) - ys
    da = np.sum(2 * r * np.tanh(w * xs))
    dw = np.sum(2 * r * a * xs / np.cosh(w * xs) ** 2)
    g = grad_loss(arch, theta, SampleSet(xs, ys), SquaredError())
    np.testing.assert_allclose(g, [da, dw], rtol=1e-13)


def test_jacobians_match_finite_differences_of_forward():
    rng = np.random.default_rng(12)
    arch, theta = random_net(rng, 3, 2, (4, 3), "swish")
    x = rng.standard_normal(3)
    J = jacobian_params(arch, theta, x)
    assert J.shape == (arch.n_params, 2)
    from critlift import forward
    for j in range(2):
        fd = numeric_gradient(lambda v: forward(arch, ParamVec.unflatten(arch, v), x)[j], theta.flatten())
        np.testing.assert_allclose(J[:, j], fd, atol=1e-8)


def test_gradient_is_jacobians_times_residuals():
    rng = np.random.default_rng(13)
    arch, theta = random_net(rng, 2, 2, (3, 3), "tanh")
    S = SampleSet(rng.standard_normal((4, 2)), rng.standard_normal((4, 2)))
    kind = EvenPower(4)
    J = jacobians(arch, theta, S.xs)
    e = residual_grads(arch, theta, S, kind)
    np.testing.assert_allclose(np.einsum("inj,ij->n", J, e), grad_loss(arch, theta, S, kind), rtol=1e-11, atol=1e-13)


def test_total_loss_shape_mismatch():
    arch = Architecture(1, 2, (2,))
    with pytest.raises(ShapeError):
        total_loss(arch, ParamVec.zeros(arch), SampleSet([1.0], [1.0]), SquaredError())


def test_sample_csv_round_trip():
    rng = np.random.default_rng(14)
    S = SampleSet(rng.standard_normal((3, 2)), rng.standard_normal((3, 1)))
    text = S.to_csv()
    assert text.splitlines()[0] == "x_1,x_2,y_1"
    assert "\r" not in text
    back = SampleSet.from_csv(text)
    np.testing.assert_array_equal(back.xs, S.xs)
    np.testing.assert_array_equal(back.ys, S.ys)


def test_sample_set_validation():
    with pytest.raises(ShapeError):
        SampleSet(np.ones((3, 1)), np.ones((2, 1)))
    with pytest.raises(ValueError):
        SampleSet([np.inf], [1.0])
