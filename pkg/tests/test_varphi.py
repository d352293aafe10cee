import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critlift import SampleSet, SquaredError, grad_loss
from critlift.calculus import numeric_gradient
from critlift.errors import ConfigError, DegenerateResidual, ShapeError
from critlift.lifting import make_wide_form, varphi, varphi_grad, varphi_zero_set_1d

from conftest import random_net

XS = np.array([0.25, 1.0, 4.0, 16.0])
EPS0 = np.array([1.0, -0.5835, 0.3, -0.1])


def dense_sign_changes(e, xs, lo, hi, n=1_000_001):
    """Independent oracle: sign changes of phi on a fine grid."""
    w = np.linspace(lo, hi, n)
    vals = np.zeros(n)
    for ei, xi in zip(e, xs):
        vals += ei * np.tanh(w * xi)
    s = np.sign(vals)
    nz = s != 0
    return int(np.count_nonzero(np.diff(s[nz]) != 0)) + int(np.count_nonzero(~nz))


def test_varphi_at_zero_vanishes_for_tanh():
    assert varphi(0.0, EPS0, XS, "tanh") == 0.0


def test_varphi_batch_and_scalar_agree():
    ws = np.array([[0.1], [0.5], [-1.2]])
    batch = varphi(ws, EPS0, XS, "tanh")
    np.testing.assert_allclose(batch, [varphi(w, EPS0, XS, "tanh") for w in ws[:, 0]], atol=1e-15)


def test_varphi_gradient_matches_fd():
    rng = np.random.default_rng(0)
    f = rng.standard_normal((6, 3))
    e = rng.standard_normal(6)
    for act in ("tanh", "sigmoid", "gauss", "swish"):
        w = rng.standard_normal(3)
        fd = numeric_gradient(lambda v: varphi(v, e, f, act), w)
        np.testing.assert_allclose(varphi_grad(w, e, f, act), fd, atol=1e-8)


def test_varphi_length_mismatch():
    with pytest.raises(ShapeError):
        varphi(0.3, EPS0[:3], XS, "tanh")


def test_varphi_is_da_prime_of_wide_form():
    rng = np.random.default_rng(1)
    arch, theta = random_net(rng, 2, 1, (2,))
    xs = rng.standard_normal((5, 2))
    S = SampleSet(xs, rng.standard_normal((5, 1)))
    wide = make_wide_form(arch, theta, (3,), seed=2)
    from critlift import residual_grads
    e = residual_grads(arch, theta, S, SquaredError())[:, 0]
    g = grad_loss(wide.wide_arch, wide.theta, S, SquaredError())
    assert g[2] == pytest.approx(varphi(wide.extra_weights[0], e, xs, "tanh"), abs=1e-12)


def test_roots_of_rounded_residuals():
    roots = varphi_zero_set_1d(EPS0, XS, "tanh", (-2.0, 2.0))
    # with the rounded constants the root near 1.0258 is only a near-tangency
    assert len(roots) == 3
    assert roots[1] == 0.0
    assert roots[2] == pytest.approx(0.1232, abs=1e-3)
    assert roots[0] == pytest.approx(-roots[2], abs=1e-12)
    for r in roots:
        assert abs(varphi(r, EPS0, XS, "tanh")) < 1e-9


def test_tangential_root_is_found():
    # e in the kernel of [tanh(c x_i); x_i tanh'(c x_i)] makes w = c a double zero
    c = 0.9
    xs = np.array([0.5, 1.0, 3.0])
    A = np.vstack([np.tanh(c * xs), xs / np.cosh(c * xs) ** 2])
    e = np.linalg.svd(A)[2][-1]
    roots = varphi_zero_set_1d(e, xs, "tanh", (0.1, 2.0))
    assert any(abs(r - c) < 1e-6 for r in roots)


def test_errors():
    with pytest.raises(ConfigError):
        varphi_zero_set_1d(EPS0, XS, "tanh", (1.0, 1.0))
    with pytest.raises(ConfigError):
        varphi_zero_set_1d(EPS0, XS, "tanh", (0.0, np.inf))
    with pytest.raises(DegenerateResidual):
        varphi_zero_set_1d(np.zeros(4), XS, "tanh")
    with pytest.raises(ShapeError):
        varphi_zero_set_1d(EPS0, np.ones((4, 2)), "tanh")


def test_direction_slice():
    rng = np.random.default_rng(3)
    f = rng.standard_normal((5, 2))
    e = rng.standard_normal(5)
    u = np.array([0.6, 0.8])
    roots = varphi_zero_set_1d(e, f, "tanh", (-3, 3), direction=u)
    for r in roots:
        assert abs(varphi(r * u, e, f, "tanh")) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_root_count_matches_dense_scan(seed):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.1, 5.0, 4) * rng.choice([-1, 1], 4)
    e = rng.standard_normal(4)
    # shift the range so that w = 0 is not a grid point of either scan
    lo, hi = -2.0 + 1e-7, 2.0 + 1e-7
    roots = varphi_zero_set_1d(e, xs, "tanh", (lo, hi))
    assert len(roots) == dense_sign_changes(e, xs, lo, hi)
