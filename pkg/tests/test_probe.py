import numpy as np

from critlift import (
    Architecture,
    EmbeddingStep,
    SquaredError,
    ZeroTailParam,
    apply_embedding,
    verify_criticality,
    zero_tail_three_layer,
)
from critlift.embeddings import wide_architecture
from critlift.lifting import make_wide_form, sample_independence_probe

from conftest import random_net


def test_split_image_passes():
    rng = np.random.default_rng(0)
    arch, theta = random_net(rng, 1, 1, (2,))
    wide = apply_embedding(theta, [EmbeddingStep.split(1, 0, 0.3)])
    res = sample_independence_probe(arch, theta, wide_architecture(arch, wide), wide, SquaredError(),
                                    draws=20, seed=1)
    assert res.independent_at_resolution and res.draws == 20 and res.failing_sample is None


def test_random_extra_row_fails_with_sample():
    rng = np.random.default_rng(2)
    arch, theta = random_net(rng, 1, 1, (2,))
    wide = make_wide_form(arch, theta, (3,), seed=3)
    res = sample_independence_probe(arch, theta, wide.wide_arch, wide.theta, SquaredError(), draws=20, seed=4)
    assert not res.independent_at_resolution
    S = res.failing_sample
    assert verify_criticality(arch, theta, S, SquaredError(), 1e-8).is_critical
    assert not verify_criticality(wide.wide_arch, wide.theta, S, SquaredError(), 1e-8).is_critical


def test_zero_tail_member_passes():
    rng = np.random.default_rng(5)
    narrow = Architecture(2, 1, (2, 2, 2), "tanh")
    theta = zero_tail_three_layer(ZeroTailParam(rng.standard_normal((1, 2)), rng.standard_normal((2, 2))), narrow)
    wide_arch = narrow.with_widths((2, 2, 3))
    wide = zero_tail_three_layer(ZeroTailParam(rng.standard_normal((1, 3)), rng.standard_normal((3, 2))), wide_arch)
    res = sample_independence_probe(narrow, theta, wide_arch, wide, SquaredError(), draws=10, seed=6)
    assert res.independent_at_resolution and res.max_grad_inf_norm == 0.0
