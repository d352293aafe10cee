# %% [markdown]
# Which widenings stay critical for every sample set?
#
# Splitting a neuron or adding one with zero incoming weight keeps criticality
# for any samples. A randomly appended neuron does not. A three-layer net with
# a zero middle layer is a third kind: its widenings stay critical although
# they are not splits or null additions of the narrow net.

# %%
import numpy as np

from critlift import (
    Architecture,
    EmbeddingStep,
    ParamVec,
    SquaredError,
    ZeroTailParam,
    apply_embedding,
    is_in_split_null_image,
    zero_tail_three_layer,
)
from critlift.embeddings import wide_architecture
from critlift.lifting import make_wide_form, sample_independence_probe

rng = np.random.default_rng(1)
kind = SquaredError()
arch = Architecture(2, 1, (3,), "tanh")
theta = ParamVec.random(arch, rng)

# %% split neuron 0 with ratio 0.3, then add a null neuron
for name, steps in (("split", [EmbeddingStep.split(1, 0, 0.3)]),
                    ("split + null", [EmbeddingStep.split(1, 0, 0.3), EmbeddingStep.null(1)])):
    wide = apply_embedding(theta, steps)
    res = sample_independence_probe(arch, theta, wide_architecture(arch, wide), wide, kind, 50, seed=2)
    print(f"{name:13s} independent over {res.draws} draws: {res.independent_at_resolution}")

# %% a random extra neuron fails on the first draw
wide = make_wide_form(arch, theta, (4,), seed=3)
res = sample_independence_probe(arch, theta, wide.wide_arch, wide.theta, kind, 50, seed=2)
print("random row independent:", res.independent_at_resolution, " failing n =", res.failing_sample.n)

# %% zero middle layer: widening the last hidden layer keeps criticality
narrow = Architecture(2, 1, (2, 3, 2), "tanh")
top = ZeroTailParam(rng.standard_normal((1, 2)), rng.standard_normal((2, 3)))
theta0 = zero_tail_three_layer(top, narrow)
wide_arch = narrow.with_widths((2, 3, 3))
member = zero_tail_three_layer(
    ZeroTailParam(np.column_stack([top.a, [[0.8]]]), np.vstack([top.w3, [[1.0, -2.0, 0.5]]])), wide_arch)
res = sample_independence_probe(narrow, theta0, wide_arch, member, kind, 50, seed=4)
print("zero-tail member independent:", res.independent_at_resolution,
      " in split/null image:", is_in_split_null_image(member, theta0))
