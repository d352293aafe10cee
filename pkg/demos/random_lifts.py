# %% [markdown]
# Critical points of random networks and their widenings.
#
# For a random one-hidden-layer net we pick sample outputs from ker M so the
# net is critical, widen it by one neuron with a random incoming row (not
# critical for those samples), then re-pick outputs from the wide kernel so
# the wide point is critical and certify it as a saddle. The second half does
# the same for a two-hidden-layer net, widening both layers.

# %%
import numpy as np

from critlift import Architecture, ParamVec, SampleSet, SquaredError, verify_criticality
from critlift.lifting import (
    certify_saddle,
    extend_hidden_params,
    make_wide_form,
    saddle_sample_size,
    synthesize_critical_outputs,
    synthesize_noncritical_outputs,
    synthesize_wide_critical_outputs,
)

rng = np.random.default_rng(0)
kind = SquaredError()

# %% one hidden layer: d = 2 inputs, m = 3 neurons, n = 2 + (d + 1) m samples
arch = Architecture(2, 1, (3,), "tanh")
theta = ParamVec.random(arch, rng)
xs = rng.standard_normal((2 + 3 * 3, 2))

syn = synthesize_critical_outputs(arch, theta, xs, kind, seed=rng)
print("narrow |grad|_inf", verify_criticality(arch, theta, SampleSet(xs, syn.ys), kind).grad_inf_norm)

nc = synthesize_noncritical_outputs(arch, theta, xs, kind, seed=rng)
wide = make_wide_form(arch, theta, (4,), extra_weights=nc.extra_weight)
rep = verify_criticality(wide.wide_arch, wide.theta, SampleSet(xs, nc.ys), kind)
print("wide, narrow samples: critical?", rep.is_critical, " dR/da' =", nc.extra_row_value)

ws = synthesize_wide_critical_outputs(wide, xs, kind, seed=rng)
S = SampleSet(xs, ws.ys)
print("wide, wide samples: critical?", verify_criticality(wide.wide_arch, wide.theta, S, kind).is_critical)
print("certificate", certify_saddle(wide, S, kind).status)

# %% two hidden layers, two outputs, widths (2, 2) -> (3, 4)
arch = Architecture(2, 2, (2, 2), "tanh")
theta = ParamVec.random(arch, rng)
wide_widths = (3, 4)
n = saddle_sample_size(arch, arch.with_widths(wide_widths))
xs = rng.standard_normal((n, 2))
hidden = extend_hidden_params(arch, theta, wide_widths, xs, seed=rng)
wide = make_wide_form(arch, theta, wide_widths, hidden=hidden, seed=rng, equal_extra=True)
S = SampleSet(xs, synthesize_wide_critical_outputs(wide, xs, kind, seed=rng).ys)
cert = certify_saddle(wide, S, kind)
print(f"n={n}  {cert.status}  |grad|_inf={cert.grad_inf_norm:.1e}  radius={cert.radius:g}")
print(cert.to_json()[:400])
