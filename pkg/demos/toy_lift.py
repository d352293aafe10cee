# %% [markdown]
# One tanh neuron, four samples, one extra neuron.
#
# The narrow net computes tanh(w x) with w = 1.0258. Sample outputs are
# chosen so that this point is critical; appending a neuron with zero output
# weight gives a wide point that is critical exactly when the extra incoming
# weight is a root of phi(w) = sum_i e_i tanh(w x_i).

# %%
import numpy as np

from critlift import SquaredError, grad_loss, total_loss
from critlift import repro
from critlift.lifting import certify_saddle, make_wide_form

np.set_printoptions(precision=5, suppress=True)

# %% residuals: rounded curve vs. its projection onto ker M
for t in (-4.0, 0.0, 3.0):
    rep = repro.epsilon_report(t)
    print(f"t={t:+g}  eps={rep['eps']}  |M eps|_inf={rep['residual_inf']:.2e}")

# %% the narrow point is critical for the kernel-projected residuals
S = repro.toy_samples(0.0, "kernel")
theta = repro.narrow_theta()
print("loss", total_loss(repro.NARROW, theta, S, SquaredError()))
print("grad", grad_loss(repro.NARROW, theta, S, SquaredError()))

# %% roots of phi on (-2, 2); by odd symmetry only w >= 0 is listed
roots = repro.toy_roots()
print("roots", np.array(roots["roots"]), "marked", np.array(roots["marked"]))

# %% each root gives a critical wide point, and each of those is a saddle
for r in roots["marked"]:
    wide = make_wide_form(repro.NARROW, theta, (2,), extra_weights=[[r]])
    cert = certify_saddle(wide, S, SquaredError())
    print(f"w'={r:.5f}  {cert.status}  radius={cert.radius:g}  "
          f"gaps=({cert.loss - cert.lower.loss:.2e}, {cert.upper.loss - cert.loss:.2e})  "
          f"method={cert.diagnostics['method']}")

# %% the gradient field in (a1, a2) vanishes on the split line a1 + a2 = 1
g = repro.fig1_field(0.0, (0.1, 0.9, 9), (0.1, 0.9, 9))
print(g.values["magnitude"][::-1])  # rows flipped: the split line is the diagonal
