"""Finite-resolution check that a wide parameter is critical for every sample
set that makes the narrow parameter critical.

Each draw picks fresh standard-normal inputs, synthesizes outputs making the
narrow parameter critical, and tests the wide parameter on the same samples.
A ``True`` verdict only says that no counterexample turned up.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..calculus import SampleSet
from ..embeddings import verify_criticality
from ..network import is_generic
from .synthesis import critical_sample_size, synthesize_critical_outputs


@dataclass(frozen=True, eq=False)
class ProbeResult:
    independent_at_resolution: bool
    draws: int
    max_grad_inf_norm: float
    failing_sample: Optional[SampleSet] = None


def sample_independence_probe(narrow_arch, theta_narr, wide_arch, theta_wide, kind, draws=50,
                              seed=0, tol=1e-8, extra_samples=3):
    """Probe whether ``theta_wide`` stays critical across synthesized sample sets.

    The sample size cycles through ``critical_sample_size(narrow_arch)`` up to
    ``extra_samples`` more.
    """
    rng = np.random.default_rng(seed)
    n0 = critical_sample_size(narrow_arch)
    worst = 0.0
    for k in range(draws):
        n = n0 + k % (extra_samples + 1)
        xs = rng.standard_normal((n, narrow_arch.input_dim))
        while not is_generic(xs):
            xs = rng.standard_normal((n, narrow_arch.input_dim))
        syn = synthesize_critical_outputs(narrow_arch, theta_narr, xs, kind, seed=rng)
        samples = SampleSet(xs, syn.ys)
        report = verify_criticality(wide_arch, theta_wide, samples, kind, tol)
        worst = max(worst, report.grad_inf_norm)
        if not report.is_critical:
            return ProbeResult(False, k + 1, worst, samples)
    return ProbeResult(True, draws, worst)
