"""The one-neuron tanh toy example and the grids behind its three figures.

The narrow network is ``a tanh(w x)`` at ``(a, w) = (1, w_bar)`` with four
scalar inputs; the wide one adds a second neuron ``a2 tanh(w2 x)``. Residuals
``eps_i = H(x_i) - y_i`` follow a straight line ``eps(t)`` whose 4-decimal
constants only approximately lie in ker M. ``curve="kernel"`` replaces it by
its orthogonal projection onto ker M, which makes the narrow point exactly
critical; ``curve="rounded"`` uses the rounded line itself.
"""
import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import linalg
from .calculus import SampleSet, SquaredError, grad_loss, total_loss
from .errors import ConfigError
from .lifting.synthesis import build_sample_matrix
from .lifting.varphi import varphi_zero_set_1d
from .network import Architecture, ParamVec, forward

TOY = json.loads(resources.files("critlift.data").joinpath("toy_example.json").read_text())
W_BAR = float(TOY["w_bar"])
XS = np.array(TOY["xs"], dtype=float)
EPS_OFFSET = np.array(TOY["epsilon"]["offset"], dtype=float)
EPS_SLOPE = np.array(TOY["epsilon"]["slope"], dtype=float)
CURVES = ("rounded", "kernel")

NARROW = Architecture(1, 1, (1,), "tanh")
WIDE = Architecture(1, 1, (2,), "tanh")
_SQUARED = SquaredError()


def toy_scenario_path():
    """Path of the bundled scenario file for the toy example."""
    return resources.files("critlift.data").joinpath("toy_example.json")


def narrow_theta(a=1.0, w=W_BAR):
    return ParamVec(np.array([[a]]), (np.array([[w]]),))


def wide_theta(a1, w1, a2, w2):
    return ParamVec(np.array([[a1, a2]]), (np.array([[w1], [w2]]),))


def toy_matrix():
    """2 x 4 sample matrix of the narrow point: rows tanh(w x_i) and x_i tanh'(w x_i)."""
    return build_sample_matrix(NARROW, narrow_theta(), XS[:, None])


def toy_kernel():
    return linalg.null_space(toy_matrix())


def epsilon_curve(t, curve="rounded"):
    """Residual vector ``eps(t)``; ``curve="kernel"`` projects it onto ker M."""
    if curve not in CURVES:
        raise ConfigError(f"curve must be one of {CURVES}, got {curve!r}")
    eps = EPS_OFFSET + float(t) * EPS_SLOPE
    return toy_kernel().project(eps) if curve == "kernel" else eps


def epsilon_report(t):
    """Rounded ``eps(t)``, ``max |M eps(t)|`` and its distance to ker M."""
    eps = epsilon_curve(t)
    proj = toy_kernel().project(eps)
    return {"t": float(t), "eps": eps, "residual_inf": float(np.max(np.abs(toy_matrix() @ eps))),
            "kernel_distance": float(np.linalg.norm(eps - proj))}


def toy_samples(t=0.0, curve="kernel"):
    """Samples with ``H(theta_1, x_i) - y_i = eps_i(t)``."""
    eps = epsilon_curve(t, curve)
    p = forward(NARROW, narrow_theta(), XS[:, None])[:, 0]
    return SampleSet(XS[:, None], (p - eps)[:, None])


@dataclass(frozen=True, eq=False)
class GridOutput:
    """Values on a 2-D grid.

    ``axes`` is a pair ``(name, points)``; ``values[name][i, j]`` belongs to
    ``(axes[0][1][i], axes[1][1][j])``.
    """

    axes: tuple
    values: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = tuple(len(pts) for _, pts in self.axes)
        for name, arr in self.values.items():
            if np.shape(arr) != shape:
                raise ValueError(f"values {name!r} have shape {np.shape(arr)}, grid is {shape}")

    def all_finite(self):
        return all(np.all(np.isfinite(v)) for v in self.values.values())

    def to_csv(self):
        (n0, p0), (n1, p1) = self.axes
        names = sorted(self.values)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([n0, n1] + names)
        for i, u in enumerate(p0):
            for j, v in enumerate(p1):
                w.writerow([repr(float(u)), repr(float(v))] + [repr(float(self.values[k][i, j])) for k in names])
        return buf.getvalue()


def axis(spec, name):
    """``(min, max, steps)`` to grid points."""
    try:
        lo, hi, steps = float(spec[0]), float(spec[1]), int(spec[2])
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"axis {name} must be [min, max, steps], got {spec!r}") from exc
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo or steps < 2:
        raise ConfigError(f"axis {name} is empty or not finite: {spec!r}")
    return np.linspace(lo, hi, steps)


def fig1_field(t, a1=(0.1, 0.9, 81), a2=(0.1, 0.9, 81), curve="kernel", display_scale=1.0):
    """``(dR/da1, (c/a1) dR/dw1)`` at ``(a1, w_bar, a2, w_bar)``; ``c = display_scale``."""
    g1, g2 = axis(a1, "a1"), axis(a2, "a2")
    if g1[0] <= 0.0 <= g1[-1]:
        raise ConfigError("the a1 axis must not contain 0")
    samples = toy_samples(t, curve)
    da = np.empty((g1.size, g2.size))
    dw = np.empty_like(da)
    for i, u in enumerate(g1):
        for j, v in enumerate(g2):
            g = grad_loss(WIDE, wide_theta(u, W_BAR, v, W_BAR), samples, _SQUARED)
            # flat order: a1, a2, w1, w2
            da[i, j] = g[0]
            dw[i, j] = display_scale * g[2] / u
    return GridOutput((("a1", g1), ("a2", g2)),
                      {"dR_da1": da, "dR_dw1_scaled": dw, "magnitude": np.hypot(da, dw)},
                      {"t": float(t), "curve": curve, "display_scale": float(display_scale)})


def toy_roots(t=0.0, curve="kernel", w_range=(-2.0, 2.0), grid=4001):
    """Zeros of ``w -> sum_i eps_i tanh(w x_i)``.

    tanh is odd, so the zeros come in pairs ``+-w``; ``marked`` keeps the
    representatives with ``w >= 0``.
    """
    roots = varphi_zero_set_1d(epsilon_curve(t, curve), XS, "tanh", w_range, grid)
    roots = [0.0 if abs(r) < 1e-12 else float(r) for r in roots]
    return {"roots": roots, "marked": [r for r in roots if r >= 0.0]}


def fig2_surface(w2=(-0.3, 1.3, 161), a2=(-0.5, 0.5, 101), t=0.0, curve="kernel"):
    """Loss at ``(1, w_bar, a2, w2)`` over the ``(w2, a2)`` plane."""
    gw, ga = axis(w2, "w2"), axis(a2, "a2")
    eps = epsilon_curve(t, curve)
    # H_wide - y = eps + a2 tanh(w2 x)
    s = np.tanh(np.multiply.outer(gw, XS))
    r = eps[None, None, :] + ga[None, :, None] * s[:, None, :]
    return GridOutput((("w2", gw), ("a2", ga)), {"loss": np.sum(r * r, axis=2)},
                      {"t": float(t), "curve": curve})


def fig3_phi(t=(-0.5, 0.5, 101), w=(-0.8, 0.8, 161), curve="rounded"):
    """``phi(t, w) = sum_i eps_i(t) tanh(w x_i)`` and its zero curves.

    Returns
    -------
    grid : GridOutput
    zeros : list of (t, w, branch)
        ``branch`` is ``"zero_line"`` for w = 0, else ``"positive"`` or
        ``"negative"``; each column is scanned on the w grid.
    """
    gt, gw = axis(t, "t"), axis(w, "w")
    eps = np.array([epsilon_curve(u, curve) for u in gt])
    phi = eps @ np.tanh(np.multiply.outer(XS, gw))
    zeros = []
    for k, u in enumerate(gt):
        for r in varphi_zero_set_1d(eps[k], XS, "tanh", (gw[0], gw[-1]), gw.size):
            branch = "zero_line" if abs(r) < 1e-12 else ("positive" if r > 0 else "negative")
            zeros.append((float(u), 0.0 if branch == "zero_line" else float(r), branch))
    return GridOutput((("t", gt), ("w", gw)), {"phi": phi}, {"curve": curve}), zeros


def branch_variation(zeros, t_lo=0.0, t_hi=0.25, branch="positive"):
    """Whether ``branch`` has a zero in every scanned column with ``t`` in
    ``[t_lo, t_hi]``, and the spread of its w values there."""
    cols = sorted({z[0] for z in zeros if t_lo <= z[0] <= t_hi})
    ws = {}
    for u, w, b in zeros:
        if b == branch and t_lo <= u <= t_hi:
            ws.setdefault(u, []).append(w)
    exists = bool(cols) and all(u in ws for u in cols)
    vals = [min(v, key=abs) for v in ws.values()]
    return exists, (max(vals) - min(vals)) if vals else 0.0


def toy_loss(theta, t=0.0, curve="kernel"):
    arch = NARROW if theta.a.shape[1] == 1 else WIDE
    return total_loss(arch, theta, toy_samples(t, curve), _SQUARED)

