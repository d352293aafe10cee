"""Sample matrices and synthesis of sample outputs around a fixed parameter.

For parameters ``theta`` and inputs ``x_1..x_n`` the sample matrix stacks the
parameter Jacobians side by side, ``M = [J_1 ... J_n]`` (N x nD). A vector
``v`` in ker M, read as per-sample loss gradients ``g_i`` (rows of
``v.reshape(n, D)``), makes ``theta`` critical once the targets ``y_i`` are
chosen with ``d/dp loss(H(theta, x_i), y_i) = g_i``.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .. import linalg
from ..calculus import jacobians
from ..errors import InsufficientSamples, MaxRetries, RangeError, ShapeError, DegenerateInput
from ..network import Architecture, ParamVec, forward, is_generic


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def build_sample_matrix(arch, theta, xs):
    """``[J_1 ... J_n]`` with ``J_i`` the (N x D) Jacobian at ``x_i``; shape (N, n*D)."""
    J = jacobians(arch, theta, xs)
    n, N, D = J.shape
    return np.ascontiguousarray(J.transpose(1, 0, 2).reshape(N, n * D))


def critical_sample_size(arch):
    """Smallest n with nD > N, so that ker M is nontrivial."""
    return math.ceil((1 + arch.n_params) / arch.output_dim)


def saddle_sample_size(narrow, wide):
    """Smallest n for which the collapsed wide sample matrix has a kernel."""
    m, mp = narrow.hidden_widths, wide.hidden_widths
    cross = sum(m[l] * (mp[l - 1] - m[l - 1]) for l in range(1, narrow.depth))
    D = narrow.output_dim
    return math.ceil((1 + D + cross + narrow.n_params) / D)


@dataclass(frozen=True, eq=False)
class Synthesis:
    """Sample outputs ``ys`` making a parameter critical.

    ``v`` is the unit kernel vector, ``targets = scale * v.reshape(n, D)`` the
    per-sample loss gradients realised by ``ys``.
    """

    ys: np.ndarray
    v: np.ndarray
    targets: np.ndarray
    scale: float
    kernel_dim: int


def _invert_with_rescale(kind, p, v, scale, max_rescales=60):
    g = scale * v
    for _ in range(max_rescales):
        try:
            return kind.invert_grad(p, g), scale
        except RangeError as exc:
            scale *= 0.5 * exc.max_scale
            g = scale * v
    raise MaxRetries("could not rescale the kernel vector into the loss-gradient range")


def synthesize_critical_outputs(arch, theta, xs, kind, seed=0, scale=1.0,
                                rel_tol=linalg.DEFAULT_REL_TOL):
    """Choose sample outputs for which ``theta`` is a critical point.

    A unit vector ``v`` is drawn from ker M through a seeded random rotation
    of an orthonormal kernel basis; targets ``y_i`` invert the loss gradient at
    ``scale * v``. For cross-entropy the scale is shrunk until every target is
    feasible.

    Raises
    ------
    InsufficientSamples
        If ker M is trivial.
    """
    rng = _rng(seed)
    xs = np.asarray(xs, dtype=float)
    xs = xs[:, None] if xs.ndim == 1 else xs
    n, D = xs.shape[0], arch.output_dim
    M = build_sample_matrix(arch, theta, xs)
    reduced = linalg.dedupe_rows(M)
    K = linalg.null_space(reduced, rel_tol) if reduced.shape[0] else linalg.KernelBasis(np.eye(n * D))
    if K.dim == 0:
        required = math.ceil((reduced.shape[0] + 1) / D)
        raise InsufficientSamples(
            f"sample matrix has trivial kernel for n={n}; need about n >= {required}", required)
    v = K.basis @ rng.standard_normal(K.dim)
    v /= np.linalg.norm(v)
    p = forward(arch, theta, xs)
    ys, used = _invert_with_rescale(kind, p, v.reshape(n, D), scale)
    return Synthesis(ys, v, used * v.reshape(n, D), used, K.dim)


@dataclass(frozen=True, eq=False)
class HiddenConstruction:
    """Wide weights for hidden layers ``1..L-1`` keeping the narrow neurons.

    ``margins[l]`` is the smallest of ``|h_i|`` and ``|h_i +- h_j|`` over the
    new neurons of layer ``l + 1``.
    """

    weights: Tuple[np.ndarray, ...]
    margins: Tuple[float, ...]

    def features(self, arch, xs):
        """Wide layer ``L-1`` outputs for inputs ``xs``; equals xs when L = 1."""
        h = np.asarray(xs, dtype=float)
        for W in self.weights:
            h = arch.activation(h @ W.T)
        return h


def _pair_margin(s):
    """min over i of |s_i| and over i < j of |s_i - s_j|, |s_i + s_j| (s: n x k)."""
    s = np.asarray(s, dtype=float)
    s = s[:, None] if s.ndim == 1 else s
    norms = np.linalg.norm(s, axis=1)
    iu = np.triu_indices(s.shape[0], 1)
    diff = np.linalg.norm(s[:, None] - s[None, :], axis=2)[iu]
    summ = np.linalg.norm(s[:, None] + s[None, :], axis=2)[iu]
    return float(min(norms.min(), diff.min(initial=np.inf), summ.min(initial=np.inf)))


def extend_hidden_params(narrow_arch, theta_narr, wide_widths, xs, seed=0,
                         margin_tol=1e-6, max_retries=100):
    """Widen hidden layers ``1..L-1`` while keeping the wide features generic.

    Narrow rows are copied and zero-padded; each new neuron gets a
    standard-normal row, redrawn until its outputs ``s_i`` on the samples
    satisfy ``|s_i| > margin_tol`` and ``|s_i +- s_j| > margin_tol``.
    """
    rng = _rng(seed)
    theta_narr.check(narrow_arch)
    wide_widths = tuple(int(m) for m in wide_widths)
    L = narrow_arch.depth
    if len(wide_widths) != L:
        raise ShapeError("wide and narrow depths differ")
    if any(mp <= m for m, mp in zip(narrow_arch.hidden_widths[:-1], wide_widths[:-1])):
        raise ShapeError("wide network must be strictly wider in hidden layers 1..L-1")
    X = np.asarray(xs, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    if not is_generic(X, 1e-12):
        raise DegenerateInput("inputs must satisfy x_i != 0 and x_i +- x_j != 0")
    act = narrow_arch.activation
    weights, margins = [], []
    h = X
    for l in range(L - 1):
        narrow_W = theta_narr.ws[l]
        m, mp = narrow_W.shape[0], wide_widths[l]
        W = np.zeros((mp, h.shape[1]))
        W[:m, :narrow_W.shape[1]] = narrow_W
        layer_margin = np.inf
        for k in range(m, mp):
            for _ in range(max_retries):
                row = rng.standard_normal(h.shape[1])
                marg = _pair_margin(act(h @ row)[:, None])
                if marg > margin_tol:
                    break
            else:
                raise MaxRetries(f"no generic weight found for neuron {k} of layer {l + 1}")
            W[k] = row
            layer_margin = min(layer_margin, marg)
        weights.append(W)
        h = act(h @ W.T)
        margins.append(float(layer_margin))
    return HiddenConstruction(tuple(weights), tuple(margins))


@dataclass(frozen=True, eq=False)
class WideForm:
    """Narrow parameters plus extra last-layer neurons with zero output weights.

    ``extra_weights`` holds one incoming row per extra neuron (length
    ``m'_{L-1}``). The wide network computes the same function as the narrow
    one for any choice of those rows.
    """

    narrow_arch: Architecture
    theta_narr: ParamVec
    wide_arch: Architecture
    hidden: HiddenConstruction
    extra_weights: np.ndarray

    @property
    def theta(self):
        narrow_WL = self.theta_narr.ws[-1]
        m_L = narrow_WL.shape[0]
        cols = self.extra_weights.shape[1]
        WL = np.zeros((self.wide_arch.hidden_widths[-1], cols))
        WL[:m_L, :narrow_WL.shape[1]] = narrow_WL
        WL[m_L:] = self.extra_weights
        a = np.zeros(self.wide_arch.out_shape)
        a[:, :m_L] = self.theta_narr.a
        return ParamVec(a, tuple(self.hidden.weights) + (WL,))

    def features(self, xs):
        return self.hidden.features(self.narrow_arch, xs)

    def with_extra_weights(self, extra_weights):
        return WideForm(self.narrow_arch, self.theta_narr, self.wide_arch, self.hidden,
                        np.array(extra_weights, dtype=float).reshape(self.extra_weights.shape))

    def extra_slice(self):
        """Index range of the extra rows inside ``theta.flatten()``."""
        arch = self.wide_arch
        start = int(np.prod(arch.out_shape))
        rows, cols = arch.layer_shapes[-1]
        m_L = self.narrow_arch.hidden_widths[-1]
        return slice(start + m_L * cols, start + rows * cols)


def make_wide_form(narrow_arch, theta_narr, wide_widths, extra_weights=None, hidden=None,
                   seed=0, equal_extra=False):
    """Build the output-preserving wide parameter with zero extra output weights.

    Lower layers come from ``hidden`` (see ``extend_hidden_params``); when it
    is omitted those layers must have the narrow widths. Missing extra rows
    are standard normal; ``equal_extra`` repeats a single row.
    """
    theta_narr.check(narrow_arch)
    wide_widths = tuple(int(m) for m in wide_widths)
    wide_arch = narrow_arch.with_widths(wide_widths)
    if not narrow_arch.is_narrower_than(wide_arch) or wide_widths[-1] <= narrow_arch.hidden_widths[-1]:
        raise ShapeError(f"{wide_widths} does not add last-layer neurons to {narrow_arch.hidden_widths}")
    if hidden is None:
        if wide_widths[:-1] != narrow_arch.hidden_widths[:-1]:
            raise ShapeError("wider lower layers need a HiddenConstruction from extend_hidden_params")
        hidden = HiddenConstruction(tuple(theta_narr.ws[:-1]), ())
    cols = wide_arch.layer_shapes[-1][1]
    k = wide_widths[-1] - narrow_arch.hidden_widths[-1]
    if extra_weights is None:
        rng = _rng(seed)
        extra = rng.standard_normal((1 if equal_extra else k, cols))
        extra = np.repeat(extra, k, axis=0) if equal_extra else extra
    else:
        extra = np.asarray(extra_weights, dtype=float)
        extra = np.repeat(extra.reshape(1, cols), k, axis=0) if extra.size == cols else extra.reshape(k, cols)
    return WideForm(narrow_arch, theta_narr, wide_arch, hidden, extra)


@dataclass(frozen=True, eq=False)
class NonCriticalSynthesis:
    ys: np.ndarray
    v: np.ndarray
    targets: np.ndarray
    extra_weight: np.ndarray
    extra_row_value: np.ndarray  # d R / d a'_j of the appended neuron, one per output
    redraws: int


def extra_row_value(targets, features, extra_weight, activation):
    """``sum_i g_ij act(w . f_i)`` for each output j."""
    s = activation(np.asarray(features, float) @ np.asarray(extra_weight, float))
    return np.asarray(targets, float).T @ s


def synthesize_noncritical_outputs(narrow_arch, theta_narr, xs, kind, extra_weight=None,
                                   hidden=None, seed=0, max_retries=100, zero_tol=1e-8):
    """Outputs keeping ``theta_narr`` critical while the wide form is not.

    The wide form appends a neuron with incoming row ``extra_weight`` (on the
    wide layer ``L-1`` features) and zero output weight; its ``dR/da'`` equals
    ``extra_row_value``. Rows giving ``|value| < zero_tol`` are redrawn from
    a centred normal whose standard deviation doubles every 20 attempts (for
    smooth activations and small inputs the value can stay below ``zero_tol``
    for all moderate rows).
    """
    rng = _rng(seed)
    syn = synthesize_critical_outputs(narrow_arch, theta_narr, xs, kind, seed=rng)
    if hidden is None:
        hidden = HiddenConstruction(tuple(theta_narr.ws[:-1]), ())
    feats = hidden.features(narrow_arch, np.asarray(xs, float).reshape(len(syn.ys), -1))
    w = rng.standard_normal(feats.shape[1]) if extra_weight is None else np.asarray(extra_weight, float)
    for attempt in range(max_retries + 1):
        value = extra_row_value(syn.targets, feats, w, narrow_arch.activation)
        if np.max(np.abs(value)) >= zero_tol:
            return NonCriticalSynthesis(syn.ys, syn.v, syn.targets, w, value, attempt)
        w = 2.0 ** ((attempt + 1) // 20) * rng.standard_normal(feats.shape[1])
    raise MaxRetries(f"{max_retries} redraws of the extra weight all hit the zero set")


def synthesize_wide_critical_outputs(wide, xs, kind, seed=0, scale=1.0):
    """Outputs making the wide form itself critical (kernel of the wide sample matrix)."""
    return synthesize_critical_outputs(wide.wide_arch, wide.theta, xs, kind, seed=seed, scale=scale)
