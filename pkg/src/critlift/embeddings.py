"""Critical embeddings between a narrower and a wider network.

Two one-neuron steps are supported and composed:

* split: duplicate neuron ``k`` of hidden layer ``l`` (same incoming row) and
  share its outgoing weights as ``delta`` / ``1 - delta``;
* null: append a neuron to hidden layer ``l`` with a chosen incoming row and
  zero outgoing weights.

Both keep the network function. Splits, and nulls whose incoming row is zero
under an activation with ``act(0) = 0``, also keep criticality for every
sample set.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .calculus import grad_loss
from .errors import ActivationError, EmbeddingError, ShapeError
from .network import Architecture, ParamVec, forward


@dataclass(frozen=True)
class EmbeddingStep:
    kind: str  # "split" or "null"
    layer: int  # 1-based hidden layer index
    neuron: int = 0
    delta: float = 0.5
    new_weight: Optional[tuple] = None

    @classmethod
    def split(cls, layer, neuron, delta):
        return cls("split", layer, neuron, float(delta))

    @classmethod
    def null(cls, layer, new_weight=None):
        nw = None if new_weight is None else tuple(float(v) for v in np.ravel(new_weight))
        return cls("null", layer, new_weight=nw)

    def to_dict(self):
        if self.kind == "split":
            return {"split": {"layer": self.layer, "neuron": self.neuron, "delta": self.delta}}
        return {"null": {"layer": self.layer,
                         "new_weight": None if self.new_weight is None else list(self.new_weight)}}

    @classmethod
    def from_dict(cls, data):
        if "split" in data:
            s = data["split"]
            return cls.split(int(s["layer"]), int(s.get("neuron", 0)), float(s.get("delta", 0.5)))
        if "null" in data:
            s = data["null"]
            return cls.null(int(s["layer"]), s.get("new_weight"))
        raise EmbeddingError(f"unknown embedding step {data!r}")


def _apply_step(theta, step):
    L = len(theta.ws)
    if not 1 <= step.layer <= L:
        raise EmbeddingError(f"layer {step.layer} outside 1..{L}")
    idx = step.layer - 1
    W = theta.ws[idx]
    ws = list(theta.ws)
    if step.kind == "split":
        if not 0 <= step.neuron < W.shape[0]:
            raise EmbeddingError(f"neuron {step.neuron} outside layer of width {W.shape[0]}")
        ws[idx] = np.vstack([W, W[step.neuron]])
        out = theta.a if idx == L - 1 else ws[idx + 1]
        col = out[:, step.neuron]
        out = np.column_stack([out, (1.0 - step.delta) * col])
        out[:, step.neuron] = step.delta * col
    elif step.kind == "null":
        row = np.zeros(W.shape[1]) if step.new_weight is None else np.asarray(step.new_weight, float)
        if row.shape != (W.shape[1],):
            raise EmbeddingError(f"new weight must have length {W.shape[1]}, got {row.shape}")
        ws[idx] = np.vstack([W, row])
        out = theta.a if idx == L - 1 else ws[idx + 1]
        out = np.column_stack([out, np.zeros(out.shape[0])])
    else:
        raise EmbeddingError(f"unknown step kind {step.kind!r}")
    if idx == L - 1:
        return ParamVec(out, tuple(ws))
    ws[idx + 1] = out
    return ParamVec(theta.a, tuple(ws))


def apply_embedding(theta, steps):
    """Apply a chain of split/null steps; returns the wide parameters."""
    for step in steps:
        theta = _apply_step(theta, step)
    return theta


@dataclass(frozen=True)
class ZeroTailParam:
    """Top-layer data of a three-hidden-layer point whose lower weights vanish."""

    a: np.ndarray  # (D, m3)
    w3: np.ndarray  # (m3, m2)


def zero_tail_three_layer(top, arch):
    """Parameters ``(a, W3, 0, 0)``: critical for every sample set when act(0) = 0."""
    if arch.depth != 3:
        raise ShapeError("zero-tail construction needs exactly three hidden layers")
    if not arch.activation.vanishes_at_zero:
        raise ActivationError(f"activation {arch.activation.name} has act(0) != 0")
    m1, m2, m3 = arch.hidden_widths
    a = np.asarray(top.a, float).reshape(arch.output_dim, m3)
    w3 = np.asarray(top.w3, float)
    if w3.shape != (m3, m2):
        raise ShapeError(f"top weights must be {(m3, m2)}, got {w3.shape}")
    return ParamVec(a, (np.zeros((m1, arch.input_dim)), np.zeros((m2, m1)), w3))


def _match_neurons(wide_feats, narrow_feats, tol):
    """Greedy one-to-one matching of neuron feature vectors within tol."""
    used = set()
    for f in wide_feats:
        for k, g in enumerate(narrow_feats):
            if k not in used and np.max(np.abs(f - g)) <= tol:
                used.add(k)
                break
        else:
            return False
    return len(used) == len(narrow_feats)


def is_in_split_null_image(theta_wide, theta_narr, tol=1e-10):
    """Whether ``theta_wide`` is a one-step split or null image of ``theta_narr``.

    Both networks must agree below the last hidden layer, which must be one
    neuron wider in ``theta_wide``. Neurons of the last layer are compared up
    to permutation.
    """
    wn, ww = theta_narr.hidden_widths, theta_wide.hidden_widths
    if len(wn) != len(ww) or wn[:-1] != ww[:-1] or ww[-1] != wn[-1] + 1 \
            or theta_wide.a.shape[0] != theta_narr.a.shape[0]:
        raise EmbeddingError(f"widths {ww} are not one last-layer neuron wider than {wn}")
    for lw, ln in zip(theta_wide.ws[:-1], theta_narr.ws[:-1]):
        if np.max(np.abs(lw - ln), initial=0.0) > tol:
            return False
    Ww, Aw = theta_wide.ws[-1], theta_wide.a
    narrow_feats = [np.concatenate([theta_narr.ws[-1][k], theta_narr.a[:, k]]) for k in range(wn[-1])]
    m = ww[-1]

    def rest_matches(drop, merged_into=None):
        feats = []
        for k in range(m):
            if k == drop:
                continue
            a_col = Aw[:, k] + (Aw[:, drop] if k == merged_into else 0.0)
            feats.append(np.concatenate([Ww[k], a_col]))
        return _match_neurons(feats, narrow_feats, tol)

    for e in range(m):
        if np.max(np.abs(Aw[:, e])) <= tol and rest_matches(e):
            return True
        for p in range(m):
            if p != e and np.max(np.abs(Ww[p] - Ww[e])) <= tol and rest_matches(e, merged_into=p):
                return True
    return False


@dataclass(frozen=True)
class OutputReport:
    max_dev: float
    probes: int


def verify_output_preservation(narrow_arch, theta_narr, wide_arch, theta_wide, probes=100, seed=0):
    """Largest output difference over standard-normal probe inputs."""
    if narrow_arch.input_dim != wide_arch.input_dim or narrow_arch.output_dim != wide_arch.output_dim:
        raise ShapeError("networks differ in input or output dimension")
    X = np.random.default_rng(seed).standard_normal((probes, narrow_arch.input_dim))
    dev = np.abs(forward(narrow_arch, theta_narr, X) - forward(wide_arch, theta_wide, X))
    return OutputReport(float(np.max(dev)), probes)


@dataclass(frozen=True)
class CriticalityReport:
    grad_inf_norm: float
    is_critical: bool
    tol: float


def verify_criticality(arch, theta, samples, kind, tol=1e-9):
    """Critical means ``max |grad R_S(theta)| <= tol`` (absolute)."""
    g = grad_loss(arch, theta, samples, kind)
    norm = float(np.max(np.abs(g)))
    return CriticalityReport(norm, norm <= tol, tol)


def wide_architecture(arch, theta):
    """Architecture matching ``theta``'s widths with ``arch``'s activation."""
    return Architecture(arch.input_dim, arch.output_dim, theta.hidden_widths, arch.activation)
