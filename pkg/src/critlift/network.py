"""Bias-free fully-connected networks.

A network with ``L`` hidden layers maps ``x`` in R^d to R^D by

    H0 = x,  Hl = act(W_l @ H(l-1))  for l = 1..L,  out = A @ HL

where ``W_l`` has shape ``(m_l, m_{l-1})`` (``m_0 = d``) and ``A`` has shape
``(D, m_L)``. Parameters flatten in the order ``A, W_L, ..., W_1``, each block
row-major.
"""
import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .errors import ConfigError, DegenerateInput, ShapeError


@dataclass(frozen=True)
class Activation:
    name: str
    fn: Callable
    deriv: Callable
    parity: Optional[str] = None  # "odd", "even" or None

    def __call__(self, z):
        return self.fn(z)

    @property
    def vanishes_at_zero(self):
        return float(self.fn(np.float64(0.0))) == 0.0


def _sigmoid(z):
    # split by sign so exp never overflows
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else out[()]


def _dsigmoid(z):
    s = _sigmoid(z)
    return s * (1.0 - s)


def _swish(z):
    return np.asarray(z, dtype=float) * _sigmoid(z)


def _dswish(z):
    s = _sigmoid(z)
    return s + np.asarray(z, dtype=float) * s * (1.0 - s)


ACTIVATIONS = {
    "tanh": Activation("tanh", np.tanh, lambda z: 1.0 - np.tanh(z) ** 2, "odd"),
    "sigmoid": Activation("sigmoid", _sigmoid, _dsigmoid, None),
    # width parameter fixed to 1
    "gauss": Activation("gauss", lambda z: np.exp(-np.square(z)),
                        lambda z: -2.0 * np.asarray(z) * np.exp(-np.square(z)), "even"),
    "swish": Activation("swish", _swish, _dswish, None),
}


def get_activation(act):
    if isinstance(act, Activation):
        return act
    try:
        return ACTIVATIONS[str(act).lower()]
    except KeyError:
        raise ConfigError(f"unknown activation {act!r}; choose from {sorted(ACTIVATIONS)}") from None


@dataclass(frozen=True)
class Architecture:
    input_dim: int
    output_dim: int
    hidden_widths: Tuple[int, ...]
    activation: Activation = ACTIVATIONS["tanh"]

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(m) for m in self.hidden_widths))
        object.__setattr__(self, "activation", get_activation(self.activation))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ShapeError("input and output dimensions must be >= 1")
        if not self.hidden_widths or min(self.hidden_widths) < 1:
            raise ShapeError("need at least one hidden layer, all widths >= 1")

    @property
    def depth(self):
        return len(self.hidden_widths)

    @property
    def layer_shapes(self):
        """Shapes of ``W_1..W_L``."""
        dims = (self.input_dim,) + self.hidden_widths
        return [(dims[l + 1], dims[l]) for l in range(self.depth)]

    @property
    def out_shape(self):
        return (self.output_dim, self.hidden_widths[-1])

    @property
    def n_params(self):
        return int(np.prod(self.out_shape) + sum(r * c for r, c in self.layer_shapes))

    def with_widths(self, widths):
        return Architecture(self.input_dim, self.output_dim, tuple(widths), self.activation)

    def is_narrower_than(self, other):
        """Same d, D, depth and activation, and no wider in any layer."""
        return (self.input_dim == other.input_dim and self.output_dim == other.output_dim
                and self.depth == other.depth
                and self.activation.name == other.activation.name
                and all(m <= mp for m, mp in zip(self.hidden_widths, other.hidden_widths)))

    def to_dict(self):
        return {"input_dim": self.input_dim, "output_dim": self.output_dim,
                "hidden_widths": list(self.hidden_widths), "activation": self.activation.name}

    @classmethod
    def from_dict(cls, data):
        if "bias" in data or "biases" in data:
            raise ConfigError("bias terms are not supported")
        try:
            return cls(int(data["input_dim"]), int(data["output_dim"]),
                       tuple(data["hidden_widths"]), data.get("activation", "tanh"))
        except KeyError as exc:
            raise ConfigError(f"architecture missing field {exc}") from None


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ParamVec:
    """Network parameters: output weights ``a`` and hidden weights ``ws[0..L-1]``.

    ``ws[l]`` is the weight matrix of hidden layer ``l + 1``. Arrays are
    read-only; build a new ParamVec to change anything.
    """

    a: np.ndarray
    ws: Tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", _frozen(self.a))
        object.__setattr__(self, "ws", tuple(_frozen(w) for w in self.ws))
        if self.a.ndim != 2 or any(w.ndim != 2 for w in self.ws) or not self.ws:
            raise ShapeError("a and every layer weight must be 2-D matrices")
        for lower, upper in zip(self.ws[:-1], self.ws[1:]):
            if upper.shape[1] != lower.shape[0]:
                raise ShapeError("consecutive layer shapes do not chain")
        if self.a.shape[1] != self.ws[-1].shape[0]:
            raise ShapeError("output weights do not match last hidden width")

    @property
    def hidden_widths(self):
        return tuple(w.shape[0] for w in self.ws)

    def architecture(self, activation="tanh"):
        return Architecture(self.ws[0].shape[1], self.a.shape[0], self.hidden_widths, activation)

    def check(self, arch):
        if self.a.shape != arch.out_shape or [w.shape for w in self.ws] != arch.layer_shapes:
            raise ShapeError(f"parameter shapes {self.a.shape}/{[w.shape for w in self.ws]} "
                             f"do not match architecture {arch.to_dict()}")
        return self

    def flatten(self):
        return np.concatenate([self.a.ravel()] + [w.ravel() for w in reversed(self.ws)])

    @classmethod
    def unflatten(cls, arch, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (arch.n_params,):
            raise ShapeError(f"expected a flat vector of length {arch.n_params}, got {vec.shape}")
        shapes = [arch.out_shape] + list(reversed(arch.layer_shapes))
        blocks, pos = [], 0
        for r, c in shapes:
            blocks.append(vec[pos:pos + r * c].reshape(r, c))
            pos += r * c
        return cls(blocks[0], tuple(reversed(blocks[1:])))

    @classmethod
    def zeros(cls, arch):
        return cls.unflatten(arch, np.zeros(arch.n_params))

    @classmethod
    def random(cls, arch, rng, scale=1.0):
        return cls.unflatten(arch, scale * rng.standard_normal(arch.n_params))

    def replace(self, a=None, ws=None):
        return ParamVec(self.a if a is None else a, self.ws if ws is None else tuple(ws))

    def allclose(self, other, atol=0.0):
        return (self.a.shape == other.a.shape
                and [w.shape for w in self.ws] == [w.shape for w in other.ws]
                and np.allclose(self.flatten(), other.flatten(), rtol=0.0, atol=atol))

    def to_dict(self):
        return {
            "input_dim": self.ws[0].shape[1],
            "output_dim": self.a.shape[0],
            "hidden_widths": list(self.hidden_widths),
            "a_shape": list(self.a.shape),
            "w_shapes": [list(w.shape) for w in self.ws],
            "a": self.a.tolist(),
            "w": [w.tolist() for w in self.ws],
        }

    def to_json(self):
        if not np.all(np.isfinite(self.flatten())):
            raise ValueError("cannot serialise non-finite parameters")
        return json.dumps(self.to_dict(), allow_nan=False)

    @classmethod
    def from_dict(cls, data):
        try:
            a = np.array(data["a"], dtype=float).reshape(data["a_shape"])
            ws = [np.array(w, dtype=float).reshape(s) for w, s in zip(data["w"], data["w_shapes"])]
        except KeyError as exc:
            raise ConfigError(f"parameter JSON missing field {exc}") from None
        if len(ws) != len(data["w_shapes"]):
            raise ShapeError("w and w_shapes lengths differ")
        return cls(a, tuple(ws))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _as_inputs(arch, xs):
    xs = np.asarray(xs, dtype=float)
    single = xs.ndim == 1
    X = xs[None, :] if single else xs
    if X.ndim != 2 or X.shape[1] != arch.input_dim:
        raise ShapeError(f"inputs must have trailing dimension {arch.input_dim}, got {xs.shape}")
    return X, single


def layer_outputs(arch, theta, x):
    """List ``[H0, H1, ..., HL]`` for one input or a batch (rows)."""
    theta.check(arch)
    X, single = _as_inputs(arch, x)
    hs = [X]
    for W in theta.ws:
        hs.append(arch.activation(hs[-1] @ W.T))
    return [h[0] for h in hs] if single else hs


def forward(arch, theta, x):
    """Network output for one input (shape ``(D,)``) or a batch (``(n, D)``)."""
    hs = layer_outputs(arch, theta, x)
    return hs[-1] @ theta.a.T


def is_generic(xs, tol=1e-12):
    """True when every x_i is nonzero and x_i +- x_j is nonzero for i < j."""
    X = np.asarray(xs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if np.any(np.linalg.norm(X, axis=1) <= tol):
        return False
    diff = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    summ = np.linalg.norm(X[:, None, :] + X[None, :, :], axis=2)
    iu = np.triu_indices(X.shape[0], 1)
    return bool(np.all(diff[iu] > tol) and np.all(summ[iu] > tol))


def neuron_independence_check(xs, activation, trials=200, seed=0, rel_tol=linalg.DEFAULT_REL_TOL):
    """Numerical check that the functions ``w -> act(w . x_i)`` are independent.

    Samples ``trials`` weights from a standard normal, forms the
    ``trials x n`` matrix ``act(w_t . x_i)`` and reports its rank.

    Returns
    -------
    dict with keys ``independent`` (rank == n) and ``rank``.
    """
    X = np.asarray(xs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if trials < n:
        raise ValueError(f"trials ({trials}) must be at least the number of inputs ({n})")
    if np.any(np.linalg.norm(X, axis=1) == 0.0):
        raise DegenerateInput("inputs must be nonzero")
    act = get_activation(activation)
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((trials, X.shape[1]))
    r = linalg.rank(act(W @ X.T), rel_tol)
    return {"independent": r == n, "rank": r}


def permute_layer(theta, layer, perm):
    """Permute the neurons of hidden layer ``layer`` (1-based) and the
    matching columns downstream, leaving the network function unchanged."""
    perm = np.asarray(perm)
    ws = list(theta.ws)
    ws[layer - 1] = ws[layer - 1][perm]
    a = theta.a
    if layer < len(ws):
        ws[layer] = ws[layer][:, perm]
    else:
        a = a[:, perm]
    return ParamVec(a, tuple(ws))
