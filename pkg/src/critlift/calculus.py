"""Losses, total loss, backpropagated gradients and parameter Jacobians.

Losses act on output vectors ``p`` (network output) and ``q`` (target) of
length D and satisfy ``loss(p, q) = 0 <=> p = q`` and
``d/dp loss(p, q) = 0 <=> p = q``:

* ``SquaredError``: ``sum_j (p_j - q_j)**2`` (no 1/2 factor).
* ``EvenPower(s)``: ``sum_j (p_j - q_j)**s`` for even ``s >= 2``.
* ``BinaryCrossEntropy``: cross-entropy of ``p`` relative to ``q`` minus the
  entropy of ``q``, i.e. ``q log(q/p) + (1-q) log((1-q)/(1-p))``; scalar
  outputs only, ``p, q`` in (0, 1).

Gradients are flat vectors ordered like ``ParamVec.flatten``.
"""
import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError, ShapeError
from .network import ParamVec, forward, layer_outputs


@dataclass(frozen=True)
class LossKind:
    name: str
    power: int = 2

    def __post_init__(self):
        if self.name not in ("squared", "even_power", "bce"):
            raise ValueError(f"unknown loss {self.name!r}")
        if self.name == "even_power" and (self.power < 2 or self.power % 2):
            raise ValueError(f"EvenPower needs an even power >= 2, got {self.power}")

    def _check(self, p, q=None):
        if self.name != "bce":
            return
        if p.shape[-1] != 1:
            raise DomainError("binary cross-entropy needs output dimension 1")
        for name, v in (("p", p), ("q", q)):
            if v is not None and not np.all((v > 0.0) & (v < 1.0)):
                raise DomainError(f"binary cross-entropy needs {name} in (0, 1)")

    def value(self, p, q):
        """Per-row loss; ``p`` and ``q`` have shape ``(..., D)``."""
        p, q = np.asarray(p, float), np.asarray(q, float)
        self._check(p, q)
        r = p - q
        if self.name == "squared":
            return np.sum(r * r, axis=-1)
        if self.name == "even_power":
            return np.sum(r ** self.power, axis=-1)
        return np.sum(q * np.log(q / p) + (1.0 - q) * np.log((1.0 - q) / (1.0 - p)), axis=-1)

    def grad_p(self, p, q):
        p, q = np.asarray(p, float), np.asarray(q, float)
        self._check(p, q)
        r = p - q
        if self.name == "squared":
            return 2.0 * r
        if self.name == "even_power":
            return self.power * r ** (self.power - 1)
        return r / (p * (1.0 - p))

    def invert_grad(self, p, g):
        """Targets ``q`` with ``grad_p(p, q) == g`` (elementwise closed form)."""
        p, g = np.asarray(p, float), np.asarray(g, float)
        if p.shape != g.shape:
            raise ShapeError(f"p and g shapes differ: {p.shape} vs {g.shape}")
        if self.name == "squared":
            return p - g / 2.0
        if self.name == "even_power":
            k = self.power - 1
            return p - np.sign(g) * (np.abs(g) / self.power) ** (1.0 / k)
        self._check(p)
        q = p - g * p * (1.0 - p)
        if not np.all((q > 0.0) & (q < 1.0)):
            with np.errstate(divide="ignore"):
                bound = np.where(g > 0, 1.0 / (g * (1.0 - p)),
                                 np.where(g < 0, 1.0 / (-g * p), np.inf))
            raise RangeError("gradient target outside the range of the cross-entropy gradient",
                             max_scale=min(1.0, float(np.min(bound))))
        return q

    def to_dict(self):
        return {"kind": self.name, "power": self.power} if self.name == "even_power" \
            else {"kind": self.name}

    @classmethod
    def from_dict(cls, data):
        kind = str(data.get("kind", "squared")).lower()
        aliases = {"squarederror": "squared", "squared_error": "squared", "mse": "squared",
                   "evenpower": "even_power", "binarycrossentropy": "bce",
                   "binary_cross_entropy": "bce"}
        kind = aliases.get(kind, kind)
        return cls(kind, int(data.get("power", 2)))


def SquaredError():
    return LossKind("squared")


def EvenPower(s):
    return LossKind("even_power", s)


def BinaryCrossEntropy():
    return LossKind("bce")


def loss_value(kind, p, q):
    return float(kind.value(np.atleast_1d(p), np.atleast_1d(q)))


def loss_grad_p(kind, p, q):
    return kind.grad_p(np.atleast_1d(p), np.atleast_1d(q))


def invert_loss_gradient(kind, p, g):
    """Solve ``loss_grad_p(kind, p, q) = g`` for ``q``.

    Raises
    ------
    RangeError
        When ``g`` is not attainable; ``exc.max_scale`` tells how far ``g``
        must be shrunk.
    """
    return kind.invert_grad(np.atleast_1d(p), np.atleast_1d(g))


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Inputs ``xs`` (n x d) and outputs ``ys`` (n x D)."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float)
        ys = np.array(self.ys, dtype=float)
        xs = xs[:, None] if xs.ndim == 1 else xs
        ys = ys[:, None] if ys.ndim == 1 else ys
        if xs.ndim != 2 or ys.ndim != 2 or xs.shape[0] != ys.shape[0] or xs.shape[0] < 1:
            raise ShapeError(f"bad sample shapes {xs.shape}, {ys.shape}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("samples must be finite")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self):
        return self.xs.shape[0]

    def is_generic(self, tol=1e-12):
        from .network import is_generic
        return is_generic(self.xs, tol)

    def to_csv(self):
        d, D = self.xs.shape[1], self.ys.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x_{k + 1}" for k in range(d)] + [f"y_{k + 1}" for k in range(D)])
        for x, y in zip(self.xs, self.ys):
            w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in y])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        header = [h.strip() for h in rows[0]]
        xcols = [k for k, h in enumerate(header) if h.startswith("x_")]
        ycols = [k for k, h in enumerate(header) if h.startswith("y_")]
        if not xcols or not ycols or len(xcols) + len(ycols) != len(header):
            raise ShapeError(f"CSV header must be x_1..x_d,y_1..y_D, got {header}")
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        return cls(data[:, xcols], data[:, ycols])


def total_loss(arch, theta, samples, kind):
    out = forward(arch, theta, samples.xs)
    _check_targets(arch, samples)
    return float(np.sum(kind.value(out, samples.ys)))


def _check_targets(arch, samples):
    if samples.ys.shape[1] != arch.output_dim:
        raise ShapeError(f"targets have dimension {samples.ys.shape[1]}, network outputs {arch.output_dim}")


def residual_grads(arch, theta, samples, kind):
    """``d/dp loss(H(theta, x_i), y_i)`` for every sample, shape (n, D)."""
    _check_targets(arch, samples)
    return kind.grad_p(forward(arch, theta, samples.xs), samples.ys)


def _backprop_sum(arch, theta, X, G):
    """Gradient of ``sum_i G_i . H(theta, x_i)`` with respect to theta."""
    hs = layer_outputs(arch, theta, X)
    dA = G.T @ hs[-1]
    dws = [None] * arch.depth
    delta = (G @ theta.a) * arch.activation.deriv(hs[-2] @ theta.ws[-1].T)
    for l in range(arch.depth - 1, -1, -1):
        dws[l] = delta.T @ hs[l]
        if l:
            delta = (delta @ theta.ws[l]) * arch.activation.deriv(hs[l - 1] @ theta.ws[l - 1].T)
    return np.concatenate([dA.ravel()] + [w.ravel() for w in reversed(dws)])


def grad_loss(arch, theta, samples, kind):
    """Exact gradient of ``total_loss`` by backpropagation."""
    theta.check(arch)
    G = residual_grads(arch, theta, samples, kind)
    return _backprop_sum(arch, theta, samples.xs, G)


def _per_sample_grads(arch, theta, X, G):
    """Row ``i`` is the gradient of ``G_i . H(theta, x_i)``; shape (n, N)."""
    hs = layer_outputs(arch, theta, X)
    n = X.shape[0]
    blocks = [None] * (arch.depth + 1)
    blocks[0] = np.einsum("ij,ik->ijk", G, hs[-1]).reshape(n, -1)
    delta = (G @ theta.a) * arch.activation.deriv(hs[-2] @ theta.ws[-1].T)
    for l in range(arch.depth - 1, -1, -1):
        blocks[arch.depth - l] = np.einsum("ij,ik->ijk", delta, hs[l]).reshape(n, -1)
        if l:
            delta = (delta @ theta.ws[l]) * arch.activation.deriv(hs[l - 1] @ theta.ws[l - 1].T)
    return np.concatenate(blocks, axis=1)


def jacobians(arch, theta, xs):
    """Stacked parameter Jacobians, shape (n, N, D): ``[i, :, j]`` is grad_theta H_j(theta, x_i)."""
    theta.check(arch)
    X = np.asarray(xs, dtype=float)
    X = X[None, :] if X.ndim == 1 else X
    if X.shape[1] != arch.input_dim:
        raise ShapeError(f"inputs must have dimension {arch.input_dim}")
    n, D = X.shape[0], arch.output_dim
    out = np.empty((n, arch.n_params, D))
    for j in range(D):
        G = np.zeros((n, D))
        G[:, j] = 1.0
        out[:, :, j] = _per_sample_grads(arch, theta, X, G)
    return out


def jacobian_params(arch, theta, x):
    """Parameter Jacobian at one input, shape (N, D)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError("jacobian_params takes a single input vector")
    return jacobians(arch, theta, x)[0]


def numeric_gradient(fn, x0, h=1e-5):
    """Central finite differences of a scalar function of a flat vector."""
    x0 = np.asarray(x0, dtype=float)
    g = np.empty_like(x0)
    x = x0.copy()
    for k in range(x0.size):
        x[k] = x0[k] + h
        fp = fn(x)
        x[k] = x0[k] - h
        fm = fn(x)
        x[k] = x0[k]
        g[k] = (fp - fm) / (2.0 * h)
    return g


def fd_grad_loss(arch, theta, samples, kind, h=1e-5):
    """Finite-difference gradient of ``total_loss``; used as a check."""
    return numeric_gradient(
        lambda v: total_loss(arch, ParamVec.unflatten(arch, v), samples, kind),
        theta.flatten(), h)
