"""The appended-neuron function ``phi(w) = sum_i e_i act(w . f_i)`` and its zeros.

With ``e_i`` the loss gradients of the narrow network and ``f_i`` the inputs
of the last hidden layer, ``phi(w)`` is ``dR/da'`` for a neuron with incoming
row ``w`` and zero output weight, so its zeros are exactly the incoming rows
that keep such a wide parameter critical.
"""
import numpy as np

from ..errors import ConfigError, DegenerateResidual, ShapeError
from ..network import get_activation


def _check(residual_grads, features):
    e = np.asarray(residual_grads, dtype=float).ravel()
    f = np.asarray(features, dtype=float)
    f = f[:, None] if f.ndim == 1 else f
    if f.shape[0] != e.size:
        raise ShapeError(f"{e.size} residuals but {f.shape[0]} feature vectors")
    return e, f


def varphi(w, residual_grads, features, activation):
    """``sum_i e_i act(w . f_i)``; ``w`` may be a single row or a batch of rows."""
    e, f = _check(residual_grads, features)
    act = get_activation(activation)
    w = np.asarray(w, dtype=float)
    if w.ndim == 0:
        w = w.reshape(1)
    return act(w @ f.T) @ e if w.ndim > 1 else float(act(f @ w) @ e)


def varphi_grad(w, residual_grads, features, activation):
    """Gradient of ``varphi`` with respect to ``w``."""
    e, f = _check(residual_grads, features)
    act = get_activation(activation)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    return (e * act.deriv(f @ w)) @ f


def _bisect(fn, lo, hi, flo, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def varphi_zero_set_1d(residual_grads, xs, activation, w_range=(-2.0, 2.0), grid=4001,
                       refine_tol=1e-10, direction=None, root_tol=1e-9):
    """Zeros of ``s -> phi(s * u)`` on ``w_range``.

    Sign changes on a uniform grid are refined by bisection. Because the
    narrow neuron's own weight is a double zero of ``phi`` whenever the narrow
    parameter is critical, local extrema of ``phi`` (sign changes of its
    derivative) are refined too and kept when ``|phi| < root_tol`` there.

    Parameters
    ----------
    residual_grads : array_like, shape (n,)
    xs : array_like, shape (n,) or (n, d)
        Feature vectors; for d > 1 a slice ``direction`` is required.
    direction : array_like, optional
        Unit direction ``u`` of the slice (defaults to 1 when d = 1).

    Returns
    -------
    list of float, sorted
    """
    lo, hi = map(float, w_range)
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo or grid < 3:
        raise ConfigError(f"empty or invalid range {w_range} / grid {grid}")
    e, f = _check(residual_grads, xs)
    if not np.any(e):
        raise DegenerateResidual("residual vector is zero; phi vanishes on the whole line")
    if direction is None:
        if f.shape[1] != 1:
            raise ShapeError("multi-dimensional features need a slice direction")
        direction = np.ones(1)
    u = np.asarray(direction, dtype=float).ravel()
    proj = f @ u
    act = get_activation(activation)

    def phi(s):
        return float(act(s * proj) @ e)

    def dphi(s):
        return float((e * act.deriv(s * proj)) @ proj)

    s = np.linspace(lo, hi, grid)
    vals = act(np.outer(s, proj)) @ e
    ders = (act.deriv(np.outer(s, proj)) * proj) @ e
    roots = [float(v) for v in s[vals == 0.0]]
    for k in range(grid - 1):
        a, b = vals[k], vals[k + 1]
        if a != 0.0 and b != 0.0 and (a > 0) != (b > 0):
            roots.append(_bisect(phi, s[k], s[k + 1], a, refine_tol))
    for k in range(grid - 1):
        a, b = ders[k], ders[k + 1]
        if a != 0.0 and b != 0.0 and (a > 0) != (b > 0):
            c = _bisect(dphi, s[k], s[k + 1], a, refine_tol)
            if abs(phi(c)) < root_tol:
                roots.append(c)
    roots = [r for r in roots if abs(phi(r)) < root_tol]
    roots.sort()
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > 1e3 * refine_tol:
            merged.append(r)
    return merged
