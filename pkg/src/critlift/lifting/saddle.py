"""Saddle certificates built from level-set witnesses.

If every neighbourhood of a critical point ``x*`` holds a point ``x`` with
the same loss and a nonzero gradient, small steps from ``x`` against and
along the gradient give strictly lower and higher loss values, so ``x*`` is
a saddle. For a wide form the level set is free: moving the incoming rows
of the appended zero-output neurons keeps the network function, hence the
loss.
"""
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from scipy.optimize import minimize

from ..calculus import grad_loss, total_loss
from ..errors import CertificationFailed
from ..network import ParamVec

DEFAULT_RADII = (1e-2, 1e-3)


@dataclass(frozen=True, eq=False)
class Witness:
    theta: ParamVec
    loss: float


@dataclass(frozen=True, eq=False)
class LiftCertificate:
    status: str  # "Critical", "NonCritical" or "Saddle"
    grad_inf_norm: float
    loss: float
    seed: int
    tolerances: dict
    radius: Optional[float] = None
    lower: Optional[Witness] = None
    upper: Optional[Witness] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"status": self.status, "grad_inf_norm": self.grad_inf_norm, "loss": self.loss,
               "radius": self.radius, "seed": self.seed, "tolerances": dict(self.tolerances)}
        if self.lower is not None:
            out["witnesses"] = {
                "lower": {"theta": self.lower.theta.to_dict(), "loss": self.lower.loss},
                "upper": {"theta": self.upper.theta.to_dict(), "loss": self.upper.loss},
            }
        else:
            out["witnesses"] = None
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)


def find_level_set_witnesses(loss, grad, x_star, perturb, radii=DEFAULT_RADII, trials=32,
                             seed=0, level_tol=1e-12, grad_tol=1e-11, gap=1e-12,
                             max_halvings=40):
    """Search for points below and above ``loss(x_star)`` within each radius.

    ``perturb(x_star, step, rng)`` must return a point at distance ``step``
    from ``x_star``; it is called with ``step = 0.9 r`` and the gradient step
    is capped at ``r / 10``, so witnesses stay inside radius ``r``.

    Returns
    -------
    dict
        ``{"radius", "lower", "upper", "f_lower", "f_upper"}`` for the smallest
        radius that produced witnesses.

    Raises
    ------
    CertificationFailed
        With counts of off-level, flat and failed line searches.
    """
    rng = np.random.default_rng(seed)
    x_star = np.asarray(x_star, dtype=float)
    f0 = float(loss(x_star))
    counts = {"off_level": 0, "flat": 0, "line_search_failed": 0}
    found = None
    for r in sorted(radii, reverse=True):
        for _ in range(trials):
            x = perturb(x_star, 0.9 * r, rng)
            if abs(loss(x) - f0) > level_tol * (1.0 + abs(f0)):
                counts["off_level"] += 1
                continue
            g = np.asarray(grad(x), dtype=float)
            if np.max(np.abs(g)) <= grad_tol:
                counts["flat"] += 1
                continue
            u = g / np.linalg.norm(g)
            eta = 0.1 * r
            for _ in range(max_halvings):
                lo, hi = x - eta * u, x + eta * u
                f_lo, f_hi = float(loss(lo)), float(loss(hi))
                if f0 - f_lo > gap and f_hi - f0 > gap:
                    found = {"radius": r, "lower": lo, "upper": hi, "f_lower": f_lo,
                             "f_upper": f_hi, "f_star": f0}
                    break
                eta *= 0.5
            else:
                counts["line_search_failed"] += 1
                continue
            break
    if found is None:
        raise CertificationFailed("no level-set witnesses found at any radius",
                                  dict(counts, radii=list(radii), trials=trials))
    return found


def negative_curvature_witnesses(loss, grad, x_star, radii=DEFAULT_RADII, gap=1e-12,
                                 fd_step=1e-5, max_halvings=40, seed=0, starts_per_radius=8):
    """Second-order witnesses from a finite-difference Hessian at ``x_star``.

    The lower witness moves along the eigenvector of the most negative
    eigenvalue (signed so the gradient term does not increase the loss), the
    upper one along the eigenvector of the largest eigenvalue. Step lengths
    start at ``r`` and are halved until both gaps exceed ``gap``. If that
    fails, the lower witness is the result of minimising the loss over the
    ball of radius ``r`` from seeded starting points.

    Raises
    ------
    CertificationFailed
        If the Hessian has no negative eigenvalue or the line search fails.
    """
    x_star = np.asarray(x_star, dtype=float)
    f0 = float(loss(x_star))
    g0 = np.asarray(grad(x_star), dtype=float)
    eye = np.eye(x_star.size)
    H = np.array([(grad(x_star + fd_step * e) - grad(x_star - fd_step * e)) / (2 * fd_step) for e in eye])
    lam, V = np.linalg.eigh(0.5 * (H + H.T))
    if lam[0] >= 0.0:
        raise CertificationFailed("Hessian has no negative eigenvalue",
                                  {"lambda_min": float(lam[0]), "lambda_max": float(lam[-1])})
    down = V[:, 0] if g0 @ V[:, 0] <= 0.0 else -V[:, 0]
    up = V[:, -1] if g0 @ V[:, -1] >= 0.0 else -V[:, -1]
    for r in sorted(radii, reverse=True):
        s = r
        for _ in range(max_halvings):
            lo, hi = x_star + s * down, x_star + s * up
            f_lo, f_hi = float(loss(lo)), float(loss(hi))
            if f0 - f_lo > gap and f_hi - f0 > gap:
                return {"radius": r, "lower": lo, "upper": hi, "f_lower": f_lo, "f_upper": f_hi,
                        "f_star": f0, "lambda_min": float(lam[0])}
            s *= 0.5
    # higher-order terms can swamp a tiny negative eigenvalue along the straight
    # line; minimise the loss over the ball instead (SLSQP, seeded starts)
    rng = np.random.default_rng(seed)
    for r in sorted(radii, reverse=True):
        s, hi, f_hi = r, None, f0
        for _ in range(max_halvings):
            if float(loss(x_star + s * up)) - f0 > gap:
                hi = x_star + s * up
                f_hi = float(loss(hi))
                break
            s *= 0.5
        if hi is None:
            continue
        # unit-ball coordinates z = (x - x_star) / r, objective of order one
        scale = max(abs(lam[0]) * r * r, gap)
        starts = [0.5 * down]
        for _ in range(starts_per_radius - 1):
            u = rng.standard_normal(x_star.size)
            starts.append(0.5 * u / np.linalg.norm(u))
        ball = {"type": "ineq", "fun": lambda z: 1.0 - z @ z, "jac": lambda z: -2.0 * z}
        for z0 in starts:
            res = minimize(lambda z: (loss(x_star + r * z) - f0) / scale, z0,
                           jac=lambda z: r * grad(x_star + r * z) / scale, constraints=[ball],
                           method="SLSQP", options={"ftol": 1e-10, "maxiter": 500})
            z = res.x / max(1.0, np.linalg.norm(res.x))
            lo = x_star + r * z
            f_lo = float(loss(lo))
            if f0 - f_lo > gap:
                return {"radius": r, "lower": lo, "upper": hi, "f_lower": f_lo, "f_upper": f_hi,
                        "f_star": f0, "lambda_min": float(lam[0]), "ball_descent": True}
    raise CertificationFailed("negative-curvature and ball-descent searches failed",
                              {"lambda_min": float(lam[0]), "radii": list(radii)})


def _extra_perturbation(wide):
    sl = wide.extra_slice()

    def perturb(x, step, rng):
        u = rng.standard_normal(sl.stop - sl.start)
        y = x.copy()
        y[sl] += step * u / np.linalg.norm(u)
        return y

    return perturb


def certify_saddle(wide, samples, kind, radii=DEFAULT_RADII, trials=32, seed=0, crit_tol=1e-8):
    """Certify that a critical wide form is a saddle.

    Perturbations move only the extra incoming rows, which keeps the loss
    constant; ``find_level_set_witnesses`` then supplies the lower and upper
    points. When that search fails (the level set is nearly flat at the
    required gap) ``negative_curvature_witnesses`` is tried; the method used
    is recorded in ``diagnostics["method"]``.

    Raises
    ------
    CertificationFailed
        If the point is not critical, has zero loss, or no witnesses exist.
    """
    arch = wide.wide_arch
    theta = wide.theta
    gnorm = float(np.max(np.abs(grad_loss(arch, theta, samples, kind))))
    f0 = total_loss(arch, theta, samples, kind)
    tolerances = {"crit_tol": crit_tol, "level_tol": 1e-12, "grad_tol": 1e-11, "gap": 1e-12,
                  "radii": list(radii), "trials": trials}
    if gnorm > crit_tol:
        raise CertificationFailed("point is not critical",
                                  {"grad_inf_norm": gnorm, "crit_tol": crit_tol})
    if f0 == 0.0:
        raise CertificationFailed("loss vanishes at the point; it is a global minimum", {"loss": f0})

    def loss(v):
        return total_loss(arch, ParamVec.unflatten(arch, v), samples, kind)

    def grad(v):
        return grad_loss(arch, ParamVec.unflatten(arch, v), samples, kind)

    x_star = theta.flatten()
    try:
        w = find_level_set_witnesses(loss, grad, x_star, _extra_perturbation(wide), radii, trials, seed)
        diagnostics = {"method": "level_set"}
    except CertificationFailed as level_exc:
        try:
            w = negative_curvature_witnesses(loss, grad, x_star, radii, seed=seed)
        except CertificationFailed as curv_exc:
            raise CertificationFailed(str(level_exc),
                                      dict(level_exc.diagnostics, curvature=curv_exc.diagnostics)) from None
        method = "ball_descent" if w.get("ball_descent") else "negative_curvature"
        diagnostics = {"method": method, "lambda_min": w["lambda_min"],
                       "level_set": level_exc.diagnostics}
    return LiftCertificate(
        "Saddle", gnorm, f0, seed, tolerances, radius=w["radius"],
        lower=Witness(ParamVec.unflatten(arch, w["lower"]), w["f_lower"]),
        upper=Witness(ParamVec.unflatten(arch, w["upper"]), w["f_upper"]),
        diagnostics=diagnostics,
    )


def classify_lift(wide, samples, kind, radii=DEFAULT_RADII, trials=32, seed=0, crit_tol=1e-8):
    """Certificate with status NonCritical, Critical (no saddle witnesses) or Saddle."""
    try:
        return certify_saddle(wide, samples, kind, radii, trials, seed, crit_tol)
    except CertificationFailed as exc:
        arch, theta = wide.wide_arch, wide.theta
        gnorm = float(np.max(np.abs(grad_loss(arch, theta, samples, kind))))
        status = "NonCritical" if gnorm > crit_tol else "Critical"
        return LiftCertificate(status, gnorm, total_loss(arch, theta, samples, kind), seed,
                               {"crit_tol": crit_tol, "radii": list(radii), "trials": trials},
                               diagnostics=dict(exc.diagnostics, reason=str(exc)))
