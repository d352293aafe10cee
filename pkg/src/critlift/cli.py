"""``critlift`` command line: scenario-driven synthesis, checks and figure data.

Usage::

    critlift <command> --scenario PATH [--seed N] [--out DIR]

Exit codes: 0 success, 2 certification failure, 3 configuration error or
too few samples, 1 any other library error.
"""
import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import repro
from .calculus import LossKind, SampleSet
from .embeddings import (
    EmbeddingStep,
    apply_embedding,
    is_in_split_null_image,
    verify_criticality,
    verify_output_preservation,
    wide_architecture,
)
from .errors import CertificationFailed, ConfigError, CritLiftError, InsufficientSamples
from .lifting import (
    certify_saddle,
    extend_hidden_params,
    make_wide_form,
    sample_independence_probe,
    synthesize_critical_outputs,
    synthesize_noncritical_outputs,
    synthesize_wide_critical_outputs,
    varphi_zero_set_1d,
)
from .network import Architecture, ParamVec, forward, is_generic

COMMANDS = ("epsilon-curve", "fig1", "fig2", "fig3", "synthesize", "verify", "certify", "probe")
EXIT_OK, EXIT_ERROR, EXIT_CERT, EXIT_CONFIG = 0, 1, 2, 3


class Scenario:
    """A parsed scenario document plus the directory relative paths resolve against."""

    def __init__(self, data, base_dir):
        if not isinstance(data, dict):
            raise ConfigError("scenario must be a JSON object")
        self.data = data
        self.base_dir = Path(base_dir)
        self.seed = int(data.get("seed", 0))
        self.output_dir = data.get("output_dir", "out")

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"scenario file {path} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario file {path} is not valid JSON: {exc}") from exc
        return cls(data, path.parent)

    def digest(self):
        text = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def section(self, name):
        sec = self.data.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"section {name!r} must be an object")
        return sec

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def narrow_arch(self):
        if "narrow" not in self.data:
            raise ConfigError("scenario needs a 'narrow' architecture")
        return Architecture.from_dict(self.data["narrow"])

    @property
    def wide_widths(self):
        if "wide_widths" not in self.data:
            raise ConfigError("scenario needs 'wide_widths'")
        return tuple(int(m) for m in self.data["wide_widths"])

    @property
    def loss(self):
        try:
            return LossKind.from_dict(self.data.get("loss", {"kind": "squared"}))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def theta_narr(self, rng):
        arch = self.narrow_arch
        spec = self.data.get("theta")
        if spec is None:
            return ParamVec.random(arch, rng)
        if spec == "toy":
            return repro.narrow_theta()
        if isinstance(spec, str):
            spec = json.loads(self.resolve(spec).read_text(encoding="utf-8"))
        theta = ParamVec.from_dict(spec)
        theta.check(arch)
        return theta

    def inputs(self, arch, rng, n_default=None):
        """Sample inputs; ``samples`` may give a CSV path, explicit xs or a generator."""
        spec = self.section("samples")
        if "csv" in spec:
            return self.samples(arch).xs
        if "xs" in spec:
            xs = np.asarray(spec["xs"], dtype=float)
            return xs[:, None] if xs.ndim == 1 else xs
        gen = spec.get("generator", "normal")
        if gen == "toy":
            return repro.XS[:, None]
        if gen != "normal":
            raise ConfigError(f"unknown sample generator {gen!r}")
        n = int(spec.get("n", n_default or 0))
        if n < 1:
            raise ConfigError("normal sample generator needs n >= 1")
        xs = rng.standard_normal((n, arch.input_dim))
        while not is_generic(xs):
            xs = rng.standard_normal((n, arch.input_dim))
        return xs

    def samples(self, arch=None):
        """Explicit samples (CSV or the toy generator), or None when outputs must be synthesized."""
        spec = self.section("samples")
        if "csv" in spec:
            path = self.resolve(spec["csv"])
            if not path.exists():
                raise ConfigError(f"sample file {path} not found")
            return SampleSet.from_csv(path.read_text(encoding="utf-8"))
        if spec.get("generator") == "toy":
            return repro.toy_samples(float(spec.get("t", 0.0)), spec.get("curve", "kernel"))
        return None

    def embedding(self):
        try:
            return [EmbeddingStep.from_dict(s) for s in self.data.get("embedding", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad embedding step: {exc}") from exc


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(obj):
    return json.dumps(_to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


class Run:
    """Output sink shared by the commands."""

    def __init__(self, scenario, out_dir, seed):
        self.scenario = scenario
        self.out = Path(out_dir)
        self.seed = seed
        self.written = []

    def meta(self, **extra):
        return dict({"scenario_sha256": self.scenario.digest(), "seed": self.seed}, **extra)

    def write(self, name, text):
        _atomic_write(self.out / name, text)
        self.written.append(str(self.out / name))

    def write_json(self, name, obj):
        self.write(name, _dump(obj))


def _rng(run):
    return np.random.default_rng(run.seed)


def cmd_epsilon_curve(sc, run):
    ts = sc.section("epsilon_curve").get("t", [-4.0, 0.0, 3.0])
    lines = ["t,eps_1,eps_2,eps_3,eps_4,residual_inf,kernel_distance"]
    for t in ts:
        rep = repro.epsilon_report(float(t))
        vals = [rep["t"], *rep["eps"], rep["residual_inf"], rep["kernel_distance"]]
        lines.append(",".join(repr(float(v)) for v in vals))
    run.write("epsilon_curve.csv", "\n".join(lines) + "\n")


def cmd_fig1(sc, run):
    sec = sc.section("fig1")
    for t in sec.get("t", [-4.0, 0.0, 3.0]):
        grid = repro.fig1_field(float(t), sec.get("a1", (0.1, 0.9, 81)), sec.get("a2", (0.1, 0.9, 81)),
                                sec.get("curve", "kernel"), float(sec.get("display_scale", 1.0)))
        run.write(f"fig1_t{float(t):+g}.csv", grid.to_csv())
        run.write_json(f"fig1_t{float(t):+g}.json", run.meta(**grid.metadata, finite=grid.all_finite()))


def cmd_fig2(sc, run):
    sec = sc.section("fig2")
    t, curve = float(sec.get("t", 0.0)), sec.get("curve", "kernel")
    grid = repro.fig2_surface(sec.get("w2", (-0.3, 1.3, 161)), sec.get("a2", (-0.5, 0.5, 101)), t, curve)
    roots = repro.toy_roots(t, curve, tuple(sec.get("root_range", (-2.0, 2.0))))
    run.write("fig2_surface.csv", grid.to_csv())
    run.write_json("fig2_roots.json", run.meta(**grid.metadata, **roots, finite=grid.all_finite()))


def cmd_fig3(sc, run):
    sec = sc.section("fig3")
    grid, zeros = repro.fig3_phi(sec.get("t", (-0.5, 0.5, 101)), sec.get("w", (-0.8, 0.8, 161)),
                                 sec.get("curve", "rounded"))
    run.write("fig3_phi.csv", grid.to_csv())
    lines = ["t,w,branch"] + [f"{t!r},{w!r},{b}" for t, w, b in zeros]
    run.write("fig3_zeros.csv", "\n".join(lines) + "\n")
    exists, spread = repro.branch_variation(zeros)
    run.write_json("fig3_summary.json", run.meta(**grid.metadata, branch_exists=exists,
                                                 branch_spread=spread, finite=grid.all_finite()))


def _wide_form(sc, arch, theta, xs, rng, equal_extra=None):
    widths = sc.wide_widths
    hidden = None
    if widths[:-1] != arch.hidden_widths[:-1]:
        hidden = extend_hidden_params(arch, theta, widths, xs, seed=rng)
    spec = sc.section("certify").get("extra_weights") if "certify" in sc.data else None
    spec = sc.data.get("extra_weights", spec)
    if isinstance(spec, dict) and "phi_root_near" in spec:
        return _root_wide_form(sc, arch, theta, widths, hidden, xs, float(spec["phi_root_near"]))
    equal = (hidden is not None) if equal_extra is None else equal_extra
    return make_wide_form(arch, theta, widths, extra_weights=spec, hidden=hidden, seed=rng,
                          equal_extra=equal)


def _root_wide_form(sc, arch, theta, widths, hidden, xs, near):
    """Extra rows set to the zero of phi closest to ``near`` (scalar features only)."""
    samples = sc.samples(arch)
    if samples is None:
        raise ConfigError("phi_root_near needs explicit samples")
    wide = make_wide_form(arch, theta, widths, extra_weights=np.zeros(1), hidden=hidden)
    feats = wide.features(samples.xs)
    if feats.shape[1] != 1 or arch.output_dim != 1:
        raise ConfigError("phi_root_near needs scalar features and outputs")
    e = sc.loss.grad_p(forward(arch, theta, samples.xs), samples.ys)[:, 0]
    roots = varphi_zero_set_1d(e, feats, arch.activation, (near - 1.0, near + 1.0))
    if not roots:
        raise ConfigError(f"no zero of phi near {near}")
    return wide.with_extra_weights([[min(roots, key=lambda r: abs(r - near))]])


def cmd_synthesize(sc, run):
    rng = _rng(run)
    arch, kind = sc.narrow_arch, sc.loss
    theta = sc.theta_narr(rng)
    target = sc.section("synthesize").get("target", "narrow")
    if target == "narrow":
        xs = sc.inputs(arch, rng, n_default=int(np.ceil((1 + arch.n_params) / arch.output_dim)))
        syn = synthesize_critical_outputs(arch, theta, xs, kind, seed=rng)
        run.write("theta_narrow.json", theta.to_json() + "\n")
        run.write("samples.csv", SampleSet(xs, syn.ys).to_csv())
        run.write_json("synthesis.json", run.meta(target=target, scale=syn.scale,
                                                  kernel_dim=syn.kernel_dim, v=syn.v))
    elif target == "noncritical":
        xs = sc.inputs(arch, rng)
        wide = _wide_form(sc, arch, theta, xs, rng)
        syn = synthesize_noncritical_outputs(arch, theta, xs, kind, extra_weight=wide.extra_weights[0],
                                             hidden=wide.hidden, seed=rng)
        wide = wide.with_extra_weights(np.repeat(syn.extra_weight[None], wide.extra_weights.shape[0], 0))
        run.write("theta_narrow.json", theta.to_json() + "\n")
        run.write("theta_wide.json", wide.theta.to_json() + "\n")
        run.write("samples.csv", SampleSet(xs, syn.ys).to_csv())
        run.write_json("synthesis.json", run.meta(target=target, extra_row_value=syn.extra_row_value,
                                                  redraws=syn.redraws))
    elif target == "wide":
        xs = sc.inputs(arch, rng)
        wide = _wide_form(sc, arch, theta, xs, rng)
        syn = synthesize_wide_critical_outputs(wide, xs, kind, seed=rng)
        run.write("theta_narrow.json", theta.to_json() + "\n")
        run.write("theta_wide.json", wide.theta.to_json() + "\n")
        run.write("samples.csv", SampleSet(xs, syn.ys).to_csv())
        run.write_json("synthesis.json", run.meta(target=target, scale=syn.scale,
                                                  kernel_dim=syn.kernel_dim, v=syn.v))
    else:
        raise ConfigError(f"synthesize target must be narrow, noncritical or wide, got {target!r}")


def _narrow_samples(sc, arch, theta, kind, rng):
    samples = sc.samples(arch)
    if samples is None:
        xs = sc.inputs(arch, rng, n_default=int(np.ceil((1 + arch.n_params) / arch.output_dim)))
        samples = SampleSet(xs, synthesize_critical_outputs(arch, theta, xs, kind, seed=rng).ys)
    return samples


def cmd_verify(sc, run):
    rng = _rng(run)
    arch, kind = sc.narrow_arch, sc.loss
    theta = sc.theta_narr(rng)
    samples = _narrow_samples(sc, arch, theta, kind, rng)
    tol = float(sc.section("verify").get("tol", 1e-8))
    out = {"narrow": verify_criticality(arch, theta, samples, kind, tol).__dict__}
    steps = sc.embedding()
    if steps:
        wide = apply_embedding(theta, steps)
        warch = wide_architecture(arch, wide)
        out["wide"] = verify_criticality(warch, wide, samples, kind, tol).__dict__
        out["output_max_dev"] = verify_output_preservation(arch, theta, warch, wide).max_dev
        if len(steps) == 1 and steps[0].layer == arch.depth:
            out["in_split_null_image"] = is_in_split_null_image(wide, theta)
        run.write("theta_wide.json", wide.to_json() + "\n")
    run.write("samples.csv", samples.to_csv())
    run.write_json("verify.json", run.meta(**out))


def cmd_certify(sc, run):
    rng = _rng(run)
    arch, kind = sc.narrow_arch, sc.loss
    theta = sc.theta_narr(rng)
    sec = sc.section("certify")
    samples = sc.samples(arch)
    if samples is None:
        xs = sc.inputs(arch, rng)
        wide = _wide_form(sc, arch, theta, xs, rng)
        samples = SampleSet(xs, synthesize_wide_critical_outputs(wide, xs, kind, seed=rng).ys)
    else:
        wide = _wide_form(sc, arch, theta, samples.xs, rng)
    run.write("samples.csv", samples.to_csv())
    run.write("theta_wide.json", wide.theta.to_json() + "\n")
    radii = tuple(float(r) for r in sec.get("radii", (1e-2, 1e-3)))
    try:
        cert = certify_saddle(wide, samples, kind, radii, int(sec.get("trials", 32)), run.seed,
                              float(sec.get("crit_tol", 1e-8)))
    except CertificationFailed as exc:
        run.write_json("certificate.json", run.meta(status="Failed", reason=str(exc),
                                                    diagnostics=exc.diagnostics))
        raise
    run.write("certificate.json", cert.to_json() + "\n")


def cmd_probe(sc, run):
    rng = _rng(run)
    arch, kind = sc.narrow_arch, sc.loss
    theta = sc.theta_narr(rng)
    steps = sc.embedding()
    if steps:
        wide = apply_embedding(theta, steps)
    elif "theta_wide" in sc.data:
        wide = ParamVec.from_dict(sc.data["theta_wide"])
    else:
        raise ConfigError("probe needs embedding steps or theta_wide")
    warch = wide_architecture(arch, wide)
    sec = sc.section("probe")
    res = sample_independence_probe(arch, theta, warch, wide, kind, int(sec.get("draws", 50)),
                                    run.seed, float(sec.get("tol", 1e-8)))
    if res.failing_sample is not None:
        run.write("probe_failing_samples.csv", res.failing_sample.to_csv())
    run.write_json("probe.json", run.meta(independent_at_resolution=res.independent_at_resolution,
                                          draws=res.draws, max_grad_inf_norm=res.max_grad_inf_norm))


HANDLERS = {
    "epsilon-curve": cmd_epsilon_curve, "fig1": cmd_fig1, "fig2": cmd_fig2, "fig3": cmd_fig3,
    "synthesize": cmd_synthesize, "verify": cmd_verify, "certify": cmd_certify, "probe": cmd_probe,
}


def build_parser():
    p = argparse.ArgumentParser(prog="critlift", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--scenario", help="scenario JSON (default: bundled toy example)")
    p.add_argument("--seed", type=int, help="overrides the scenario seed")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    return p


def _thread_limit():
    raw = os.environ.get("CRITLIFT_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError(f"CRITLIFT_THREADS must be a positive integer, got {raw!r}")
    return n


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        threads = _thread_limit()
        path = args.scenario or str(repro.toy_scenario_path())
        sc = Scenario.load(path)
        seed = sc.seed if args.seed is None else args.seed
        out = args.out if args.out is not None else sc.output_dir
        run = Run(sc, out, seed)
        if threads is None:
            HANDLERS[args.command](sc, run)
        else:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=threads):
                HANDLERS[args.command](sc, run)
    except CertificationFailed as exc:
        print(f"critlift: certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except InsufficientSamples as exc:
        print(f"critlift: {exc} (required n = {exc.required_n})", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"critlift: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CritLiftError as exc:
        print(f"critlift: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for f in run.written:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
