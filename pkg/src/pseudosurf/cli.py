"""Command-line pipeline: time scales -> seed -> Darboux chain -> checks -> exports.

Exit codes: 0 all checks pass, 1 a numerical check failed, 2 bad config,
3 input/output failure.
"""
import argparse
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from . import backlund as bl
from . import laxpair as lp
from . import quatalg as qa
from . import surface as sf
from .timescale import GridDomain, TimeScaleError, construct_timescale

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

DEFAULT_TOLERANCES = {"exact": 1e-9, "cross": 1e-6, "curvature": 1e-8}

DEMO_CONFIG = {
    "timescale1": {"kind": "cantor", "level": 5, "a": -3.0, "b": 3.0},
    "timescale2": {"kind": "uniform", "t0": -3.0, "step": 0.1, "n": 60},
    "lambda": 1.0,
    "seed": "vacuum",
    "darboux": [{"kappa": 1.0, "phases": [0.0, float(np.pi / 2)]}],
}


class ConfigError(ValueError):
    pass


class OutputError(OSError):
    pass


def load_schema(name):
    text = resources.files("pseudosurf").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _read_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _write_text(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


class Pipeline:
    """A validated config with its domain, seed field and Darboux steps built."""

    def __init__(self, config, base_dir="."):
        try:
            jsonschema.validate(config, load_schema("config"))
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config field {where!r}: {exc.message}") from None
        self.config = config
        self.lam = float(config["lambda"])
        if self.lam == 0:
            raise ConfigError("config field 'lambda': must be nonzero")
        ts = {}
        for key in ("timescale1", "timescale2"):
            try:
                ts[key] = construct_timescale(config[key])
            except (TimeScaleError, TypeError, ValueError) as exc:
                raise ConfigError(f"config field {key!r}: {exc}") from None
        self.domain = GridDomain(ts["timescale1"], ts["timescale2"])
        self.steps = []
        for k, step in enumerate(config.get("darboux", [])):
            try:
                self.steps.append(bl.DarbouxParams.from_json(step))
            except bl.DarbouxError as exc:
                raise ConfigError(f"config field 'darboux/{k}/kappa': {exc}") from None
        kappas = [abs(s.kappa) for s in self.steps]
        for a in range(len(kappas)):
            for b in range(a):
                if np.isclose(kappas[a], kappas[b], rtol=1e-12, atol=0):
                    raise ConfigError(f"config field 'darboux/{a}/kappa': repeats |kappa| of step {b}")
        self.tolerances = dict(DEFAULT_TOLERANCES, **config.get("tolerances", {}))
        self.outputs = {k: os.path.join(base_dir, v) for k, v in config.get("outputs", {}).items()}
        self.seed = self._seed(config.get("seed", "vacuum"), base_dir)

    def _seed(self, seed, base_dir):
        if seed == "vacuum":
            return lp.vacuum(self.domain)
        path = os.path.join(base_dir, seed["file"])
        obj = _read_json(path)
        try:
            cf = lp.CoefficientField.from_json(obj)
        except (lp.LaxPairError, TimeScaleError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"config field 'seed/file': {path}: {exc}") from None
        if cf.domain.shape != self.domain.shape or not (
                np.allclose(cf.domain.t1.points, self.domain.t1.points, rtol=0, atol=1e-12)
                and np.allclose(cf.domain.t2.points, self.domain.t2.points, rtol=0, atol=1e-12)):
            raise ConfigError("config field 'seed/file': field domain differs from timescale1 x timescale2")
        return cf

    def surfaces(self):
        return bl.darboux_chain(self.seed, self.steps, self.lam)


def _field_record(cf, lam):
    rep = lp.verify_lax(cf, lam)
    return {
        "compatibility": lp.compatibility_residual(cf, lam)[1],
        "path_independence": rep.path_independence,
        "red1": rep.red1,
        "red2": rep.red2,
        "chebyshev": cf.is_chebyshev(),
    }


def _surface_record(index, s):
    rec = {"index": index}
    rec.update(sf.curvature_report(s))
    rec["normal_deviation"] = sf.normal_consistency(s)[0]
    return rec


class _Checks:
    def __init__(self):
        self.items = []

    def add(self, name, value, tol):
        if value is None:
            return
        value = float(value)
        self.items.append({"name": name, "value": value, "tol": float(tol),
                           "pass": bool(np.isfinite(value) and value <= tol)})

    @property
    def passed(self):
        return all(c["pass"] for c in self.items)


def verify(pipe, threads=None):
    """Run the chain and every check; returns ``(report, surfaces)``.

    Numerical breakdowns (singular transfers, a broken projector) end up in
    ``report["error"]`` with ``pass = False`` rather than raising.
    """
    tol = pipe.tolerances
    lam = pipe.lam
    checks = _Checks()
    report = {"version": __version__, "lambda": lam, "shape": list(pipe.domain.shape),
              "tolerances": tol, "seed": None, "steps": [], "surfaces": [], "checks": checks.items,
              "pass": False, "error": None}
    surfaces = []
    try:
        report["seed"] = seed = _field_record(pipe.seed, lam)
        for key in ("compatibility", "path_independence", "red1", "red2"):
            checks.add(f"seed.{key}", seed[key], tol["exact"])
        surfaces = pipe.surfaces()
        cf = pipe.seed
        for k, step in enumerate(pipe.steps):
            # the chain transforms the surface of a fresh propagation of cf,
            # which matches surfaces[k] only up to a rigid motion
            base = surfaces[0] if k == 0 else sf.sym_surface(lp.propagate(cf, lam))
            s_new = surfaces[k + 1]
            pf = bl.build_projector(cf, step)
            length, tang = bl.segment_geometry(base, s_new)
            expected = abs(step.kappa) / (lam ** 2 + step.kappa ** 2)
            cf = s_new.wave.coeffs
            rec = {
                "kappa": step.kappa,
                "phases": list(step.phases),
                "segment_length": float(length.mean()),
                "segment_spread": float(np.ptp(length) / expected),
                "tangency": float(np.abs(tang).max()),
                "projector_residual": bl.projector_system_residual(pf),
                "projector_invariants": pf.invariant_errors(),
                "field": _field_record(cf, lam),
            }
            report["steps"].append(rec)
            name = f"step{k + 1}"
            checks.add(f"{name}.segment_length", abs(rec["segment_length"] - expected) / expected, tol["exact"])
            checks.add(f"{name}.segment_spread", rec["segment_spread"], tol["exact"])
            checks.add(f"{name}.tangency", rec["tangency"], tol["exact"])
            checks.add(f"{name}.projector_residual", rec["projector_residual"], tol["exact"])
            for key, value in rec["projector_invariants"].items():
                checks.add(f"{name}.projector.{key}", value, tol["exact"])
            for key in ("compatibility", "path_independence", "red1", "red2"):
                checks.add(f"{name}.{key}", rec["field"][key], tol["exact"])
        workers = max(1, threads or os.cpu_count() or 1)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_surface_record, range(len(surfaces)), surfaces))
        report["surfaces"] = records
        for rec in records:
            name = f"surface{rec['index']}"
            checks.add(f"{name}.K_rel", rec["K_max_rel_err"], tol["curvature"])
            for j in (0, 1):
                checks.add(f"{name}.asym{j + 1}", rec["asym"][j], tol["exact"])
                checks.add(f"{name}.cheb{j + 1}", rec["cheb"][j], tol["exact"])
                checks.add(f"{name}.tors{j + 1}_spread", rec["tors_spread"][j], tol["curvature"])
            checks.add(f"{name}.tet_vs_dot", rec["tet_vs_dot_max_rel"], tol["cross"])
            checks.add(f"{name}.normal", rec["normal_deviation"], tol["exact"])
    except (lp.LaxPairError, bl.DarbouxError, qa.SingularQuaternionError, ValueError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
    report["pass"] = report["error"] is None and checks.passed
    return report, surfaces


def dump_report(report):
    jsonschema.validate(report, load_schema("report"))
    return json.dumps(report, indent=2) + "\n"


def _write_outputs(pipe, report, surfaces, kinds):
    out = pipe.outputs
    if "report" in kinds and "report" in out and report is not None:
        _write_text(out["report"], dump_report(report))
    if surfaces:
        if "obj" in kinds and "obj" in out:
            try:
                sf.export_obj(surfaces[-1], out["obj"])
            except OSError as exc:
                raise OutputError(f"cannot write {out['obj']}: {exc.strerror}") from None
        if "fields" in kinds and "fields" in out:
            _write_text(out["fields"], json.dumps(surfaces[-1].wave.coeffs.to_json()) + "\n")


def _summary(report):
    lines = [f"lambda={report['lambda']:g} grid={report['shape'][0]}x{report['shape'][1]} "
             f"steps={len(report['steps'])}"]
    for rec in report["surfaces"]:
        err = rec["K_max_rel_err"]
        lines.append(f"  surface {rec['index']}: K_rel_err={'n/a' if err is None else f'{err:.2e}'} "
                     f"valid={rec['valid_nodes']} degenerate={rec['degenerate_nodes']}")
    failed = [c["name"] for c in report["checks"] if not c["pass"]]
    if report["error"]:
        lines.append(f"  error: {report['error']}")
    if failed:
        lines.append("  failed: " + ", ".join(failed))
    lines.append("PASS" if report["pass"] else "FAIL")
    return "\n".join(lines)


def run_pipeline(config, base_dir=".", threads=None, outputs=("report", "obj", "fields")):
    """Build, verify and export; returns ``(exit_code, report)``."""
    pipe = Pipeline(config, base_dir)
    report, surfaces = verify(pipe, threads)
    _write_outputs(pipe, report, surfaces, outputs)
    return (EXIT_OK if report["pass"] else EXIT_NUMERIC), report


_SHORTHAND = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*$")
_SHORTHAND_ARGS = {"uniform": ("t0", "step", "n"), "interval": ("a", "b", "n"),
                   "cantor": ("level", "a", "b")}


def parse_timescale_arg(text):
    """A time-scale spec from JSON or shorthand such as ``cantor(2, 0, 1)``."""
    m = _SHORTHAND.match(text)
    if m:
        kind = m.group(1)
        try:
            args = [float(x) for x in m.group(2).split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"cannot parse arguments of {text!r}") from None
        if kind == "explicit":
            return {"kind": "explicit", "points": args}
        names = _SHORTHAND_ARGS.get(kind)
        if names is None:
            raise ConfigError(f"unknown time scale kind {kind!r}")
        if len(args) > len(names) or (kind != "cantor" and len(args) != len(names)) or not args:
            raise ConfigError(f"{kind} takes arguments {', '.join(names)}")
        return {"kind": kind, **dict(zip(names, args))}
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise ConfigError(f"cannot parse time scale {text!r}") from None


def selfcheck(seed, cases):
    """Randomised algebra identities; returns the worst error per identity."""
    rng = np.random.default_rng(seed)
    A = qa.random_quat(rng, (cases,))
    B = qa.random_quat(rng, (cases,))
    C = qa.random_quat(rng, (cases,), complex_=True)
    D = qa.random_quat(rng, (cases,), complex_=True)
    scale = qa.norm(A) * qa.norm(B)
    out = {
        "norm_multiplicative": float(np.max(np.abs(qa.norm(A @ B) - scale) / scale)),
        "dagger_antihomomorphism": float(np.max(qa.norm(qa.dagger(C @ D) - qa.dagger(D) @ qa.dagger(C))
                                                / (qa.norm(C) * qa.norm(D)))),
        "inverse": float(np.max(qa.norm(qa.inverse(A) @ A - qa.ONE))),
    }
    return out


def build_parser():
    def flags(defaults):
        p = argparse.ArgumentParser(add_help=False)
        d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
        p.add_argument("--threads", type=int, default=d(None), help="worker cap (default: all cores)")
        p.add_argument("--seed-rng", type=int, default=d(0), help="seed for randomised checks")
        p.add_argument("--quiet", action="store_true", default=d(False), help="print nothing on success")
        return p

    # flags may go before or after the subcommand; the subcommand copy must not reset them
    common = flags(False)
    parser = argparse.ArgumentParser(prog="pseudosurf", parents=[flags(True)],
                                     description="Pseudospherical nets on finite time scales.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "build, verify and write every configured output"),
                       ("verify", "run the checks; writes only the report"),
                       ("export", "write the mesh and fields without checking")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--config", required=True)
        if name == "verify":
            p.add_argument("--field", help="coefficient-field JSON to verify instead of the config seed")
    p = sub.add_parser("build-ts", parents=[common], help="print the points of a time scale")
    p.add_argument("spec", help="JSON spec or shorthand, e.g. 'cantor(2, 0, 1)'")
    p = sub.add_parser("demo", parents=[common], help="one-soliton on cantor(5) x uniform")
    p.add_argument("--out-dir", help="write report.json and surface.obj here")
    p = sub.add_parser("selfcheck", parents=[common], help="randomised quaternion identities")
    p.add_argument("--cases", type=int, default=10000)
    return parser


def _say(args, text):
    if not args.quiet:
        print(text)


def _main(args):
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    if args.command == "build-ts":
        spec = parse_timescale_arg(args.spec)
        try:
            ts = construct_timescale(spec)
        except (TimeScaleError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        print(json.dumps(ts.to_json()))
        return EXIT_OK
    if args.command == "selfcheck":
        worst = selfcheck(args.seed_rng, args.cases)
        ok = all(v <= 1e-10 for v in worst.values())
        _say(args, json.dumps(worst, indent=2))
        return EXIT_OK if ok else EXIT_NUMERIC
    if args.command == "demo":
        config = dict(DEMO_CONFIG)
        if args.out_dir:
            os.makedirs(args.out_dir, exist_ok=True)
            config["outputs"] = {"report": "report.json", "obj": "surface.obj"}
        code, report = run_pipeline(config, args.out_dir or ".", args.threads)
        _say(args, _summary(report))
        return code
    base = os.path.dirname(os.path.abspath(args.config))
    config = _read_json(args.config)
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    if args.command == "verify":
        if args.field:
            config = dict(config, seed={"file": os.path.abspath(args.field)})
        code, report = run_pipeline(config, base, args.threads, outputs=("report",))
        _say(args, _summary(report))
        return code
    if args.command == "export":
        pipe = Pipeline(config, base)
        try:
            surfaces = pipe.surfaces()
        except (lp.LaxPairError, bl.DarbouxError, qa.SingularQuaternionError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        _write_outputs(pipe, None, surfaces, ("obj", "fields"))
        _say(args, f"exported {len(surfaces)} surface(s); last one written")
        return EXIT_OK
    code, report = run_pipeline(config, base, args.threads)
    _say(args, _summary(report))
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _main(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
