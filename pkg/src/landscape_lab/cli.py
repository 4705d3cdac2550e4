"""``landscape-lab`` command line.

    landscape-lab <command> --config cfg.json [--out DIR] [--seed N] [--threads N]

Exit codes: 0 success, 2 configuration/artifact error, 3 verification
failure, 4 numerical breakdown.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time

import numpy as np

from . import __version__, _backend, llf1
from .config import RunConfig
from .errors import ArtifactError, ConfigError, NumericalBreakdown
from .grid import ComplexField, ScalarField
from .hamiltonian import assemble
from .landscape import LocalLandscapeParams, collar_mask, local_landscape, solve_landscape
from .model import build_magnetic
from . import verify as vf

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NUMERIC = 0, 2, 3, 4
COMMANDS = ("gen-model", "landscape", "local-landscape", "eigs", "fk-bound", "fk-landscape", "verify")
VERIFY_TARGETS = ("thm1", "thm2", "corollary", "thm3", "example-1d")


class Run:
    """Output directory, artifact checksums and stage timings of one command."""

    def __init__(self, command, cfg, out, threads):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.artifacts = {}
        self.timings = {}
        self.verification = {}
        self._cache = {}

    def path(self, name):
        return os.path.join(self.out, name)

    def stage(self, name):
        run = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[name] = run.timings.get(name, 0.0) + time.perf_counter() - self.t0

        return _Timer()

    def write_bytes(self, name, data):
        llf1.atomic_write_bytes(self.path(name), data)
        self.artifacts[name] = hashlib.sha256(data).hexdigest()

    def write_field(self, name, fld):
        self.artifacts[name] = llf1.write_field(self.path(name), fld)

    def write_json(self, name, obj):
        self.write_bytes(name, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())

    def write_csv(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        self.write_bytes(name, buf.getvalue().encode())

    def write_report(self, name, report):
        rows = [_flatten(r) for r in report.rows]
        header = []
        for r in rows:
            header += [k for k in r if k not in header]
        self.write_csv(name, header, [[r.get(k, "") for k in header] for r in rows])
        self.verification[report.name] = {"passed": report.passed, "gating": report.gating,
                                          "n_checks": len(report.rows), "summary": report.summary()}

    def manifest(self, status, error=None):
        cfg = self.cfg
        m = {
            "command": self.command,
            "status": status,
            "config": cfg.to_dict(),
            "config_sha256": cfg.digest(),
            "seeds": cfg.seeds(),
            "artifacts": dict(sorted(self.artifacts.items())),
            "timings_s": {k: round(v, 6) for k, v in self.timings.items()},
            "verification": self.verification,
            "backend": _backend.get_kernels().NAME,
            "threads": self.threads,
            "eigen_method": ("block inverse subspace iteration + Rayleigh-Ritz"
                             if cfg.eigen.method == "block" else
                             "monitor scan + inverse power (3 warmup steps, then Rayleigh quotient shifts)"),
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        }
        if error:
            m["error"] = error
        name = self.command.replace(" ", "-") + ".manifest.json"
        llf1.atomic_write_bytes(self.path(name),
                                (json.dumps(m, indent=2, sort_keys=True) + "\n").encode())
        return m

    # shared, lazily computed inputs ------------------------------------
    def grid(self):
        if "grid" not in self._cache:
            self._cache["grid"] = self.cfg.grid.build()
        return self._cache["grid"]

    def potential(self):
        if "V" not in self._cache:
            with self.stage("model"):
                self._cache["V"] = self.cfg.potential.build(self.grid(), self.cfg.base_dir)
        return self._cache["V"]

    def hamiltonian(self, b=None):
        key = ("H", b)
        if key not in self._cache:
            g = self.grid()
            spec = self.cfg.magnetic.spec(b) if g.dim == 2 else None
            self._cache[key] = assemble(g, V=self.potential(), laplacian_scale=self.cfg.laplacian_scale,
                                        magnetic_spec=spec)
        return self._cache[key]

    def landscape(self):
        if "u" not in self._cache:
            with self.stage("landscape"):
                self._cache["u"] = solve_landscape(self.grid(), self.potential(), self.cfg.laplacian_scale)
        return self._cache["u"]

    def eigenpairs(self, b=None):
        key = ("pairs", b)
        if key not in self._cache:
            e = self.cfg.eigen
            with self.stage("eigen"):
                pairs, scan = vf.compute_eigenpairs(
                    self.hamiltonian(b), e.n_pairs, method=e.method, tol=e.tol, max_iter=e.max_iter,
                    scan=e.scan_grid() if e.method == "scan" else None, probe_seed=e.probe_seed)
            self._cache[key] = (pairs, scan)
        return self._cache[key]

    def pair(self):
        pairs, _ = self.eigenpairs()
        j = self.cfg.paths.pair
        if j >= len(pairs):
            raise ConfigError(f"paths.pair = {j} but only {len(pairs)} eigenpairs were computed")
        return pairs[j]

    def lam(self):
        if self.cfg.paths.lam is not None:
            return float(self.cfg.paths.lam)
        return self.pair().lam

    def path_kw(self):
        return {"threads": self.threads}


def _fmt(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return v


def _flatten(row):
    out = {}
    for k, v in row.items():
        if isinstance(v, (list, tuple)):
            for i, c in enumerate(v):
                out[f"{k}_{i}"] = c
        else:
            out[k] = v
    return out


def _coord_columns(g):
    return ["x", "y"][:g.dim]


def _node_rows(g, *fields):
    mesh = [m.ravel() for m in g.mesh()]
    vals = [np.ravel(f) for f in fields]
    return zip(*mesh, *vals)


# commands -------------------------------------------------------------------
def cmd_gen_model(run):
    g = run.grid()
    V = run.potential()
    run.write_field("V.llf1", V)
    with run.stage("magnetic"):
        if g.dim == 2:
            A = build_magnetic(g, run.cfg.magnetic.spec())
            comps = A.components
        else:
            comps = (ScalarField(g, np.zeros(g.shape)),)
    for name, c in zip(("A_x.llf1", "A_y.llf1"), comps):
        run.write_field(name, c)
    return EXIT_OK


def cmd_landscape(run):
    g = run.grid()
    V = run.potential()
    u = run.landscape()
    run.write_field("V.llf1", V)
    run.write_field("u.llf1", u)
    with np.errstate(divide="ignore"):
        inv = np.where(u.values > 0, 1.0 / np.where(u.values > 0, u.values, 1.0), np.inf)
    run.write_csv("landscape.csv", _coord_columns(g) + ["V", "u", "inv_u"],
                  _node_rows(g, V.values, u.values, inv))
    return EXIT_OK


def cmd_local_landscape(run):
    g = run.grid()
    V = run.potential()
    c = run.cfg.local_landscape
    with run.stage("local_landscape"):
        Vt = local_landscape(V, LocalLandscapeParams(c.t, c.padding, c.laplacian_scale))
    mask = collar_mask(g, c.laplacian_scale * c.t, c.collar)
    run.write_field("V.llf1", V)
    run.write_field("V_t.llf1", Vt)
    run.write_csv("local_landscape.csv", _coord_columns(g) + ["V", "V_t", "in_collar"],
                  _node_rows(g, V.values, Vt.values, mask.astype(int)))
    return EXIT_OK


def cmd_eigs(run):
    pairs, scan = run.eigenpairs()
    index = []
    for j, p in enumerate(pairs):
        name = f"eig_{j:03d}.llf1"
        run.write_field(name, p.phi)
        index.append({**p.to_dict(), "file": name, "b": run.cfg.magnetic.b,
                      "seed": run.cfg.potential.seed, "magnetic_seed": run.cfg.magnetic.seed})
    run.write_json("eigs.json", {"pairs": index, "laplacian_scale": run.cfg.laplacian_scale})
    if scan is not None:
        run.write_csv("monitor_scan.csv", ["lambda", "abs_monitor", "is_minimum", "near_eigenvalue"],
                      [(s.lam, s.abs_monitor, int(s.is_minimum), int(s.near_eigenvalue)) for s in scan])
    if any(not p.converged for p in pairs):
        worst = max(p.residual for p in pairs)
        raise NumericalBreakdown(f"eigen iteration did not reach tol {run.cfg.eigen.tol:g} "
                                 f"(worst residual {worst:.3e})", residual=worst)
    return EXIT_OK


def _profile_csv(run, name, profiles):
    g = run.grid()
    header = [f"x0_{c}" for c in _coord_columns(g)] + ["t", "mean", "stderr", "n_alive", "n_paths", "lambda"]
    rows = [r for p in profiles for r in p.rows()]
    run.write_csv(name, header, rows)


def cmd_fk_bound(run):
    g = run.grid()
    cfg = run.cfg.paths.path_config(run.cfg.laplacian_scale)
    lam = run.lam()
    pts = run.cfg.paths.sample_points(g)
    from .pathint import theorem2_bound

    with run.stage("paths"):
        profiles = [theorem2_bound(run.potential(), x0, lam, cfg, **run.path_kw()) for x0 in pts]
    _profile_csv(run, "bound_profile.csv", profiles)
    return EXIT_OK


def cmd_fk_landscape(run):
    g = run.grid()
    cfg = run.cfg.paths.path_config(run.cfg.laplacian_scale)
    pts = run.cfg.paths.sample_points(g)
    u = run.landscape()
    with run.stage("paths"):
        rep, _ = vf.fk_landscape(run.potential(), u, pts, cfg, run.cfg.verify.n_sigma, **run.path_kw())
    rep.gating = False
    run.write_report("fk_landscape.csv", rep)
    return EXIT_OK


def cmd_verify(run, which):
    cfg = run.cfg
    g = run.grid()
    v = cfg.verify
    kw = run.path_kw()
    if which == "example-1d":
        with run.stage("example-1d"):
            rep = vf.example_1d(v.example_nodes, v.example_tol_h2, tuple(v.example_times))
    elif which == "thm1":
        b_values = v.b_values if v.b_values is not None else [cfg.magnetic.b]
        e = cfg.eigen
        with run.stage("thm1"):
            rep, _, _ = vf.thm1(g, run.potential(), cfg.magnetic, b_values, cfg.laplacian_scale,
                                e.n_pairs, v.thm1_slack_h2, method=e.method, tol=e.tol,
                                max_iter=e.max_iter, scan=e.scan_grid() if e.method == "scan" else None,
                                probe_seed=e.probe_seed)
    elif which == "thm2":
        pcfg = cfg.paths.path_config(cfg.laplacian_scale)
        pair = run.pair()
        with run.stage("paths"):
            rep, profiles = vf.thm2(run.potential(), pair, cfg.paths.sample_points(g), pcfg,
                                    v.n_sigma, **kw)
        _profile_csv(run, "bound_profile.csv", profiles)
    elif which == "corollary":
        pcfg = cfg.paths.path_config(cfg.laplacian_scale)
        lam = run.lam()
        u = run.landscape()
        with run.stage("paths"):
            rep, profiles = vf.corollary(run.potential(), u, lam, cfg.paths.sample_points(g), pcfg,
                                         v.corollary_factor, v.n_sigma, **kw)
        _profile_csv(run, "bound_profile.csv", profiles)
    elif which == "thm3":
        pcfg = cfg.paths.path_config(cfg.laplacian_scale)
        V = run.potential()
        V_min = float(np.min(V.values))
        if not V_min > 0:
            raise ConfigError("verify thm3 needs inf V > 0; set potential.offset (or a positive constant)")
        spread = math.sqrt(2.0 * cfg.laplacian_scale * pcfg.t_grid[-1])
        V_paths = cfg.potential.build_extended(g, 8.0 * spread) or V
        u = run.landscape()
        gating = v.thm3_gating if v.thm3_gating is not None else g.dim == 1
        with run.stage("paths"):
            rep = vf.thm3(V_paths, u, cfg.paths.sample_points(g), pcfg, v.c_d, V_min, v.n_sigma,
                          gating=gating, domain=g, **kw)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown verification {which!r}")
    run.write_report(f"verify_{which.replace('-', '_')}.csv", rep)
    print(rep.summary())
    return EXIT_OK if rep.passed else EXIT_VERIFY


HANDLERS = {"gen-model": cmd_gen_model, "landscape": cmd_landscape,
            "local-landscape": cmd_local_landscape, "eigs": cmd_eigs, "fk-bound": cmd_fk_bound,
            "fk-landscape": cmd_fk_landscape}


def build_parser():
    p = argparse.ArgumentParser(prog="landscape-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--seed", type=int, default=None, help="override every seed in the config")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads for path kernels (default: $LANDSCAPE_LAB_THREADS or 1)")

    for name in HANDLERS:
        common(sub.add_parser(name))
    vp = sub.add_parser("verify")
    vp.add_argument("which", choices=VERIFY_TARGETS)
    common(vp)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    command = args.command if args.command != "verify" else f"verify {args.which}"
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        threads = args.threads or _backend.default_threads()
    except (ConfigError, ArtifactError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = Run(command, cfg, args.out, threads)
    t0 = time.perf_counter()
    try:
        if args.command == "verify":
            code = cmd_verify(run, args.which)
        else:
            code = HANDLERS[args.command](run)
    except (ConfigError, ArtifactError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.manifest("config_error", str(exc))
        return EXIT_CONFIG
    except NumericalBreakdown as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        run.manifest("numerical_breakdown", str(exc))
        return EXIT_NUMERIC
    run.timings["total"] = time.perf_counter() - t0
    run.manifest({EXIT_OK: "ok", EXIT_VERIFY: "verification_failed"}[code])
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
