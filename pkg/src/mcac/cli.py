"""Command-line front end: one JSON config in, CSV files and a manifest out.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, MCACError

log = logging.getLogger("mcac")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class _ConfigProblem(Exception):
    pass


def config_digest(cfg):
    """SHA-256 of the canonical JSON encoding (sorted keys, no whitespace)."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


class Outputs:
    def __init__(self, root):
        self.root = Path(root)
        self.files = []

    def csv(self, name, header, rows):
        path = self.root / name
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            for row in rows:
                wr.writerow([_fmt(v) for v in row])
        self.files.append(name)

    def json(self, name, obj):
        with open(self.root / name, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.files.append(name)


# ---------------------------------------------------------------------------
# config helpers


def _get(cfg, key, kind, default=None, required=False):
    if key not in cfg:
        if required:
            raise _ConfigProblem(f"missing key {key!r}")
        return default
    val = cfg[key]
    try:
        if kind is bool:
            if not isinstance(val, bool):
                raise TypeError
            return val
        if kind is int:
            if isinstance(val, bool) or float(val) != int(val):
                raise TypeError
            return int(val)
        if kind is float:
            if isinstance(val, bool):
                raise TypeError
            return float(val)
        if kind is list:
            if not isinstance(val, list):
                raise TypeError
            return val
        if kind is dict:
            if not isinstance(val, dict):
                raise TypeError
            return val
        return kind(val)
    except (TypeError, ValueError):
        raise _ConfigProblem(f"key {key!r} has invalid value {val!r}") from None


def _well(cfg):
    from .potential import make_cubic

    name = cfg.get("well", "cubic")
    if name != "cubic":
        raise _ConfigProblem(f"unknown well {name!r}; only 'cubic' is available")
    return make_cubic()


def _shape(spec):
    from .geometry import shape_from_config

    if not isinstance(spec, dict):
        raise _ConfigProblem("shape must be an object")
    try:
        return shape_from_config(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise _ConfigProblem(f"invalid shape: {exc}") from None


def _profiles(cfg):
    from .profile import DEFAULT_N_POINTS, DEFAULT_RHO_MAX, compute_theta0, compute_theta1

    rho_max = _get(cfg, "rho_max", float, DEFAULT_RHO_MAX)
    n_points = _get(cfg, "n_points", int, DEFAULT_N_POINTS)
    if n_points < 1000 or n_points % 2 == 0:
        raise _ConfigProblem("n_points must be odd and at least 1000")
    if rho_max <= 0:
        raise _ConfigProblem("rho_max must be positive")
    p = compute_theta0(_well(cfg), rho_max, n_points)
    return p, compute_theta1(p)


# ---------------------------------------------------------------------------
# commands


def cmd_profile(cfg, out, args):
    p, c = _profiles(cfg)
    out.csv("theta0.csv", ["rho", "theta0", "dtheta0"], zip(p.grid, p.theta0, p.dtheta0))
    out.csv("theta1.csv", ["rho", "theta1"], zip(c.grid, c.theta1))
    out.json("constants.json", {
        "sigma": p.sigma, "alpha": p.alpha,
        "theta1_limit_plus": c.limit_plus, "theta1_limit_minus": c.limit_minus,
        "orthogonality": c.orthogonality(),
    })


def cmd_simulate(cfg, out, args):
    from .acsolver import SimConfig, prepare_initial, run
    from .geometry import GridSpec, signed_distance
    from .profile import cubic_profile

    eps = _get(cfg, "eps", float, required=True)
    T = _get(cfg, "T", float, required=True)
    g = _get(cfg, "grid", dict, required=True)
    try:
        grid = GridSpec.box(int(g["nx"]), int(g["ny"]), float(g["Lx"]), float(g["Ly"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise _ConfigProblem(f"invalid grid: {exc}") from None
    shape = _shape(_get(cfg, "shape", dict, required=True))
    order = _get(cfg, "order", int, 0)
    if order not in (0, 1):
        raise _ConfigProblem("order must be 0 or 1")
    sim = SimConfig(
        eps=eps, T=T, grid=grid, well=_well(cfg), dt=_get(cfg, "dt", float),
        record_every=_get(cfg, "record_every", int, 10), solver=cfg.get("solver", "dct"),
        workers=args.threads,
    )
    p, c = cubic_profile()
    lf = signed_distance(shape, grid, _get(cfg, "delta", float))
    u0 = prepare_initial(lf, p, c, eps, order)
    traj, u = run(sim, u0)
    out.csv("diag.csv", ["t", "mass", "energy", "lambda"], traj.rows())
    for k, polys in enumerate(traj.fronts):
        rows, idx = [], 0
        for poly in polys:
            for x, y in poly.points:
                rows.append((idx, x, y))
                idx += 1
        out.csv(f"front_{k:04d}.csv", ["idx", "x", "y"], rows)
    hx, hy = grid.spacing
    header = ["nx", "ny", "hx", "hy"]
    rows = [(grid.shape[0], grid.shape[1], hx, hy)] + [(v,) for v in u.values.ravel()]
    out.csv("field_final.csv", header, rows)


def cmd_front(cfg, out, args):
    from .frontflow import FrontCurve, evolve_front

    T = _get(cfg, "T", float, required=True)
    n_markers = _get(cfg, "n_markers", int, 256)
    specs = cfg.get("shapes") or [_get(cfg, "shape", dict, required=True)]
    comps = []
    for spec in specs:
        shape = _shape(spec)
        comps.append(FrontCurve.from_shape(shape, int(spec.get("n_markers", n_markers)),
                                           clockwise=bool(spec.get("inner", False))))
    front = comps[0] if len(comps) == 1 else comps
    record_dt = _get(cfg, "record_dt", float, T)
    if record_dt <= 0:
        raise _ConfigProblem("record_dt must be positive")
    n_rec = int(round(T / record_dt))
    times = [k * T / n_rec for k in range(n_rec + 1)] if n_rec > 0 else [0.0]
    _, diag, snaps = evolve_front(front, T, dt=_get(cfg, "dt", float), record_times=times)
    out.csv("trajectory.csv", ["t", "area", "length", "kbar", "lambda0"], diag.rows())
    rows = []
    for t, snap in snaps:
        parts = snap if isinstance(snap, list) else [snap]
        idx = 0
        for part in parts:
            for x, y in part.markers:
                rows.append((t, idx, x, y))
                idx += 1
    out.csv("fronts.csv", ["t", "idx", "x", "y"], rows)


def cmd_radial(cfg, out, args):
    from .frontflow import RadialState, radial_integrate

    try:
        state = RadialState(
            _get(cfg, "n", int, 2), np.asarray(_get(cfg, "radii", list, required=True), float),
            None if "signs" not in cfg else np.asarray(cfg["signs"], float),
        )
    except ValueError as exc:
        raise _ConfigProblem(str(exc)) from None
    T = _get(cfg, "T", float, required=True)
    dt = _get(cfg, "dt", float, 1e-4)
    if dt <= 0:
        raise _ConfigProblem("dt must be positive")
    res = radial_integrate(state, T, dt, record_every=_get(cfg, "record_every", int, 100))
    m = len(state.radii)
    header = ["t"] + [f"R{i + 1}" for i in range(m)] + [f"dR{i + 1}" for i in range(m)] + [
        "volume", "surface", "kbar", "lambda0"]
    d = res.diagnostics
    rows = [
        [t, *R, *dR, v, s, k, lam]
        for t, R, dR, v, s, k, lam in zip(res.times, res.radii, res.derivatives, d.area, d.length, d.kbar, d.lambda0)
    ]
    out.csv("radial.csv", header, rows)
    col = res.collapse
    out.json("collapse.json", None if col is None else {"t": col.t, "index": col.index, "radius": col.radius})


def cmd_spectrum(cfg, out, args):
    from .spectrum import sweep, uniform_constant

    eps_list = [float(e) for e in _get(cfg, "eps_list", list, [0.1, 0.05, 0.025])]
    reports = sweep(eps_list, p_eps=_get(cfg, "p_eps", float, 0.0), h_ratio=_get(cfg, "h_ratio", float, 0.25))
    out.csv("spectrum.csv", ["eps", "lam_min_all", "lam_min_zero_mean"],
            [(r.eps, r.lam_min_all, r.lam_min_zero_mean) for r in reports])
    out.json("spectrum_summary.json", {"c_star": uniform_constant(reports)})


def cmd_ineq(cfg, out, args):
    from .analysis import inequality_search

    seed = args.seed if args.seed is not None else _get(cfg, "seed", int, 0)
    n = _get(cfg, "n", int, 1)
    trials = _get(cfg, "trials", int, 1000)
    if n not in (1, 2) or trials < 100:
        raise _ConfigProblem("need n in {1, 2} and trials >= 100")
    res = inequality_search(n, trials, seed, max_degree=_get(cfg, "max_degree", int, 20))
    out.csv("ineq.csv", ["n", "trials", "seed", "c_emp", "c_doubled", "growth", "probe_ratio"],
            [(n, trials, seed, res.c_emp, res.c_doubled, res.growth, res.ratios[0])])
    out.csv("ratios.csv", ["trial", "ratio"], enumerate(res.ratios))


def cmd_converge(cfg, out, args):
    from .analysis import convergence_study

    shape = _shape(_get(cfg, "shape", dict, required=True))
    eps_list = [float(e) for e in _get(cfg, "eps_list", list, [0.08, 0.04, 0.02])]
    window = _get(cfg, "lambda_window", list, [0.05, None])
    rows = convergence_study(
        shape, eps_list, _get(cfg, "T", float, required=True), order=_get(cfg, "order", int, 0),
        box=cfg.get("box"), record_dt=_get(cfg, "record_dt", float, 0.01),
        n_markers=_get(cfg, "n_markers", int, 256), lambda_window=tuple(window), workers=args.threads,
    )
    out.csv("study.csv", ["eps", "front_err", "front_order", "lambda_err", "lambda_order"],
            [(r.eps, r.front_err, r.front_order, r.lambda_err, r.lambda_order) for r in rows])


COMMANDS = {
    "profile": (cmd_profile, "traveling-wave profile, corrector and constants"),
    "simulate": (cmd_simulate, "mass-conserved Allen-Cahn run from a prepared front"),
    "front": (cmd_front, "marker method for volume-preserving curvature flow"),
    "radial": (cmd_radial, "concentric-sphere ODE reduction"),
    "spectrum": (cmd_spectrum, "linearized-operator spectrum sweep"),
    "ineq": (cmd_ineq, "randomized interpolation-inequality search"),
    "converge": (cmd_converge, "sharp-interface convergence study"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="mcac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mcac {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", type=Path, help="JSON config file (defaults apply when omitted)")
        sp.add_argument("--output-dir", type=Path, default=Path("out"), help="directory for outputs")
        sp.add_argument("--threads", type=int, default=1, help="worker cap for FFTs (results unchanged)")
        sp.add_argument("--seed", type=int, default=None, help="seed for randomized commands")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = {} if args.config is None else json.loads(args.config.read_text())
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not isinstance(cfg, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO
    out = Outputs(args.output_dir)
    start = _dt.datetime.now(_dt.timezone.utc).isoformat()
    func = COMMANDS[args.command][0]
    try:
        func(cfg, out, args)
    except (_ConfigProblem, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MCACError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    manifest = {
        "command": args.command,
        "config_digest": config_digest(cfg),
        "version": __version__,
        "start": start,
        "end": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": list(out.files),
    }
    try:
        out.json("manifest.json", manifest)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("wrote %d files to %s", len(out.files) + 1, args.output_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
