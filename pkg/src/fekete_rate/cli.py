"""Command line interface: ``fekete-rate <subcommand> [options]``.

Exit status is 0 when the subcommand's check passes, 2 when it fails and 1
on errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import backend
from .config import WeightedSet, load_weighted_set, surface_from_dict
from .envelope import extremal_function, verify_solmin
from .errors import FeketeRateError
from .geometry import random_points
from .green import GreenKernel, verify_green
from .harness import (rate_experiment_fekete, rate_experiment_J, rate_experiment_volume,
                      write_report)
from .optimizer import minimize_Km
from .sections import bosonization_check, build_basis, fekete_configuration, random_configuration
from .theta import ThetaContext
from .volume import bergman, bernstein_markov_fit, gram_matrix

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _csv_path(out) -> Path:
    """Field tables go to ``out`` when it names a CSV file, else next to it."""
    p = Path(out)
    return p if p.suffix == ".csv" else p.with_suffix(".csv")


def _weighted_set(args) -> WeightedSet:
    if args.config:
        return load_weighted_set(args.config)
    desc = {"kind": args.surface or "torus"}
    if args.tau:
        desc["tau"] = args.tau
    return WeightedSet.full(surface_from_dict(desc))


# -- subcommands ---------------------------------------------------------------

def cmd_green_check(args):
    ws = _weighted_set(args)
    kernel = GreenKernel(ws.surface, args.resolution)
    rng = np.random.default_rng(args.seed)
    rows = [verify_green(kernel, x, args.resolution)
            for x in random_points(ws.surface, args.points, rng)]
    out = {"c0": kernel.c0, "points": args.points, "resolution": args.resolution,
           "max_mean_residual": max(r["mean_residual"] for r in rows),
           "max_laplacian_residual": max(r["laplacian_residual"] for r in rows),
           "max_lipschitz_bound": max(r["lipschitz_bound"] for r in rows)}
    return out, all(r["pass"] for r in rows)


def cmd_envelope(args):
    ws = _weighted_set(args)
    kernel = GreenKernel(ws.surface)
    sol = extremal_function(ws.surface, ws, args.resolution)
    res = verify_solmin(kernel, sol, ws)
    out = {"min_energy": sol.min_energy, "sweeps": sol.sweeps, "relax": sol.relax,
           "contact_fraction": float(np.mean(sol.contact_mask)), **res}
    if args.out:
        nodes = sol.mesh.nodes
        np.savetxt(_csv_path(args.out),
                   np.column_stack([nodes.real, nodes.imag, sol.U.values, sol.contact_mask,
                                    sol.nu.masses / sol.mesh.weights]),
                   delimiter=",", header="node_x,node_y,U,contact,nu_density", comments="")
    return out, res["contact_residual"] < args.tol and res["global_residual"] < args.tol


def cmd_min_energy(args):
    ws = _weighted_set(args)
    sol = extremal_function(ws.surface, ws, args.resolution)
    return {"min_energy": sol.min_energy, "resolution": args.resolution}, True


def cmd_minimize(args):
    ws = _weighted_set(args)
    kernel = GreenKernel(ws.surface)
    res = minimize_Km(kernel, ws, args.m, restarts=args.restarts, seed=args.seed)
    out = res.to_dict()
    return out, res.coord_optimality_residual <= args.tol


def cmd_fekete(args):
    ws = _weighted_set(args)
    res = fekete_configuration(build_basis(ws.surface, args.n), ws, restarts=args.restarts,
                               seed=args.seed)
    out = {"n": args.n, "points": res.config.to_list(), "log_value": res.log_value,
           "restart_values": res.history, "stationarity_residual": res.stationarity_residual}
    return out, res.stationarity_residual <= args.tol


def cmd_gram(args):
    ws = _weighted_set(args)
    rep = gram_matrix(build_basis(ws.surface, args.n), ws, args.n, args.resolution)
    return rep.to_dict(), math.isfinite(float(rep.L_diff))


def cmd_bergman(args):
    ws = _weighted_set(args)
    basis = build_basis(ws.surface, args.n)
    rep = bergman(basis, ws, args.n, resolution=args.resolution)
    out = rep.to_dict()
    if args.out:
        np.savetxt(_csv_path(args.out),
                   np.column_stack([rep.nodes.real, rep.nodes.imag, rep.values]),
                   delimiter=",", header="node_x,node_y,rho", comments="")
    ok = abs(rep.integral - rep.N) < 1e-6
    if args.bm_fit:
        fit = bernstein_markov_fit(ws, _int_list(args.bm_fit), args.resolution)
        out["bernstein_markov"] = fit
        ok = ok and fit["pass"]
    return out, ok


def cmd_boson_check(args):
    ws = _weighted_set(args)
    surface = ws.surface
    kernel = GreenKernel(surface)
    basis = build_basis(surface, args.n, orthonormalize=False)
    ctx = ThetaContext(surface) if surface.kind == "torus" else None
    rng = np.random.default_rng(args.seed)
    cfgs = [random_configuration(surface, basis.N, rng, min_sep=args.min_sep)
            for _ in range(args.configs)]
    res = bosonization_check(basis, kernel, ctx, cfgs)
    tol = args.tol if args.tol is not None else (1e-8 if surface.kind == "sphere" else 1e-6)
    out = {k: res[k] for k in ("spread", "log_ratios", "log_Z", "excluded", "n", "N")}
    return out, res["spread"] < tol


def _rate_out(rep, args):
    if args.out:
        write_report(rep, args.out)
    return rep.to_dict(), rep.passed


def cmd_rate_j(args):
    ws = _weighted_set(args)
    rep = rate_experiment_J(ws, _int_list(args.m_values), seed=args.seed, restarts=args.restarts,
                            envelope_resolution=args.resolution)
    return _rate_out(rep, args)


def cmd_rate_vol(args):
    ws = _weighted_set(args)
    rep = rate_experiment_volume(ws, _int_list(args.n_values), resolution=args.resolution,
                                 seed=args.seed)
    return _rate_out(rep, args)


def cmd_rate_fekete(args):
    ws = _weighted_set(args)
    rep = rate_experiment_fekete(ws, _int_list(args.n_values), seed=args.seed,
                                 restarts=args.restarts)
    return _rate_out(rep, args)


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", default=argparse.SUPPRESS,
                   help="weighted-set JSON file or literal")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (u64)")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output path")
    g.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                   help="print the result as JSON")
    g.add_argument("--surface", choices=("torus", "sphere"), default=argparse.SUPPRESS,
                   help="surface when no config is given (default torus)")
    g.add_argument("--tau", default=argparse.SUPPRESS,
                   help="torus modulus as 're,im' when no config is given (default 0,1)")

    parser = argparse.ArgumentParser(prog="fekete-rate", parents=[common],
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("green-check", cmd_green_check, "verify the Green function contract")
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--resolution", type=int, default=512)

    for name, func, help_ in (("envelope", cmd_envelope, "solve for the extremal function"),
                              ("min-energy", cmd_min_energy, "minimal weighted energy")):
        p = add(name, func, help_)
        p.add_argument("--resolution", type=int, default=512)
        p.add_argument("--tol", type=float, default=1e-3)

    p = add("minimize", cmd_minimize, "minimize the discrete functional K_m")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-6)

    p = add("fekete", cmd_fekete, "compute a weighted Fekete configuration")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-6)

    p = add("gram", cmd_gram, "Gram matrix and log volume difference")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--resolution", type=int, default=256)

    p = add("bergman", cmd_bergman, "Bergman function and Bernstein-Markov fit")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--bm-fit", default="", help="comma-separated degrees for the fit")

    p = add("boson-check", cmd_boson_check, "constancy of the bosonization ratio")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", "--configs", dest="configs", type=int, default=50)
    p.add_argument("--min-sep", type=float, default=0.02)
    p.add_argument("--tol", type=float, default=None)

    p = add("rate-j", cmd_rate_j, "discrete-energy rate experiment")
    p.add_argument("--m-values", default="8,16,32,64,128")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--resolution", type=int, default=512, help="envelope resolution")

    p = add("rate-vol", cmd_rate_vol, "ball-volume rate experiment")
    p.add_argument("--n-values", default="4,6,8,12,16,24")
    p.add_argument("--resolution", type=int, default=256)

    p = add("rate-fekete", cmd_rate_fekete, "Fekete-measure rate experiment")
    p.add_argument("--n-values", default="8,12,16,24,32")
    p.add_argument("--restarts", type=int, default=2)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("config", None), ("seed", 0), ("out", None), ("json", False),
                          ("surface", None), ("tau", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        result, ok = args.func(args)
    except (FeketeRateError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    result = _jsonable({"command": args.command, "pass": bool(ok), "seed": args.seed,
                        "backend": backend.NAME, **result})
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out and not args.command.startswith("rate-") and Path(args.out).suffix != ".csv":
        Path(args.out).write_text(text + "\n")
    if args.json:
        print(text)
    else:
        for k, v in result.items():
            if not isinstance(v, (list, dict)):
                print(f"{k}: {v}")
    return EXIT_PASS if ok else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
