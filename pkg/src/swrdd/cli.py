"""Command line front end: ``swrdd {run,reference,compare,probe,sweep-robin,coeffs}``."""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import io
from .config import PRESETS, build_config, parse_config
from .drivers import (ALGORITHMS, INITIAL_DATA, KRYLOV, make_decomposition, rel_l2_error, run,
                      solve_monodomain)
from .errors import NotConverged, SWRError
from .interface import build_L, dump_L
from .transmission import FAMILIES, TransmissionSpec, conv_coeffs, pade_coeffs

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2

_ALG_NAMES = {a.replace("_", ""): a for a in ALGORITHMS}
_KRYLOV_NAMES = {k.replace("_", ""): k for k in KRYLOV}


def _norm(name, table, what):
    key = name.lower().replace("_", "").replace("-", "")
    if key not in table:
        raise argparse.ArgumentTypeError("unknown %s %r" % (what, name))
    return table[key]


def _add_run_options(p):
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--potential", help="potential name or 'expr:<V(x) or V(t,x)>'")
    p.add_argument("--u0", choices=sorted(INITIAL_DATA))
    p.add_argument("--algorithm", type=lambda s: _norm(s, _ALG_NAMES, "algorithm"))
    p.add_argument("--krylov", type=lambda s: _norm(s, _KRYLOV_NAMES, "krylov method"))
    p.add_argument("--transmission", choices=FAMILIES)
    p.add_argument("--order", type=int)
    p.add_argument("--pade-m", type=int)
    p.add_argument("--robin-p", type=float)
    p.add_argument("--n-subdomains", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--dx", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--maxit", type=int)
    p.add_argument("--g0", choices=("zero", "random"))
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--timings", help="write per-phase wall times to this CSV file")


def config_from_args(args):
    values, tr = {}, {}
    if args.config:
        base = parse_config(args.config)
        tr = {"family": base.transmission.family, "order": base.transmission.order,
              "p": base.transmission.p, "m": base.transmission.m}
        values = {k: getattr(base, k) for k in ("a0", "b0", "n_sub", "T", "dt", "dx", "potential",
                                                "u0", "algorithm", "krylov", "tol", "maxit",
                                                "restart", "g0", "seed", "threads",
                                                "precond_method", "precond_tol", "tol_fp",
                                                "maxit_fp")}
    if args.preset:
        values.update(PRESETS[args.preset])
    flag_map = {"potential": "potential", "u0": "u0", "algorithm": "algorithm", "krylov": "krylov",
                "n_subdomains": "n_sub", "T": "T", "dt": "dt", "dx": "dx", "tol": "tol",
                "maxit": "maxit", "g0": "g0", "seed": "seed", "threads": "threads"}
    for flag, key in flag_map.items():
        val = getattr(args, flag)
        if val is not None:
            values[key] = val
    for flag, key in (("transmission", "family"), ("order", "order"), ("pade_m", "m"),
                      ("robin_p", "p")):
        val = getattr(args, flag)
        if val is not None:
            tr[key] = val
    env = os.environ.get("SWRDD_THREADS")
    if env:
        try:
            values["threads"] = int(env)
        except ValueError:
            raise SWRError("SWRDD_THREADS must be an integer, got %r" % env)
    if "algorithm" in values and "krylov" not in values and values["algorithm"] in (
            "classical_krylov", "new", "preconditioned"):
        values["krylov"] = "gmres"
    return build_config(values, tr)


def _summary(report, extra=""):
    msg = "%s/%s: %d iterations, converged=%s%s" % (report.algorithm, report.krylov,
                                                  report.iterations, report.converged, extra)
    print(msg)


def cmd_run(args, compare=False):
    cfg = config_from_args(args)
    ref = solve_monodomain(cfg) if compare else None
    try:
        res = run(cfg)
    except NotConverged as exc:
        res = exc.report
        if res is not None and hasattr(res, "report"):
            io.write_bundle(args.out, res.x, res.u, res.report)
            _emit_timings(args, res.report.timings)
        print("not converged: %s" % exc, file=sys.stderr)
        return EXIT_NOT_CONVERGED
    extra = []
    if compare:
        res.report.rel_l2_error = rel_l2_error(res.parts, ref.u)
    io.write_bundle(args.out, res.x, res.u, res.report, extra)
    _emit_timings(args, res.report.timings)
    tail = ", rel_l2_error=%.3e" % res.report.rel_l2_error if compare else ""
    _summary(res.report, tail)
    return EXIT_OK


def _emit_timings(args, timings):
    if args.timings:
        io.write_timings(args.timings, timings)
    for k in sorted(timings):
        print("time %-18s %.3fs" % (k, timings[k]), file=sys.stderr)


def cmd_reference(args):
    cfg = config_from_args(args)
    mono = solve_monodomain(cfg, record_mass=True)
    drift = float(np.max(np.abs(mono.mass - mono.mass[0])) / mono.mass[0]) if mono.mass[0] else 0.0
    io.write_solution(os.path.join(_mkdir(args.out), "solution_final.csv"), mono.x, mono.u)
    io.write_report(os.path.join(args.out, "report.csv"),
                    [("nodes", mono.x.size), ("steps", cfg.n_steps),
                     ("mass_initial", float(mono.mass[0])), ("mass_final", float(mono.mass[-1])),
                     ("mass_rel_drift", drift)])
    print("monodomain: %d nodes, %d steps, relative mass drift %.3e"
          % (mono.x.size, cfg.n_steps, drift))
    return EXIT_OK


def cmd_probe(args):
    cfg = config_from_args(args)
    dd = make_decomposition(replace(cfg, u0="zero"))
    L = build_L(dd)
    paths = dump_L(L, args.out)
    print("wrote %d blocks to %s" % (len(paths), args.out))
    return EXIT_OK


def cmd_sweep_robin(args):
    cfg = config_from_args(args)
    if args.p_values:
        ps = [float(v) for v in args.p_values.split(",")]
    else:
        ps = list(np.linspace(args.p_min, args.p_max, args.p_count))
    rows = []
    for p in ps:
        c = replace(cfg, transmission=TransmissionSpec("robin", 2, p=p))
        try:
            r = run(c).report
            it, ok = r.iterations, 1
        except NotConverged as exc:
            it, ok = exc.report.report.iterations if exc.report is not None else c.maxit, 0
        rows.append((float(p), it, ok))
        print("p=%-10.6g iterations=%-6d converged=%d" % (p, it, ok))
    io.write_csv(os.path.join(_mkdir(args.out), "sweep_robin.csv"),
                 ["p", "iterations", "converged"], rows)
    best = min((r for r in rows if r[2]), key=lambda r: r[1], default=None)
    if best is not None:
        print("best p=%.6g (%d iterations)" % (best[0], best[1]))
    return EXIT_OK


def cmd_coeffs(args):
    cf = conv_coeffs(args.n)
    print("s,alpha,beta,gamma")
    for s in range(args.n + 1):
        print("%d,%.17g,%.17g,%.17g" % (s, cf.alpha[s], cf.beta[s], cf.gamma[s]))
    if args.pade_m:
        pc = pade_coeffs(args.pade_m)
        print("\nk,a_k,d_k")
        print("0,%.17g," % pc.a[0])
        for k in range(1, args.pade_m + 1):
            print("%d,%.17g,%.17g" % (k, pc.a[k], pc.d[k - 1]))
    return EXIT_OK


def _mkdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def build_parser():
    parser = argparse.ArgumentParser(prog="swrdd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run the configured decomposition algorithm"),
                           ("reference", "single domain reference solve"),
                           ("compare", "decomposed run plus reference, reports the L2 error"),
                           ("probe", "dump the interface matrix blocks (time independent V)"),
                           ("sweep-robin", "scan the Robin parameter p")):
        p = sub.add_parser(name, help=helptext)
        _add_run_options(p)
        if name == "sweep-robin":
            p.add_argument("--p-min", type=float, default=10.0)
            p.add_argument("--p-max", type=float, default=100.0)
            p.add_argument("--p-count", type=int, default=10)
            p.add_argument("--p-values", help="comma separated list overriding the grid")
    p = sub.add_parser("coeffs", help="print convolution and Pade coefficients")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--pade-m", type=int, default=0)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "reference": cmd_reference,
                "compare": lambda a: cmd_run(a, compare=True), "probe": cmd_probe,
                "sweep-robin": cmd_sweep_robin, "coeffs": cmd_coeffs}
    try:
        return handlers[args.command](args)
    except NotConverged as exc:
        print("not converged: %s" % exc, file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (SWRError, ValueError, KeyError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
