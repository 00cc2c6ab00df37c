"""Command-line front end.

    qfisher optimal --channel ch.json --observable obs.json --state st.json
    qfisher compare-tomography --channel ch.json --observable obs.json --state st.json
    qfisher spin-boson --scenario sc.json --out traj.csv
    qfisher validate [--suite NAMES] [--seed N] [--perturb]

Exit codes: 0 success, 2 usage, 3 invalid input, 4 singular channel,
5 degenerate observable or boundary state, 6 accuracy failure,
7 validation failure.
"""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .channel import AffineChannel
from .errors import QFisherError, InputError
from .estimation import compare_tomography, optimal_measurement
from .spin_boson import MODEL_FLAGS, trajectory
from .inputs import format_float, load_json, parse_channel, parse_observable, parse_scenario, parse_state, write_json
from .validation import run_validation

EXIT_VALIDATION = 7
TOL_NAMES = ("injectivity", "quad_rel", "degeneracy")


def _clean(x):
    """JSON-safe copy: NaN/inf become null, arrays become lists."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _complex_matrix(m):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _parse_tols(items):
    tols = {}
    for item in items or []:
        name, _, value = item.partition("=")
        if name not in TOL_NAMES or not value:
            raise InputError("--tol", f"expects NAME=VALUE with NAME in {TOL_NAMES}, got {item!r}")
        try:
            v = float(value)
        except ValueError:
            raise InputError(f"--tol {name}", f"{value!r} is not a number") from None
        if not v > 0:
            raise InputError(f"--tol {name}", "tolerance must be positive")
        tols[name] = v
    return tols


def _threads(args):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("QFISHER_THREADS")
    return max(1, int(env)) if env and env.isdigit() else 1


def _load_problem(args):
    ch = parse_channel(load_json(args.channel))
    obs = parse_observable(load_json(args.observable), ch.dim)
    theta = parse_state(load_json(args.state), ch.dim)
    tols = _parse_tols(args.tol)
    ach = ch.affine
    if "injectivity" in tols:
        ach = AffineChannel(ach.A, ach.c, tols["injectivity"])
    return ach, obs, theta, tols


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def cmd_optimal(args):
    ach, obs, theta, tols = _load_problem(args)
    opt = optimal_measurement(ach, obs, theta, degeneracy_tol=tols.get("degeneracy"))
    pm = opt.measurement
    result = {
        "Y": {"y0": opt.Y.x0, "y": opt.Y.x},
        "eigenvalues": pm.eigenvalues,
        "eigenvalues_with_offset": pm.eigenvalues + opt.Y.x0,
        "ranks": pm.ranks,
        "projectors": [_complex_matrix(p) for p in pm.projectors],
        "projector_bloch_vectors": pm.v,
        "j_max": opt.j_max,
        "variance_Y": opt.variance,
        "j_classical_check": opt.classical_check,
        "j_sld_check": opt.sld_check,
        "diagnostics": {"condition_number": opt.condition_number, **opt.diagnostics},
    }
    _emit(write_json(_clean(result), None), args.out)
    return 0


def cmd_compare_tomography(args):
    ach, obs, theta, _ = _load_problem(args)
    _emit(write_json(_clean(compare_tomography(ach, obs, theta)), None), args.out)
    return 0


def _metadata(sc):
    return {
        "model": MODEL_FLAGS,
        "omega_0": sc.omega_0,
        "omega_0_used": False,
        "bath": {"omega_c": sc.bath.omega_c, "kT_over_hbar_omega_c": sc.bath.kT},
        "theta_obs": sc.theta_obs,
        "initial_state": sc.rho0,
        "pulses": None if sc.pulses is None else
        {"delta_t": sc.pulses.delta_t, "tau": sc.pulses.tau, "count": sc.pulses.count},
        "grid": {"t_min": sc.times[0], "t_max": sc.times[-1], "points": len(sc.times)},
        "tolerances": {"quad_rel_tol": sc.quad_rel_tol, "injectivity_tol": sc.injectivity_tol},
        "versions": {"qfisher": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "columns": ["t", "gamma", "theta", "phi", "J"],
    }


def cmd_spin_boson(args):
    sc = parse_scenario(load_json(args.scenario))
    tols = _parse_tols(args.tol)
    quad_tol = tols.get("quad_rel", sc.quad_rel_tol)
    inj_tol = tols.get("injectivity", sc.injectivity_tol)
    sc = type(sc)(sc.bath, sc.theta_obs, sc.rho0, sc.pulses, sc.times, quad_tol, inj_tol, sc.omega_0)
    threads = _threads(args)
    traj = trajectory(sc.times, sc.theta_obs, sc.rho0, sc.pulses, sc.bath, quad_tol, inj_tol, threads)
    cols = (traj.times, traj.gamma, traj.theta, traj.phi, traj.J)
    if args.format == "json":
        body = write_json(_clean({"t": traj.times, "gamma": traj.gamma, "theta": traj.theta,
                                  "phi": traj.phi, "J": traj.J, "injective": traj.injective}), None)
    else:
        buf = io.StringIO()
        buf.write("t,gamma,theta,phi,J\n")
        for row in zip(*cols):
            buf.write(",".join(format_float(v) for v in row) + "\n")
        body = buf.getvalue()
    meta = _clean(_metadata(sc))
    if args.out:
        out = Path(args.out)
        out.write_text(body, encoding="utf-8", newline="\n")
        write_json(meta, out.with_suffix(".meta.json"))
    else:
        sys.stdout.write(body)
    return 0


def cmd_validate(args):
    try:
        report = run_validation(args.suite, args.seed, args.perturb, _threads(args))
    except KeyError as exc:
        raise InputError("--suite", str(exc.args[0])) from None
    _emit(write_json(_clean(report), None), args.out)
    if not report["all_pass"]:
        print("validation failed: " + ", ".join(report["failed"]), file=sys.stderr)
        return EXIT_VALIDATION
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qfisher", description="Optimal measurements on noisy quantum systems.")
    p.add_argument("--version", action="version", version=f"qfisher {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help=f"tolerance override, NAME in {', '.join(TOL_NAMES)}")
        sp.add_argument("--threads", type=int, help="worker threads (fallback: $QFISHER_THREADS)")

    for name, fn, helptext in (("optimal", cmd_optimal, "optimal measurement for <X> behind a channel"),
                               ("compare-tomography", cmd_compare_tomography,
                                "optimal vs. Pauli-tomography Fisher information (qubits)")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--channel", required=True)
        sp.add_argument("--observable", required=True)
        sp.add_argument("--state", required=True)
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("spin-boson", help="optimal measurement trajectory for the dephasing qubit")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    common(sp)
    sp.set_defaults(func=cmd_spin_boson)

    sp = sub.add_parser("validate", help="run the property suites")
    sp.add_argument("--suite", default="all", help="comma-separated property names or 'all'")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--perturb", action="store_true", help="scale A by 1.01 in the equality check")
    common(sp)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QFisherError as exc:
        print(f"qfisher: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"qfisher: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
