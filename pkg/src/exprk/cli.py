"""``exprk`` command line.

Exit status: 0 on success, 2 on a configuration error, 3 when ``integrate``
hits a numerical failure (non-finite state or singular Rosenbrock system).
"""

import argparse
import re
import sys

import numpy as np

from . import harness, matfun, problems, stability
from .errors import ConfigurationError, ExpRKError, StepFailureError, UnboundedIntervalError
from .integrators import METHODS, integrate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# options whose values may start with a minus sign
_SIGNED_OPTS = {"--window", "--z", "--param", "--u0"}
_NUMBERISH = re.compile(r"^-[\d.]")


def _floats(text, n=None, name="value"):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"could not parse {name} {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigurationError(f"{name} needs {n} comma-separated numbers, got {text!r}")
    return vals


def _problem_from_args(args):
    params = {}
    for item in args.param or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--param expects name=value, got {item!r}")
        params[key.strip()] = float(val)
    if args.tf is not None:
        params["tf"] = args.tf
    if args.u0 is not None:
        u0 = _floats(args.u0, name="--u0")
        params["u0"] = u0[0] if len(u0) == 1 else tuple(u0)
    return problems.get_problem(args.problem, **params)


def _add_problem_opts(p):
    p.add_argument("--problem", required=True, choices=sorted(problems.PROBLEMS))
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="problem parameter override (repeatable)")
    p.add_argument("--tf", type=float, help="final time override")
    p.add_argument("--u0", help="initial state override, comma separated")
    p.add_argument("--gamma", type=float, default=0.5, help="rb2 stabilisation parameter")
    p.add_argument("--grid", choices=["exact", "uniform"])


def cmd_sweep(args):
    p = _problem_from_args(args)
    cfg = harness.SweepConfig(
        problem=args.problem,
        methods=args.methods.split(","),
        step_sizes=_floats(args.steps, name="--steps"),
        repetitions=args.repetitions,
        gamma=args.gamma,
        grid=args.grid or "uniform",
    )
    records = harness.run_sweep(cfg, problem=p)
    if args.out:
        harness.emit_csv(records, args.out)
    print(harness.format_table(records))
    return EXIT_OK


def cmd_integrate(args):
    p = _problem_from_args(args)
    try:
        traj = integrate(p, args.method, args.h, gamma=args.gamma, grid=args.grid or "exact")
    except StepFailureError as exc:
        print(f"step failure: {exc} (condition {exc.condition:.3e})", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        harness.write_trajectory_csv(traj, args.out)
    print(f"method={traj.method} h={traj.h:g} steps={traj.n_steps} t_end={traj.final_time:.12g} "
          f"wall_time_s={traj.wall_time:.6f} finite={str(traj.finite).lower()}")
    print("state=" + ",".join(repr(float(x)) for x in traj.final_state))
    if not traj.finite:
        print(f"non-finite state at t={traj.final_time:g}", file=sys.stderr)
        return EXIT_NUMERIC
    if p.exact is not None:
        err = harness.relative_error(traj.final_state, p.exact(p.tf))
        print(f"rel_error_at_tf={err:.6e}")
    return EXIT_OK


def cmd_stability(args):
    window = _floats(args.window, 4, "--window")
    nx, ny = (int(v) for v in _floats(args.res, 2, "--res"))
    raster = stability.rasterize(args.method, window, nx, ny, gamma=args.gamma)
    harness.emit_raster(raster, args.out, args.format)
    try:
        x = stability.real_axis_boundary(args.method, gamma=args.gamma)
        print(f"real-axis boundary: {x:.8f}")
    except UnboundedIntervalError:
        print("real-axis boundary: unbounded")
    print(f"stable cells: {int(raster.mask.sum())}/{nx * ny}")
    return EXIT_OK


def cmd_phi(args):
    z = _floats(args.z, name="--z")
    if len(z) not in (1, 2):
        raise ConfigurationError("--z takes re or re,im")
    val = matfun.phi_scalar(args.k, complex(*z), args.strategy)
    if len(z) == 1 or z[1] == 0:
        print(repr(val.real))
    else:
        print(repr(val))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="exprk", description="Exponential Runge-Kutta toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="error/time sweep over methods and step sizes")
    _add_problem_opts(sp)
    sp.add_argument("--methods", default=",".join(harness.TABLE_METHODS))
    sp.add_argument("--steps", default=",".join(f"{h:g}" for h in harness.TABLE_STEPS))
    sp.add_argument("--repetitions", type=int, default=5)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    ip = sub.add_parser("integrate", help="single fixed-step run")
    _add_problem_opts(ip)
    ip.add_argument("--method", required=True, help="/".join(METHODS))
    ip.add_argument("--h", type=float, required=True)
    ip.add_argument("--out")
    ip.set_defaults(func=cmd_integrate)

    st = sub.add_parser("stability", help="rasterise a stability domain")
    st.add_argument("--method", required=True)
    st.add_argument("--window", required=True, help="re_min,re_max,im_min,im_max")
    st.add_argument("--res", required=True, help="nx,ny")
    st.add_argument("--format", choices=["csv", "pgm"], default="csv")
    st.add_argument("--gamma", type=float, default=0.5)
    st.add_argument("--out", required=True)
    st.set_defaults(func=cmd_stability)

    ph = sub.add_parser("phi", help="evaluate a scalar phi-function")
    ph.add_argument("--k", type=int, required=True)
    ph.add_argument("--z", required=True, help="re or re,im")
    ph.add_argument("--strategy", default="auto", choices=[s.value for s in matfun.PhiStrategy])
    ph.set_defaults(func=cmd_phi)
    return parser


def _join_signed(argv):
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _SIGNED_OPTS and i + 1 < len(argv) and _NUMBERISH.match(argv[i + 1]):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None):
    argv = _join_signed(list(sys.argv[1:] if argv is None else argv))
    args = build_parser().parse_args(argv)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if args.command == "integrate" else EXIT_CONFIG
    except (ExpRKError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
