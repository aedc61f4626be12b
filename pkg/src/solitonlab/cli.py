"""Command-line front end.

Exit codes: 0 ok, 1 configuration error, 2 no solution, 3 numerical failure.
Artifacts go to ``--out`` (and ``--report`` where a second file makes sense),
or to stdout.  Output is byte-for-byte reproducible for a fixed configuration.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional

from . import __version__
from .analysis import axis_profile, fit_window, ftilde_analysis, ladder_points, parabolicity_scan
from .defaults import DEFAULTS, default_tol
from .errors import ArgError, DomainError, RootFindFailed, SolitonLabError
from .hopf import CylinderMeridian, EllipsoidMeridian, SphereMeridian, convergence_check
from .serialize import dumps, profile_csv, scan_csv
from .soliton import SolitonProblem, Termination, integrate_profile, shoot_for_closure
from .speed import FAMILIES, from_dict
from .sphere import sphere_solutions

EXIT_OK, EXIT_CONFIG, EXIT_NO_SOLUTION, EXIT_NUMERICAL = 0, 1, 2, 3

FAILED_TERMINATIONS = {Termination.ROOT_FIND_FAILED, Termination.DOMAIN_EXIT, Termination.MAX_STEPS}


class ConfigError(SolitonLabError):
    pass


def _number(text: str):
    """Parse '0.2', '1/3' (kept exact) or '2'."""
    try:
        if "/" in text:
            return Fraction(text)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _exp_json(v):
    if isinstance(v, Fraction):
        return [v.numerator, v.denominator] if v.denominator != 1 else float(v)
    return v


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"--param expects NAME=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), _number(v.strip())


def _add_speed_args(p: argparse.ArgumentParser, family_ab: bool = False):
    g = p.add_argument_group("speed function")
    g.add_argument("--family", choices=sorted(FAMILIES), help="speed family")
    g.add_argument("--lambda", dest="lam", type=float, help="flow constant lambda (default 1)")
    g.add_argument("--alpha", type=_number, help="exponent for gauss-power / harmonic-mean-power")
    g.add_argument("--power", "--beta", dest="power", type=_number, help="exponent for power-mean")
    g.add_argument("--m", type=int, help="harmonic-mean-power numerator m")
    g.add_argument("--n", type=int, help="harmonic-mean-power index n (exponent m/(2n-1))")
    if family_ab:
        g.add_argument("--a", type=float, help="quadratic-hk coefficient a")
        g.add_argument("--b", type=float, help="quadratic-hk coefficient b")
    g.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE",
                   help="extra family parameter (e.g. --param a=1 for quadratic-hk)")
    g.add_argument("--config", help="JSON config file; flags given on the command line take precedence")


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path!r}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path!r} must hold a JSON object")
    return cfg


def _speed_from_args(args, cfg: dict, family_ab: bool = False):
    if args.family is None:
        if "speed" not in cfg:
            raise ConfigError("no speed function: pass --family or a config with a 'speed' object")
        d = dict(cfg["speed"])
        if args.lam is not None:
            d["lambda"] = args.lam
        return from_dict(d)
    params = dict(args.param)
    if args.alpha is not None:
        params["alpha"] = args.alpha
    if args.power is not None:
        params["power"] = args.power
    if args.m is not None or args.n is not None:
        if args.m is None or args.n is None:
            raise ConfigError("--m and --n go together")
        params["m"], params["n"] = args.m, args.n
    if family_ab:
        if args.a is not None:
            params["a"] = args.a
        if args.b is not None:
            params["b"] = args.b
    lam = args.lam if args.lam is not None else cfg.get("lambda", 1.0)
    return from_dict({"family": args.family, "params": {k: _exp_json(v) for k, v in params.items()},
                      "lambda": lam})


def _pick(args, cfg, name, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.get(name, default)


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_sphere(args) -> int:
    cfg = _load_config(args.config)
    speed = _speed_from_args(args, cfg)
    rep = sphere_solutions(speed)
    out = {"speed": speed.to_dict(), **rep.to_dict()}
    _emit(dumps(out), args.out)
    if rep.solutions or rep.any_radius:
        return EXIT_OK
    if rep.weingarten:
        return EXIT_OK
    print("no sphere solves lam R = Psi(2/R, 0)", file=sys.stderr)
    return EXIT_NO_SOLUTION


def _problem(args, cfg, speed) -> SolitonProblem:
    b = _pick(args, cfg, "b")
    if b is None:
        raise ConfigError("axis height --b is required")
    x_max = _pick(args, cfg, "x_max", 10.0 * float(b))
    tol = _pick(args, cfg, "tol", default_tol())
    kw = {}
    if _pick(args, cfg, "x_start") is not None:
        kw["x_start"] = float(_pick(args, cfg, "x_start"))
    if _pick(args, cfg, "max_steps") is not None:
        kw["max_steps"] = int(_pick(args, cfg, "max_steps"))
    if getattr(args, "no_parametric", False) or cfg.get("parametric") is False:
        kw["parametric"] = False
    return SolitonProblem(speed=speed, b=float(b), x_max=float(x_max), tol=float(tol), **kw)


def cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    speed = _speed_from_args(args, cfg)
    if speed.lam == 0:
        note = {"mode": "weingarten", "speed": speed.to_dict(),
                "note": "lambda = 0: the equation is the stationary Weingarten relation Psi(H, H^2-4K) = 0; "
                        "no self-similar profile is integrated"}
        _emit(dumps(note), args.report or args.out)
        print("lambda = 0: Weingarten mode, nothing to integrate", file=sys.stderr)
        return EXIT_OK
    prob = _problem(args, cfg, speed)
    rep = integrate_profile(prob)
    header = rep.header()
    if args.report:
        _emit(profile_csv(rep.profile.jets), args.out)
        _emit(dumps(header), args.report)
    else:
        # single stream: JSON header as comment lines, then the CSV
        text = "".join("# " + line + "\n" for line in dumps(header).splitlines())
        _emit(text + profile_csv(rep.profile.jets), args.out)
    if rep.termination in FAILED_TERMINATIONS:
        print(f"integration stopped: {rep.termination.value} {rep.message}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_pinch(args) -> int:
    cfg = _load_config(args.config)
    speed = _speed_from_args(args, cfg)
    b = _pick(args, cfg, "b")
    if b is None:
        raise ConfigError("axis height --b is required")
    tol = float(_pick(args, cfg, "tol", min(default_tol(), 1e-10)))
    prof = axis_profile(speed, float(b), tol=tol)
    run = prof.report
    # the analysis only needs the profile near the axis; a run that fails
    # further out is reported but does not spoil the ladder
    needed = max(fit_window(speed, float(b)), ladder_points(prof.x_start)[-1])
    reached = max((j.x for j in prof.graph_jets()), default=0.0)
    if run.termination in FAILED_TERMINATIONS and reached < needed:
        print(f"integration stopped at x={reached:g} before the axis window: {run.termination.value} "
              f"{run.message}", file=sys.stderr)
        return EXIT_NUMERICAL
    rep = ftilde_analysis(prof, speed)
    _emit(dumps({"speed": speed.to_dict(), **rep.to_dict(),
                 "integration": {"termination": run.termination.value, "message": run.message}}), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load_config(args.config)
    kind = _pick(args, cfg, "profile", "sphere")
    h = float(_pick(args, cfg, "h", DEFAULTS["hopf_h"]))
    if kind == "sphere":
        R = float(_pick(args, cfg, "R", 1.0))
        src, u_range = SphereMeridian(R), (-0.88, 0.88)
    elif kind == "cylinder":
        src, u_range = CylinderMeridian(float(_pick(args, cfg, "r", 1.0))), (-1.0, 1.0)
    elif kind == "ellipsoid":
        src = EllipsoidMeridian(float(_pick(args, cfg, "a", 1.0)), float(_pick(args, cfg, "c", 2.0)))
        u_range = (-0.8, 0.8)
    elif kind == "soliton":
        speed = _speed_from_args(args, cfg)
        b = _pick(args, cfg, "axis_b", None) or cfg.get("b")
        if b is None:
            raise ConfigError("soliton verification needs --axis-b")
        rep = integrate_profile(SolitonProblem(speed=speed, b=float(b), x_max=10.0 * float(b), tol=1e-10))
        if rep.termination in FAILED_TERMINATIONS:
            return EXIT_NUMERICAL
        src, u_range = rep.profile, (-0.25, 0.25)
    else:
        raise ConfigError(f"unknown profile {kind!r}")
    conv = convergence_check(src, h=h, u_range=u_range)
    _emit(dumps(conv.to_dict()), args.out)
    return EXIT_OK if conv.ok else EXIT_NUMERICAL


def cmd_scan(args) -> int:
    cfg = _load_config(args.config)
    speed = _speed_from_args(args, cfg, family_ab=True)
    H_range = args.H_range or cfg.get("H_range", (-1.0, 1.0))
    K_range = args.K_range or cfg.get("K_range", (-8.0, 1.0))
    nH = int(_pick(args, cfg, "nH", 200))
    nK = int(_pick(args, cfg, "nK", 200))
    scan = parabolicity_scan(speed, tuple(H_range), tuple(K_range), nH, nK)
    _emit(scan_csv(scan), args.out)
    if args.report:
        _emit(dumps({"speed": speed.to_dict(), "dK": scan.dK,
                     "boundary": [[h, k] for h, k in scan.boundary]}), args.report)
    return EXIT_OK


def cmd_shoot(args) -> int:
    cfg = _load_config(args.config)
    speed = _speed_from_args(args, cfg)
    b_range = args.b_range or cfg.get("b_range")
    if not b_range:
        raise ConfigError("--b-range LO HI is required")
    crit = float(_pick(args, cfg, "criterion_tol", 1e-3))
    n = int(_pick(args, cfg, "samples", 9))
    tol = float(_pick(args, cfg, "tol", min(default_tol(), 1e-8)))
    workers = int(_pick(args, cfg, "workers", 1))
    res = shoot_for_closure(speed, None, b_range, criterion_tol=crit, n=n, tol=tol, workers=workers)
    _emit(dumps({"speed": speed.to_dict(), **res.to_dict()}), args.out)
    return EXIT_OK if res.roots else EXIT_NO_SOLUTION


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="solitonlab", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sphere", help="radii of spherical solutions")
    _add_speed_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sphere)

    p = sub.add_parser("solve", help="integrate a profile from the axis")
    _add_speed_args(p)
    p.add_argument("--b", type=float, help="axis height gamma(0)")
    p.add_argument("--x-max", dest="x_max", type=float, help="integration horizon (default 10 b)")
    p.add_argument("--x-start", dest="x_start", type=float, help="series handoff abscissa (default 1e-3 b)")
    p.add_argument("--tol", type=float, help="RK tolerance (default $SOLITONLAB_TOL or 1e-9)")
    p.add_argument("--max-steps", dest="max_steps", type=int, help="step budget (default 200000)")
    p.add_argument("--no-parametric", action="store_true", help="stop at steep slopes instead of switching")
    p.add_argument("--out", help="profile CSV")
    p.add_argument("--report", help="SolveReport JSON (otherwise prepended to the CSV as # lines)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pinch", help="Taylor fit and F ladder at the axis")
    _add_speed_args(p)
    p.add_argument("--b", type=float, help="axis height gamma(0)")
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pinch)

    p = sub.add_parser("verify", help="Hopf differential identity checks")
    _add_speed_args(p)
    p.add_argument("--profile", choices=["sphere", "cylinder", "ellipsoid", "soliton"])
    p.add_argument("--R", type=float, help="sphere radius")
    p.add_argument("--r", type=float, help="cylinder radius")
    p.add_argument("--a", type=float, help="ellipsoid equatorial radius")
    p.add_argument("--c", type=float, help="ellipsoid polar semi-axis")
    p.add_argument("--axis-b", dest="axis_b", type=float, help="axis height for --profile soliton")
    p.add_argument("--h", type=float, help="grid spacing in u (default 1e-3)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scan", help="parabolicity classification on an (H, K) grid")
    _add_speed_args(p, family_ab=True)
    p.add_argument("--H-range", dest="H_range", type=float, nargs=2)
    p.add_argument("--K-range", dest="K_range", type=float, nargs=2)
    p.add_argument("--nH", type=int)
    p.add_argument("--nK", type=int)
    p.add_argument("--out", help="grid CSV (H, K, indicator, class)")
    p.add_argument("--report", help="boundary JSON")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("shoot", help="scan axis heights for closed profiles")
    _add_speed_args(p)
    p.add_argument("--b-range", dest="b_range", type=float, nargs=2)
    p.add_argument("--samples", type=int, help="number of heights sampled (default 9)")
    p.add_argument("--criterion-tol", dest="criterion_tol", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--workers", type=int, help="processes for independent runs (default 1)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_shoot)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, RootFindFailed) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ArgError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
