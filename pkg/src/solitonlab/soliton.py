"""Rotational self-similar solutions: the profile ODE and its integration.

A rotational surface with profile gamma solves Psi(H, H^2 - 4K) = -lam <X, N>
iff the jet (x, gamma, gamma', gamma'') makes ``residual`` vanish.  The
equation is implicit in gamma'' when Psi is nonlinear, so every right-hand side
evaluation is a bracketed scalar root solve seeded by the last accepted value.

Near the axis the profile is started from its Taylor expansion
gamma = b + c x^2 + O(x^4); past steep slopes it continues in arclength form
(x(s), y(s), phi(s)) with phi the tangent angle.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import rk
from .defaults import DEFAULTS, default_tol
from .errors import ArgError, DomainError, MultipleRootsWarning, RootFindFailed
from .rotgeom import GraphJet, ParamJet, curvature_graph, support_quantities
from .speed import SpeedFunction, real_power


class Termination(str, Enum):
    REACHED_X_MAX = "ReachedXMax"
    VERTICAL_TANGENT = "VerticalTangent"
    ROOT_FIND_FAILED = "RootFindFailed"
    DOMAIN_EXIT = "DomainExit"
    AXIS_RETURN = "AxisReturn"
    TURNING_POINT = "TurningPoint"
    MAX_LENGTH = "MaxLength"
    MAX_STEPS = "MaxSteps"


@dataclass(frozen=True)
class SolitonProblem:
    speed: SpeedFunction
    b: float
    x_max: float
    x_start: Optional[float] = None
    tol: float = field(default_factory=default_tol)
    slope_switch: float = DEFAULTS["slope_switch"]
    parametric: bool = True
    stop_at_turn: bool = True
    axis_tol: Optional[float] = None
    max_length: Optional[float] = None
    max_steps: int = DEFAULTS["max_steps"]
    checkpoints: tuple = ()
    fixed_step: Optional[float] = None

    def __post_init__(self):
        if not self.b > 0:
            raise ArgError(f"axis height b must be positive, got {self.b}")
        if self.x_start is None:
            object.__setattr__(self, "x_start", DEFAULTS["x_start_factor"] * self.b)
        if not 0 < self.x_start < self.x_max:
            raise ArgError(f"need 0 < x_start < x_max, got {self.x_start}, {self.x_max}")
        if not self.tol > 0:
            raise ArgError("tol must be positive")
        if self.axis_tol is None:
            object.__setattr__(self, "axis_tol", DEFAULTS["axis_tol_factor"] * self.b)
        if self.max_length is None:
            object.__setattr__(self, "max_length", 20.0 * max(self.x_max, self.b))
        object.__setattr__(self, "checkpoints", tuple(sorted(float(c) for c in self.checkpoints)))

    @property
    def lam(self) -> float:
        return self.speed.lam

    def to_dict(self) -> dict:
        return {"speed": self.speed.to_dict(), "b": self.b, "x_start": self.x_start, "x_max": self.x_max,
                "tol": self.tol, "slope_switch": self.slope_switch, "parametric": self.parametric,
                "axis_tol": self.axis_tol, "max_length": self.max_length, "max_steps": self.max_steps,
                "checkpoints": list(self.checkpoints), "fixed_step": self.fixed_step}


@dataclass(frozen=True)
class SeriesData:
    c: float
    a3: float = 0.0
    a4: Optional[float] = None


@dataclass
class ProfileCurve:
    """Accepted samples of one integration; graph jets first, then arclength jets."""

    b: float
    jets: list = field(default_factory=list)
    speed: Optional[SpeedFunction] = None

    def graph_jets(self) -> list[GraphJet]:
        return [j for j in self.jets if isinstance(j, GraphJet)]

    def param_jets(self) -> list[ParamJet]:
        return [j for j in self.jets if isinstance(j, ParamJet)]

    def xy(self) -> np.ndarray:
        return np.array([(j.x, j.gamma if isinstance(j, GraphJet) else j.y) for j in self.jets])

    def __len__(self):
        return len(self.jets)


@dataclass
class SolveReport:
    problem: SolitonProblem
    profile: ProfileCurve
    termination: Termination
    residual_max: float
    steps: int
    ambiguous_roots: int = 0
    closure_defect: Optional[float] = None
    arclength: float = 0.0
    message: str = ""

    def header(self) -> dict:
        return {"problem": self.problem.to_dict(), "termination": self.termination.value,
                "residual_max": self.residual_max, "steps": self.steps,
                "ambiguous_roots": self.ambiguous_roots, "closure_defect": self.closure_defect,
                "arclength": self.arclength, "message": self.message}


# ---------------------------------------------------------------------------
# the equation


def residual(speed: SpeedFunction, lam: Optional[float], j: GraphJet) -> float:
    """Psi(H, H^2-4K) + lam <X, N> at a graph jet; zero on solutions."""
    lam = speed.lam if lam is None else lam
    k1, k2 = curvature_graph(j)
    support, _ = support_quantities(j)
    return speed(k1 + k2, (k1 - k2) ** 2) + lam * support


def residual_param(speed: SpeedFunction, lam: Optional[float], j: ParamJet) -> float:
    from .rotgeom import curvature_param, support_quantities_param

    lam = speed.lam if lam is None else lam
    k1, k2 = curvature_param(j)
    support, _ = support_quantities_param(j)
    return speed(k1 + k2, (k1 - k2) ** 2) + lam * support


def _bracket_root(fun, guess, step0=None, step_max=None):
    """Root of ``fun`` nearest to ``guess``; returns (root, ambiguous)."""
    scale = 1.0 + abs(guess)
    d = (DEFAULTS["root_step0"] if step0 is None else step0) * scale
    dmax = (DEFAULTS["root_step_max"] if step_max is None else step_max) * scale

    def safe(x):
        try:
            v = fun(x)
        except (DomainError, ZeroDivisionError, OverflowError):
            return None
        return v if math.isfinite(v) else None

    f0 = safe(guess)
    if f0 == 0:
        return guess, False
    prev = {-1: (guess, f0) if f0 is not None else None, 1: (guess, f0) if f0 is not None else None}
    blocked = {-1: False, 1: False}
    while d <= dmax:
        found = []
        for side in (-1, 1):
            if blocked[side]:
                continue
            x = guess + side * d
            v = safe(x)
            p = prev[side]
            if v is None:
                if p is not None:
                    blocked[side] = True
                continue
            if v == 0:
                return x, False
            if p is not None and (v > 0) != (p[1] > 0):
                found.append((p, (x, v)))
            prev[side] = (x, v)
        if found:
            ambiguous = len(found) == 2
            if ambiguous:
                # prefer the bracket whose secant root lies closer to the guess
                def est(br):
                    (xa, fa), (xb, fb) = br
                    return abs(xa - fa * (xb - xa) / (fb - fa) - guess)

                found.sort(key=est)
            (xa, fa), (xb, fb) = found[0]
            lo, hi = (xa, xb) if xa < xb else (xb, xa)
            try:
                root = brentq(fun, lo, hi, xtol=1e-15 * scale, rtol=1e-15, maxiter=200)
            except (DomainError, ValueError, RuntimeError) as exc:
                raise RootFindFailed(f"brent iteration failed in [{lo}, {hi}]: {exc}") from None
            return root, ambiguous
        if blocked[-1] and blocked[1]:
            break
        d *= 2.0
    raise RootFindFailed(f"no sign change found around guess {guess:g}")


def _graph_fun(speed, lam, x, gamma, gamma_p):
    w = 1.0 + gamma_p * gamma_p
    w15 = w ** 1.5
    k1 = -gamma_p / (x * math.sqrt(w))
    lam_support = lam * (x * gamma_p - gamma) / math.sqrt(w)

    def fun(g):
        k2 = -g / w15
        d = k1 - k2
        return float(speed(k1 + k2, d * d)) + lam_support

    return fun


def solve_gamma_pp(speed: SpeedFunction, lam: Optional[float], x: float, gamma: float, gamma_p: float,
                   guess: float) -> float:
    """gamma'' solving the profile equation at (x, gamma, gamma'), nearest to ``guess``."""
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    lam = speed.lam if lam is None else lam
    root, ambiguous = _bracket_root(_graph_fun(speed, lam, x, gamma, gamma_p), guess)
    if ambiguous:
        warnings.warn(f"two gamma'' roots bracketed at x={x:g}; kept the one nearest {guess:g}",
                      MultipleRootsWarning, stacklevel=2)
    return root


def _param_fun(speed, lam, x, y, phi):
    k1 = -math.sin(phi) / x
    lam_support = lam * (x * math.sin(phi) - y * math.cos(phi))

    def fun(k2):
        d = k1 - k2
        return float(speed(k1 + k2, d * d)) + lam_support

    return fun


def solve_k2(speed: SpeedFunction, lam: Optional[float], x: float, y: float, phi: float,
             guess: float) -> tuple[float, bool]:
    """Meridian curvature k2 = -dphi/ds at an arclength state (x, y, phi)."""
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    lam = speed.lam if lam is None else lam
    return _bracket_root(_param_fun(speed, lam, x, y, phi), guess)


def series_start(problem: SolitonProblem) -> SeriesData:
    """Axis expansion gamma = b + c x^2 + a3 x^3 + ..., with a3 = 0."""
    return SeriesData(c=series_c(problem.speed, problem.b))


def series_a4(speed: SpeedFunction, b: float, c: Optional[float] = None) -> float:
    """Quartic axis coefficient, a4 = c^3 - c^3/(2 beta) - c^2/(4 beta b).

    Only Psi(., 0) enters at this order because x2 = (k1 - k2)^2 is O(x^4).
    Used to start the integration with an O(x_start^6) handoff error.
    """
    c = series_c(speed, b) if c is None else c
    beta = speed.beta
    return c ** 3 - c ** 3 / (2.0 * beta) - c * c / (4.0 * beta * b)


def series_c(speed: SpeedFunction, b: float) -> float:
    beta = speed.beta
    if beta is None:
        raise ArgError("the axis series needs a homogeneous speed")
    if beta == 0:
        raise ArgError("beta = 0: the axis series is undefined")
    psi10 = speed.psi10()
    if psi10 == 0:
        raise DomainError("Psi(1, 0) = 0: the axis series is undefined")
    return -0.25 * real_power(speed.lam * b / psi10, 1.0 / beta)


# ---------------------------------------------------------------------------
# integration


class _Continuation:
    """Right-hand sides that seed each implicit solve with the last accepted value."""

    def __init__(self, speed, lam, guess):
        self.speed = speed
        self.lam = lam
        self.guess = guess
        self.ambiguous = 0

    def graph(self, x, y):
        root, amb = _bracket_root(_graph_fun(self.speed, self.lam, x, y[0], y[1]), self.guess)
        self._last_amb = amb
        return np.array([y[1], root])

    def param(self, s, y):
        if not y[0] > 0:
            raise DomainError("profile reached the axis inside a step")
        root, amb = _bracket_root(_param_fun(self.speed, self.lam, y[0], y[1], y[2]), self.guess)
        self._last_amb = amb
        return np.array([math.cos(y[2]), math.sin(y[2]), -root])


STALL_WINDOW = 1000
STALL_FRACTION = 1e-4


def _param_jet(y, f) -> ParamJet:
    c, s = math.cos(y[2]), math.sin(y[2])
    dphi = f[2]
    return ParamJet(float(y[0]), float(y[1]), c, s, -s * dphi, c * dphi)


def _refine_event(rhs, t, y, f, h, g):
    """Smallest tau in (0, h] with g(y(t+tau)) = 0, given sign(g(y)) != sign(g(y(t+h)))."""
    def gt(tau):
        return g(rk.dopri_step(rhs, t, y, tau, f)[0])

    tau = brentq(gt, 0.0, h, xtol=1e-14 * max(1.0, abs(h)), rtol=1e-14)
    y_ev, _, f_ev = rk.dopri_step(rhs, t, y, tau, f)
    return tau, y_ev, f_ev


def _closure_defect(Y, F, at_axis: bool) -> float:
    """Sine of the tangent angle where the profile meets the axis; 0 for an orthogonal hit.

    At an axis hit the angle is extrapolated linearly from x = axis_tol to x = 0
    (d sin(phi)/dx = -k2), which removes the O(x) offset a sphere would show.  If
    the profile turns back (x has a local minimum) before reaching the axis the
    defect is sin(phi) = +-1 there, which keeps the sign continuous in b.
    """
    sin_phi = math.sin(Y[2])
    if at_axis:
        k2 = -F[2]
        return float(sin_phi + Y[0] * k2)
    return float(sin_phi)


def integrate_profile(problem: SolitonProblem) -> SolveReport:
    """Integrate the profile from the axis series outward."""
    speed, lam, b = problem.speed, problem.lam, problem.b
    tol = problem.tol
    series = series_start(problem)
    c = series.c
    xs = problem.x_start
    profile = ProfileCurve(b=b, speed=speed)

    def report(term, message="", **kw):
        return SolveReport(problem, profile, term, residual_max, steps, cont.ambiguous, message=message, **kw)

    residual_max = 0.0
    steps = 0
    cont = _Continuation(speed, lam, 2.0 * c)
    a4 = series_a4(speed, b, c)
    y = np.array([b + c * xs * xs + a4 * xs ** 4, 2.0 * c * xs + 4.0 * a4 * xs ** 3])
    try:
        f = cont.graph(xs, y)
    except (DomainError, RootFindFailed) as exc:
        term = Termination.DOMAIN_EXIT if isinstance(exc, DomainError) else Termination.ROOT_FIND_FAILED
        return report(term, f"no gamma'' at the series handoff: {exc}")
    cont.guess = f[1]
    t = xs
    profile.jets.append(GraphJet(t, float(y[0]), float(y[1]), float(f[1])))

    h = problem.fixed_step or xs
    h_min = 1e-14 * max(1.0, problem.x_max)
    # Stall guard: near a boundary of the speed's domain (e.g. H -> 0 for
    # H^(1/2)) error control can keep accepting ever smaller steps without
    # failing outright.  Every STALL_WINDOW attempts the run must advance by
    # STALL_FRACTION of the problem scale.
    scale = max(problem.x_max, b)
    attempts = 0
    mark = xs

    def stalled(pos):
        nonlocal attempts, mark
        attempts += 1
        if attempts % STALL_WINDOW:
            return False
        moved = abs(pos - mark)
        mark = pos
        return moved < STALL_FRACTION * scale
    targets = [cp for cp in problem.checkpoints if xs < cp < problem.x_max] + [problem.x_max]

    # graph phase
    switched = False
    while True:
        if steps >= problem.max_steps:
            return report(Termination.MAX_STEPS)
        if stalled(t):
            return report(Termination.DOMAIN_EXIT, f"integration stalled near x={t:g}")
        target = targets[0]
        h_try = min(h, target - t)
        landing = h_try >= target - t
        try:
            y_new, err, f_new = rk.dopri_step(cont.graph, t, y, h_try, f)
        except (DomainError, RootFindFailed) as exc:
            h = 0.25 * h_try
            if h < h_min:
                term = Termination.DOMAIN_EXIT if isinstance(exc, DomainError) else Termination.ROOT_FIND_FAILED
                return report(term, str(exc))
            continue
        en = 0.0 if problem.fixed_step else rk.error_norm(err, y, y_new, tol)
        if en > 1.0:
            h = rk.next_step(h_try, en)
            continue
        t = target if landing else t + h_try
        y, f = y_new, f_new
        cont.guess = f[1]
        cont.ambiguous += int(getattr(cont, "_last_amb", False))
        steps += 1
        jet = GraphJet(t, float(y[0]), float(y[1]), float(f[1]))
        profile.jets.append(jet)
        residual_max = max(residual_max, abs(residual(speed, lam, jet)))
        if not problem.fixed_step:
            h_next = rk.next_step(h_try, en)
            h = max(h_next, h) if landing else h_next
        if landing:
            targets.pop(0)
            if not targets:
                return report(Termination.REACHED_X_MAX)
        if abs(y[1]) > problem.slope_switch:
            if not problem.parametric:
                return report(Termination.VERTICAL_TANGENT, f"|gamma'| > {problem.slope_switch} at x={t:g}")
            switched = True
            break

    # arclength phase
    assert switched
    phi = math.atan(y[1])
    w = 1.0 + y[1] ** 2
    k2 = -f[1] / w ** 1.5
    Y = np.array([t, y[0], phi])
    F = np.array([math.cos(phi), math.sin(phi), -k2])
    cont.guess = k2
    s = 0.0
    if problem.fixed_step is None:
        h = min(h, 0.1 * max(t, problem.axis_tol))
    axis_tol = problem.axis_tol
    mark = 0.0
    while True:
        if stalled(s):
            return report(Termination.DOMAIN_EXIT, f"integration stalled at arclength {s:g}", arclength=s)
        if steps >= problem.max_steps:
            return report(Termination.MAX_STEPS, arclength=s)
        if s >= problem.max_length:
            return report(Termination.MAX_LENGTH, arclength=s)
        h_try = h
        try:
            Y_new, err, F_new = rk.dopri_step(cont.param, s, Y, h_try, F)
        except (DomainError, RootFindFailed) as exc:
            h = 0.25 * h_try
            if h < h_min:
                term = Termination.DOMAIN_EXIT if isinstance(exc, DomainError) else Termination.ROOT_FIND_FAILED
                return report(term, str(exc), arclength=s)
            continue
        en = 0.0 if problem.fixed_step else rk.error_norm(err, Y, Y_new, tol)
        if en > 1.0:
            h = rk.next_step(h_try, en)
            continue

        event = None
        at_axis = Y_new[0] <= axis_tol
        if at_axis:
            event = lambda Z: Z[0] - axis_tol
        elif problem.stop_at_turn and math.cos(Y[2]) < 0 <= math.cos(Y_new[2]):
            event = lambda Z: math.cos(Z[2])
        if event is not None:
            try:
                tau, Y_new, F_new = _refine_event(cont.param, s, Y, F, h_try, event)
            except (ValueError, DomainError, RootFindFailed):
                tau = h_try
            s += tau
            steps += 1
            jet = _param_jet(Y_new, F_new)
            profile.jets.append(jet)
            residual_max = max(residual_max, abs(residual_param(speed, lam, jet)))
            defect = _closure_defect(Y_new, F_new, at_axis=at_axis)
            term = Termination.AXIS_RETURN if at_axis else Termination.TURNING_POINT
            return report(term, closure_defect=defect, arclength=s)

        s += h_try
        Y, F = Y_new, F_new
        cont.guess = -F[2]
        cont.ambiguous += int(getattr(cont, "_last_amb", False))
        steps += 1
        jet = _param_jet(Y, F)
        profile.jets.append(jet)
        residual_max = max(residual_max, abs(residual_param(speed, lam, jet)))
        if Y[0] > problem.x_max:
            return report(Termination.REACHED_X_MAX, arclength=s)
        if not problem.fixed_step:
            h = rk.next_step(h_try, en)


# ---------------------------------------------------------------------------
# shooting


@dataclass(frozen=True)
class Shot:
    b: float
    closure_defect: Optional[float]
    termination: str


@dataclass
class ShootResult:
    shots: list
    roots: list

    def to_dict(self) -> dict:
        return {"shots": [{"b": s.b, "closure_defect": s.closure_defect, "termination": s.termination}
                          for s in self.shots],
                "roots": list(self.roots)}


def _shoot_one(args) -> Shot:
    speed, b, tol, x_max_factor = args
    try:
        rep = integrate_profile(SolitonProblem(speed=speed, b=b, x_max=x_max_factor * b, tol=tol))
    except (ArgError, DomainError) as exc:
        return Shot(b, None, f"error: {exc}")
    defect = rep.closure_defect
    return Shot(b, defect, rep.termination.value)


def shoot_for_closure(speed: SpeedFunction, lam: Optional[float], b_range: Sequence[float],
                      criterion_tol: float = 1e-3, n: int = 9, tol: float = 1e-8,
                      x_max_factor: float = 10.0, workers: int = 1) -> ShootResult:
    """Scan axis heights for profiles that come back to the axis orthogonally.

    ``b_range`` is either ``(lo, hi)`` (sampled at ``n`` equispaced points) or an
    explicit list of three or more heights.  Every sign change of the closure
    defect between neighbouring samples is bisected down to ``criterion_tol``.
    """
    if len(b_range) == 2:
        lo, hi = float(b_range[0]), float(b_range[1])
        if not 0 < lo < hi or not math.isfinite(hi):
            raise ArgError("b_range must be a finite positive interval")
        bs = list(np.linspace(lo, hi, n))
    else:
        bs = sorted(float(b) for b in b_range)
        if bs[0] <= 0:
            raise ArgError("axis heights must be positive")
    if lam is not None:
        speed = speed.with_lambda(lam)
    jobs = [(speed, float(b), tol, x_max_factor) for b in bs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            shots = list(pool.map(_shoot_one, jobs))
    else:
        shots = [_shoot_one(j) for j in jobs]

    roots = []
    extra = []
    for left, right in zip(shots, shots[1:]):
        if left.closure_defect is None or right.closure_defect is None:
            continue
        if (left.closure_defect > 0) == (right.closure_defect > 0):
            continue
        a, fa, bb = left.b, left.closure_defect, right.b
        while bb - a > criterion_tol:
            mid = 0.5 * (a + bb)
            shot = _shoot_one((speed, mid, tol, x_max_factor))
            extra.append(shot)
            if shot.closure_defect is None:
                break
            if (shot.closure_defect > 0) == (fa > 0):
                a, fa = mid, shot.closure_defect
            else:
                bb = mid
        roots.append(0.5 * (a + bb))
    all_shots = sorted(shots + extra, key=lambda s: s.b)
    return ShootResult(all_shots, roots)
