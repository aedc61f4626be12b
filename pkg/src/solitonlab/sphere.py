"""Spherical solutions: radii solving lam R = Psi(2/R, 0), and residual checks."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .defaults import DEFAULTS
from .errors import ArgError, DomainError
from .rotgeom import GraphJet
from .soliton import residual
from .speed import SpeedFunction, real_power


@dataclass(frozen=True)
class SphereSolution:
    R: float
    center_is_origin: bool
    residual: float
    method: str = "closed-form"


@dataclass
class SphereReport:
    """All spheres of a speed function.

    ``any_radius`` marks the degenerate case where lam R - Psi(2/R, 0) vanishes
    identically; ``weingarten`` marks lam = 0, where the centre is arbitrary and
    R solves Psi(2/R, 0) = 0.
    """

    solutions: list = field(default_factory=list)
    any_radius: bool = False
    weingarten: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {"solutions": [asdict(s) for s in self.solutions], "any_radius": self.any_radius,
                "weingarten": self.weingarten, "note": self.note}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def radius_equation(speed: SpeedFunction, R: float) -> float:
    """g(R) = lam R - Psi(2/R, 0)."""
    return speed.lam * R - float(speed(2.0 / R, 0.0))


def closed_form_radius(speed: SpeedFunction) -> float:
    """R = [2^beta Psi(1,0) / lam]^(1/(beta+1)) for homogeneous speeds.

    Raises ArgError when the formula does not apply (no beta, beta = -1, lam = 0)
    and DomainError when it yields no positive real radius.
    """
    beta = speed.beta
    if beta is None:
        raise ArgError("closed form needs a homogeneous speed")
    if beta == -1:
        raise ArgError("beta = -1: the closed-form exponent 1/(beta+1) is singular")
    if speed.lam == 0:
        raise ArgError("lam = 0 has no closed-form radius")
    base = 2.0 ** beta * float(speed.psi10()) / speed.lam
    R = float(real_power(base, 1.0 / (beta + 1.0)))
    if not (R > 0 and math.isfinite(R)):
        raise DomainError(f"closed form gives no positive radius (base {base:g})")
    return R


def _length_scale(speed: SpeedFunction) -> float:
    beta = speed.beta
    try:
        if beta is not None and beta != -1 and speed.lam != 0:
            L = float(real_power(abs(float(speed.psi10()) / speed.lam), 1.0 / (beta + 1.0)))
            if L > 0 and math.isfinite(L):
                return L
    except (DomainError, ZeroDivisionError, OverflowError):
        pass
    return 1.0


def _scan_roots(g, r_min, r_max, n):
    rs = np.geomspace(r_min, r_max, n)
    vals = []
    for r in rs:
        try:
            v = g(float(r))
        except (DomainError, ZeroDivisionError, OverflowError):
            v = math.nan
        vals.append(v)
    vals = np.array(vals, dtype=float)
    finite = np.isfinite(vals)
    scale = np.abs(vals[finite]).max() if finite.any() else 0.0
    scale_r = np.abs(rs[finite]).max() if finite.any() else 1.0
    roots = []
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        if a == 0:
            roots.append(float(rs[i]))
        elif a * b < 0:
            roots.append(brentq(g, float(rs[i]), float(rs[i + 1]), xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                maxiter=500))
    if finite.any() and vals[-1] == 0:
        roots.append(float(rs[-1]))
    return sorted(set(roots)), vals, finite, scale, scale_r


def sphere_solutions(speed: SpeedFunction, r_max: Optional[float] = None) -> SphereReport:
    """Every sphere (centred at the origin when lam != 0) solving the soliton equation."""
    L = _length_scale(speed)
    r_max = DEFAULTS["r_max_factor"] * L if r_max is None else r_max
    r_min = L / DEFAULTS["r_max_factor"]
    n = DEFAULTS["sphere_scan_points"]

    if speed.lam == 0:
        roots, *_ = _scan_roots(lambda R: float(speed(2.0 / R, 0.0)), r_min, r_max, n)
        sols = [SphereSolution(R, False, -float(speed(2.0 / R, 0.0)), "root-solve") for R in roots]
        note = "lam = 0: stationary (Weingarten) case, any centre"
        try:
            if all(float(speed(2.0 / R, 0.0)) == 0 for R in (r_min, L, r_max)):
                return SphereReport([], any_radius=True, weingarten=True, note=note + ", any radius")
        except DomainError:
            pass
        return SphereReport(sols, weingarten=True, note=note)

    def g(R):
        return radius_equation(speed, R)

    try:
        R = closed_form_radius(speed)
        res = g(R)
        if abs(res) <= 1e-10 * max(1.0, abs(speed.lam * R)):
            return SphereReport([SphereSolution(R, True, res, "closed-form")])
    except (ArgError, DomainError):
        pass

    roots, vals, finite, scale, scale_r = _scan_roots(g, r_min, r_max, n)
    # identically vanishing g: every radius is a sphere
    if finite.all() and np.all(np.abs(vals) <= 1e-12 * max(1.0, abs(speed.lam) * scale_r)):
        return SphereReport([], any_radius=True, note="lam R = Psi(2/R, 0) holds for every R > 0")
    sols = [SphereSolution(R, True, g(R), "root-solve") for R in roots]
    return SphereReport(sols, note="" if sols else "no positive radius")


def sphere_radius(speed: SpeedFunction) -> Optional[SphereSolution]:
    """The sphere solution (smallest radius if several), or None when none exists."""
    rep = sphere_solutions(speed)
    return rep.solutions[0] if rep.solutions else None


def verify_sphere(speed: SpeedFunction, R: float, n: int = 50) -> float:
    """Max |soliton residual| along gamma = sqrt(R^2 - x^2) at ``n`` abscissae in (0, R)."""
    if not R > 0:
        raise ArgError("R must be positive")
    worst = 0.0
    for x in R * 0.95 * (np.arange(n) + 0.5) / n:
        x = float(x)
        g = math.sqrt(R * R - x * x)
        jet = GraphJet(x, g, -x / g, -R * R / g ** 3)
        worst = max(worst, abs(residual(speed, None, jet)))
    return worst
