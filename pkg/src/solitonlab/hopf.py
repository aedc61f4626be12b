"""Isothermal coordinates, the Hopf differential, and finite-difference checks.

A meridian (x(s), y(s)) with tangent angle phi, dphi/ds = -k2, becomes
isothermal under du = ds/x: the surface X(u, theta) = (x cos theta, x sin theta, y)
then has metric x^2 (du^2 + dtheta^2), so rho = x^2.

The checks difference the embedding up to third order in u.  In double
precision the rounding floor of a third difference at h = 1e-3 is near 1e-7,
which would swamp the O(h^2) truncation error we want to observe, so meridians
are integrated in extended precision (numpy.longdouble) on a uniform u grid
and all differences are taken in that precision.  Theta derivatives are exact.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .defaults import DEFAULTS
from .errors import ArgError, DomainError
from .soliton import ProfileCurve, solve_k2
from .speed import SpeedFunction

LD = np.longdouble
PI = LD(4) * np.arctan(LD(1))
MARGIN = 3
# Patches stop short of the axis: u diverges there, so a state with
# x < AXIS_REL * x(0) counts as touching it.
AXIS_REL = 1e-6


# ---------------------------------------------------------------------------
# meridians


class Meridian:
    """A profile curve described by its meridian curvature k2 as a function of state."""

    name = "meridian"

    def initial_state(self):
        raise NotImplementedError

    def k2(self, x, y, phi):
        raise NotImplementedError


@dataclass
class SphereMeridian(Meridian):
    R: float = 1.0
    name = "sphere"

    def initial_state(self):
        return LD(self.R), LD(0), -PI / 2

    def k2(self, x, y, phi):
        return LD(1) / LD(self.R)


@dataclass
class CylinderMeridian(Meridian):
    r: float = 1.0
    name = "cylinder"

    def initial_state(self):
        return LD(self.r), LD(0), -PI / 2

    def k2(self, x, y, phi):
        return LD(0)


@dataclass
class EllipsoidMeridian(Meridian):
    """x = a sin t, y = c cos t; starts at the equator."""

    a: float = 1.0
    c: float = 2.0
    name = "ellipsoid"

    def initial_state(self):
        return LD(self.a), LD(0), -PI / 2

    def k2(self, x, y, phi):
        a, c = LD(self.a), LD(self.c)
        q = (a * y / c) ** 2 + (c * x / a) ** 2
        return a * c / q ** LD(1.5)


@dataclass
class SolitonMeridian(Meridian):
    """Meridian of a soliton through the state (x0, y0, phi0).

    k2 solves Psi(k1 + k2, (k1 - k2)^2) + lam (x sin phi - y cos phi) = 0 with
    k1 = -sin(phi)/x: a double precision bracketed solve seeds Newton's method
    in extended precision, and later solves continue from the previous root.
    """

    speed: SpeedFunction = None
    x0: float = 1.0
    y0: float = 0.0
    phi0: float = 0.0
    name = "soliton"
    _last: Optional[object] = field(default=None, repr=False)

    def initial_state(self):
        return LD(self.x0), LD(self.y0), LD(self.phi0)

    def k2(self, x, y, phi):
        if not x > 0:
            raise DomainError("meridian reached the axis")
        sp = self.speed
        lam = LD(sp.lam)
        s, c = np.sin(phi), np.cos(phi)
        k1 = -s / x
        sup = lam * (x * s - y * c)
        if self._last is None:
            k, _ = solve_k2(sp, None, float(x), float(y), float(phi), float(k1))
            k = LD(k)
        else:
            k = self._last
        scale = abs(k1) + abs(k) + LD(1) / x
        for _ in range(30):
            d = k1 - k
            r = sp(k1 + k, d * d) + sup
            g1, g2 = sp.grad(k1 + k, d * d)
            dr = g1 - 2 * d * g2
            if dr == 0:
                raise DomainError("dPsi/dk2 vanished in the extended precision solve")
            step = r / dr
            k = k - step
            if abs(step) <= 4 * np.finfo(LD).eps * scale:
                break
        self._last = k
        return k


# ---------------------------------------------------------------------------
# patch construction


@dataclass
class HopfPatch:
    """Samples of an isothermal rotational patch on a uniform u grid.

    The public arrays (u_grid, rho, P_re, P_im, H, K) cover the interior
    [u_lo, u_hi]; the extended-precision state arrays carry MARGIN extra
    points on each side for the difference stencils.
    """

    h: float
    u_lo: float
    u_hi: float
    u_all: np.ndarray
    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    name: str = ""
    _P: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def interior(self) -> slice:
        return slice(MARGIN, len(self.u_all) - MARGIN)

    @property
    def u_grid(self) -> np.ndarray:
        return self.u_all[self.interior].astype(float)

    @property
    def rho(self) -> np.ndarray:
        return (self.x[self.interior] ** 2).astype(float)

    @property
    def H(self) -> np.ndarray:
        return (self.k1 + self.k2)[self.interior].astype(float)

    @property
    def K(self) -> np.ndarray:
        return (self.k1 * self.k2)[self.interior].astype(float)

    @property
    def P_re(self) -> np.ndarray:
        return hopf_differential(self)[0]

    @property
    def P_im(self) -> np.ndarray:
        return hopf_differential(self)[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u", "rho", "P_re", "P_im", "H", "K"])
        P_re, P_im = hopf_differential(self)
        for row in zip(self.u_grid, self.rho, P_re, P_im, self.H, self.K):
            w.writerow(["%.17g" % float(v) for v in row])
        return buf.getvalue()


def _rhs(meridian, Y):
    x, y, phi = Y
    if not x > 0:
        raise DomainError("patch touches the axis (x <= 0)")
    return np.array([x * np.cos(phi), x * np.sin(phi), -x * meridian.k2(x, y, phi)], dtype=LD)


def _rk4(meridian, Y, du):
    k1 = _rhs(meridian, Y)
    k2 = _rhs(meridian, Y + du / 2 * k1)
    k3 = _rhs(meridian, Y + du / 2 * k2)
    k4 = _rhs(meridian, Y + du * k3)
    return Y + du / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _march(meridian, Y0, h, n, substeps):
    """States at u = k h, k = 0..n (h may be negative)."""
    out = [Y0]
    Y = Y0
    du = LD(h) / substeps
    if isinstance(meridian, SolitonMeridian):
        meridian._last = None
        meridian.k2(*Y0)
    for _ in range(n):
        for _ in range(substeps):
            Y = _rk4(meridian, Y, du)
        if not (Y[0] > AXIS_REL * Y0[0] and np.all(np.isfinite(Y))):
            raise DomainError("patch touches the axis (x <= 0)")
        out.append(Y)
    return out


def _meridian_from_profile(profile: ProfileCurve, seed_x: Optional[float]) -> SolitonMeridian:
    if profile.speed is None:
        raise ArgError("profile carries no speed function; integrate it with soliton.integrate_profile")
    gj = profile.graph_jets()
    if not gj:
        raise ArgError("profile has no graph samples")
    if seed_x is None:
        seed_x = 0.5 * max(j.x for j in gj)
    j = min(gj, key=lambda j: abs(j.x - seed_x))
    return SolitonMeridian(speed=profile.speed, x0=j.x, y0=j.gamma, phi0=math.atan(j.gamma_p))


def isothermal_reparam(source: Union[Meridian, ProfileCurve], h: Optional[float] = None,
                       u_range: tuple = (-0.5, 0.5), substeps: Optional[int] = None,
                       seed_x: Optional[float] = None) -> HopfPatch:
    """Sample X(u, theta) on u = k h covering ``u_range`` (u = 0 at the seed point).

    ``source`` is a Meridian or an integrated ProfileCurve; for the latter the
    soliton equation is re-integrated in extended precision from a seed point of
    the profile (interpolating the double precision samples would put a noise
    floor under the difference checks).
    """
    h = DEFAULTS["hopf_h"] if h is None else h
    substeps = DEFAULTS["hopf_substeps"] if substeps is None else substeps
    if not h > 0:
        raise ArgError("h must be positive")
    u_lo, u_hi = u_range
    if not u_lo <= 0 <= u_hi:
        raise ArgError("u_range must contain 0 (the seed point)")
    meridian = source if isinstance(source, Meridian) else _meridian_from_profile(source, seed_x)
    Y0 = np.array(meridian.initial_state(), dtype=LD)
    n_hi = int(math.ceil(u_hi / h - 1e-9)) + MARGIN
    n_lo = int(math.ceil(-u_lo / h - 1e-9)) + MARGIN
    fwd = _march(meridian, Y0, h, n_hi, substeps)
    bwd = _march(meridian, Y0, -h, n_lo, substeps)
    states = bwd[:0:-1] + fwd
    S = np.array(states, dtype=LD)
    ks = np.arange(-n_lo, n_hi + 1)
    u_all = ks.astype(LD) * LD(h)
    x, y, phi = S[:, 0], S[:, 1], S[:, 2]
    if isinstance(meridian, SolitonMeridian):
        meridian._last = None
        k2 = []
        for xi, yi, pi in zip(x, y, phi):
            k2.append(meridian.k2(xi, yi, pi))
        k2 = np.array(k2, dtype=LD)
    else:
        k2 = np.array([meridian.k2(a, b, c) for a, b, c in zip(x, y, phi)], dtype=LD)
    k1 = -np.sin(phi) / x
    return HopfPatch(h=float(h), u_lo=float(u_all[MARGIN]), u_hi=float(u_all[-MARGIN - 1]), u_all=u_all,
                     x=x, y=y, phi=phi, k1=k1, k2=k2, name=meridian.name)


# ---------------------------------------------------------------------------
# finite differences (centred, second order; valid on indices 1..n-2)


def _d1(f, h):
    out = np.full_like(f, np.nan)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    return out


def _d2(f, h):
    out = np.full_like(f, np.nan)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / (h * h)
    return out


@dataclass
class _Frame:
    """Embedding derivatives at theta = 0, as arrays of 3-vectors (extended precision)."""

    X: np.ndarray
    Xu: np.ndarray
    Xuu: np.ndarray
    Xt: np.ndarray
    Xtt: np.ndarray
    Xut: np.ndarray
    N: np.ndarray
    Nu: np.ndarray
    Nt: np.ndarray
    rho: np.ndarray
    rho_u: np.ndarray
    II_uu: np.ndarray
    II_tt: np.ndarray
    II_ut: np.ndarray


def _frame(p: HopfPatch) -> _Frame:
    h = LD(p.h)
    x, y = p.x, p.y
    zero = np.zeros_like(x)
    xu, yu = _d1(x, h), _d1(y, h)
    xuu, yuu = _d2(x, h), _d2(y, h)
    X = np.stack([x, zero, y], axis=1)
    Xu = np.stack([xu, zero, yu], axis=1)
    Xuu = np.stack([xuu, zero, yuu], axis=1)
    Xt = np.stack([zero, x, zero], axis=1)
    Xtt = np.stack([-x, zero, zero], axis=1)
    Xut = np.stack([zero, xu, zero], axis=1)
    cross = np.cross(Xt, Xu)
    N = cross / np.sqrt(np.sum(cross * cross, axis=1))[:, None]
    Nu = np.stack([_d1(N[:, i], h) for i in range(3)], axis=1)
    Nt = np.stack([zero, N[:, 0], zero], axis=1)
    rho = x * x
    dot = lambda a, b: np.sum(a * b, axis=1)
    return _Frame(X, Xu, Xuu, Xt, Xtt, Xut, N, Nu, Nt, rho, _d1(rho, h),
                  dot(Xuu, N), dot(Xtt, N), dot(Xut, N))


def _P(p: HopfPatch) -> np.ndarray:
    if p._P is None:
        f = _frame(p)
        p._P = (f.II_uu - f.II_tt - 2j * f.II_ut) / 4
    return p._P


def hopf_differential(patch: HopfPatch) -> tuple[np.ndarray, np.ndarray]:
    """P = (II(X_u, X_u) - II(X_theta, X_theta) - 2i II(X_u, X_theta)) / 4 on the interior."""
    P = _P(patch)[patch.interior]
    return np.real(P).astype(float), np.imag(P).astype(float)


def _max(a) -> float:
    a = np.asarray(a)
    return float(np.max(a)) if a.size else 0.0


def verify_modulus_identity(patch: HopfPatch) -> float:
    """max | |P|^2 - rho^2 (H^2 - 4K) / 16 | / (1 + |P|^2)."""
    sl = patch.interior
    P = _P(patch)[sl]
    rho = (patch.x ** 2)[sl]
    x2 = ((patch.k1 - patch.k2) ** 2)[sl]
    P2 = np.abs(P) ** 2
    return _max(np.abs(P2 - rho * rho * x2 / 16) / (1 + P2))


def verify_pz_identity(patch: HopfPatch) -> float:
    """max | P_u / 2 - rho H_u / 8 |, i.e. dP/dzbar = (rho/4) H_z for u-only dependence."""
    h = LD(patch.h)
    P = _P(patch)
    Pu = _d1(np.real(P), h) + 1j * _d1(np.imag(P), h)
    H = patch.k1 + patch.k2
    Hu = _d1(H, h)
    rho = patch.x ** 2
    sl = patch.interior
    return _max(np.abs(Pu[sl] / 2 - rho[sl] * Hu[sl] / 8))


def structure_defects(patch: HopfPatch) -> dict:
    """Max defects of the Gauss and Weingarten equations in z = u + i theta."""
    f = _frame(patch)
    sl = patch.interior
    P = _P(patch)
    H = (patch.k1 + patch.k2)[:, None]
    rho = f.rho[:, None]
    rho_z = (f.rho_u / 2)[:, None]
    Pc = P[:, None]
    Xz = (f.Xu - 1j * f.Xt) / 2
    Xzb = (f.Xu + 1j * f.Xt) / 2
    Xzz = (f.Xuu - 2j * f.Xut - f.Xtt) / 4
    Xzbzb = (f.Xuu + 2j * f.Xut - f.Xtt) / 4
    Xzzb = (f.Xuu + f.Xtt) / 4
    Nz = (f.Nu - 1j * f.Nt) / 2
    Nzb = (f.Nu + 1j * f.Nt) / 2
    N = f.N
    norm = lambda v: np.sqrt(np.sum(np.abs(v[sl]) ** 2, axis=1))
    return {
        "X_zz": _max(norm(Xzz - (rho_z / rho) * Xz - Pc * N)),
        "X_zzbar": _max(norm(Xzzb - (rho / 4) * H * N)),
        "X_zbarzbar": _max(norm(Xzbzb - (np.conj(rho_z) / rho) * Xzb - np.conj(Pc) * N)),
        "N_z": _max(norm(Nz + H / 2 * Xz + (2 / rho) * Pc * Xzb)),
        "N_zbar": _max(norm(Nzb + (2 / rho) * np.conj(Pc) * Xz + H / 2 * Xzb)),
    }


def verify_structure_equations(patch: HopfPatch) -> float:
    return max(structure_defects(patch).values())


def verify_isothermal(patch: HopfPatch) -> float:
    """max(| |X_u|^2 - |X_theta|^2 |, |<X_u, X_theta>|)."""
    f = _frame(patch)
    sl = patch.interior
    dot = lambda a, b: np.sum(a[sl] * b[sl], axis=1)
    return max(_max(np.abs(dot(f.Xu, f.Xu) - dot(f.Xt, f.Xt))), _max(np.abs(dot(f.Xu, f.Xt))))


def verify_xtop_identity(patch: HopfPatch) -> float:
    """max | sqrt(|X|^2 - <X,N>^2) - (2/sqrt(rho)) |<X, X_z>| |."""
    f = _frame(patch)
    sl = patch.interior
    x, y, phi = patch.x[sl], patch.y[sl], patch.phi[sl]
    tangential = np.abs(x * np.cos(phi) + y * np.sin(phi))
    Xz = (f.Xu - 1j * f.Xt) / 2
    xz = np.sum(f.X[sl] * Xz[sl], axis=1)
    return _max(np.abs(tangential - 2 / np.sqrt(f.rho[sl]) * np.abs(xz)))


def phi0_diagnostic(patch: HopfPatch, floor: float = 1e-12) -> Optional[float]:
    """max |dP/dzbar| / |P| over samples with |P| > floor (None if P vanishes).

    A bounded value is what the vanishing argument for P needs; this is a
    printout, not a pass/fail check.
    """
    h = LD(patch.h)
    P = _P(patch)
    Pu = _d1(np.real(P), h) + 1j * _d1(np.imag(P), h)
    sl = patch.interior
    mask = np.abs(P[sl]) > floor
    if not mask.any():
        return None
    return _max(np.abs(Pu[sl][mask] / 2) / np.abs(P[sl][mask]))


def identity_suite(patch: HopfPatch) -> dict:
    out = {"modulus": verify_modulus_identity(patch), "pz": verify_pz_identity(patch),
           "structure": verify_structure_equations(patch), "isothermal": verify_isothermal(patch),
           "xtop": verify_xtop_identity(patch)}
    out.update({"structure_" + k: v for k, v in structure_defects(patch).items()})
    return out


@dataclass
class ConvergenceReport:
    name: str
    h: float
    defects: dict
    defects_half: dict
    ratios: dict
    passed: dict

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {"name": self.name, "h": self.h, "defects": self.defects, "defects_half": self.defects_half,
                "ratios": self.ratios, "passed": self.passed, "ok": self.ok}


def convergence_check(source, h: Optional[float] = None, u_range: tuple = (-0.5, 0.5),
                      max_defect: Optional[float] = None, min_ratio: Optional[float] = None,
                      floor: Optional[float] = None, **kw) -> ConvergenceReport:
    """Identity defects at h and h/2.

    A check passes when its defect at h is at most ``max_defect`` and it shrinks
    by ``min_ratio`` or more under halving.  Defects already below ``floor``
    (rounding level, e.g. the cylinder where P and H are constant) are exempt
    from the ratio test.
    """
    h = DEFAULTS["hopf_h"] if h is None else h
    max_defect = DEFAULTS["hopf_max_defect"] if max_defect is None else max_defect
    min_ratio = DEFAULTS["hopf_min_ratio"] if min_ratio is None else min_ratio
    floor = DEFAULTS["hopf_floor"] if floor is None else floor
    p1 = isothermal_reparam(source, h=h, u_range=u_range, **kw)
    p2 = isothermal_reparam(source, h=h / 2, u_range=u_range, **kw)
    d1, d2 = identity_suite(p1), identity_suite(p2)
    ratios, passed = {}, {}
    for k in d1:
        ratios[k] = d1[k] / d2[k] if d2[k] > 0 else math.inf
        passed[k] = bool(d1[k] <= max_defect and (d1[k] <= floor or ratios[k] >= min_ratio))
    return ConvergenceReport(p1.name, h, d1, d2, ratios, passed)
