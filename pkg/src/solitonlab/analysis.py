"""Pinching diagnostics near the axis and parabolicity scans.

For a profile leaving the axis at height b, F(x) = Q(x) x tends to a finite
limit as x -> 0.  A non-zero limit means the pinching ratio Q blows up like
1/x, so no epsilon > 0 makes the pinching hypothesis hold; the only way out is
the sphere, where 1 + 2bc = 0 and Q is 0/0 along the whole profile.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .defaults import DEFAULTS
from .errors import ArgError, DomainError
from .rotgeom import GraphJet, curvature_sample, pinching_epsilon_sup
from .soliton import ProfileCurve, SolitonProblem, integrate_profile, series_c
from .speed import SpeedFunction, real_power


# ---------------------------------------------------------------------------
# Taylor fit


def fit_window(speed: SpeedFunction, b: float, kappa: float = 0.05) -> float:
    """Default fit window: 0.1 b, shrunk to kappa/(2|c|) for strongly curved caps."""
    c = series_c(speed, b)
    return min(0.1 * b, kappa / (2.0 * abs(c))) if c != 0 else 0.1 * b


def taylor_fit(profile: ProfileCurve, n_samples: int = 10, degree: int = 4,
               window: Optional[float] = None) -> tuple[float, float, float]:
    """Least-squares fit gamma - b = c x^2 + a3 x^3 + a4 x^4 (+ x^5 ... x^degree).

    Uses the graph samples in (0, window], window defaulting to 0.1 b.  Degrees
    above 4 add nuisance columns that absorb higher Taylor terms; only
    (c, a3, a4) are returned.
    """
    if degree < 4:
        raise ArgError("degree must be at least 4")
    b = profile.b
    window = 0.1 * b if window is None else window
    if window > 0.1 * b * (1 + 1e-12):
        raise ArgError("fit window may not exceed 0.1 b")
    jets = [j for j in profile.graph_jets() if 0 < j.x <= window * (1 + 1e-12)]
    if len(jets) < max(n_samples, degree - 1):
        raise ArgError(f"need {max(n_samples, degree - 1)} samples in (0, {window:g}], have {len(jets)}")
    x = np.array([j.x for j in jets])
    g = np.array([j.gamma for j in jets]) - b
    powers = np.arange(2, degree + 1)
    X = x.max()
    A = (x[:, None] / X) ** powers[None, :]
    coef, *_ = np.linalg.lstsq(A, g, rcond=None)
    coef = coef / X ** powers
    return float(coef[0]), float(coef[1]), float(coef[2])


# ---------------------------------------------------------------------------
# sphere coincidence


@dataclass(frozen=True)
class Coincidence:
    by_c: bool
    by_power: bool
    one_plus_2bc: float
    power_gap: float

    @property
    def agree(self) -> bool:
        return self.by_c == self.by_power


def sphere_coincidence_detail(b: float, speed: SpeedFunction, tol: Optional[float] = None) -> Coincidence:
    lam, beta = speed.lam, speed.beta
    if lam == 0:
        raise ArgError("lam = 0: no sphere-coincidence criterion")
    if not beta:
        raise ArgError("beta must be a non-zero number")
    tol = DEFAULTS["tol_sph"] if tol is None else tol
    c = series_c(speed, b)
    q = 1.0 + 2.0 * b * c
    psi10 = float(speed.psi10())
    lhs = real_power(b, 1.0 + 1.0 / beta)
    rhs = 2.0 * real_power(psi10, 1.0 / beta) / real_power(lam, 1.0 / beta)
    gap = lhs - rhs
    return Coincidence(abs(q) <= tol, abs(gap) <= tol * max(abs(lhs), abs(rhs)), q, gap)


def sphere_coincidence(b: float, speed: SpeedFunction, tol: Optional[float] = None) -> bool:
    """True iff the profile from height b is the sphere (1 + 2bc = 0).

    The equivalent power form b^(1+1/beta) = 2 Psi(1,0)^(1/beta) / lam^(1/beta)
    is evaluated as well.  The two can only disagree within round-off of the
    threshold; then a warning is issued and the 1 + 2bc decision is returned.
    """
    d = sphere_coincidence_detail(b, speed, tol)
    if not d.agree:
        warnings.warn(f"coincidence criteria disagree at b={b!r}: 1+2bc={d.one_plus_2bc:.3e}, "
                      f"power gap={d.power_gap:.3e}", RuntimeWarning, stacklevel=2)
    return d.by_c


# ---------------------------------------------------------------------------
# F-tilde ladder


@dataclass
class PinchReport:
    b: float
    c: float
    c_fit: float
    a3_fit: float
    a4_fit: float
    ftilde_samples: list
    ftilde_limit: Optional[float]
    ftilde_closed: Optional[float]
    ladder_spread: Optional[float]
    epsilon_sup: float
    epsilon_sampled: float
    epsilon_trend: list
    sphere_coincident: bool
    umbilic_ladder: bool
    psi1_min: float
    psi1_flag: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("epsilon_sup", "epsilon_sampled"):
            if math.isinf(d[k]):
                d[k] = "inf"
        d["epsilon_trend"] = [[x, "inf" if math.isinf(e) else e] for x, e in self.epsilon_trend]
        d["ftilde_samples"] = [[x, f] for x, f in self.ftilde_samples]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def ladder_points(x_start: float, factor: float = None, octaves: int = None) -> list[float]:
    factor = DEFAULTS["ladder_factor"] if factor is None else factor
    octaves = DEFAULTS["ladder_octaves"] if octaves is None else octaves
    x0 = factor * x_start
    return [x0 * 2 ** k for k in range(octaves + 1)]


def richardson_limit(values: Sequence[float]) -> float:
    """Extrapolate F(x0 2^k), k = 0..n, to x = 0 assuming an even expansion in x."""
    level = list(values)
    p = 2
    while len(level) > 1:
        f = 2 ** p
        level = [(f * a - b) / (f - 1) for a, b in zip(level, level[1:])]
        p += 2
    return level[0]


def axis_profile(speed: SpeedFunction, b: float, tol: float = 1e-10, x_max: Optional[float] = None,
                 n_fit: int = 40, x_start: Optional[float] = None, **kw) -> ProfileCurve:
    """Integrate from the axis with checkpoints on the fit grid and the F ladder."""
    xs = DEFAULTS["x_start_factor"] * b if x_start is None else x_start
    W = fit_window(speed, b)
    xs = min(xs, W / 100)
    c = series_c(speed, b)
    if x_max is None:
        x_max = 2.0 * max(b, 1.0 / (2.0 * abs(c))) if c else 2.0 * b
    cps = set(np.linspace(W / n_fit, W, n_fit).tolist()) | set(ladder_points(xs))
    cps = sorted(x for x in cps if xs < x < x_max)
    prob = SolitonProblem(speed=speed, b=b, x_start=xs, x_max=x_max, tol=tol, checkpoints=tuple(cps), **kw)
    rep = integrate_profile(prob)
    prof = rep.profile
    prof.report = rep
    prof.x_start = xs
    return prof


# Near the axis x2 = (k1 - k2)^2 is O(x^4), far below the generic umbilic
# threshold, yet |k1 - k2| is still resolved to many digits.  The ladder treats
# a point as umbilic only when |k1 - k2| <= LADDER_UMBILIC_REL |H|.
LADDER_UMBILIC_REL = 1e-8


def _ladder_sample(j, L):
    s = curvature_sample(j, L)
    if s.Q is None and abs(s.k1 - s.k2) > LADDER_UMBILIC_REL * abs(s.H):
        s = replace(s, Q=abs(s.H) * math.sqrt(s.tangential_sq) / abs(s.k1 - s.k2))
    return s


def _ftilde_at(jets_by_x, spline, x, L):
    j = jets_by_x.get(x)
    if j is not None:
        s = _ladder_sample(j, L)
        return None if s.Q is None else s.Q * x
    if spline is None:
        return None
    return float(spline(x))


def ftilde_analysis(profile: ProfileCurve, speed: SpeedFunction, lam: Optional[float] = None,
                    n_fit: int = 10, degree: int = 6) -> PinchReport:
    """F(x) = Q(x) x on a geometric ladder, its limit, and the pinching epsilon."""
    if lam is not None:
        speed = speed.with_lambda(lam)
    lam = speed.lam
    b = profile.b
    c = series_c(speed, b)
    L = 1.0 / (2.0 * abs(c)) if c else b
    notes = []
    window = fit_window(speed, b)
    c_fit, a3_fit, a4_fit = taylor_fit(profile, n_fit, degree=degree, window=window)

    gj = profile.graph_jets()
    if not gj:
        raise ArgError("profile has no graph samples near the axis")
    x_start = getattr(profile, "x_start", gj[0].x)
    ladder = ladder_points(x_start)
    jets_by_x = {}
    for j in gj:
        for x in ladder:
            if abs(j.x - x) <= 1e-12 * x:
                jets_by_x[x] = j
    spline = None
    if len(jets_by_x) < len(ladder):
        notes.append("ladder points interpolated from a cubic spline of Q x")
        xs, fs = [], []
        for j in gj:
            s = _ladder_sample(j, L)
            if s.Q is not None and j.x <= 8 * ladder[-1]:
                xs.append(j.x)
                fs.append(s.Q * j.x)
        if len(xs) >= 4:
            spline = CubicSpline(xs, fs)
    samples = [(x, _ftilde_at(jets_by_x, spline, x, L)) for x in ladder]
    umbilic = any(f is None for _, f in samples)
    coincident = sphere_coincidence(b, speed)

    ftilde_limit = None
    spread = None
    if not umbilic:
        vals = [f for _, f in samples]
        ftilde_limit = richardson_limit(vals)
        if ftilde_limit != 0:
            spread = max(abs(v - ftilde_limit) for v in vals) / abs(ftilde_limit)
    denom = 2.0 * (c ** 3 - a4_fit)
    ftilde_closed = c * (1 + 2 * b * c) / denom if denom != 0 else None

    all_samples = []
    for j in profile.jets:
        try:
            near_axis = isinstance(j, GraphJet) and j.x <= window
            all_samples.append((j.x, _ladder_sample(j, L) if near_axis else curvature_sample(j, L)))
        except DomainError:
            continue
    eps_sampled = pinching_epsilon_sup([s for _, s in all_samples], lam)
    trend = []
    for x_cut in sorted(set(ladder + [j.x for j in gj[:: max(1, len(gj) // 8)]]), reverse=True):
        sub = [s for x, s in all_samples if x >= x_cut * (1 - 1e-12)]
        trend.append((x_cut, pinching_epsilon_sup(sub, lam)))
    eps_sup = eps_sampled if coincident else 0.0

    psi1 = []
    for _, s in all_samples:
        try:
            psi1.append(abs(float(speed.grad(s.H, s.x2)[0])))
        except DomainError:
            continue
    psi1_min = min(psi1, default=math.nan)
    psi1_ref = abs(float(speed.grad(2.0 * abs(c) * 2, 0.0)[0])) if c else 1.0
    psi1_flag = bool(psi1) and psi1_min <= 1e-8 * max(psi1_ref, 1e-300)
    if psi1_flag:
        notes.append("Psi_1 comes close to 0 along the profile")

    return PinchReport(b=b, c=c, c_fit=c_fit, a3_fit=a3_fit, a4_fit=a4_fit, ftilde_samples=samples,
                       ftilde_limit=ftilde_limit, ftilde_closed=ftilde_closed, ladder_spread=spread,
                       epsilon_sup=eps_sup, epsilon_sampled=eps_sampled, epsilon_trend=trend,
                       sphere_coincident=coincident, umbilic_ladder=umbilic, psi1_min=psi1_min,
                       psi1_flag=psi1_flag, notes=notes)


def pinch(speed: SpeedFunction, b: float, tol: float = 1e-10, **kw) -> PinchReport:
    """Integrate from height b and run the F ladder analysis."""
    return ftilde_analysis(axis_profile(speed, b, tol=tol, **kw), speed)


# ---------------------------------------------------------------------------
# parabolicity


PARABOLIC, WEAK, NON_PARABOLIC, DOMAIN_ERROR, EXCLUDED = "parabolic", "weak", "non-parabolic", "domain-error", "excluded"


@dataclass
class ScanResult:
    H: np.ndarray
    K: np.ndarray
    indicator: np.ndarray  # shape (len(K), len(H)); NaN where not evaluated
    classes: np.ndarray
    boundary: list  # (H, K where the column turns parabolic) or (H, None)

    @property
    def dK(self) -> float:
        return float(self.K[1] - self.K[0]) if len(self.K) > 1 else 0.0

    def rows(self):
        for i, k in enumerate(self.K):
            for j, h in enumerate(self.H):
                yield float(h), float(k), float(self.indicator[i, j]), str(self.classes[i, j])


def parabolicity_scan(speed: SpeedFunction, H_range=(-1.0, 1.0), K_range=(-8.0, 1.0), nH: int = 200,
                      nK: int = 200, weak_tol: float = 1e-12) -> ScanResult:
    """Classify the sign of Psi_1^2 - 4 x2 Psi_2^2 on an (H, K) grid.

    Cells with H^2 - 4K < 0 have no real principal curvatures and are marked
    excluded; cells raising DomainError are kept and marked as such.
    """
    if nH < 1 or nK < 2:
        raise ArgError("grid needs nH >= 1 and nK >= 2")
    Hs = np.linspace(H_range[0], H_range[1], nH)
    Ks = np.linspace(K_range[0], K_range[1], nK)
    ind = np.full((nK, nH), np.nan)
    cls = np.empty((nK, nH), dtype=object)
    for j, h in enumerate(Hs):
        for i, k in enumerate(Ks):
            x2 = h * h - 4 * k
            if x2 < 0:
                cls[i, j] = EXCLUDED
                continue
            try:
                v = float(speed.parabolicity(float(h), float(x2)))
            except (DomainError, ZeroDivisionError):
                cls[i, j] = DOMAIN_ERROR
                continue
            ind[i, j] = v
            p1 = speed.grad(float(h), float(x2))
            scale = float(p1[0]) ** 2 + 4 * x2 * float(p1[1]) ** 2
            if abs(v) <= weak_tol * max(scale, 1e-300):
                cls[i, j] = WEAK
            else:
                cls[i, j] = PARABOLIC if v > 0 else NON_PARABOLIC
    boundary = []
    for j, h in enumerate(Hs):
        kb = None
        for i in range(nK - 1):
            a, b = cls[i, j], cls[i + 1, j]
            if a == NON_PARABOLIC and b in (PARABOLIC, WEAK):
                kb = float(0.5 * (Ks[i] + Ks[i + 1])) if b == PARABOLIC else float(Ks[i + 1])
                break
            if a == WEAK and b == PARABOLIC and i > 0 and cls[i - 1, j] == NON_PARABOLIC:
                kb = float(Ks[i])
                break
        boundary.append((float(h), kb))
    return ScanResult(Hs, Ks, ind, cls, boundary)
