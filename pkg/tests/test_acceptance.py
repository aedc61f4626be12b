"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import filecmp
import math
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from solitonlab.analysis import axis_profile, fit_window, parabolicity_scan, pinch, taylor_fit
from solitonlab.hopf import CylinderMeridian, EllipsoidMeridian, SphereMeridian, convergence_check
from solitonlab.soliton import SolitonProblem, integrate_profile, series_c, solve_gamma_pp
from solitonlab.speed import (GaussPower, HarmonicMeanPower, MeanCurvature, NormASquared, PowerMean,
                              QuadraticHK)
from solitonlab.sphere import sphere_radius, verify_sphere

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def say(capsys):
    def emit(n, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'} ({elapsed:.2f} s) {detail}")
    return emit


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_1_sphere_radii(say):
    t0 = time.perf_counter()
    rows = []  # (label, computed, expected)
    for lam in (0.5, 1.0, 2.0):
        rows.append((f"H lam={lam}", sphere_radius(MeanCurvature(lam=lam)).R, math.sqrt(2 / lam)))
        for beta in (2.0, 3.0, Fraction(1, 3)):
            b = float(beta)
            rows.append((f"H^{beta} lam={lam}", sphere_radius(PowerMean(power=beta, lam=lam)).R,
                         (2 ** b / lam) ** (1 / (b + 1))))
        for alpha in (0.1, 0.2):
            rows.append((f"K^{alpha} lam={lam}", sphere_radius(GaussPower(alpha=alpha, lam=lam)).R,
                         lam ** (-1 / (2 * alpha + 1))))
        for m, n in ((1, 2), (3, 2)):
            alpha = Fraction(m, 2 * n - 1)
            sol = sphere_radius(HarmonicMeanPower(alpha=alpha, lam=lam))
            # the stated harmonic-mean radius (2^alpha lam)^(-(2n-1)/(m-2n+1))
            try:
                expected = (2 ** float(alpha) * lam) ** (-(2 * n - 1) / (m - 2 * n + 1))
            except ZeroDivisionError:
                expected = math.nan
            rows.append((f"(K/H)^{alpha} (m,n)=({m},{n}) lam={lam}", sol.R if sol else math.nan, expected))
    elapsed = time.perf_counter() - t0
    bad = [(lab, got, exp) for lab, got, exp in rows if not (math.isfinite(exp) and rel(got, exp) <= 1e-10)]
    ok = not bad and elapsed < 1.0
    detail = f"{len(rows) - len(bad)}/{len(rows)} radii within 1e-10"
    if bad:
        detail += "; mismatches: " + ", ".join(f"{lab}: got {got:.12g} expected {exp:.12g}" for lab, got, exp in bad)
    say(1, ok, detail, elapsed)
    assert ok, detail


def test_criterion_2_degenerate_harmonic(say):
    t0 = time.perf_counter()
    f = HarmonicMeanPower.from_mn(1, 1, lam=0.5)
    res = {R: verify_sphere(f, R) for R in (0.5, 1.0, 3.0)}
    elapsed = time.perf_counter() - t0
    ok = all(v <= 1e-12 for v in res.values())
    detail = ", ".join(f"R={R}: residual {v:.3e}" for R, v in res.items())
    say(2, ok, detail, elapsed)
    assert ok, detail


@pytest.mark.parametrize("name,speed,R", [("mean-curvature", MeanCurvature(lam=1.0), SQRT2),
                                          ("gauss-power-1", GaussPower(alpha=1.0, lam=1.0), 1.0)])
def test_criterion_3_exact_solution_integration(say, name, speed, R):
    t0 = time.perf_counter()
    rep = integrate_profile(SolitonProblem(speed=speed, b=R, x_max=0.9 * R, tol=1e-9))
    elapsed = time.perf_counter() - t0
    jets = [j for j in rep.profile.graph_jets() if rep.problem.x_start <= j.x <= 0.9 * R]
    err = max(abs(j.gamma - math.sqrt(R * R - j.x ** 2)) for j in jets)
    covered = jets[-1].x >= 0.9 * R * (1 - 1e-12)
    ok = err <= 1e-7 and covered and elapsed < 10.0
    say(3, ok, f"{name}: sup error {err:.3e} over [{rep.problem.x_start:g}, {0.9 * R:g}]", elapsed)
    assert ok


def test_criterion_4_series_coefficients(say):
    t0 = time.perf_counter()
    fams = [MeanCurvature(), PowerMean(power=3.0), GaussPower(alpha=0.2), NormASquared(),
            HarmonicMeanPower(alpha=1.0)]
    worst_a3 = worst_c = 0.0
    for f in fams:
        for b in (0.5, 1.0, 2.5):
            prof = axis_profile(f, b)
            c = series_c(f, b)
            c_fit, a3, _ = taylor_fit(prof, n_samples=10, degree=6, window=fit_window(f, b))
            worst_a3 = max(worst_a3, abs(a3) / abs(c))
            worst_c = max(worst_c, abs(c_fit - c) / abs(c))
    elapsed = time.perf_counter() - t0
    ok = worst_a3 <= 1e-6 and worst_c <= 1e-6 and elapsed < 30.0
    say(4, ok, f"15 runs: max |a3|/|c| = {worst_a3:.2e}, max |c_fit - c|/|c| = {worst_c:.2e}", elapsed)
    assert ok


def test_criterion_5_hopf_identities(say):
    t0 = time.perf_counter()
    soliton = integrate_profile(SolitonProblem(speed=MeanCurvature(), b=0.5, x_max=5.0, tol=1e-10)).profile
    cases = [("sphere", SphereMeridian(R=1.0), (-0.88, 0.88)),
             ("cylinder", CylinderMeridian(r=1.0), (-1.0, 1.0)),
             ("ellipsoid", EllipsoidMeridian(a=1.0, c=2.0), (-0.8, 0.8)),
             ("soliton b=0.5", soliton, (-0.25, 0.25))]
    lines, ok = [], True
    for name, src, u_range in cases:
        rep = convergence_check(src, h=1e-3, u_range=u_range, max_defect=1e-5, min_ratio=3.5)
        for key in ("modulus", "pz", "structure"):
            ok &= rep.passed[key]
            lines.append(f"{name}/{key}: {rep.defects[key]:.2e} (ratio {rep.ratios[key]:.2f})")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 30.0
    say(5, ok, "; ".join(lines), elapsed)
    assert ok


def test_criterion_6_pinching_dichotomy(say):
    t0 = time.perf_counter()
    f = MeanCurvature(lam=1.0)
    sph = pinch(f, SQRT2)
    ok = sph.sphere_coincident
    lines = [f"b=sqrt2 coincident={sph.sphere_coincident}"]
    for b in (0.5, 2.5):
        r = pinch(f, b)
        eps = [e for _, e in r.epsilon_trend]  # sample sets reaching closer to the axis
        shrinking = eps[-1] < eps[0] and eps[-1] < 1e-3 * eps[0]
        good = (not r.sphere_coincident and r.ladder_spread is not None and r.ladder_spread <= 0.05
                and abs(r.ftilde_limit) > 0.01 and shrinking)
        ok &= good
        lines.append(f"b={b} coincident={r.sphere_coincident} F(0)={r.ftilde_limit:.6g} "
                     f"spread={r.ladder_spread:.2e} eps {eps[0]:.2e} -> {eps[-1]:.2e}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60.0
    say(6, ok, "; ".join(lines), elapsed)
    assert ok


def test_criterion_7_parabolicity_boundaries(say):
    t0 = time.perf_counter()
    out = []
    ok = True
    for name, f, boundary in (("|A|^2", NormASquared(), lambda H: 0.0),
                              ("H^2+K", QuadraticHK(a=1.0, b=1.0), lambda H: -6.0 * H * H)):
        s = parabolicity_scan(f, nH=200, nK=200)
        errs = [abs(K - boundary(H)) for H, K in s.boundary if K is not None]
        worst = max(errs) if errs else math.inf
        ok &= worst <= s.dK and len(errs) > 100
        out.append(f"{name}: {len(errs)} columns, max error {worst:.4f} vs cell {s.dK:.4f}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 10.0
    say(7, ok, "; ".join(out), elapsed)
    assert ok


def test_criterion_8_oracle_equivalence(say):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        x, g, gp = rng.uniform(0.05, 3.0), rng.uniform(-3, 3), rng.uniform(-4, 4)
        w = 1 + gp * gp
        exact = (x * gp - g) * w - gp * w / x  # H = -<X, N> solved for gamma'' with lam = 1
        worst = max(worst, abs(solve_gamma_pp(MeanCurvature(), 1.0, x, g, gp, guess=0.0) - exact))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10
    say(8, ok, f"1000 jets, max abs error {worst:.2e}", elapsed)
    assert ok


def test_criterion_9_determinism(say, tmp_path):
    t0 = time.perf_counter()
    env = dict(os.environ)
    env.pop("SOLITONLAB_TOL", None)
    runs = {
        "sphere.json": ["sphere", "--family", "power-mean", "--power", "1/3", "--lambda", "2"],
        "solve.csv": ["solve", "--family", "mean-curvature", "--b", "0.5"],
        "pinch.json": ["pinch", "--family", "mean-curvature", "--b", "2.5"],
        "verify.json": ["verify", "--profile", "ellipsoid"],
        "scan.csv": ["scan", "--family", "quadratic-hk", "--a", "1", "--b", "1"],
        "shoot.json": ["shoot", "--family", "mean-curvature", "--b-range", "1.3", "1.5", "--samples", "5",
                       "--workers", "2"],
    }
    same = []
    for fname, args in runs.items():
        paths = []
        for k in range(2):
            d = tmp_path / f"run{k}"
            d.mkdir(exist_ok=True)
            p = d / fname
            subprocess.run([sys.executable, "-m", "solitonlab", *args, "--out", str(p)], env=env, check=True,
                           capture_output=True)
            paths.append(p)
        same.append(filecmp.cmp(paths[0], paths[1], shallow=False))
    elapsed = time.perf_counter() - t0
    ok = all(same)
    say(9, ok, f"{sum(same)}/{len(same)} artifacts byte-identical across two runs", elapsed)
    assert ok
