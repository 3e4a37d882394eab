"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -s``; the lines are also
collected in the terminal summary of any pytest run.
"""

import time

import numpy as np
import pytest

from mcac.acsolver import SimConfig, prepare_initial, run
from mcac.analysis import (
    ansatz_family,
    ansatz_residual,
    comparison_witness,
    convergence_study,
    inequality_search,
    interpolation_ratio,
)
from mcac.errors import SolvabilityError
from mcac.frontflow import FrontCurve, RadialState, evolve_front, radial_integrate, radial_rhs
from mcac.geometry import Circle, Ellipse, GridSpec, signed_distance
from mcac.potential import make_cubic
from mcac.profile import compute_theta0, compute_theta1, cubic_profile, solve_linearized
from mcac.spectrum import (
    ProfileAnsatz,
    assemble,
    consecutive_ratios,
    dense_oracle,
    interval_ansatz,
    min_rayleigh,
    sweep,
)

pytestmark = pytest.mark.slow

SQ2 = np.sqrt(2.0)
LAMBDA0 = SQ2 / (3 * 0.7)
EPS_SWEEP = [0.08, 0.04, 0.02]


def fmt(values):
    return "[" + ", ".join(f"{v:.4g}" for v in values) + "]"


def orders(errs):
    return [float(np.log2(a / b)) for a, b in zip(errs, errs[1:])]


@pytest.fixture(scope="module")
def circle_study():
    t0 = time.perf_counter()
    rows = convergence_study(Circle(0.7), EPS_SWEEP, 0.2, order=0)
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="module")
def ellipse_study():
    t0 = time.perf_counter()
    rows = convergence_study(Ellipse(1.2, 0.8), EPS_SWEEP, 0.1, order=0)
    return rows, time.perf_counter() - t0


def test_criterion_01_profile(criterion):
    t0 = time.perf_counter()
    p = compute_theta0(make_cubic())
    c = compute_theta1(p)
    elapsed = time.perf_counter() - t0
    sig = abs(p.sigma - 3 / SQ2)
    tanh_err = float(np.max(np.abs(p.theta0 - np.tanh(p.grid / SQ2))))
    ends = max(abs(c.theta1[0] - 0.5), abs(c.theta1[-1] - 0.5))
    orth = abs(c.orthogonality())
    ok = sig <= 1e-6 and tanh_err <= 1e-8 and ends <= 1e-4 and orth <= 1e-8 and elapsed < 5
    assert criterion(
        1, "profile", ok,
        f"|sigma-3/sqrt2|={sig:.1e} sup|theta0-tanh|={tanh_err:.1e} "
        f"|theta1(±12)-0.5|={ends:.1e} orth={orth:.1e} t={elapsed:.2f}s",
    )


def test_criterion_02_solvability(criterion):
    t0 = time.perf_counter()
    p, _ = cubic_profile()
    accepted = []
    for h in (1 - p.sigma * p.dtheta0, -p.well.f(p.theta0)):
        try:
            solve_linearized(p, h)
            accepted.append(True)
        except SolvabilityError:
            accepted.append(False)
    try:
        solve_linearized(p, p.dtheta0)
        integral = None
    except SolvabilityError as err:
        integral = err.integral
    elapsed = time.perf_counter() - t0
    ok = all(accepted) and integral is not None and abs(integral - 2 / p.sigma) <= 1e-6 and elapsed < 5
    assert criterion(
        2, "solvability gate", ok,
        f"accepted={accepted} rejected integral={integral!r} (2/sigma={2 / p.sigma:.10f}) t={elapsed:.2f}s",
    )


def test_criterion_03_mass_energy(criterion, cubic):
    t0 = time.perf_counter()
    p, c = cubic
    eps = 0.04
    grid = GridSpec.box(256, 256, 2.56, 2.56)
    u0 = prepare_initial(signed_distance(Circle(0.7), grid), p, c, eps)
    cfg = SimConfig(eps=eps, T=2000 * 0.1 * eps**2, grid=grid, record_every=1)
    traj, _ = run(cfg, u0, contours=False)
    elapsed = time.perf_counter() - t0
    steps = len(traj.t) - 1
    drift = float(np.max(np.abs(np.asarray(traj.mass) - traj.mass[0])))
    rise = traj.max_energy_increase()
    ok = steps == 2000 and drift <= 1e-12 and rise <= 1e-10 and elapsed < 180
    assert criterion(
        3, "mass conservation", ok,
        f"steps={steps} |mean drift|={drift:.1e} max energy increase={rise:.1e} t={elapsed:.1f}s",
    )


def test_criterion_04_flow_invariants(criterion):
    t0 = time.perf_counter()
    circle, _, _ = evolve_front(FrontCurve.from_shape(Circle(0.7), 256), 1.0)
    dev = float(np.max(np.abs(np.hypot(*circle.markers.T) - 0.7)))
    fin, diag, _ = evolve_front(FrontCurve.from_shape(Ellipse(1.2, 0.8), 256), 2.0, record_every=500)
    elapsed = time.perf_counter() - t0
    area = np.asarray(diag.area)
    area_drift = float(np.max(np.abs(area / area[0] - 1)))
    r = np.hypot(*(fin.markers - fin.markers.mean(axis=0)).T)
    r_err = float(np.max(np.abs(r - np.sqrt(0.96))))
    spread = float(np.max(np.abs(fin.curvature() - 2 * np.pi / fin.length)))
    ok = dev <= 1e-4 and area_drift <= 1e-4 and r_err <= 1e-3 and spread <= 1e-2 and elapsed < 120
    assert criterion(
        4, "flow invariants", ok,
        f"circle dev={dev:.1e} ellipse area drift={area_drift:.1e} |r-0.979796|={r_err:.1e} "
        f"kappa spread={spread:.1e} t={elapsed:.1f}s",
    )


def test_criterion_05_radial(criterion):
    t0 = time.perf_counter()
    s = RadialState(2, [0.5, 1.0])
    d0 = radial_rhs(s)
    d_err = float(np.max(np.abs(d0 - [-2.0, -1.0])))
    res = radial_integrate(s, 1.0, 1e-4)
    area = np.asarray(res.diagnostics.area)
    area_drift = float(np.max(np.abs(area / (0.75 * np.pi) - 1)))
    sphere = radial_integrate(RadialState(3, [1.0]), 1.0, 1e-3)
    s_dev = float(np.max(np.abs(sphere.radii - 1.0)))
    elapsed = time.perf_counter() - t0
    ok = d_err <= 1e-9 and res.collapse is not None and area_drift <= 1e-8 and s_dev <= 1e-10 and elapsed < 10
    assert criterion(
        5, "radial ODE", ok,
        f"|dR-(-2,-1)|={d_err:.1e} collapse t={res.collapse.t if res.collapse else None} "
        f"area drift={area_drift:.1e} sphere dev={s_dev:.1e} t={elapsed:.2f}s",
    )


def test_criterion_06_sharp_interface(criterion, circle_study, ellipse_study):
    crow, ct = circle_study
    erow, et = ellipse_study
    cerr = [r.front_err for r in crow]
    eerr = [r.front_err for r in erow]
    co, eo = orders(cerr), orders(eerr)
    circle_ok = all(b < a for a, b in zip(cerr, cerr[1:])) and min(co) >= 0.9
    ellipse_ok = all(b < a for a, b in zip(eerr, eerr[1:])) and min(eo) >= 0.8
    ok = circle_ok and ellipse_ok and ct + et < 600
    assert criterion(
        6, "sharp-interface convergence", ok,
        f"circle err={fmt(cerr)} orders={fmt(co)} (need >=0.9); "
        f"ellipse err={fmt(eerr)} orders={fmt(eo)} (need >=0.8); t={ct + et:.0f}s",
    )


def test_criterion_07_multiplier(criterion, circle_study):
    rows, _ = circle_study
    _, diag, _ = evolve_front(FrontCurve.from_shape(Circle(0.7), 256), 0.01)
    lam0 = diag.lambda0[0]
    lerr = [r.lambda_err for r in rows]
    lo = orders(lerr)
    ok = abs(lam0 - 0.673435) <= 1e-6 and all(b < a for a, b in zip(lerr, lerr[1:])) and min(lo) >= 0.8
    assert criterion(
        7, "multiplier consistency", ok,
        f"lambda0={lam0:.7f} sup|lambda_eps-lambda0|={fmt(lerr)} orders={fmt(lo)} (need >=0.8)",
    )


def test_criterion_08_spectrum(criterion, well):
    t0 = time.perf_counter()
    eps_list = [0.1, 0.05, 0.025]
    reports = sweep(eps_list)
    zm = [r.lam_min_zero_mean for r in reports]
    in_band = all(-1 <= v <= 1 for v in zm)
    ratios = consecutive_ratios(reports)
    ratio_ok = all(abs(r) <= 2 for r in ratios)
    control = []
    oracle = 0.0
    for eps in eps_list:
        n = int(round(2 / (eps / 4)))
        g = GridSpec.interval(n)
        a0 = ProfileAnsatz(g.axis(0), np.zeros(n), eps, 0.0, g.spacing[0])
        control.append(min_rayleigh(assemble(a0, well)).value * eps**2)
    for rep, eps in zip(reports, eps_list):
        op = assemble(interval_ansatz(*cubic_profile(), eps), well)
        oracle = max(
            oracle,
            abs(rep.lam_min_all - dense_oracle(op)),
            abs(rep.lam_min_zero_mean - dense_oracle(op, zero_mean=True)),
        )
    elapsed = time.perf_counter() - t0
    control_ok = all(abs(v + 1) <= 1e-2 for v in control)
    ok = in_band and ratio_ok and control_ok and oracle <= 1e-8 and elapsed < 120
    assert criterion(
        8, "spectrum uniformity", ok,
        f"zero-mean minima={fmt(zm)} in [-1,1]: {in_band}; ratios={fmt(ratios)} (<=2: {ratio_ok}); "
        f"control eps^2*min={fmt(control)}; oracle diff={oracle:.1e} t={elapsed:.1f}s",
    )


def test_criterion_09_interpolation(criterion):
    t0 = time.perf_counter()
    m = 512
    x = (np.arange(m) + 0.5) / m
    R = np.cos(2 * np.pi * x)
    probe = interpolation_ratio(R, 1 / m).ratio
    scale = max(abs(interpolation_ratio(c * R, 1 / m).ratio / probe - 1) for c in (0.1, 10.0))
    search = inequality_search(1, 1000, seed=7)
    elapsed = time.perf_counter() - t0
    ok = abs(probe - 0.03041) <= 1e-3 and search.growth <= 0.5 and scale <= 1e-10 and elapsed < 60
    assert criterion(
        9, "interpolation inequality", ok,
        f"probe={probe:.5f} C_emp={search.c_emp:.4f} doubled={search.c_doubled:.4f} "
        f"growth={search.growth:.1%} scale dev={scale:.1e} t={elapsed:.1f}s",
    )


def test_criterion_10_ansatz(criterion, cubic):
    t0 = time.perf_counter()
    p, c = cubic
    eps = 0.025
    g1 = GridSpec.interval(int(round(2 / (eps / 4))))
    flat = ansatz_residual(ansatz_family([(0.0, 0.0)], g1, p, c, eps, order=0, delta=0.4), p, c)
    _, _, snaps = evolve_front(FrontCurve.from_shape(Circle(0.7), 512), 0.1, record_times=np.linspace(0, 0.1, 11))
    totals, drift = [], 0.0
    for eps in (0.08, 0.04):
        n = int(round(2.56 / (eps / 2)))
        fam = ansatz_family(snaps, GridSpec.box(n, n, 2.56, 2.56), p, c, eps, order=1)
        res = ansatz_residual(fam, p, c)
        totals.append(res.total_l2)
        drift = max(drift, res.mass_drift)
    ratio = totals[0] / totals[1]
    elapsed = time.perf_counter() - t0
    ok = flat.total_l2 <= 1e-6 and ratio >= 1.7 and drift <= 1e-10 and elapsed < 180
    assert criterion(
        10, "ansatz residual", ok,
        f"flat residual={flat.total_l2:.1e} circle residuals={fmt(totals)} ratio={ratio:.2f} "
        f"mass drift={drift:.1e} t={elapsed:.1f}s",
    )


def test_criterion_11_comparison(criterion):
    t0 = time.perf_counter()
    w = comparison_witness()
    elapsed = time.perf_counter() - t0
    ok = w.initial_gap >= 0 and w.violated and elapsed < 60
    assert criterion(
        11, "no comparison principle", ok,
        f"u0=0 <= v0 (gap {w.initial_gap:.2e}); v-u={w.gap:.2e} at x={w.location:.4f}, t={w.time:.2e} "
        f"(eps={w.eps}) t={elapsed:.2f}s",
    )
