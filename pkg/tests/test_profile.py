import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from mcac.errors import DomainError, NonconvergedError, SolvabilityError
from mcac.potential import DoubleWell, make_cubic
from mcac.profile import (
    compute_theta0,
    compute_theta1,
    decay_rate,
    linearized_residual,
    solvability_integral,
    solve_linearized,
)

SQ2 = np.sqrt(2.0)


def _linear_well(kp, km):
    """Smooth nonlinearity with prescribed slopes ``f'(1) = kp`` and ``f'(-1) = km``."""
    f = lambda u: 0 * u  # noqa: E731
    f1 = lambda u: np.where(np.asarray(u) > 0, kp, km)  # noqa: E731
    return DoubleWell.from_functions(f, f1, f1)


@pytest.mark.parametrize("rho, expected", [(0.0, 0.0), (1.0, np.tanh(1 / SQ2)), (-1.0, -np.tanh(1 / SQ2))])
def test_theta0_values(cubic, rho, expected):
    assert cubic[0].theta0_at(rho) == pytest.approx(expected, abs=1e-10)


def test_theta0_matches_tanh(cubic):
    p = cubic[0]
    assert np.max(np.abs(p.theta0 - np.tanh(p.grid / SQ2))) <= 1e-8
    assert np.max(np.abs(p.dtheta0 - 1 / SQ2 / np.cosh(p.grid / SQ2) ** 2)) <= 1e-8


def test_sigma(cubic):
    p = cubic[0]
    assert p.sigma == pytest.approx(3 / SQ2, abs=1e-10)
    assert p.sigma * p.energy_integral() == pytest.approx(2.0, abs=1e-8)


def test_theta0_monotone_and_bounded(cubic):
    p = cubic[0]
    assert np.all(np.diff(p.theta0) > 0)
    assert np.all(np.abs(p.theta0) < 1)


def test_profile_equation_residual():
    p = compute_theta0(make_cubic(), n_points=10_001)
    th = p.theta0
    d2 = (th[2:] - 2 * th[1:-1] + th[:-2]) / p.spacing**2
    assert np.max(np.abs(d2 + p.well.f(th[1:-1]))) <= 1e-6


def test_derivative_integrates_to_profile(cubic):
    p = cubic[0]
    total = integrate.simpson(p.dtheta0, x=p.grid)
    assert total == pytest.approx(p.theta0[-1] - p.theta0[0], abs=1e-8)


@pytest.mark.parametrize("m", [0, 1])
def test_exponential_tails(cubic, m):
    p = cubic[0]
    a = p.alpha * (1 - 1e-2)
    radii = p.rho_max * np.array([0.5, 0.75, 1.0])
    for sgn in (1.0, -1.0):
        r = sgn * radii
        vals = np.abs(p.theta0_at(r) - sgn) if m == 0 else np.abs(p.dtheta0_at(r))
        ratios = vals / np.exp(-a * radii)
        # one constant fitted at the innermost radius bounds the outer ones
        assert np.all(ratios[1:] <= ratios[0] * (1 + 1e-6))
        assert ratios[0] < 10


@pytest.mark.parametrize("kp, km, expected", [(-2.0, -2.0, SQ2), (-4.0, -1.0, 1.0)])
def test_decay_rate(kp, km, expected):
    assert decay_rate(_linear_well(kp, km)) == pytest.approx(expected)


def test_decay_rate_default(well):
    assert decay_rate(well) == pytest.approx(SQ2)


def test_decay_rate_rejects_unstable_well():
    with pytest.raises(DomainError):
        decay_rate(_linear_well(0.0, -2.0))


def test_compute_theta0_short_interval(well):
    with pytest.raises(NonconvergedError):
        compute_theta0(well, rho_max=2.0)


@pytest.mark.parametrize("n_points", [1000, 500, 4800])
def test_compute_theta0_rejects_grid(well, n_points):
    with pytest.raises(ValueError):
        compute_theta0(well, n_points=n_points)


def test_theta1_values(cubic):
    c = cubic[1]
    assert c.theta1_at(0.0) == pytest.approx(0.0, abs=1e-14)
    assert c.theta1[-1] == pytest.approx(0.5, abs=1e-4)
    assert c.theta1[0] == pytest.approx(0.5, abs=1e-4)
    assert abs(c.orthogonality()) <= 1e-8


def test_theta1_even(cubic):
    th = cubic[1].theta1
    assert np.max(np.abs(th - th[::-1])) <= 1e-10


def test_theta1_grid_convergence(cubic):
    fine = compute_theta1(compute_theta0(make_cubic(), n_points=9601))
    rho = np.linspace(-10, 10, 81)
    assert np.max(np.abs(fine.theta1_at(rho) - cubic[1].theta1_at(rho))) <= 1e-5


def test_solvability_accepts_theta1_rhs(cubic):
    p, c = cubic
    h = 1 - p.sigma * p.dtheta0
    Q = solve_linearized(p, h, h_plus=1.0, h_minus=1.0)
    np.testing.assert_allclose(Q, c.theta1)
    assert linearized_residual(p, Q, h) <= 1e-8


def test_solvability_accepts_second_derivative(cubic):
    p = cubic[0]
    h = -p.well.f(p.theta0)
    assert abs(solvability_integral(p, h)) <= 1e-10
    Q = solve_linearized(p, h)
    assert linearized_residual(p, Q, h) <= 1e-8


def test_solvability_rejects_translation_mode(cubic):
    p = cubic[0]
    with pytest.raises(SolvabilityError) as err:
        solve_linearized(p, p.dtheta0)
    assert err.value.integral == pytest.approx(2 / p.sigma, abs=1e-6)


def test_solve_linearized_callable_and_shape(cubic):
    p = cubic[0]
    Q = solve_linearized(p, lambda r: -p.well.f(np.tanh(r / SQ2)))
    assert Q.shape == p.grid.shape
    with pytest.raises(ValueError):
        solve_linearized(p, np.zeros(10))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_solve_linearized_is_linear(a, b):
    from mcac.profile import cubic_profile

    p = cubic_profile()[0]
    h1 = 1 - p.sigma * p.dtheta0
    h2 = -p.well.f(p.theta0)
    Q1 = solve_linearized(p, h1)
    Q2 = solve_linearized(p, h2)
    Q = solve_linearized(p, a * h1 + b * h2, tol=1e-5)
    assert np.max(np.abs(Q - (a * Q1 + b * Q2))) <= 1e-10
