"""Traveling-wave profile, its corrector, and the linearized ODE around it.

The profile ``theta0`` is the heteroclinic orbit of ``theta'' + f(theta) = 0``
joining ``-1`` to ``+1`` with ``theta0(0) = 0``.  Multiplying by ``theta'`` and
integrating gives the first integral ``theta' = sqrt(2 F(theta))``, which is
what is integrated here.
"""

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg
from scipy.interpolate import CubicSpline

from .errors import DomainError, NonconvergedError, SolvabilityError

TOL_SOLV = 1e-6
DEFAULT_RHO_MAX = 12.0
DEFAULT_N_POINTS = 4801


def decay_rate(w):
    """Exponential decay rate ``min(sqrt(-f'(1)), sqrt(-f'(-1)))`` of the profile tails."""
    fp, fm = float(w.f1(1.0)), float(w.f1(-1.0))
    if fp >= 0.0 or fm >= 0.0:
        raise DomainError(f"wells must be stable: f'(1)={fp:g}, f'(-1)={fm:g}")
    return min(np.sqrt(-fp), np.sqrt(-fm))


@dataclass(frozen=True)
class WaveProfile:
    """Sampled ``theta0`` on a uniform symmetric grid, with ``sigma`` and ``alpha``."""

    rho_max: float
    grid: np.ndarray
    theta0: np.ndarray
    dtheta0: np.ndarray
    sigma: float
    alpha: float
    well: object = field(repr=False)

    @property
    def spacing(self):
        return self.grid[1] - self.grid[0]

    @property
    def center(self):
        return len(self.grid) // 2

    def _splines(self):
        cache = self.__dict__.get("_spl")
        if cache is None:
            cache = (
                CubicSpline(self.grid, self.theta0),
                CubicSpline(self.grid, self.dtheta0),
            )
            object.__setattr__(self, "_spl", cache)
        return cache

    def theta0_at(self, rho):
        """Interpolated ``theta0``; clamped to ``±1`` outside the grid."""
        rho = np.asarray(rho, dtype=float)
        s, _ = self._splines()
        inside = np.abs(rho) <= self.rho_max
        return np.where(inside, s(np.clip(rho, -self.rho_max, self.rho_max)), np.sign(rho))

    def dtheta0_at(self, rho):
        rho = np.asarray(rho, dtype=float)
        _, s = self._splines()
        inside = np.abs(rho) <= self.rho_max
        return np.where(inside, s(np.clip(rho, -self.rho_max, self.rho_max)), 0.0)

    def ddtheta0_at(self, rho):
        """``theta0'' = -f(theta0)``, exact by the profile equation."""
        return -self.well.f(self.theta0_at(rho))

    def energy_integral(self):
        """``int theta0'^2`` by Simpson on the grid plus exponential tails."""
        core = integrate.simpson(self.dtheta0**2, x=self.grid)
        ap = np.sqrt(-float(self.well.f1(1.0)))
        am = np.sqrt(-float(self.well.f1(-1.0)))
        tails = self.dtheta0[-1] ** 2 / (2 * ap) + self.dtheta0[0] ** 2 / (2 * am)
        return core + tails


@dataclass(frozen=True)
class CorrectorProfile:
    """Sampled corrector ``theta1`` solving ``L theta1 = 1 - sigma theta0'``."""

    grid: np.ndarray
    theta1: np.ndarray
    limit_plus: float
    limit_minus: float
    profile: WaveProfile = field(repr=False)

    def _spline(self):
        s = self.__dict__.get("_spl")
        if s is None:
            s = CubicSpline(self.grid, self.theta1)
            object.__setattr__(self, "_spl", s)
        return s

    def theta1_at(self, rho):
        rho = np.asarray(rho, dtype=float)
        r = self.grid[-1]
        far = np.where(rho > 0, self.limit_plus, self.limit_minus)
        return np.where(np.abs(rho) <= r, self._spline()(np.clip(rho, -r, r)), far)

    def dtheta1_at(self, rho):
        rho = np.asarray(rho, dtype=float)
        r = self.grid[-1]
        return np.where(np.abs(rho) <= r, self._spline()(np.clip(rho, -r, r), 1), 0.0)

    def ddtheta1_at(self, rho):
        """``theta1''`` from its own equation ``-theta1'' - f'(theta0) theta1 = 1 - sigma theta0'``."""
        p = self.profile
        th0 = p.theta0_at(rho)
        return -p.well.f1(th0) * self.theta1_at(rho) - (1.0 - p.sigma * p.dtheta0_at(rho))

    def orthogonality(self):
        p = self.profile
        g = p.dtheta0**2 * p.well.f2(p.theta0) * self.theta1
        return float(integrate.simpson(g, x=self.grid))


def compute_theta0(w, rho_max=DEFAULT_RHO_MAX, n_points=DEFAULT_N_POINTS):
    """Heteroclinic profile of ``theta'' + f(theta) = 0`` pinned at ``theta(0) = 0``.

    Parameters
    ----------
    w : DoubleWell
    rho_max : float
        Half-width of the sampled interval; at least 8.
    n_points : int
        Odd number of samples (so that ``rho = 0`` is a node), at least 1000.

    Returns
    -------
    WaveProfile

    Raises
    ------
    NonconvergedError
        If the tails are not resolved on ``[-rho_max, rho_max]``.
    """
    n_points = int(n_points)
    if n_points < 1000 or n_points % 2 == 0:
        raise ValueError("n_points must be odd and >= 1000")
    alpha = decay_rate(w)
    if rho_max < 8.0:
        raise NonconvergedError(f"tails unresolved: rho_max={rho_max:g} < 8")

    grid = np.linspace(-rho_max, rho_max, n_points)
    c = n_points // 2
    grid[c] = 0.0

    def rhs(_, y, direction):
        return [direction * np.sqrt(2.0 * max(float(w.F(y[0])), 0.0))]

    theta = np.empty(n_points)
    theta[c] = 0.0
    for direction, nodes in ((1.0, grid[c:]), (-1.0, -grid[c::-1])):
        # integrate in |rho| so both branches run forward
        sol = integrate.solve_ivp(
            rhs, (0.0, rho_max), [0.0], method="DOP853",
            t_eval=nodes, rtol=1e-13, atol=1e-15, args=(direction,),
        )
        if not sol.success:
            raise NonconvergedError(f"profile integration failed: {sol.message}")
        if direction > 0:
            theta[c:] = sol.y[0]
        else:
            theta[c::-1] = sol.y[0]

    dtheta = np.sqrt(2.0 * np.maximum(w.F(theta), 0.0))
    miss = max(abs(theta[-1] - 1.0), abs(theta[0] + 1.0))
    if miss > np.exp(-alpha * rho_max / 2):
        raise NonconvergedError(f"profile tails miss the wells by {miss:.3e}")

    # int theta0'^2 drho = int_{-1}^{1} sqrt(2F) dtheta, free of tail truncation
    energy = integrate.quad(
        lambda s: np.sqrt(2.0 * max(float(w.F(s)), 0.0)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-13
    )[0]
    return WaveProfile(
        rho_max=float(rho_max), grid=grid, theta0=theta, dtheta0=dtheta,
        sigma=2.0 / energy, alpha=alpha, well=w,
    )


@functools.lru_cache(maxsize=None)
def cubic_profile():
    """Profile and corrector of the default cubic well, computed once."""
    from .potential import make_cubic

    p = compute_theta0(make_cubic())
    return p, compute_theta1(p)


def cubic_sigma():
    return cubic_profile()[0].sigma


def solvability_integral(p, h):
    return float(integrate.simpson(np.asarray(h) * p.dtheta0, x=p.grid))


def _linearized_bands(p):
    n = len(p.grid)
    dx2 = p.spacing**2
    main = 2.0 / dx2 - p.well.f1(p.theta0)
    off = np.full(n - 1, -1.0 / dx2)
    return main, off


def solve_linearized(p, h, h_plus=None, h_minus=None, tol=TOL_SOLV):
    """Bounded solution of ``-Q'' - f'(theta0) Q = h`` with ``Q(0) = 0``.

    Parameters
    ----------
    p : WaveProfile
    h : array_like or callable
        Right-hand side sampled on ``p.grid`` (or a function of ``rho``).
    h_plus, h_minus : float, optional
        Far-field limits of ``h``; default to the end samples.
    tol : float
        Threshold on ``|int h theta0'|`` for the solvability condition.

    Returns
    -------
    ndarray
        ``Q`` on ``p.grid``, with far-field values ``-h_±/f'(±1)``.

    Raises
    ------
    SolvabilityError
        If ``h`` is not orthogonal to ``theta0'``.
    """
    h = np.asarray(h(p.grid) if callable(h) else h, dtype=float)
    if h.shape != p.grid.shape:
        raise ValueError("h must be sampled on the profile grid")
    h_plus = float(h[-1]) if h_plus is None else float(h_plus)
    h_minus = float(h[0]) if h_minus is None else float(h_minus)
    integral = solvability_integral(p, h)
    if abs(integral) > tol:
        raise SolvabilityError(integral, tol)

    n = len(p.grid)
    c = p.center
    main, off = _linearized_bands(p)
    Q = np.zeros(n)
    Q[0] = -h_minus / float(p.well.f1(-1.0))
    Q[-1] = -h_plus / float(p.well.f1(1.0))
    # the pin Q(0) = 0 splits the problem into two Dirichlet half-lines
    for lo, hi in ((1, c), (c + 1, n - 1)):
        ab = np.zeros((3, hi - lo))
        ab[0, 1:] = off[lo:hi - 1]
        ab[1] = main[lo:hi]
        ab[2, :-1] = off[lo:hi - 1]
        rhs = h[lo:hi].copy()
        rhs[0] -= off[lo - 1] * Q[lo - 1]
        rhs[-1] -= off[hi - 1] * Q[hi]
        Q[lo:hi] = linalg.solve_banded((1, 1), ab, rhs)
    return Q


def linearized_residual(p, Q, h):
    """Max-norm residual of the discrete ODE at interior nodes other than the pin."""
    Q = np.asarray(Q, dtype=float)
    h = np.asarray(h(p.grid) if callable(h) else h, dtype=float)
    dx2 = p.spacing**2
    lhs = -(Q[:-2] - 2 * Q[1:-1] + Q[2:]) / dx2 - p.well.f1(p.theta0[1:-1]) * Q[1:-1]
    r = np.abs(lhs - h[1:-1])
    r[p.center - 1] = 0.0
    return float(r.max())


def compute_theta1(p, w=None):
    """Corrector ``theta1``: ``L theta1 = 1 - sigma theta0'``, ``theta1(0) = 0``."""
    w = p.well if w is None else w
    h = 1.0 - p.sigma * p.dtheta0
    Q = solve_linearized(p, h, h_plus=1.0, h_minus=1.0)
    return CorrectorProfile(
        grid=p.grid, theta1=Q,
        limit_plus=-1.0 / float(w.f1(1.0)), limit_minus=-1.0 / float(w.f1(-1.0)),
        profile=p,
    )
