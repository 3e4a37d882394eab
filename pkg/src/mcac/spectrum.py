"""Spectrum of the Allen-Cahn operator linearized at a profile ansatz (1D).

The operator is ``-D^2 - eps**-2 f'(psi)`` with Neumann ends.  Its lowest
eigenvalue is close to zero (translation mode), and over zero-mean functions
the Rayleigh quotient stays bounded below uniformly in ``eps``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .acsolver import cutoff
from .errors import ConvergenceError
from .geometry import GridSpec

MAX_ITER = 200


@dataclass
class ProfileAnsatz:
    """``psi = theta0(d/eps) + eps p theta1(d/eps)`` near the front, ``±1`` far from it."""

    grid: np.ndarray
    psi: np.ndarray
    eps: float
    p_eps: float
    spacing: float


def build_psi(p, c, d, eps, p_eps=0.0, grid=None, h1=0.0):
    """Sample the ansatz on a 1D grid.

    Parameters
    ----------
    p, c : WaveProfile, CorrectorProfile
    d : ndarray
        Signed distance at the grid nodes (``d = x`` for a front at the origin).
    eps : float
        At most 0.25.
    p_eps : float
        Modulation of the corrector, ``|p_eps| <= 2``.
    grid : ndarray, optional
        Node positions; defaults to ``d``.
    h1 : float
        Optional quasi-distance shift ``d -> d - eps h1``.
    """
    if eps > 0.25:
        raise ValueError("eps must be at most 0.25")
    if abs(p_eps) > 2:
        raise ValueError("|p_eps| must be at most 2")
    d = np.asarray(d, dtype=float) - eps * h1
    x = np.asarray(d if grid is None else grid, dtype=float)
    rho = d / eps
    inner = p.theta0_at(rho) + eps * p_eps * c.theta1_at(rho)
    z = cutoff(d, np.sqrt(eps))
    psi = z * inner + (1.0 - z) * np.where(d >= 0, 1.0, -1.0)
    h = float(x[1] - x[0]) if len(x) > 1 else 1.0
    return ProfileAnsatz(grid=x, psi=psi, eps=eps, p_eps=p_eps, spacing=h)


def interval_ansatz(p, c, eps, h_ratio=0.25, p_eps=0.0, L=1.0):
    """Ansatz for a flat front at the origin of ``(-L, L)`` on a cell-centred grid ``h = h_ratio eps``."""
    n = int(round(2 * L / (h_ratio * eps)))
    g = GridSpec.interval(n, -L, L)
    x = g.axis(0)
    return build_psi(p, c, x, eps, p_eps, grid=x)


@dataclass
class TridiagonalOperator:
    """Symmetric tridiagonal matrix ``diag`` / ``off``."""

    diag: np.ndarray
    off: np.ndarray

    @property
    def n(self):
        return len(self.diag)

    def matvec(self, v):
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out

    def dense(self):
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def banded(self, shift=0.0):
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self.off
        ab[1] = self.diag - shift
        ab[2, :-1] = self.off
        return ab

    def rayleigh(self, v):
        return float(v @ self.matvec(v) / (v @ v))


def neumann_second_difference(n, h):
    """``-D^2_h`` with mirrored ghost cells: zero row sums."""
    diag = np.full(n, 2.0 / h**2)
    diag[0] = diag[-1] = 1.0 / h**2
    return diag, np.full(n - 1, -1.0 / h**2)


def assemble(a, w):
    """``-D^2_h - eps**-2 diag(f'(psi))`` for the ansatz ``a``."""
    diag, off = neumann_second_difference(len(a.psi), a.spacing)
    return TridiagonalOperator(diag - w.f1(a.psi) / a.eps**2, off)


@dataclass
class RayleighResult:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int


def _unconstrained(op, tol):
    val, vec = linalg.eigh_tridiagonal(op.diag, op.off, select="i", select_range=(0, 0))
    lam, v = float(val[0]), vec[:, 0]
    # polish by inverse iteration with the bisection shift
    for it in range(1, MAX_ITER + 1):
        res = float(np.linalg.norm(op.matvec(v) - lam * v))
        if res <= tol:
            return RayleighResult(lam, v, res, it - 1)
        try:
            y = linalg.solve_banded((1, 1), op.banded(lam - 1e-9 * max(1.0, abs(lam))), v)
        except linalg.LinAlgError:
            y = v
        v = y / np.linalg.norm(y)
        lam = op.rayleigh(v)
    raise ConvergenceError(f"inverse iteration stalled at residual {res:.2e}")


def _bordered_solve(op, shift, b):
    """Solve ``(T - shift) x = b - mu 1`` with ``sum(x) = 0``."""
    ab = op.banded(shift)
    ones = np.ones(op.n)
    rhs = np.column_stack([b, ones])
    sol = linalg.solve_banded((1, 1), ab, rhs)
    denom = sol[:, 1].sum()
    mu = sol[:, 0].sum() / denom
    return sol[:, 0] - mu * sol[:, 1]


def _project(v):
    return v - v.mean()


def _zero_mean(op, tol):
    n = op.n
    P_op = lambda v: _project(op.matvec(v))  # noqa: E731
    # start below the whole spectrum so the first phase converges to the lowest mode
    lower = float(linalg.eigh_tridiagonal(op.diag, op.off, eigvals_only=True, select="i", select_range=(0, 0))[0])
    shift = lower - 1.0 - 1e-6 * abs(lower)
    x = np.arange(n) - (n - 1) / 2.0
    v = _project(np.cos(np.pi * (x + 0.5) / n) + 1e-3 * x / n)
    v /= np.linalg.norm(v)
    lam = op.rayleigh(v)
    it = 0
    for it in range(1, MAX_ITER + 1):
        y = _project(_bordered_solve(op, shift, v))
        v = y / np.linalg.norm(y)
        new = op.rayleigh(v)
        if abs(new - lam) <= 1e-3 * max(1.0, abs(new)):
            lam = new
            break
        lam = new
    # Rayleigh quotient iteration on the constrained problem
    for it2 in range(1, MAX_ITER + 1):
        res = float(np.linalg.norm(P_op(v) - lam * v))
        if res <= tol * max(1.0, abs(lam)):
            return RayleighResult(lam, v, res, it + it2 - 1)
        try:
            y = _project(_bordered_solve(op, lam, v))
        except (linalg.LinAlgError, ZeroDivisionError):
            y = v
        if not np.all(np.isfinite(y)) or np.linalg.norm(y) == 0:
            return RayleighResult(lam, v, res, it + it2 - 1)
        v = y / np.linalg.norm(y)
        lam = op.rayleigh(v)
    raise ConvergenceError(f"constrained iteration stalled at residual {res:.2e}")


def min_rayleigh(op, zero_mean=False, tol=1e-10):
    """Minimum Rayleigh quotient of a symmetric tridiagonal operator.

    Unconstrained: LAPACK bisection for the lowest eigenvalue and inverse
    iteration for the vector.  Zero-mean: shifted inverse iteration on the
    bordered system (the constant direction is deflated in every solve), then
    Rayleigh quotient iteration.

    Returns
    -------
    RayleighResult
        ``vector`` has unit Euclidean norm (and zero sum when ``zero_mean``).
    """
    return _zero_mean(op, tol) if zero_mean else _unconstrained(op, tol)


def dense_oracle(op, zero_mean=False):
    """Reference minimum from a dense symmetric eigensolve (with a null-space basis when constrained)."""
    A = op.dense()
    if not zero_mean:
        return float(linalg.eigh(A, eigvals_only=True, subset_by_index=(0, 0))[0])
    Q = linalg.null_space(np.ones((1, op.n)))
    return float(linalg.eigh(Q.T @ A @ Q, eigvals_only=True, subset_by_index=(0, 0))[0])


@dataclass
class SpectralReport:
    eps: float
    lam_min_all: float
    lam_min_zero_mean: float
    eigvec: np.ndarray
    grid: np.ndarray


def spectral_report(a, w):
    op = assemble(a, w)
    all_ = min_rayleigh(op)
    zm = min_rayleigh(op, zero_mean=True)
    return SpectralReport(a.eps, all_.value, zm.value, zm.vector, a.grid)


def sweep(eps_list, p_eps=0.0, h_ratio=0.25, profile=None, corrector=None, L=1.0):
    """Spectral reports for a flat front on ``(-L, L)`` over a decreasing list of ``eps``."""
    from .profile import cubic_profile

    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be decreasing")
    if profile is None:
        profile, corrector = cubic_profile()
    w = profile.well
    return [spectral_report(interval_ansatz(profile, corrector, e, h_ratio, p_eps, L), w) for e in eps_list]


def uniform_constant(reports):
    """Smallest ``C*`` with ``lam_min_zero_mean >= -C*`` across the reports."""
    return max(0.0, -min(r.lam_min_zero_mean for r in reports))


def consecutive_ratios(reports, zero_mean=True):
    vals = [r.lam_min_zero_mean if zero_mean else r.lam_min_all for r in reports]
    return [b / a for a, b in zip(vals, vals[1:])]
