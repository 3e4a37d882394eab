"""Mass-conserved Allen-Cahn equation on 1D intervals and 2D rectangles.

    u_t = Delta u + eps**-2 (f(u) - eps lambda),   lambda = mean(f(u)) / eps,

with homogeneous Neumann conditions.  The grid is cell centred with mirrored
ghost cells, so the discrete Laplacian is symmetric with zero column sums and
the semi-implicit step below conserves the discrete mean exactly.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import fft
from scipy.ndimage import map_coordinates
from scipy.sparse.linalg import LinearOperator, cg
from skimage.measure import find_contours

from .errors import ConfigError, EmptyContourError, GeometryError, SolveError
from .geometry import GridSpec
from .potential import DoubleWell, make_cubic

CG_RTOL = 1e-12
CG_MAXITER = 10_000


@dataclass
class ScalarField:
    """Cell-centred samples of ``u`` on ``grid`` together with ``eps``."""

    values: np.ndarray
    grid: GridSpec
    eps: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")

    @property
    def dims(self):
        return self.grid.ndim

    @property
    def shape(self):
        return self.grid.shape

    @property
    def spacing(self):
        return self.grid.spacing

    def mean(self):
        return float(np.mean(self.values))

    def mass(self):
        return float(np.sum(self.values)) * self.grid.cell_volume

    def copy(self):
        return ScalarField(self.values.copy(), self.grid, self.eps)


@dataclass
class SimConfig:
    """Time stepping parameters.  ``dt`` defaults to ``0.1 eps**2``."""

    eps: float
    T: float
    grid: GridSpec
    well: DoubleWell = field(default_factory=make_cubic)
    dt: float = None
    record_every: int = 10
    solver: str = "dct"
    workers: int = 1

    def __post_init__(self):
        if self.dt is None:
            self.dt = 0.1 * self.eps**2
        self.validate()

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    def validate(self):
        if self.eps <= 0 or self.T < 0 or self.dt <= 0:
            raise ConfigError("eps and dt must be positive, T non-negative")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")
        if self.solver not in ("dct", "cg"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        if max(self.grid.spacing) > self.eps / 2 * (1 + 1e-12):
            raise ConfigError(f"grid spacing {max(self.grid.spacing):.4g} does not resolve eps/2")
        s = np.linspace(-1.2, 1.2, 241)
        lip = float(np.max(np.abs(self.well.f1(s))))
        limit = 0.25 * self.eps**2 * 2.0 / lip
        if self.dt > limit * (1 + 1e-12):
            raise ConfigError(f"dt={self.dt:.3e} exceeds the reaction limit {limit:.3e}")


# ---------------------------------------------------------------------------
# discrete operators


def laplacian(values, spacing):
    """Neumann Laplacian on a cell-centred grid (mirrored ghost cells)."""
    padded = np.pad(values, 1, mode="edge")
    out = np.zeros_like(values)
    for axis, h in enumerate(spacing):
        lo = [slice(1, -1)] * values.ndim
        hi = [slice(1, -1)] * values.ndim
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        out += (padded[tuple(lo)] - 2 * values + padded[tuple(hi)]) / h**2
    return out


def neumann_symbol(shape, spacing):
    """Eigenvalues of the Neumann Laplacian in the DCT-II basis (all <= 0)."""
    sym = np.zeros(shape)
    for axis, (n, h) in enumerate(zip(shape, spacing)):
        k = np.arange(n)
        lam = -4.0 / h**2 * np.sin(np.pi * k / (2 * n)) ** 2
        view = [1] * len(shape)
        view[axis] = n
        sym = sym + lam.reshape(view)
    return sym


def gradient_sq_sum(values, spacing):
    """``sum over faces of (difference / h)**2`` for the face-based Dirichlet energy."""
    total = 0.0
    for axis, h in enumerate(spacing):
        total += float(np.sum((np.diff(values, axis=axis) / h) ** 2))
    return total


def lambda_of(u, w):
    """Multiplier ``(1/eps) mean(f(u))``."""
    return float(np.mean(w.f(u.values))) / u.eps


def energy(u, w):
    """Discrete energy ``sum[eps |grad_h u|**2 / 2 + F(u) / eps] h**d``."""
    hv = u.grid.cell_volume
    grad = gradient_sq_sum(u.values, u.spacing)
    return (0.5 * u.eps * grad + float(np.sum(w.F(u.values))) / u.eps) * hv


def _solve_dct(rhs, dt, spacing, workers):
    sym = neumann_symbol(rhs.shape, spacing)
    coef = fft.dctn(rhs, type=2, norm="ortho", workers=workers)
    coef /= 1.0 - dt * sym
    return fft.idctn(coef, type=2, norm="ortho", workers=workers)


def _solve_cg(rhs, dt, spacing):
    shape = rhs.shape
    n = rhs.size

    def matvec(x):
        x = x.reshape(shape)
        return (x - dt * laplacian(x, spacing)).ravel()

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    # Jacobi preconditioner: the diagonal is constant
    diag = 1.0 + dt * sum(2.0 / h**2 for h in spacing)
    pre = LinearOperator((n, n), matvec=lambda x: x / diag, dtype=float)
    b = rhs.ravel()
    x, info = cg(op, b, x0=b.copy(), rtol=CG_RTOL, atol=0.0, maxiter=CG_MAXITER, M=pre)
    res = np.linalg.norm(b - op.matvec(x)) / max(np.linalg.norm(b), 1e-300)
    if info != 0 or res > 10 * CG_RTOL:
        raise SolveError(f"CG stopped with relative residual {res:.2e} (info={info})")
    x = x.reshape(shape)
    # the exact solution has the mean of rhs; remove the solver's residual drift
    return x + (np.mean(rhs) - np.mean(x))


def step(u, cfg):
    """One IMEX step: ``(I - dt Delta_h) u_new = u + dt eps**-2 (f(u) - eps lambda(u))``."""
    w = cfg.well
    fu = w.f(u.values)
    reaction = fu - np.mean(fu)
    rhs = u.values + cfg.dt / u.eps**2 * reaction
    if cfg.solver == "dct":
        new = _solve_dct(rhs, cfg.dt, u.spacing, cfg.workers)
    else:
        new = _solve_cg(rhs, cfg.dt, u.spacing)
    return ScalarField(new, u.grid, u.eps)


# ---------------------------------------------------------------------------
# initial data


def _bump(x):
    """``exp(-1/x)`` for ``x > 0`` and 0 otherwise, with first and second derivatives."""
    pos = x > 0
    xs = np.where(pos, x, 1.0)
    g = np.where(pos, np.exp(-1.0 / xs), 0.0)
    g1 = np.where(pos, g / xs**2, 0.0)
    g2 = np.where(pos, g * (1.0 - 2.0 * xs) / xs**4, 0.0)
    return g, g1, g2


def cutoff(s, delta, derivatives=False):
    """Smooth monotone cutoff: 1 for ``|s| <= delta``, 0 for ``|s| >= 2 delta``.

    With ``derivatives=True`` also returns the first and second derivatives in ``s``.
    """
    s = np.asarray(s, dtype=float)
    t = np.clip((np.abs(s) - delta) / delta, 0.0, 1.0)
    a, a1, a2 = _bump(1.0 - t)
    b, b1, b2 = _bump(t)
    S = a + b
    z = a / S
    if not derivatives:
        return z
    # d/dt of a(t) = g(1 - t) flips the sign of odd derivatives
    at, att = -a1, a2
    St, Stt = at + b1, att + b2
    zt = (at * S - a * St) / S**2
    ztt = (att * S - a * Stt) / S**2 - 2.0 * St * zt / S
    sgn = np.where(s >= 0, 1.0, -1.0)
    return z, zt * sgn / delta, ztt / delta**2


def initial_multiplier(source, sigma):
    """``lambda0(0) = mean curvature / sigma`` of the initial front (0 for a flat front)."""
    if source is None or not hasattr(source, "mean_curvature"):
        return 0.0
    return float(source.mean_curvature()) / sigma


def ansatz_values(d, p, c, eps, delta, lam0, order):
    """Order 0 or 1 profile ansatz as a function of the signed distance ``d``."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    d = np.asarray(d, dtype=float)
    w = p.well
    zeta = cutoff(d, delta)
    rho = d / eps
    sgn = np.where(d >= 0, 1.0, -1.0)
    inner = p.theta0_at(rho)
    outer = sgn
    if order == 1:
        inner = inner - eps * lam0 * c.theta1_at(rho)
        fp = np.where(d >= 0, float(w.f1(1.0)), float(w.f1(-1.0)))
        outer = sgn + eps * lam0 / fp
    return zeta * inner + (1.0 - zeta) * outer


def prepare_initial(lf, p, c, eps, order=0, lam0=None):
    """Well-prepared initial data built from a level function.

    Parameters
    ----------
    lf : LevelFunction
        Signed distance of the initial front with tube half-width ``lf.delta``.
    p, c : WaveProfile, CorrectorProfile
    eps : float
    order : {0, 1}
        Order 0 is the cut-off profile ``theta0(d/eps)``; order 1 adds
        ``-eps lambda0 theta1`` inside and ``eps lambda0 / f'(±1)`` outside.
    lam0 : float, optional
        Initial multiplier; by default the front's mean curvature over ``sigma``.
    """
    if max(lf.grid.spacing) > eps / 2 * (1 + 1e-12):
        raise GeometryError("grid must resolve eps/2")
    if lam0 is None:
        lam0 = initial_multiplier(lf.source, p.sigma)
    delta = lf.delta
    vals = ansatz_values(lf.d, p, c, eps, delta, lam0, order)
    return ScalarField(vals, lf.grid, eps)


# ---------------------------------------------------------------------------
# interface extraction


@dataclass
class Polyline:
    points: np.ndarray
    closed: bool


def zero_level(u):
    """Marching-squares contours of ``u = 0`` in physical coordinates.

    Closed contours are returned without a repeated endpoint and oriented with
    ``u < 0`` on the left (counter-clockwise around a minus-phase droplet).

    Raises
    ------
    EmptyContourError
        If the field does not change sign.
    """
    if u.dims != 2:
        raise ValueError("zero_level needs a 2D field")
    v = u.values
    if v.min() >= 0 or v.max() <= 0:
        raise EmptyContourError("field has no sign change")
    hx, hy = u.spacing
    x0, y0 = u.grid.lower
    out = []
    for c in find_contours(v, 0.0):
        pts = np.column_stack([x0 + (c[:, 0] + 0.5) * hx, y0 + (c[:, 1] + 0.5) * hy])
        closed = len(pts) > 3 and np.allclose(pts[0], pts[-1])
        if closed:
            pts = pts[:-1]
        if len(pts) < 2:
            continue
        if _minus_on_right(u, pts):
            pts = pts[::-1].copy()
        out.append(Polyline(pts, closed))
    if not out:
        raise EmptyContourError("no zero contour found")
    return out


def _minus_on_right(u, pts):
    """True if ``u`` is larger on the left of the contour's longest segment."""
    seg = np.diff(pts, axis=0)
    lens = np.linalg.norm(seg, axis=1)
    k = int(np.argmax(lens))
    mid = 0.5 * (pts[k] + pts[k + 1])
    off = 0.5 * min(u.spacing) * np.array([-seg[k, 1], seg[k, 0]]) / lens[k]
    probes = np.array([mid + off, mid - off])
    ix, iy = u.grid.to_index(probes[:, 0], probes[:, 1])
    left, right = map_coordinates(u.values, [ix, iy], order=1, mode="nearest")
    return left > right


# ---------------------------------------------------------------------------
# driver


@dataclass
class Trajectory:
    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    fronts: list = field(default_factory=list)
    fields: list = field(default_factory=list)

    def rows(self):
        return list(zip(self.t, self.mass, self.energy, self.lam))

    def max_energy_increase(self):
        e = np.asarray(self.energy)
        return float(np.max(np.diff(e))) if len(e) > 1 else 0.0


def run(cfg, u0, keep_fields=False, contours=True):
    """Step ``u0`` to ``cfg.T`` recording diagnostics every ``cfg.record_every`` steps.

    ``mass`` in the trajectory is the cell average of ``u``.
    """
    w = cfg.well
    u = u0.copy()
    traj = Trajectory()
    contours = contours and u.dims == 2

    def record(t):
        traj.t.append(t)
        traj.mass.append(u.mean())
        traj.energy.append(energy(u, w))
        traj.lam.append(lambda_of(u, w))
        if contours:
            try:
                traj.fronts.append(zero_level(u))
            except EmptyContourError:
                traj.fronts.append([])
        if keep_fields:
            traj.fields.append(u.values.copy())

    record(0.0)
    n = cfg.n_steps
    for k in range(1, n + 1):
        u = step(u, cfg)
        if k % cfg.record_every == 0 or k == n:
            record(k * cfg.dt)
    return traj, u
