"""Verification tools: interpolation inequality, Hausdorff distance, ansatz
residuals, error tracking and sharp-interface convergence studies."""

from dataclasses import dataclass, field

import numpy as np

from . import acsolver, frontflow
from .acsolver import ScalarField, SimConfig, ansatz_values, cutoff, zero_level
from .errors import ConfigError, DegenerateError, DomainError, EmptyContourError, EmptyInputError, ShapeMismatchError
from .frontflow import FrontCurve
from .geometry import GridSpec, Polygon, Shape, default_delta, signed_distance

# ---------------------------------------------------------------------------
# interpolation inequality


@dataclass
class InequalityProbe:
    n: int
    p: float
    ratio: float
    witness: str = ""


def exponent(n):
    return min(4.0 / n, 1.0)


def interpolation_ratio(R, spacing, n=None, witness=""):
    """``||R||_{2+p}^{2+p} / (||R||_2^p ||grad R||_2^2)`` on a uniform grid.

    Parameters
    ----------
    R : ndarray
        Zero-mean samples (1D or 2D) at cell centres.
    spacing : float or tuple of float
        Grid spacing per axis.
    n : int, optional
        Space dimension, defaults to ``R.ndim``.

    Raises
    ------
    DegenerateError
        If ``R`` vanishes identically.
    DomainError
        If ``R`` is not zero-mean to 1e-12.
    """
    R = np.asarray(R, dtype=float)
    n = R.ndim if n is None else int(n)
    spacing = np.broadcast_to(np.atleast_1d(np.asarray(spacing, dtype=float)), (R.ndim,))
    if not np.any(R):
        raise DegenerateError("R vanishes identically")
    scale = float(np.max(np.abs(R)))
    if abs(float(np.mean(R))) > 1e-12 * max(scale, 1.0):
        raise DomainError(f"R must be zero-mean (mean = {np.mean(R):.3e})")
    p = exponent(n)
    dv = float(np.prod(spacing))
    lp = float(np.sum(np.abs(R) ** (2 + p))) * dv
    l2 = np.sqrt(float(np.sum(R**2)) * dv)
    grads = np.gradient(R, *spacing) if R.ndim > 1 else [np.gradient(R, spacing[0])]
    g2 = sum(float(np.sum(g**2)) for g in grads) * dv
    return InequalityProbe(n=n, p=p, ratio=lp / (l2**p * g2), witness=witness)


@dataclass
class InequalitySearch:
    n: int
    trials: int
    seed: int
    c_emp: float
    c_doubled: float
    witness: str
    ratios: np.ndarray = field(repr=False)

    @property
    def growth(self):
        """Relative increase of the maximum when the number of trials is doubled."""
        return self.c_doubled / self.c_emp - 1.0


def _probe_field(n, m):
    x = (np.arange(m) + 0.5) / m
    if n == 1:
        return np.cos(2 * np.pi * x)
    X, Y = np.meshgrid(x, x, indexing="ij")
    return np.cos(2 * np.pi * X) * np.cos(2 * np.pi * Y)


def _random_field(n, m, rng, max_degree):
    x = (np.arange(m) + 0.5) / m
    K = int(rng.integers(1, max_degree + 1))
    decay = float(rng.uniform(0.0, 2.0))
    k = np.arange(K + 1)
    basis = np.cos(np.pi * np.outer(k, x))
    if n == 1:
        coef = rng.standard_normal(K + 1) / np.maximum(k, 1) ** decay
        coef[0] = 0.0
        R = coef @ basis
    else:
        kk = np.hypot(*np.meshgrid(k, k, indexing="ij"))
        coef = rng.standard_normal((K + 1, K + 1)) / np.maximum(kk, 1.0) ** decay
        coef[0, 0] = 0.0
        R = basis.T @ coef @ basis
    R = R - R.mean()
    return R, f"degree={K} decay={decay:.3f}"


def inequality_search(n, trials, seed, max_degree=20, resolution=None):
    """Largest interpolation ratio over random zero-mean cosine polynomials on the unit cube.

    Trial 0 is the deterministic probe ``cos(2 pi x)`` (times ``cos(2 pi y)`` in 2D).
    The search is repeated with twice as many trials from the same seed to report
    the growth of the maximum.
    """
    if trials < 100:
        raise ValueError("trials must be at least 100")
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    m = resolution or (512 if n == 1 else 96)
    rng = np.random.default_rng(seed)
    ratios = np.empty(2 * trials)
    labels = []
    for i in range(2 * trials):
        if i == 0:
            R, label = _probe_field(n, m), "probe"
        else:
            R, label = _random_field(n, m, rng, max_degree)
        ratios[i] = interpolation_ratio(R, 1.0 / m, n).ratio
        labels.append(label)
    first = int(np.argmax(ratios[:trials]))
    return InequalitySearch(
        n=n, trials=trials, seed=seed,
        c_emp=float(ratios[:trials].max()), c_doubled=float(ratios.max()),
        witness=labels[first], ratios=ratios[:trials],
    )


# ---------------------------------------------------------------------------
# Hausdorff distance between polylines


def _as_segments(obj):
    """Segments ``(P0, P1)`` of a polyline, FrontCurve, Polyline or a list of those."""
    if isinstance(obj, FrontCurve):
        pts, closed = obj.markers, True
    elif isinstance(obj, acsolver.Polyline):
        pts, closed = obj.points, obj.closed
    elif isinstance(obj, (list, tuple)) and obj and (
        isinstance(obj[0], (FrontCurve, acsolver.Polyline)) or np.ndim(obj[0]) == 2
    ):
        parts = [_as_segments(o) for o in obj]
        return np.vstack([a for a, _ in parts]), np.vstack([b for _, b in parts])
    else:
        pts, closed = np.asarray(obj, dtype=float), False
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptyInputError("empty polyline")
    if len(pts) == 1:
        return pts, pts
    if closed:
        return pts, np.roll(pts, -1, axis=0)
    return pts[:-1], pts[1:]


def _seg_dist(P, A, B):
    """Distances ``(len(P), len(A))`` from points to segments ``A -> B``."""
    d = B - A
    L = np.einsum("ij,ij->i", d, d)
    Ls = np.where(L > 0, L, 1.0)
    w = P[:, None, :] - A[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", w, d) / Ls, 0.0, 1.0)
    q = w - t[..., None] * d[None]
    return np.sqrt(np.einsum("pij,pij->pi", q, q))


def _directed(A0, A1, B0, B1, tol, chunk=256):
    """``sup_{x in A} dist(x, B)`` for polylines given as segment lists.

    Branch and bound over sub-intervals of the segments of ``A``: on an interval
    every distance-to-segment is convex, so ``min_j max(d_j(a), d_j(b))`` bounds
    the sup of the lower envelope.
    """
    best = 0.0
    xa, xb = A0, A1
    while len(xa):
        keep_a, keep_b = [], []
        for lo in range(0, len(xa), chunk):
            a, b = xa[lo:lo + chunk], xb[lo:lo + chunk]
            Da, Db = _seg_dist(a, B0, B1), _seg_dist(b, B0, B1)
            best = max(best, float(Da.min(axis=1).max()), float(Db.min(axis=1).max()))
            ub = np.maximum(Da, Db).min(axis=1)
            open_ = (ub > best + tol) & (np.linalg.norm(b - a, axis=1) > 0)
            keep_a.append(a[open_])
            keep_b.append(b[open_])
        a = np.vstack(keep_a)
        b = np.vstack(keep_b)
        m = 0.5 * (a + b)
        xa = np.vstack([a, m])
        xb = np.vstack([m, b])
    return best


def hausdorff(A, B, tol=1e-14):
    """Symmetric Hausdorff distance between two polylines (as point sets).

    ``A`` and ``B`` may be ``(n, 2)`` arrays (open polylines), FrontCurves or
    Polylines (closed when flagged), or lists of those (unions).
    """
    A0, A1 = _as_segments(A)
    B0, B1 = _as_segments(B)
    scale = max(1.0, float(np.abs(np.vstack([A0, B0])).max()))
    t = tol * scale
    return max(_directed(A0, A1, B0, B1, t), _directed(B0, B1, A0, A1, t))


# ---------------------------------------------------------------------------
# ansatz family, residual and error tracking


@dataclass
class AnsatzFamily:
    """Profile ansatz sampled on a grid at a sequence of times (mass-corrected)."""

    times: np.ndarray
    fields: list
    dist: list
    laplacian_d: list
    lam0: np.ndarray
    shift: np.ndarray
    grid: GridSpec
    eps: float
    order: int
    delta: float


def _front_shape(obj):
    if isinstance(obj, Shape):
        return obj
    if isinstance(obj, FrontCurve):
        return Polygon(obj.markers)
    raise TypeError(f"cannot use {type(obj).__name__} as a front")


def _distance_and_laplacian(front, grid):
    if grid.ndim == 1:
        # flat front at x = front (a scalar position)
        x = grid.axis(0)
        return x - float(front), np.zeros_like(x), 0.0
    shape = _front_shape(front)
    X, Y = grid.mesh()
    d = shape.signed_distance(X, Y)
    lap = shape.laplacian_d(X, Y)
    return d, lap, float(shape.mean_curvature())


def ansatz_family(fronts, grid, profile, corrector, eps, order, delta=None, sigma=None):
    """Cut-off profile ansatz built on each front of a flow trajectory.

    Parameters
    ----------
    fronts : list of (t, front)
        ``front`` is a Shape or FrontCurve in 2D, or the interface position in 1D.
    grid : GridSpec
    profile, corrector : WaveProfile, CorrectorProfile
    eps : float
    order : {0, 1}
    delta : float, optional
        Cutoff half-width; default a quarter of the initial minimal curvature radius.
    """
    sigma = profile.sigma if sigma is None else sigma
    if delta is None:
        delta = default_delta(_front_shape(fronts[0][1])) if grid.ndim == 2 else 0.25
    times, fields, dists, laps, lams = [], [], [], [], []
    for t, front in fronts:
        d, lap, kbar = _distance_and_laplacian(front, grid)
        lam0 = kbar / sigma
        times.append(float(t))
        dists.append(d)
        laps.append(lap)
        lams.append(lam0)
        fields.append(ansatz_values(d, profile, corrector, eps, delta, lam0, order))
    means = np.array([float(np.mean(f)) for f in fields])
    shift = means[0] - means
    fields = [f + s for f, s in zip(fields, shift)]
    return AnsatzFamily(
        times=np.array(times), fields=fields, dist=dists, laplacian_d=laps,
        lam0=np.array(lams), shift=shift, grid=grid, eps=eps, order=order, delta=delta,
    )


def _ansatz_laplacian(fam, k, profile, corrector):
    """Exact Laplacian of the ansatz at record ``k`` using ``|grad d| = 1``."""
    eps, delta = fam.eps, fam.delta
    d, lapd, lam0 = fam.dist[k], fam.laplacian_d[k], fam.lam0[k]
    rho = d / eps
    w = profile.well
    z, z1, z2 = cutoff(d, delta, derivatives=True)
    inner = profile.theta0_at(rho)
    inner1 = profile.dtheta0_at(rho) / eps
    inner2 = profile.ddtheta0_at(rho) / eps**2
    outer = np.where(d >= 0, 1.0, -1.0)
    if fam.order == 1:
        inner = inner - eps * lam0 * corrector.theta1_at(rho)
        inner1 = inner1 - lam0 * corrector.dtheta1_at(rho)
        inner2 = inner2 - lam0 * corrector.ddtheta1_at(rho) / eps
        fp = np.where(d >= 0, float(w.f1(1.0)), float(w.f1(-1.0)))
        outer = outer + eps * lam0 / fp
    gap = inner - outer
    dZ = z1 * gap + z * inner1
    d2Z = z2 * gap + 2.0 * z1 * inner1 + z * inner2
    return d2Z + dZ * lapd


@dataclass
class ResidualReport:
    times: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    total_l2: float
    mass_drift: float


def ansatz_residual(fam, profile, corrector):
    """Residual of the ansatz in the Allen-Cahn equation with the quadrature multiplier.

    ``delta = u_t - Delta u - eps**-2 (f(u) - mean f(u))``, with ``u_t`` by centred
    differences over the record times (interior records only when there are at
    least three; a single record is treated as stationary) and ``Delta u`` exact in
    the normal coordinate.  ``total_l2`` is the ``L2(Omega x [t_1, t_{K-1}])`` norm by the
    trapezoidal rule in time, or the spatial norm for a single record.
    """
    w = profile.well
    eps = fam.eps
    dv = fam.grid.cell_volume
    K = len(fam.times)
    idx = range(1, K - 1) if K >= 3 else range(K)
    ts, l2, linf = [], [], []
    for k in idx:
        u = fam.fields[k]
        if K >= 3:
            ut = (fam.fields[k + 1] - fam.fields[k - 1]) / (fam.times[k + 1] - fam.times[k - 1])
        else:
            ut = 0.0
        fu = w.f(u)
        res = ut - _ansatz_laplacian(fam, k, profile, corrector) - (fu - np.mean(fu)) / eps**2
        ts.append(fam.times[k])
        l2.append(np.sqrt(float(np.sum(res**2)) * dv))
        linf.append(float(np.max(np.abs(res))))
    ts, l2 = np.array(ts), np.array(l2)
    total = float(np.sqrt(np.trapezoid(l2**2, ts))) if len(ts) > 1 else float(l2[0])
    means = np.array([float(np.mean(f)) for f in fam.fields])
    return ResidualReport(ts, l2, np.array(linf), total, float(np.max(np.abs(means - means[0]))))


@dataclass
class ErrorReport:
    times: np.ndarray
    errors: np.ndarray
    initial: float
    sup: float


def error_vs_ansatz(traj_fields, fam):
    """``sup_t ||u - u_ansatz||_2`` after making the initial perturbation zero-mean.

    ``traj_fields`` are solver snapshots at the ansatz record times.
    """
    if len(traj_fields) != len(fam.fields):
        raise ShapeMismatchError(f"{len(traj_fields)} snapshots vs {len(fam.fields)} ansatz records")
    for u, a in zip(traj_fields, fam.fields):
        if np.shape(u) != np.shape(a):
            raise ShapeMismatchError(f"field shape {np.shape(u)} vs ansatz {np.shape(a)}")
    dv = fam.grid.cell_volume
    c = float(np.mean(traj_fields[0] - fam.fields[0]))
    err = np.array([np.sqrt(float(np.sum((u - a - c) ** 2)) * dv) for u, a in zip(traj_fields, fam.fields)])
    return ErrorReport(fam.times, err, float(err[0]), float(err.max()))


# ---------------------------------------------------------------------------
# convergence study


@dataclass
class ConvergenceRow:
    eps: float
    front_err: float
    front_order: float
    lambda_err: float
    lambda_order: float


def default_box(shape, eps_max, delta=None, multiple=16):
    """Smallest box with margin ``3 delta`` whose cell counts at ``h = eps_max/2`` are multiples of 16."""
    delta = default_delta(shape) if delta is None else delta
    x0, y0, x1, y1 = shape.bbox
    h = eps_max / 2
    size = []
    for lo, hi in ((x0, x1), (y0, y1)):
        half = max(abs(lo), abs(hi)) + 3 * delta
        cells = int(np.ceil(2 * half / h / multiple - 1e-9)) * multiple
        size.append(cells * h)
    return tuple(size)


def _order(a, b):
    return float(np.log2(a / b)) if a > 0 and b > 0 else float("nan")


def convergence_study(shape, eps_list, T, order=0, box=None, record_dt=0.01,
                      n_markers=256, lambda_window=(0.05, None), workers=1, on_row=None, h_ratio=0.5):
    """Sharp-interface convergence of the Allen-Cahn zero level to the flow front.

    For each ``eps`` (grid ``h = h_ratio * eps``) the solver starts from the prepared
    profile of ``shape``; the reference is the marker-method front from the
    same shape at the same record times.  The interface error is the sup over
    records of the Hausdorff distance; the multiplier error is the sup of
    ``|lambda_eps - lambda0|`` over records inside ``lambda_window``.
    """
    from .profile import cubic_profile

    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    p, c = cubic_profile()
    box = default_box(shape, eps_list[0]) if box is None else tuple(box)
    n_rec = int(round(T / record_dt))
    rec_times = [k * record_dt for k in range(n_rec + 1)]
    lo, hi = lambda_window
    hi = T if hi is None else hi
    if not any(lo - 1e-12 <= t <= hi + 1e-12 for t in rec_times):
        raise ConfigError(f"lambda_window ({lo}, {hi}) contains no record time")
    front0 = FrontCurve.from_shape(shape, n_markers)
    _, fdiag, snaps = frontflow.evolve_front(front0, T, record_times=rec_times, sigma=p.sigma)
    fronts = [s for _, s in snaps]
    rows = []
    for eps in eps_list:
        h = h_ratio * eps
        n = [int(round(L / h)) for L in box]
        grid = GridSpec.box(n[0], n[1], box[0], box[1])
        lf = signed_distance(shape, grid)
        u0 = acsolver.prepare_initial(lf, p, c, eps, order)
        dt = 0.1 * eps**2
        per = max(1, int(round(record_dt / dt)))
        dt = record_dt / per
        cfg = SimConfig(eps=eps, T=T, grid=grid, dt=dt, record_every=per, workers=workers)
        traj, _ = acsolver.run(cfg, u0)
        ferr = max(hausdorff(zl, fr) for zl, fr in zip(traj.fronts, fronts))
        t = np.asarray(traj.t)
        lam0 = np.interp(t, fdiag.t, fdiag.lambda0)
        mask = (t >= lo - 1e-12) & (t <= hi + 1e-12)
        lerr = float(np.max(np.abs(np.asarray(traj.lam) - lam0)[mask]))
        prev = rows[-1] if rows else None
        row = ConvergenceRow(
            eps=eps, front_err=ferr,
            front_order=_order(prev.front_err, ferr) if prev else float("nan"),
            lambda_err=lerr,
            lambda_order=_order(prev.lambda_err, lerr) if prev else float("nan"),
        )
        rows.append(row)
        if on_row is not None:
            on_row(row)
    return rows


# ---------------------------------------------------------------------------
# comparison principle


@dataclass
class ComparisonWitness:
    eps: float
    initial_gap: float
    violated: bool
    time: float
    location: float
    gap: float


def comparison_witness(eps=0.05, n=256, amplitude=0.5, width=0.1, steps=200):
    """Ordered initial pair ``u0 = 0 <= v0 = bump`` on ``(0, 1)`` and the first loss of ordering.

    The multiplier of ``v`` is positive (``f > 0`` on ``(0, 1)``), so away from the
    bump ``v`` is pushed below the constant state ``u``, which is stationary.
    """
    grid = GridSpec.interval(n, 0.0, 1.0)
    x = grid.axis(0)
    u = ScalarField(np.zeros(n), grid, eps)
    v = ScalarField(amplitude * np.exp(-(((x - 0.5) / width) ** 2)), grid, eps)
    cfg = SimConfig(eps=eps, T=steps * 0.1 * eps**2, grid=grid, record_every=1)
    gap0 = float(np.min(v.values - u.values))
    for k in range(1, cfg.n_steps + 1):
        u = acsolver.step(u, cfg)
        v = acsolver.step(v, cfg)
        diff = v.values - u.values
        i = int(np.argmin(diff))
        if diff[i] < 0:
            return ComparisonWitness(eps, gap0, True, k * cfg.dt, float(x[i]), float(diff[i]))
    return ComparisonWitness(eps, gap0, False, float("nan"), float("nan"), 0.0)
