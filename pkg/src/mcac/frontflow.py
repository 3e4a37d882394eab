"""Volume-preserving mean curvature flow.

Two discretisations:

* a marker method for closed planar curves, with uniform-arclength
  redistribution after every explicit Euler step;
* an exact ODE reduction for concentric spheres in any dimension.

The flow is ``d_t = Delta d - mean(Delta d)`` with ``d`` the signed distance
(negative in the minus phase).  A point of the front moves along the outward
normal with speed ``mean(kappa) - kappa``; we report ``V = kappa - mean(kappa)``,
which is positive where the front moves inward.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma
from shapely.geometry import LinearRing

from .errors import GeometryError, SelfIntersectError, StepSizeError
from .geometry import circumscribed_curvature, polygon_area, polygon_length
from .profile import cubic_sigma

CFL = 0.25
SUBSTEP_FRACTION = 0.01


@dataclass
class FrontCurve:
    """Closed polygon of markers with the minus phase on its left.

    A lone curve is counter-clockwise around the minus phase; an inner
    boundary of an annular minus phase runs clockwise.
    """

    markers: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.markers = np.asarray(self.markers, dtype=float)
        if self.markers.ndim != 2 or self.markers.shape[1] != 2 or len(self.markers) < 4:
            raise GeometryError("a front needs at least four 2D markers")

    @classmethod
    def from_shape(cls, shape, n_markers, t=0.0, clockwise=False):
        pts = shape.markers(n_markers)
        return cls(pts[::-1].copy() if clockwise else pts, t)

    @property
    def n(self):
        return len(self.markers)

    def curvature(self):
        return circumscribed_curvature(self.markers)

    def segment_lengths(self):
        return np.linalg.norm(np.roll(self.markers, -1, axis=0) - self.markers, axis=1)

    def dual_lengths(self):
        seg = self.segment_lengths()
        return 0.5 * (seg + np.roll(seg, 1))

    def outward_normals(self):
        tang = np.roll(self.markers, -1, axis=0) - np.roll(self.markers, 1, axis=0)
        tang /= np.linalg.norm(tang, axis=1)[:, None]
        return np.column_stack([tang[:, 1], -tang[:, 0]])

    @property
    def signed_area(self):
        return polygon_area(self.markers)

    @property
    def length(self):
        return polygon_length(self.markers)

    def is_simple(self):
        return LinearRing(self.markers).is_simple

    def copy(self):
        return FrontCurve(self.markers.copy(), self.t)


def _components(front):
    if isinstance(front, FrontCurve):
        return [front], True
    comps = list(front)
    if not comps:
        raise GeometryError("empty front")
    return comps, False


def mean_curvature(front):
    """Length-weighted curvature average over every component of the front."""
    comps, _ = _components(front)
    num = sum(float(np.sum(c.curvature() * c.dual_lengths())) for c in comps)
    den = sum(float(np.sum(c.dual_lengths())) for c in comps)
    return num / den


def enclosed_area(front):
    comps, _ = _components(front)
    return sum(c.signed_area for c in comps)


def front_length(front):
    comps, _ = _components(front)
    return sum(c.length for c in comps)


def vpmcf_velocity(front):
    """Per-marker normal velocity ``kappa - mean(kappa)`` (positive = moving inward).

    ``front`` is a FrontCurve or a sequence of them; the curvature average is
    global over all components, weighted by length.
    """
    comps, single = _components(front)
    for c in comps:
        if not c.is_simple():
            raise SelfIntersectError("front is self-intersecting")
    kappa = [c.curvature() for c in comps]
    weights = [c.dual_lengths() for c in comps]
    kbar = sum(float(np.sum(k * w)) for k, w in zip(kappa, weights)) / sum(
        float(np.sum(w)) for w in weights
    )
    out = [k - kbar for k in kappa]
    return out[0] if single else out


def redistribute(markers, n=None):
    """Resample a closed curve at uniform arclength with a periodic cubic spline."""
    n = len(markers) if n is None else n
    closed = np.vstack([markers, markers[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    spline = CubicSpline(s, closed, bc_type="periodic")
    # one refinement pass: measure spline arclength on a fine sampling
    fine = np.linspace(0.0, s[-1], 8 * n + 1)
    pts = spline(fine)
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    target = np.arange(n) * arc[-1] / n
    return spline(np.interp(target, arc, fine))


def _restore_area(comps, target):
    for _ in range(2):
        area = enclosed_area(comps)
        length = front_length(comps)
        eta = (target - area) / length
        for c in comps:
            c.markers = c.markers + eta * c.outward_normals()


def max_stable_dt(front):
    comps, _ = _components(front)
    h = min(float(c.segment_lengths().min()) for c in comps)
    return CFL * h * h


def step_front(front, dt, area_target=None):
    """One explicit Euler step of the flow followed by redistribution.

    The enclosed area is projected back onto ``area_target`` (the pre-step
    area by default) by a uniform normal shift.

    Raises
    ------
    StepSizeError
        If ``dt`` exceeds ``0.25 * (min marker spacing)**2``.
    SelfIntersectError
        If the front self-intersects before or after the step.
    """
    comps, single = _components(front)
    if dt > max_stable_dt(comps) * (1 + 1e-12):
        raise StepSizeError(f"dt={dt:.3e} exceeds the parabolic limit {max_stable_dt(comps):.3e}")
    target = enclosed_area(comps) if area_target is None else area_target
    vel = vpmcf_velocity(comps)
    new = []
    for c, v in zip(comps, vel):
        moved = c.markers - dt * v[:, None] * c.outward_normals()
        new.append(FrontCurve(redistribute(moved), c.t + dt))
    _restore_area(new, target)
    for c in new:
        if not c.is_simple():
            raise SelfIntersectError(f"front self-intersects at t={c.t:.4g}")
    return new[0] if single else new


@dataclass
class FlowDiagnostics:
    t: list = field(default_factory=list)
    area: list = field(default_factory=list)
    length: list = field(default_factory=list)
    kbar: list = field(default_factory=list)
    lambda0: list = field(default_factory=list)

    def record(self, t, area, length, kbar, sigma):
        self.t.append(float(t))
        self.area.append(float(area))
        self.length.append(float(length))
        self.kbar.append(float(kbar))
        self.lambda0.append(float(kbar) / sigma)

    def rows(self):
        return list(zip(self.t, self.area, self.length, self.kbar, self.lambda0))

    def lambda0_at(self, t):
        return np.interp(t, self.t, self.lambda0)


def evolve_front(front, T, dt=None, record_times=None, record_every=None, sigma=None):
    """Run the marker method to time ``T``.

    Parameters
    ----------
    front : FrontCurve or list of FrontCurve
    T : float
    dt : float, optional
        Upper bound on the step; defaults to 0.8 of the parabolic limit and is
        reduced whenever the markers get closer.
    record_times : sequence of float, optional
        Times at which snapshots are stored exactly (steps are shortened to hit them).
    record_every : int, optional
        Alternatively, store a snapshot every this many steps.
    sigma : float, optional
        Surface tension constant for the multiplier diagnostic (cubic well by default).

    Returns
    -------
    final front, FlowDiagnostics, list of (t, front) snapshots
    """
    sigma = cubic_sigma() if sigma is None else sigma
    comps, single = _components(front)
    comps = [c.copy() for c in comps]
    area0 = enclosed_area(comps)
    t = comps[0].t
    diag = FlowDiagnostics()
    snaps = []
    times = sorted(set(float(s) for s in record_times)) if record_times is not None else []

    def save():
        diag.record(t, enclosed_area(comps), front_length(comps), mean_curvature(comps), sigma)
        snaps.append((t, [c.copy() for c in comps] if not single else comps[0].copy()))

    if not times or times[0] <= t + 1e-14:
        save()
        times = [s for s in times if s > t + 1e-14]
    step = 0
    while t < T - 1e-14:
        limit = 0.8 * max_stable_dt(comps)
        h = limit if dt is None else min(dt, limit)
        h = min(h, T - t)
        if times:
            h = min(h, times[0] - t)
        comps = step_front(comps, h, area_target=area0)
        t += h
        for c in comps:
            c.t = t
        step += 1
        hit = times and abs(t - times[0]) < 1e-12
        if hit:
            times.pop(0)
        if hit or (record_every and step % record_every == 0) or (record_times is None and t >= T - 1e-14):
            save()
    final = comps[0] if single else comps
    return final, diag, snaps


# ---------------------------------------------------------------------------
# radial reduction


def unit_ball_volume(n):
    return np.pi ** (n / 2) / gamma(n / 2 + 1)


@dataclass
class RadialState:
    """Concentric spheres ``R_1 < ... < R_m`` in dimension ``n``.

    ``signs[i] = +1`` means the plus phase lies just outside radius ``R_i``.
    """

    n: int
    radii: np.ndarray
    signs: np.ndarray = None

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        m = len(self.radii)
        if self.signs is None:
            self.signs = np.array([1.0 if (m - 1 - i) % 2 == 0 else -1.0 for i in range(m)])
        self.signs = np.asarray(self.signs, dtype=float)
        if self.n < 2:
            raise ValueError("dimension must be at least 2")
        if m == 0 or len(self.signs) != m:
            raise ValueError("radii and signs must be non-empty and of equal length")
        if np.any(self.radii <= 0) or np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        if np.any(np.abs(self.signs) != 1) or np.any(self.signs[1:] == self.signs[:-1]):
            raise ValueError("signs must be ±1 and alternate")

    def mean_curvature(self):
        n, R, s = self.n, self.radii, self.signs
        return (n - 1) * np.sum(s * R ** (n - 2)) / np.sum(R ** (n - 1))

    def volume(self):
        """Volume of the minus phase, a signed sum of balls."""
        return float(np.sum(self.signs * unit_ball_volume(self.n) * self.radii**self.n))

    def surface(self):
        return float(self.n * unit_ball_volume(self.n) * np.sum(self.radii ** (self.n - 1)))


def radial_rhs(s):
    """``dR_i/dt = -(n-1)/R_i + sign_i * Kbar`` for concentric spheres."""
    return -(s.n - 1) / s.radii + s.signs * s.mean_curvature()


@dataclass
class CollapseEvent:
    t: float
    index: int
    radius: float


@dataclass
class RadialResult:
    times: np.ndarray
    radii: np.ndarray
    derivatives: np.ndarray
    diagnostics: FlowDiagnostics
    collapse: CollapseEvent = None


def radial_integrate(s, T, dt, sigma=None, record_every=1):
    """Classical RK4 on ``radial_rhs``; halts when a radius drops below ``10 dt``.

    Each step of size ``dt`` is split into substeps whenever a radius would
    otherwise move by more than 1% of the smallest radius, which keeps the
    volume drift at roundoff level up to the collapse guard.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    sigma = cubic_sigma() if sigma is None else sigma
    n, signs = s.n, s.signs

    def rhs(R):
        return radial_rhs(_fast_state(n, R, signs))

    R = s.radii.copy()
    t = 0.0
    times, traj, ders = [0.0], [R.copy()], [rhs(R)]
    diag = FlowDiagnostics()
    st = _fast_state(n, R, signs)
    diag.record(0.0, st.volume(), st.surface(), st.mean_curvature(), sigma)
    collapse = None
    nsteps = int(np.ceil(T / dt - 1e-12))
    for k in range(nsteps):
        h = min(dt, T - t)
        # the ODE stiffens like 1/R_min**2; substep so h_sub * |R'| stays a small fraction of R_min
        m = max(1, int(np.ceil(h * np.max(np.abs(rhs(R))) / (SUBSTEP_FRACTION * R.min()))))
        R_new = R
        for _ in range(m):
            R_new = _rk4(rhs, R_new, h / m)
            if R_new.min() <= 0:
                break
        if np.any(R_new < 10 * dt) or np.any(np.diff(R_new) <= 0):
            i = int(np.argmin(R_new))
            collapse = CollapseEvent(t=t, index=i, radius=float(R[i]))
            break
        R = R_new
        t += h
        if (k + 1) % record_every == 0 or k == nsteps - 1:
            st = _fast_state(n, R, signs)
            times.append(t)
            traj.append(R.copy())
            ders.append(rhs(R))
            diag.record(t, st.volume(), st.surface(), st.mean_curvature(), sigma)
    return RadialResult(np.array(times), np.array(traj), np.array(ders), diag, collapse)


def _rk4(rhs, R, h):
    k1 = rhs(R)
    k2 = rhs(R + 0.5 * h * k1)
    k3 = rhs(R + 0.5 * h * k2)
    k4 = rhs(R + h * k3)
    return R + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _fast_state(n, R, signs):
    st = object.__new__(RadialState)
    st.n, st.radii, st.signs = n, R, signs
    return st
