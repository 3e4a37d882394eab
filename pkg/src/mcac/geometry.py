"""Signed distance, curvature and tubular coordinates for planar interfaces.

Sign convention: ``d < 0`` inside the enclosed phase (the minus phase) and
``d > 0`` outside.  The unit normal ``n = grad d`` therefore points outward.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.ndimage import map_coordinates

from .errors import ChartFoldError, GeometryError


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centred grid on an axis-aligned box (1D or 2D)."""

    shape: tuple
    lower: tuple
    upper: tuple

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if not (len(self.shape) == len(self.lower) == len(self.upper)):
            raise ValueError("shape, lower and upper must have the same length")
        if len(self.shape) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if any(n < 2 for n in self.shape) or any(u <= l for l, u in zip(self.lower, self.upper)):
            raise ValueError("degenerate grid")

    @classmethod
    def box(cls, nx, ny, Lx, Ly):
        """Grid on ``[-Lx/2, Lx/2] x [-Ly/2, Ly/2]``."""
        return cls((nx, ny), (-Lx / 2, -Ly / 2), (Lx / 2, Ly / 2))

    @classmethod
    def interval(cls, n, lo=-1.0, hi=1.0):
        return cls((n,), (lo,), (hi,))

    @property
    def ndim(self):
        return len(self.shape)

    @property
    def spacing(self):
        return tuple((u - l) / n for l, u, n in zip(self.lower, self.upper, self.shape))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def volume(self):
        return float(np.prod([u - l for l, u in zip(self.lower, self.upper)]))

    def axis(self, k):
        h = self.spacing[k]
        return self.lower[k] + (np.arange(self.shape[k]) + 0.5) * h

    def mesh(self):
        axes = [self.axis(k) for k in range(self.ndim)]
        return np.meshgrid(*axes, indexing="ij") if self.ndim == 2 else axes

    def to_index(self, x, y):
        """Fractional array indices of physical points (for interpolation)."""
        hx, hy = self.spacing
        return (np.asarray(x) - self.lower[0]) / hx - 0.5, (np.asarray(y) - self.lower[1]) / hy - 0.5


# ---------------------------------------------------------------------------
# shapes


def _segment_distance(px, py, ax, ay, bx, by):
    """Distances from points ``(m,)`` to segments ``(n,)``; returns ``(m, n)`` plus params."""
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    L2 = np.where(L2 > 0, L2, 1.0)
    t = ((px[:, None] - ax) * dx + (py[:, None] - ay) * dy) / L2
    t = np.clip(t, 0.0, 1.0)
    qx = ax + t * dx
    qy = ay + t * dy
    return np.hypot(px[:, None] - qx, py[:, None] - qy), t


def winding_number(px, py, vx, vy):
    """Winding number of the closed polygon ``(vx, vy)`` around each point."""
    px = np.asarray(px, dtype=float).ravel()
    py = np.asarray(py, dtype=float).ravel()
    ax, ay = vx, vy
    bx, by = np.roll(vx, -1), np.roll(vy, -1)
    wn = np.zeros(px.shape, dtype=int)
    for i in range(len(vx)):
        cross = (bx[i] - ax[i]) * (py - ay[i]) - (px - ax[i]) * (by[i] - ay[i])
        up = (ay[i] <= py) & (by[i] > py) & (cross > 0)
        down = (ay[i] > py) & (by[i] <= py) & (cross < 0)
        wn += up.astype(int) - down.astype(int)
    return wn


def circumscribed_curvature(points):
    """Signed curvature at each vertex of a closed polygon from its neighbours.

    Positive where the polygon is locally convex for counter-clockwise order.
    """
    a = np.roll(points, 1, axis=0)
    b = points
    c = np.roll(points, -1, axis=0)
    ab = b - a
    bc = c - b
    ac = c - a
    cross = ab[:, 0] * bc[:, 1] - ab[:, 1] * bc[:, 0]
    denom = np.linalg.norm(ab, axis=1) * np.linalg.norm(bc, axis=1) * np.linalg.norm(ac, axis=1)
    return 2.0 * cross / denom


def polygon_area(points):
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_length(points):
    return float(np.sum(np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)))


class Shape:
    """Closed planar curve bounding the minus phase."""

    def signed_distance(self, x, y):
        raise NotImplementedError

    def project(self, x, y):
        """Foot point on the curve and curvature there, for each query point."""
        raise NotImplementedError

    def laplacian_d(self, x, y):
        """``Delta d = kappa / (1 + d kappa)`` along the normal through the foot point."""
        d = self.signed_distance(x, y)
        _, _, kappa = self.project(x, y)
        return kappa / (1.0 + d * kappa)

    def markers(self, n):
        raise NotImplementedError

    @property
    def bbox(self):
        raise NotImplementedError

    @property
    def min_curvature_radius(self):
        raise NotImplementedError

    def mean_curvature(self):
        """Length-weighted average of the curvature, ``2 pi / L`` for simple curves."""
        return 2.0 * np.pi / self.length

    def describe(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Circle(Shape):
    radius: float
    center: tuple = (0.0, 0.0)

    def signed_distance(self, x, y):
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) - self.radius

    def project(self, x, y):
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        r = np.hypot(dx, dy)
        r = np.where(r > 0, r, 1.0)
        fx = self.center[0] + self.radius * dx / r
        fy = self.center[1] + self.radius * dy / r
        return fx, fy, np.full(np.shape(fx), 1.0 / self.radius)

    def markers(self, n):
        t = 2 * np.pi * np.arange(n) / n
        return np.column_stack(
            [self.center[0] + self.radius * np.cos(t), self.center[1] + self.radius * np.sin(t)]
        )

    @property
    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    @property
    def min_curvature_radius(self):
        return self.radius

    @property
    def length(self):
        return 2 * np.pi * self.radius

    @property
    def area(self):
        return np.pi * self.radius**2

    def describe(self):
        return {"type": "circle", "radius": self.radius, "center": list(self.center)}


@dataclass(frozen=True)
class Ellipse(Shape):
    a: float
    b: float
    center: tuple = (0.0, 0.0)
    newton_iters: int = field(default=60, repr=False)

    def _foot(self, x, y):
        x = np.asarray(x, dtype=float) - self.center[0]
        y = np.asarray(y, dtype=float) - self.center[1]
        swap = self.b > self.a
        a, b = (self.b, self.a) if swap else (self.a, self.b)
        if swap:
            x, y = y, x
        sx, sy = np.sign(x), np.sign(y)
        sx = np.where(sx == 0, 1.0, sx)
        sy = np.where(sy == 0, 1.0, sy)
        X, Y = np.abs(x), np.abs(y)
        r0 = (a / b) ** 2
        z0, z1 = X / a, Y / b
        near = (Y <= 1e-12 * b) & (X < (a * a - b * b) / a)
        z1 = np.where(near, 1.0, z1)
        # g(s) = (r0 z0/(s+r0))^2 + (z1/(s+1))^2 - 1 is convex and decreasing on s > -1;
        # Newton from a lower bound of the root converges monotonically.
        s = np.maximum(z1 - 1.0, r0 * z0 - r0)
        for _ in range(self.newton_iters):
            p = r0 * z0 / (s + r0)
            q = np.where(z1 > 0, z1 / np.where(z1 > 0, s + 1.0, 1.0), 0.0)
            g = p * p + q * q - 1.0
            dg = -2.0 * (p * p / (s + r0) + np.where(z1 > 0, q * q / np.where(z1 > 0, s + 1.0, 1.0), 0.0))
            step = np.where(dg < 0, g / np.where(dg < 0, dg, -1.0), 0.0)
            s = s - step
        with np.errstate(divide="ignore", invalid="ignore"):
            fy = np.where(Y > 0, Y / (s + 1.0), 0.0)
        fx = r0 * X / (s + r0)
        # points on (or within roundoff of) the major axis inside the evolute have a foot off the axis
        on_axis = (Y <= 1e-12 * b) & (X < (a * a - b * b) / a)
        if np.any(on_axis):
            x0 = a * a * X / (a * a - b * b)
            y0 = b * np.sqrt(np.clip(1.0 - (x0 / a) ** 2, 0.0, None))
            fx = np.where(on_axis, x0, fx)
            fy = np.where(on_axis, y0, fy)
        # points on the minor axis
        on_minor = X == 0
        fx = np.where(on_minor & ~on_axis, 0.0, fx)
        fy = np.where(on_minor & ~on_axis, b, fy)
        fx, fy = sx * fx, sy * fy
        if swap:
            fx, fy = fy, fx
        return fx + self.center[0], fy + self.center[1]

    def signed_distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fx, fy = self._foot(x, y)
        dist = np.hypot(x - fx, y - fy)
        inside = ((x - self.center[0]) / self.a) ** 2 + ((y - self.center[1]) / self.b) ** 2 < 1.0
        return np.where(inside, -dist, dist)

    def curvature_at(self, fx, fy):
        u = np.asarray(fx) - self.center[0]
        v = np.asarray(fy) - self.center[1]
        a, b = self.a, self.b
        return 1.0 / (a * a * b * b * (u * u / a**4 + v * v / b**4) ** 1.5)

    def project(self, x, y):
        fx, fy = self._foot(x, y)
        return fx, fy, self.curvature_at(fx, fy)

    def markers(self, n):
        # equal arclength spacing via the incomplete elliptic integral (parameter from the minor axis)
        t_dense = np.linspace(0.0, 2 * np.pi, 20 * n + 1)
        pts = np.column_stack([self.a * np.cos(t_dense), self.b * np.sin(t_dense)])
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        target = np.arange(n) * s[-1] / n
        t = np.interp(target, s, t_dense)
        return np.column_stack(
            [self.center[0] + self.a * np.cos(t), self.center[1] + self.b * np.sin(t)]
        )

    @property
    def bbox(self):
        cx, cy = self.center
        return (cx - self.a, cy - self.b, cx + self.a, cy + self.b)

    @property
    def min_curvature_radius(self):
        lo, hi = sorted((self.a, self.b))
        return lo * lo / hi

    @property
    def length(self):
        a, b = max(self.a, self.b), min(self.a, self.b)
        return 4 * a * special.ellipe(1.0 - (b / a) ** 2)

    @property
    def area(self):
        return np.pi * self.a * self.b

    def describe(self):
        return {"type": "ellipse", "a": self.a, "b": self.b, "center": list(self.center)}


class Polygon(Shape):
    """Closed polyline; vertices in counter-clockwise order enclose the minus phase."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise GeometryError("a polygon needs at least three 2D vertices")
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        if polygon_area(pts) < 0:
            pts = pts[::-1]
        self.points = pts

    def _segments(self):
        a = self.points
        b = np.roll(a, -1, axis=0)
        return a[:, 0], a[:, 1], b[:, 0], b[:, 1]

    def _nearest(self, x, y, chunk=4096):
        x = np.asarray(x, dtype=float)
        shape = x.shape
        px = x.ravel()
        py = np.asarray(y, dtype=float).ravel()
        ax, ay, bx, by = self._segments()
        dist = np.empty(px.shape)
        idx = np.empty(px.shape, dtype=int)
        par = np.empty(px.shape)
        for lo in range(0, len(px), chunk):
            sl = slice(lo, lo + chunk)
            D, T = _segment_distance(px[sl], py[sl], ax, ay, bx, by)
            j = np.argmin(D, axis=1)
            rows = np.arange(len(j))
            dist[sl] = D[rows, j]
            idx[sl] = j
            par[sl] = T[rows, j]
        return dist.reshape(shape), idx.reshape(shape), par.reshape(shape)

    def signed_distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dist, _, _ = self._nearest(x, y)
        inside = winding_number(x, y, self.points[:, 0], self.points[:, 1]).reshape(x.shape) != 0
        return np.where(inside, -dist, dist)

    def vertex_curvature(self):
        return circumscribed_curvature(self.points)

    def project(self, x, y):
        _, j, t = self._nearest(x, y)
        a = self.points[j]
        b = self.points[(j + 1) % len(self.points)]
        foot = a + t[..., None] * (b - a)
        kv = self.vertex_curvature()
        kappa = (1 - t) * kv[j] + t * kv[(j + 1) % len(self.points)]
        return foot[..., 0], foot[..., 1], kappa

    def markers(self, n=None):
        return self.points.copy()

    @property
    def bbox(self):
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return (lo[0], lo[1], hi[0], hi[1])

    @property
    def min_curvature_radius(self):
        k = np.abs(self.vertex_curvature())
        return float(1.0 / k.max()) if k.max() > 0 else np.inf

    @property
    def length(self):
        return polygon_length(self.points)

    @property
    def area(self):
        return polygon_area(self.points)

    def mean_curvature(self):
        pts = self.points
        seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        w = 0.5 * (seg + np.roll(seg, 1))
        return float(np.sum(self.vertex_curvature() * w) / np.sum(w))

    def describe(self):
        return {"type": "polyline", "points": self.points.tolist()}


def square(side=1.0, n_per_side=64, center=(0.0, 0.0)):
    """Axis-aligned square as a densely sampled polygon."""
    s = side / 2
    t = np.linspace(-s, s, n_per_side, endpoint=False)
    pts = np.concatenate(
        [
            np.column_stack([t, np.full_like(t, -s)]),
            np.column_stack([np.full_like(t, s), t]),
            np.column_stack([-t, np.full_like(t, s)]),
            np.column_stack([np.full_like(t, -s), -t]),
        ]
    )
    return Polygon(pts + np.asarray(center))


def shape_from_config(cfg):
    kind = cfg.get("type")
    center = tuple(cfg.get("center", (0.0, 0.0)))
    if kind == "circle":
        return Circle(float(cfg["radius"]), center)
    if kind == "ellipse":
        return Ellipse(float(cfg["a"]), float(cfg["b"]), center)
    if kind == "square":
        return square(float(cfg.get("side", 1.0)), int(cfg.get("n_per_side", 64)), center)
    if kind == "polyline":
        return Polygon(cfg["points"])
    raise ValueError(f"unknown shape type {kind!r}")


def default_delta(shape):
    """Tube half-width: a quarter of the smallest radius of curvature."""
    return 0.25 * shape.min_curvature_radius


# ---------------------------------------------------------------------------
# level functions


@dataclass
class LevelFunction:
    """Signed distance sampled on a 2D grid."""

    grid: GridSpec
    d: np.ndarray
    source: object = None
    delta: float = None

    def gradient(self):
        hx, hy = self.grid.spacing
        gx, gy = np.gradient(self.d, hx, hy, edge_order=2)
        return gx, gy

    def laplacian(self):
        """Five-point Laplacian of ``d`` (one-sided rows at the box edge are dropped to nan)."""
        hx, hy = self.grid.spacing
        d = self.d
        out = np.full_like(d, np.nan)
        out[1:-1, 1:-1] = (d[2:, 1:-1] - 2 * d[1:-1, 1:-1] + d[:-2, 1:-1]) / hx**2 + (
            d[1:-1, 2:] - 2 * d[1:-1, 1:-1] + d[1:-1, :-2]
        ) / hy**2
        return out

    def interpolate(self, field_, x, y, order=1):
        ix, iy = self.grid.to_index(x, y)
        return map_coordinates(field_, [np.atleast_1d(ix), np.atleast_1d(iy)], order=order, mode="nearest")

    def to_rows(self):
        X, Y = self.grid.mesh()
        return np.column_stack([X.ravel(), Y.ravel(), self.d.ravel()])


def signed_distance(shape, grid, delta=None):
    """Sample the signed distance of ``shape`` on ``grid``.

    Raises
    ------
    GeometryError
        If the shape comes closer than ``3 delta`` to the box boundary.
    """
    if grid.ndim != 2:
        raise GeometryError("signed_distance needs a 2D grid")
    delta = default_delta(shape) if delta is None else float(delta)
    x0, y0, x1, y1 = shape.bbox
    margin = min(x0 - grid.lower[0], y0 - grid.lower[1], grid.upper[0] - x1, grid.upper[1] - y1)
    if margin < 3 * delta:
        raise GeometryError(f"shape margin {margin:.4g} is below 3*delta = {3 * delta:.4g}")
    X, Y = grid.mesh()
    return LevelFunction(grid=grid, d=shape.signed_distance(X, Y), source=shape, delta=delta)


def curvature_sum(lf, at):
    """Sum of principal curvatures ``Delta d`` at a point near the front, by central differences."""
    x, y = at
    h = max(lf.grid.spacing)
    dval = float(lf.interpolate(lf.d, x, y)[0])
    if abs(dval) > 5 * h:
        raise GeometryError(f"point is {abs(dval):.3g} from the front (> 5h)")
    lap = lf.laplacian()
    return float(lf.interpolate(np.nan_to_num(lap), x, y)[0])


def jacobian(r, curvatures):
    """Volume factor ``prod(1 + r kappa_i)`` of the normal-coordinate chart."""
    factors = 1.0 + np.asarray(r, dtype=float)[..., None] * np.asarray(curvatures, dtype=float)
    if np.any(factors <= 0):
        raise ChartFoldError("normal chart folds: 1 + r kappa <= 0")
    return np.prod(factors, axis=-1)


@dataclass
class TubularChart:
    """Front samples with normals and curvatures, used for integration in ``(rho, s)``.

    ``ds`` are arclength quadrature weights of the samples; ``s`` their
    arclength coordinate.
    """

    points: np.ndarray
    normals: np.ndarray
    curvatures: np.ndarray
    ds: np.ndarray
    s: np.ndarray
    delta: float
    eps: float

    @classmethod
    def from_shape(cls, shape, n_samples, eps, delta=None):
        pts = shape.markers(n_samples)
        nxt = np.roll(pts, -1, axis=0)
        seg = np.linalg.norm(nxt - pts, axis=1)
        ds = 0.5 * (seg + np.roll(seg, 1))
        tang = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
        tang /= np.linalg.norm(tang, axis=1)[:, None]
        normals = np.column_stack([tang[:, 1], -tang[:, 0]])
        _, _, kappa = shape.project(pts[:, 0], pts[:, 1])
        s = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
        delta = default_delta(shape) if delta is None else delta
        if delta * np.max(np.abs(kappa)) >= 1.0:
            raise ChartFoldError("tube half-width exceeds the smallest radius of curvature")
        return cls(pts, normals, np.asarray(kappa)[:, None], ds, s, float(delta), float(eps))


def tube_integrate(chart, integrand, rho_half_width, n_rho=256, h_shift=0.0):
    """``iint integrand(rho, s) eps J(rho, s) drho ds`` over ``|rho| <= rho_half_width``.

    ``J = prod(1 + eps (rho + h) kappa_i)``; the shift ``h`` is zero at order 0.
    """
    if chart.eps * rho_half_width > chart.delta * (1 + 1e-12):
        raise ValueError("eps * rho_half_width must not exceed the tube half-width")
    nodes, weights = np.polynomial.legendre.leggauss(n_rho)
    rho = rho_half_width * nodes
    wr = rho_half_width * weights
    R, S = np.meshgrid(rho, chart.s, indexing="ij")
    vals = np.asarray(integrand(R, S), dtype=float) * np.ones_like(R)
    J = jacobian(chart.eps * (rho[:, None] + h_shift), chart.curvatures)
    return float(np.einsum("i,j,ij->", wr, chart.ds, vals * chart.eps * J))
