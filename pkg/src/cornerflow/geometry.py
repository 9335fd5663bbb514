"""Curve geometry of graphs y = phi(x): metric, curvature, arclength.

Arclength integrates the metric from x = 0 outward (so s < 0 left of the
origin) and is computed piecewise between detected slope breaks, which keeps
it exact for piecewise-linear profiles such as corner data.
"""
import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import GridMismatch, NonFiniteGeometry, ValidationError
from .grid import GridFunction, _fd

_EDGE_MARGIN = 4  # nodes per side polluted by one-sided stencils


class CurveGeometry:
    """Per-node metric v, curvature k, arclength s, normal coordinate x.n."""

    def __init__(self, xs, metric, curvature, arclength, normal_coord):
        xs = np.asarray(xs, dtype=float)
        metric = np.asarray(metric, dtype=float)
        curvature = np.asarray(curvature, dtype=float)
        arclength = np.asarray(arclength, dtype=float)
        normal_coord = np.asarray(normal_coord, dtype=float)
        for name, arr in (("metric", metric), ("curvature", curvature),
                          ("arclength", arclength),
                          ("normal_coord", normal_coord)):
            if arr.shape != xs.shape or not np.all(np.isfinite(arr)):
                raise NonFiniteGeometry(f"{name} non-finite or wrong shape")
        if np.min(metric) < 1.0 - 1e-12:
            raise ValidationError("metric fell below 1")
        if np.min(np.diff(arclength)) <= 0.0:
            raise ValidationError("arclength not strictly increasing")
        h = (xs[-1] - xs[0]) / (xs.size - 1)
        if np.any(arclength[xs < -1e-9 * h] >= 0.0):
            raise ValidationError("arclength must be negative left of origin")
        self.xs = xs
        self.metric = metric
        self.curvature = curvature
        self.arclength = arclength
        self.normal_coord = normal_coord
        self.h = float(h)

    @property
    def n(self):
        return self.xs.size

    def same_grid(self, other_xs):
        other_xs = np.asarray(other_xs)
        return (self.xs.size == other_xs.size
                and abs(self.xs[0] - other_xs[0]) <= 1e-9
                and abs(self.xs[-1] - other_xs[-1]) <= 1e-9)


def detect_kinks(ys, floor_scale=1.0):
    """Indices where the second difference spikes like a slope break.

    A node is a kink when its second difference dominates both neighbours
    by 8x, carries at least a quarter of the global maximum, and clears an
    absolute floor (so smooth profiles report none).
    """
    ys = np.asarray(ys, dtype=float)
    d2 = np.abs(ys[:-2] - 2.0 * ys[1:-1] + ys[2:])
    if d2.size == 0 or not np.any(d2 > 0.0):
        return []
    gmax = d2.max()
    floor = 1e-12 * max(1.0, float(floor_scale))
    kinks = []
    for i in range(d2.size):
        left = d2[i - 1] if i > 0 else 0.0
        right = d2[i + 1] if i + 1 < d2.size else 0.0
        if (d2[i] > floor and d2[i] >= 0.25 * gmax
                and d2[i] >= 8.0 * max(left, right, floor)):
            kinks.append(i + 1)  # d2[i] sits at node i+1
    return kinks


def _segment_slopes(ys, h):
    """First derivative that never differences across the segment ends."""
    n = ys.size
    if n == 2:
        d = np.full(2, (ys[1] - ys[0]) / h)
        return d
    return _fd(ys, h, 1)


def arclength_from_zero(xs, ys):
    """Arclength s(x1) with s(0) = 0, integrated piecewise between kinks.

    Within each smooth segment the slope comes from one-sided stencils that
    stay inside the segment, then the metric is integrated by cumulative
    Simpson. Exact for piecewise-linear ys.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = xs.size
    h = (xs[-1] - xs[0]) / (n - 1)
    i0 = int(np.argmin(np.abs(xs)))
    if abs(xs[i0]) > 1e-9 * h:
        raise ValidationError("grid must contain x = 0 as a node")
    bounds = [0] + detect_kinks(ys, np.max(np.abs(ys))) + [n - 1]
    bounds = sorted(set(bounds))
    s = np.empty(n)
    s[0] = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        seg = ys[a:b + 1]
        v = np.sqrt(1.0 + _segment_slopes(seg, h) ** 2)
        if seg.size == 2:
            local = np.array([0.0, 0.5 * h * (v[0] + v[1])])
        else:
            local = cumulative_simpson(v, dx=h, initial=0.0)
        s[a:b + 1] = s[a] + local
    return s - s[i0]


def geometry(phi):
    """CurveGeometry of the graph of phi (4th-order derivatives inside)."""
    if not isinstance(phi, GridFunction):
        raise ValidationError("geometry expects a GridFunction")
    h = phi.h
    dphi = _fd(phi.ys, h, 1)
    d2phi = _fd(phi.ys, h, 2)
    if not (np.all(np.isfinite(dphi)) and np.all(np.isfinite(d2phi))):
        raise NonFiniteGeometry("derivatives of phi are not finite")
    v = np.sqrt(1.0 + dphi * dphi)
    k = d2phi / v ** 3
    xn = (phi.ys - phi.xs * dphi) / v
    radius = np.hypot(phi.xs, phi.ys)
    if np.any(np.abs(xn) > radius * (1.0 + 1e-12) + 1e-12):
        raise ValidationError("normal coordinate exceeded |x|")
    s = arclength_from_zero(phi.xs, phi.ys)
    return CurveGeometry(phi.xs, v, k, s, xn)


def ds_derivative(f, geom, order=1):
    """Arclength derivative of f along the curve geom was built from.

    order 1 is f'/v, order 2 applies that twice. The 2*stencil cells at
    each boundary use one-sided formulas; they are flagged via the meta
    dict on the result and excluded from interior sup norms elsewhere.
    """
    if not isinstance(f, GridFunction):
        raise ValidationError("ds_derivative expects a GridFunction")
    if order not in (1, 2):
        raise ValidationError(f"order must be 1 or 2, got {order}")
    if not geom.same_grid(f.xs):
        raise GridMismatch("f is not sampled on the geometry's grid")
    g = _fd(f.ys, f.h, 1) / geom.metric
    if order == 2:
        g = _fd(g, f.h, 1) / geom.metric
    out = GridFunction(f.xs, g, g[0], g[-1], "constant", np.inf)
    out.meta = {"unreliable_margin": _EDGE_MARGIN * order}
    return out


def ds_of_array(ys, geom, order=1):
    """Raw-array version of ds_derivative for internal plumbing."""
    g = _fd(np.asarray(ys, dtype=float), geom.h, 1) / geom.metric
    if order == 2:
        g = _fd(g, geom.h, 1) / geom.metric
    return g


class AnalyticSurface:
    """Closed-form test surfaces: sphere(R, d), line(slope), graph(phi)."""

    def __init__(self, kind, **params):
        self.kind = kind
        self.params = params

    @classmethod
    def sphere(cls, radius, dim):
        if radius <= 0 or dim < 2:
            raise ValidationError("sphere needs radius > 0 and dim >= 2")
        return cls("sphere", radius=float(radius), dim=int(dim))

    @classmethod
    def line(cls, slope):
        return cls("line", slope=float(slope))

    @classmethod
    def graph(cls, phi):
        if not isinstance(phi, GridFunction):
            raise ValidationError("graph surface needs a GridFunction")
        return cls("graph", phi=phi)

    def mean_curvature(self):
        if self.kind == "sphere":
            return -(self.params["dim"] - 1) / self.params["radius"]
        if self.kind == "line":
            return 0.0
        raise ValidationError("graph curvature varies; use geometry()")


def pei_residuals(surface, sample_points=None):
    """Residuals of the four first-variation identities on a test surface.

    (i) div_G x = d-1, (ii) div_G(a n) = -a H for a in {1, |x|^2},
    (iii) grad_G(|x|^2/2) = x - n (x.n), (iv) lap_G(|x|^2/2) = d-1 + H (x.n).
    Spheres and lines evaluate closed forms (residuals vanish identically);
    graphs difference the identities along the curve.
    """
    if surface.kind == "sphere":
        return _sphere_residuals(surface, sample_points)
    if surface.kind == "line":
        return _line_residuals(surface, sample_points)
    return _graph_residuals(surface, sample_points)


def _sphere_residuals(surface, pts):
    R, d = surface.params["radius"], surface.params["dim"]
    if pts is None:
        pts = np.eye(d)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    m = pts.shape[0]
    H = -(d - 1) / R
    xn = R  # outward normal x/R dotted with x on the sphere
    a2 = R * R
    # div_G x = d - |n|^2 with |n| = 1 for the unit normal
    r1 = np.full(m, (d - 1.0) - (d - 1.0))
    # div_G(a n) = a div_G n = a (d-1)/R since grad_G a is tangential
    r2a = 1.0 * ((d - 1.0) / R) + 1.0 * H
    r2b = a2 * ((d - 1.0) / R) + a2 * H
    r2 = np.full(m, max(abs(r2a), abs(r2b)))
    # |x|^2 constant on the sphere: surface gradient vanishes; x = n (x.n)
    r3 = np.zeros(m)
    for i in range(m):
        x = pts[i] * (R / np.linalg.norm(pts[i]))
        rhs = x - (x / R) * xn
        r3[i] = np.max(np.abs(0.0 - rhs))
    r4 = np.full(m, abs(0.0 - ((d - 1.0) + H * xn)))
    return r1, r2, r3, r4


def _line_residuals(surface, pts):
    c = surface.params["slope"]
    if pts is None:
        pts = np.linspace(-2.0, 2.0, 16)
    x1 = np.asarray(pts, dtype=float)
    m = x1.size
    # tau = (1, c)/v, n = (-c, 1)/v, x tangential: every identity collapses
    r1 = np.full(m, 1.0 - 1.0)
    r2 = np.zeros(m)  # n constant along the line, H = 0
    r3 = np.zeros(m)
    for j, xx in enumerate(x1):
        lhs = np.array([xx, xx * c])  # grad_G(|x|^2/2) = P_tan x = x here
        rhs = np.array([xx, xx * c])
        r3[j] = np.max(np.abs(lhs - rhs))
    r4 = np.full(m, 1.0 - 1.0)  # lap = 1 exactly, H (x.n) = 0
    return r1, r2, r3, r4


def _graph_residuals(surface, pts):
    phi = surface.params["phi"]
    geom = geometry(phi)
    xs, ys, h, v, k, xn = (phi.xs, phi.ys, phi.h, geom.metric,
                           geom.curvature, geom.normal_coord)
    margin = 2 * _EDGE_MARGIN
    if pts is None:
        idx = np.arange(margin, xs.size - margin)
    else:
        idx = np.clip(np.round((np.asarray(pts, dtype=float) - xs[0]) / h)
                      .astype(int), margin, xs.size - 1 - margin)
    t1 = ds_of_array(xs, geom)
    t2 = ds_of_array(ys, geom)
    dphi = _fd(ys, h, 1)
    n1, n2 = -dphi / v, 1.0 / v
    q = 0.5 * (xs * xs + ys * ys)
    dq = ds_of_array(q, geom)
    r1 = np.abs(t1 * t1 + t2 * t2 - 1.0)[idx]
    r2 = np.zeros(xs.size)
    for a in (np.ones_like(xs), xs * xs + ys * ys):
        div = t1 * ds_of_array(a * n1, geom) + t2 * ds_of_array(a * n2, geom)
        r2 = np.maximum(r2, np.abs(div + a * k))
    r2 = r2[idx]
    r3 = np.maximum(np.abs(dq * t1 - (xs - n1 * xn)),
                    np.abs(dq * t2 - (ys - n2 * xn)))[idx]
    r4 = np.abs(ds_of_array(q, geom, 2) - 1.0 - k * xn)[idx]
    return r1, r2, r3, r4
