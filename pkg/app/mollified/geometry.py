"""
Convex geometry and quadrature on intervals and polygons.

Polytopes are stored as vertex arrays of shape (n, dim). An interval is the
pair of endpoints [[a], [b]]; a polygon is a counter-clockwise convex loop.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.special import roots_jacobi, roots_legendre

from .exceptions import GeometryError, QuadratureError

EPS_REL = 1e-12
MAX_RULE_DEGREE = 30


def characteristic_length(vertices):
    if len(vertices) == 0:
        return 1.0
    extent = np.ptp(vertices, axis=0).max()
    return float(extent) if extent > 0 else 1.0


@dataclass(frozen=True, eq=False)
class ConvexPolytope:
    """A convex cell or support region: an interval in 1D, a CCW polygon in 2D"""

    vertices: np.ndarray

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] not in (1, 2):
            raise GeometryError(f"vertices must have shape (n, 1) or (n, 2), got {vertices.shape}")
        object.__setattr__(self, 'vertices', vertices)

    @classmethod
    def interval(cls, a, b):
        if not b > a:
            raise GeometryError(f"interval endpoints must satisfy a < b, got [{a}, {b}]")
        return cls(np.array([[a], [b]], dtype=float))

    @classmethod
    def polygon(cls, points):
        """Build a polygon from a CCW vertex loop, checking convexity and orientation"""
        poly = cls(np.asarray(points, dtype=float).reshape(-1, 2))
        poly.validate()
        return poly

    @classmethod
    def rectangle(cls, lower, upper):
        (x0, y0), (x1, y1) = lower, upper
        return cls.polygon([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])

    @classmethod
    def empty(cls, dim):
        return cls(np.empty((0, dim)))

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def is_empty(self):
        return len(self.vertices) == 0

    @property
    def measure(self):
        return area_centroid(self)[0]

    @property
    def centroid(self):
        return area_centroid(self)[1]

    @property
    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def validate(self):
        v = self.vertices
        if self.dim == 1:
            if len(v) != 2 or not v[1, 0] > v[0, 0]:
                raise GeometryError("an interval needs two endpoints with a < b")
            return
        if len(v) < 3:
            raise GeometryError(f"a polygon needs at least 3 vertices, got {len(v)}")
        edges = np.roll(v, -1, axis=0) - v
        turns = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        tol = EPS_REL * characteristic_length(v) ** 2
        if np.any(turns < -tol):
            raise GeometryError("polygon vertices are not a convex counter-clockwise loop")
        if self.measure <= tol:
            raise GeometryError("polygon has no area")


@dataclass(frozen=True)
class AxisBox:
    center: np.ndarray
    halfwidth: np.ndarray

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        halfwidth = np.broadcast_to(np.asarray(self.halfwidth, dtype=float), center.shape).copy()
        if np.any(halfwidth <= 0):
            raise GeometryError("box halfwidth must be positive")
        object.__setattr__(self, 'center', center)
        object.__setattr__(self, 'halfwidth', halfwidth)

    @property
    def lower(self):
        return self.center - self.halfwidth

    @property
    def upper(self):
        return self.center + self.halfwidth


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def measure(self):
        return float(self.weights.sum())

    def integrate(self, values):
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def clip_halfplane(vertices, normal, offset):
    """Keep the part of a polygon loop with normal . p <= offset"""
    if len(vertices) == 0:
        return vertices
    dist = vertices @ np.asarray(normal, dtype=float) - offset
    if np.all(dist <= 0.0):
        return vertices
    if np.all(dist >= 0.0):
        return vertices[:0]
    out = []
    n = len(vertices)
    for i in range(n):
        j = (i + 1) % n
        di, dj = dist[i], dist[j]
        if di <= 0.0:
            out.append(vertices[i])
        if (di < 0.0 < dj) or (dj < 0.0 < di):
            t = di / (di - dj)
            out.append(vertices[i] + t * (vertices[j] - vertices[i]))
    return np.array(out) if out else vertices[:0]


def _clip_halfplanes(vertices, counts, axis, sign, bound):
    k, v, _ = vertices.shape
    index = np.arange(v)
    valid = index[None, :] < counts[:, None]
    following = np.take_along_axis(vertices, ((index[None, :] + 1) % np.maximum(counts, 1)[:, None])[..., None], axis=1)
    dist = sign * vertices[..., axis] - bound[:, None]
    dist_next = sign * following[..., axis] - bound[:, None]
    keep = valid & (dist <= 0.0)
    cross = valid & (((dist < 0.0) & (dist_next > 0.0)) | ((dist > 0.0) & (dist_next < 0.0)))
    t = np.divide(dist, dist - dist_next, out=np.zeros_like(dist), where=cross)
    crossing = vertices + t[..., None] * (following - vertices)
    emitted = keep.astype(int) + cross.astype(int)
    end = np.cumsum(emitted, axis=1)
    start = end - emitted
    out = np.zeros((k, v + 1, 2))
    owner = np.broadcast_to(np.arange(k)[:, None], (k, v))
    out[owner[keep], start[keep]] = vertices[keep]
    out[owner[cross], (start + keep)[cross]] = crossing[cross]
    return out, end[:, -1]


def clip_polygons(vertices, counts, lower, upper):
    """
    Clip many convex polygons against many axis-aligned boxes at once.

    Polygons are padded vertex arrays (k, v, 2) with `counts` valid vertices
    each; box i is lower[i] .. upper[i]. Returns padded (k, v + 4, 2) loops
    and their vertex counts, following `clip_halfplane` edge by edge.
    """
    vertices = np.asarray(vertices, dtype=float)
    counts = np.asarray(counts, dtype=int)
    for axis in range(2):
        vertices, counts = _clip_halfplanes(vertices, counts, axis, 1.0, upper[:, axis])
        vertices, counts = _clip_halfplanes(vertices, counts, axis, -1.0, -lower[:, axis])
    return vertices, counts


def fan_rules(vertices, counts, degree):
    """
    Gauss points of padded polygon loops, fanned from their first vertex.

    Returns points (k, t * q, 2) and weights (k, t * q); padding triangles
    carry zero weight.
    """
    ref_points, ref_weights = reference_rule('triangle', degree)
    k, v, _ = vertices.shape
    origin = vertices[:, :1, :]
    e1 = vertices[:, 1:-1, :] - origin
    e2 = vertices[:, 2:, :] - origin
    det = np.abs(e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0])
    det = np.where(np.arange(1, v - 1)[None, :] < counts[:, None] - 1, det, 0.0)
    points = (
        origin[:, :, None, :]
        + ref_points[None, None, :, 0:1] * e1[:, :, None, :]
        + ref_points[None, None, :, 1:2] * e2[:, :, None, :]
    )
    weights = det[:, :, None] * ref_weights[None, None, :]
    return points.reshape(k, -1, 2), weights.reshape(k, -1)


def dedupe_vertices(vertices, tol):
    if len(vertices) == 0:
        return vertices
    keep = [vertices[0]]
    for v in vertices[1:]:
        if np.abs(v - keep[-1]).max() > tol:
            keep.append(v)
    if len(keep) > 1 and np.abs(keep[0] - keep[-1]).max() <= tol:
        keep.pop()
    return np.array(keep)


def _finish_polygon(vertices, length):
    tol = EPS_REL * length
    vertices = dedupe_vertices(vertices, tol)
    if len(vertices) < 3:
        return ConvexPolytope.empty(2)
    poly = ConvexPolytope(vertices)
    if poly.measure < tol ** 2:
        return ConvexPolytope.empty(2)
    return poly


def clip_to_box(poly, box):
    """Exact intersection of a convex polytope with an axis-aligned box"""
    if poly.is_empty:
        return poly
    lower, upper = box.lower, box.upper
    length = max(characteristic_length(poly.vertices), float(2 * box.halfwidth.max()))
    if poly.dim == 1:
        a = max(poly.vertices[0, 0], lower[0])
        b = min(poly.vertices[1, 0], upper[0])
        if b - a <= EPS_REL * length:
            return ConvexPolytope.empty(1)
        return ConvexPolytope(np.array([[a], [b]]))
    vertices = poly.vertices
    for axis in range(2):
        normal = np.zeros(2)
        normal[axis] = 1.0
        vertices = clip_halfplane(vertices, normal, upper[axis])
        vertices = clip_halfplane(vertices, -normal, -lower[axis])
    return _finish_polygon(vertices, length)


def split_at(poly, axis, value):
    """Split along the line x[axis] = value, returning the non-empty parts"""
    if poly.is_empty:
        return []
    lo, hi = poly.bounds
    if value <= lo[axis] or value >= hi[axis]:
        return [poly]
    if poly.dim == 1:
        a, b = poly.vertices[:, 0]
        return [ConvexPolytope(np.array([[a], [value]])), ConvexPolytope(np.array([[value], [b]]))]
    length = characteristic_length(poly.vertices)
    normal = np.zeros(2)
    normal[axis] = 1.0
    parts = [
        _finish_polygon(clip_halfplane(poly.vertices, normal, value), length),
        _finish_polygon(clip_halfplane(poly.vertices, -normal, -value), length),
    ]
    return [part for part in parts if not part.is_empty]


def convex_hull(points):
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2 or len(points) < 3:
        raise GeometryError("degenerate hull: need at least 3 planar points")
    try:
        hull = ConvexHull(points)
    except QhullError as exc:
        raise GeometryError("degenerate hull") from exc
    return ConvexPolytope(points[hull.vertices])


def minkowski_with_box(poly, halfwidth):
    """Sum of a polytope with the centred box of the given per-axis halfwidth"""
    halfwidth = np.broadcast_to(np.asarray(halfwidth, dtype=float), (poly.dim,))
    if poly.dim == 1:
        a, b = poly.vertices[:, 0]
        return ConvexPolytope.interval(a - halfwidth[0], b + halfwidth[0])
    wx, wy = halfwidth
    corners = np.array([[-wx, -wy], [wx, -wy], [wx, wy], [-wx, wy]])
    cloud = (poly.vertices[:, None, :] + corners[None, :, :]).reshape(-1, 2)
    return convex_hull(cloud)


def fan_triangulate(poly):
    """Triangles (k, 3, 2) joining each edge to the vertex mean"""
    v = poly.vertices
    if poly.dim != 2 or len(v) < 3:
        raise GeometryError("fan triangulation needs a polygon with at least 3 vertices")
    center = np.broadcast_to(v.mean(axis=0), v.shape)
    return np.stack([center, v, np.roll(v, -1, axis=0)], axis=1)


def area_centroid(poly):
    v = poly.vertices
    if len(v) == 0:
        return 0.0, np.full(poly.dim, np.nan)
    if poly.dim == 1:
        a, b = v[:, 0]
        return float(b - a), np.array([(a + b) / 2])
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2
    if area == 0:
        return 0.0, v.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6 * area)
    cy = ((y + yn) * cross).sum() / (6 * area)
    return float(area), np.array([cx, cy])


def contains(poly, points, tol=0.0):
    """Boolean mask of points lying in the closed polytope (inflated by tol)"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if poly.is_empty:
        return np.zeros(len(points), dtype=bool)
    v = poly.vertices
    if poly.dim == 1:
        x = points[:, 0]
        return (x >= v[0, 0] - tol) & (x <= v[1, 0] + tol)
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    rel = points[:, None, :] - v[None, :, :]
    cross = (edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]) / lengths[None, :]
    return np.all(cross >= -tol, axis=1)


def _check_degree(degree):
    if not isinstance(degree, (int, np.integer)) or not 1 <= degree <= MAX_RULE_DEGREE:
        raise QuadratureError(f"unsupported quadrature degree {degree!r} (supported: 1..{MAX_RULE_DEGREE})")
    return int(degree)


def rule_size(degree):
    """Gauss points per direction for exactness `degree`"""
    return math.ceil((degree + 1) / 2)


def _frozen(*arrays):
    for array in arrays:
        array.flags.writeable = False
    return arrays


@lru_cache(maxsize=None)
def reference_rule(shape, degree):
    """
    Points and weights on a reference element.

    `interval` is [0, 1], `triangle` has vertices (0,0), (1,0), (0,1) and
    `square` is [-1, 1]^2. Degrees 1 and 2 on the triangle are tabulated;
    higher degrees use the collapsed Gauss-Legendre x Gauss-Jacobi product.
    """
    degree = _check_degree(degree)
    n = rule_size(degree)
    if shape == 'interval':
        x, w = roots_legendre(n)
        return _frozen((x + 1) / 2, w / 2)
    if shape == 'square':
        x, w = roots_legendre(n)
        X, Y = np.meshgrid(x, x, indexing='ij')
        return _frozen(np.column_stack([X.ravel(), Y.ravel()]), np.outer(w, w).ravel())
    if shape == 'triangle':
        if degree == 1:
            return _frozen(np.array([[1 / 3, 1 / 3]]), np.array([0.5]))
        if degree == 2:
            points = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
            return _frozen(points, np.full(3, 1 / 6))
        s, ws = roots_legendre(n)
        t, wt = roots_jacobi(n, 1.0, 0.0)
        u, v = (s + 1) / 2, (t + 1) / 2
        U, V = np.meshgrid(u, v, indexing='ij')
        points = np.column_stack([(U * (1 - V)).ravel(), V.ravel()])
        return _frozen(points, np.outer(ws / 2, wt / 4).ravel())
    raise QuadratureError(f"unknown reference element {shape!r}")


def map_intervals(a, b, degree):
    """Gauss points for many intervals at once: returns (points (k*n, 1), weights (k*n,))"""
    x, w = reference_rule('interval', degree)
    a, b = np.atleast_1d(a), np.atleast_1d(b)
    length = (b - a)[:, None]
    points = a[:, None] + length * x[None, :]
    return points.reshape(-1, 1), (length * w[None, :]).ravel()


def map_triangles(triangles, degree):
    """Gauss points for many triangles (k, 3, 2) at once"""
    ref_points, ref_weights = reference_rule('triangle', degree)
    triangles = np.asarray(triangles, dtype=float)
    origin = triangles[:, 0, :]
    e1 = triangles[:, 1, :] - origin
    e2 = triangles[:, 2, :] - origin
    det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    points = (
        origin[:, None, :]
        + ref_points[None, :, 0:1] * e1[:, None, :]
        + ref_points[None, :, 1:2] * e2[:, None, :]
    )
    return points.reshape(-1, 2), (det[:, None] * ref_weights[None, :]).ravel()


def quad_rule(vertices, degree):
    """Tensor Gauss rule on a convex quadrilateral through the bilinear map"""
    ref_points, ref_weights = reference_rule('square', degree)
    v = np.asarray(vertices, dtype=float).reshape(4, 2)
    xi, eta = ref_points[:, 0], ref_points[:, 1]
    shape = 0.25 * np.column_stack([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta), (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)])
    d_xi = 0.25 * np.column_stack([-(1 - eta), 1 - eta, 1 + eta, -(1 + eta)])
    d_eta = 0.25 * np.column_stack([-(1 - xi), -(1 + xi), 1 + xi, 1 - xi])
    jx, jy = d_xi @ v, d_eta @ v
    det = np.abs(jx[:, 0] * jy[:, 1] - jx[:, 1] * jy[:, 0])
    return QuadratureRule(shape @ v, ref_weights * det, degree)


def gauss_rule(element, degree):
    """
    Gauss rule of exactness `degree` on an interval or a triangle.

    `element` is a ConvexPolytope (interval or triangle) or a (3, 2) array
    of triangle vertices.
    """
    degree = _check_degree(degree)
    if isinstance(element, ConvexPolytope):
        if element.dim == 1:
            a, b = element.vertices[:, 0]
            points, weights = map_intervals(a, b, degree)
            return QuadratureRule(points, weights, degree)
        element = element.vertices
    triangle = np.asarray(element, dtype=float)
    if triangle.shape != (3, 2):
        raise QuadratureError(f"gauss_rule expects an interval or a triangle, got shape {triangle.shape}")
    points, weights = map_triangles(triangle[None], degree)
    return QuadratureRule(points, weights, degree)
