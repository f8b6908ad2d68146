"""
Collocation point sets: uniform grids, Gauss points and perturbed grids in
the interior, plus tagged boundary points with outward normals.
"""
import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CollocationError, QuadratureError
from .geometry import MAX_RULE_DEGREE, fan_triangulate, gauss_rule, map_triangles, quad_rule, reference_rule
from .mesh import SIGNED_DISTANCE_THRESHOLD, make_rng
from .problems import VALUE

logger = logging.getLogger(__name__)

SCHEMES = ('uniform', 'gauss', 'quasirandom')
BOUNDARY_GAMMA = 8
RNG_NAME = 'numpy.random.Philox'


@dataclass(frozen=True, eq=False)
class CollocationSet:
    interior: np.ndarray
    boundary: np.ndarray
    normals: np.ndarray
    tags: tuple
    scheme: str = 'uniform'
    gamma: int = None

    def __post_init__(self):
        object.__setattr__(self, 'tags', tuple(self.tags))
        if len(self.boundary) != len(self.normals) or len(self.boundary) != len(self.tags):
            raise CollocationError("every boundary point needs one normal and one tag")

    @property
    def dim(self):
        return self.interior.shape[1]

    @property
    def n_interior(self):
        return len(self.interior)

    @property
    def n_boundary(self):
        return len(self.boundary)

    @property
    def n_z(self):
        return self.n_interior + self.n_boundary

    def boundary_with_tag(self, tag):
        mask = np.array([t == tag for t in self.tags], dtype=bool)
        return self.boundary[mask], self.normals[mask]

    def locations(self):
        """Distinct evaluation points: interior points, then boundary points of the first tag"""
        if not self.tags:
            return self.interior
        boundary, _ = self.boundary_with_tag(self.tags[0])
        return np.concatenate([self.interior, boundary])

    def check_count(self, n_b):
        if self.n_z < n_b:
            raise CollocationError(f"underdetermined: n_z = {self.n_z} < n_b = {n_b}")

    def write_csv(self, stream):
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(['x', 'y', 'kind', 'tag'])

        def coords(point):
            return [repr(float(point[0])), repr(float(point[1])) if len(point) > 1 else '']

        for point in self.interior:
            writer.writerow(coords(point) + ['interior', 'source'])
        for point, tag in zip(self.boundary, self.tags):
            writer.writerow(coords(point) + ['boundary', tag])


def _grid_size(n):
    return math.isqrt(n - 1) + 1 if n > 0 else 0


def _grid_axes(domain, n_interior):
    if not domain.is_tensor_product:
        raise CollocationError("uniform points need a tensor-product domain")
    if n_interior < 1:
        raise CollocationError("need at least one interior point")
    m = n_interior if domain.dim == 1 else _grid_size(n_interior)
    k = np.arange(1, m + 1) / (m + 1)
    return [lo + (hi - lo) * k for lo, hi in zip(domain.lower, domain.upper)], m


def uniform_points(domain, n_interior):
    """Equidistant interior points with spacing 1/(m+1); a ceil(sqrt(n)) square grid in 2D"""
    axes, _ = _grid_axes(domain, n_interior)
    if domain.dim == 1:
        return axes[0].reshape(-1, 1)
    X, Y = np.meshgrid(*axes, indexing='ij')
    return np.column_stack([X.ravel(), Y.ravel()])


def quasirandom_points(domain, n_interior, sigma_fraction, rng_seed=0, replicate=0):
    """Uniform points perturbed per axis by U(-sigma, sigma), sigma a fraction of the spacing"""
    if not 0 <= sigma_fraction < 0.5:
        raise CollocationError(f"sigma fraction must lie in [0, 0.5), got {sigma_fraction}")
    base = uniform_points(domain, n_interior)
    if sigma_fraction == 0:
        return base
    _, m = _grid_axes(domain, n_interior)
    sigma = sigma_fraction * (domain.upper - domain.lower) / (m + 1)
    rng = make_rng(rng_seed, replicate)
    return base + rng.uniform(-1.0, 1.0, size=base.shape) * sigma


def gauss_points(mesh, gamma):
    """
    Gauss points of exactness gamma in every interior cell.

    Quadrilateral meshes use the tensor rule on the reference square, other
    polygons are fan-triangulated. On domains with a hole only points with
    signed distance above the threshold are kept.
    """
    try:
        reference_rule('interval', gamma)
    except QuadratureError as exc:
        raise CollocationError(str(exc)) from exc
    blocks = []
    for cell in mesh.interior_cells():
        if mesh.dim == 1:
            blocks.append(gauss_rule(cell, gamma).points)
        elif mesh.kind == 'quadrilateral' and len(cell.vertices) == 4:
            blocks.append(quad_rule(cell.vertices, gamma).points)
        else:
            blocks.append(map_triangles(fan_triangulate(cell), gamma)[0])
    points = np.concatenate(blocks)
    if mesh.domain.has_hole:
        points = points[mesh.domain.signed_distance(points) > SIGNED_DISTANCE_THRESHOLD]
    return points


def _with_tags(points, normals, tags):
    tags = tuple(tags)
    all_points = np.concatenate([points] * len(tags))
    all_normals = np.concatenate([normals] * len(tags))
    all_tags = tuple(tag for tag in tags for _ in range(len(points)))
    return all_points, all_normals, all_tags


def _square_boundary(domain, per_edge):
    points, normals = [], []
    t = np.linspace(0.0, 1.0, per_edge)
    for axis in (0, 1):
        other = 1 - axis
        for value, outward in ((domain.lower[axis], -1.0), (domain.upper[axis], 1.0)):
            edge = np.empty((per_edge, 2))
            edge[:, axis] = value
            edge[:, other] = domain.lower[other] + (domain.upper[other] - domain.lower[other]) * t
            normal = np.zeros(2)
            normal[axis] = outward
            points.append(edge)
            normals.append(np.tile(normal, (per_edge, 1)))
    return np.concatenate(points), np.concatenate(normals)


def _segment_breaks(coords, tol):
    coords = np.sort(coords)
    keep = [coords[0]]
    for c in coords[1:]:
        if c - keep[-1] > tol:
            keep.append(c)
    return np.array(keep)


def _mesh_boundary(mesh, gamma):
    """Gauss points on the boundary segments cut out by the interior cell vertices"""
    domain = mesh.domain
    nodes, _ = reference_rule('interval', gamma)
    vertices = np.concatenate([cell.vertices for cell in mesh.interior_cells()])
    tol = 1e-9 * domain.extent
    points, normals = [], []
    for axis in (0, 1):
        other = 1 - axis
        for value, outward in ((domain.lower[axis], -1.0), (domain.upper[axis], 1.0)):
            on_side = vertices[np.abs(vertices[:, axis] - value) <= tol]
            if domain.has_hole:
                distance = np.linalg.norm(on_side - domain.hole_center, axis=1)
                on_side = on_side[distance >= domain.hole_radius - tol]
            if len(on_side) < 2:
                continue
            breaks = _segment_breaks(on_side[:, other], tol)
            for a, b in zip(breaks[:-1], breaks[1:]):
                segment = np.empty((len(nodes), 2))
                segment[:, axis] = value
                segment[:, other] = a + (b - a) * nodes
                normal = np.zeros(2)
                normal[axis] = outward
                points.append(segment)
                normals.append(np.tile(normal, (len(nodes), 1)))
    if domain.has_hole:
        rel = vertices - domain.hole_center
        near = rel[np.linalg.norm(rel, axis=1) <= domain.hole_radius + tol]
        angles = _segment_breaks(np.arctan2(near[:, 1], near[:, 0]), tol)
        for a, b in zip(angles[:-1], angles[1:]):
            theta = a + (b - a) * nodes
            direction = np.column_stack([np.cos(theta), np.sin(theta)])
            points.append(domain.hole_center + domain.hole_radius * direction)
            normals.append(-direction)
    return np.concatenate(points), np.concatenate(normals)


def boundary_points(domain, tags=(VALUE,), per_edge=None, mesh=None, gamma=BOUNDARY_GAMMA):
    """
    Boundary points with outward normals, repeated once per boundary tag.

    1D domains give the two endpoints. Square domains give `per_edge` points
    per edge including the corners, so each corner appears once per incident
    edge with that edge's normal. Domains with a hole need the mesh: Gauss
    points of exactness gamma are placed on every boundary segment, the arc
    being parametrised by angle.
    """
    if domain.dim == 1:
        points = np.array([[domain.lower[0]], [domain.upper[0]]])
        normals = np.array([[-1.0], [1.0]])
    elif domain.has_hole:
        if mesh is None:
            raise CollocationError("boundary points on a domain with a hole need the mesh")
        points, normals = _mesh_boundary(mesh, gamma)
    else:
        if per_edge is None or per_edge < 2:
            raise CollocationError("square boundaries need at least 2 points per edge")
        points, normals = _square_boundary(domain, per_edge)
    return _with_tags(points, normals, tags)


def _interior(mesh, scheme, beta, gamma, sigma, rng_seed, replicate):
    domain = mesh.domain
    if scheme == 'uniform':
        return uniform_points(domain, beta * mesh.n_interior)
    if scheme == 'quasirandom':
        return quasirandom_points(domain, beta * mesh.n_interior, sigma, rng_seed, replicate)
    if scheme == 'gauss':
        return gauss_points(mesh, gamma)
    raise CollocationError(f"unknown collocation scheme {scheme!r}; choose one of {', '.join(SCHEMES)}")


def _assemble_set(problem, mesh, scheme, interior, gamma):
    per_edge = _grid_size(len(interior)) if mesh.dim == 2 else None
    boundary, normals, tags = boundary_points(mesh.domain, problem.boundary_tags, per_edge=per_edge, mesh=mesh)
    return CollocationSet(interior, boundary, normals, tags, scheme=scheme, gamma=gamma)


def choose_gamma(problem, mesh, n_b):
    """Smallest Gauss exactness whose point set satisfies n_z >= n_b"""
    for gamma in range(1, MAX_RULE_DEGREE + 1):
        colloc = _assemble_set(problem, mesh, 'gauss', gauss_points(mesh, gamma), gamma)
        if colloc.n_z >= n_b:
            logger.debug("selected gamma=%d (n_z=%d, n_b=%d)", gamma, colloc.n_z, n_b)
            return gamma
    raise CollocationError(f"underdetermined: no Gauss rule up to degree {MAX_RULE_DEGREE} gives n_z >= {n_b}")


def collocation_set(problem, mesh, scheme, beta=1, gamma=None, sigma=0.0, rng_seed=0, replicate=0, n_b=None):
    """
    Interior and boundary points for a case on a mesh.

    Uniform and quasi-random schemes place beta * n_c interior points; the
    Gauss scheme uses gamma (2 beta - 1 in 1D, the smallest feasible
    exactness in 2D when not given). With n_b set, the count is checked.
    """
    if scheme == 'gauss' and gamma is None:
        if mesh.dim == 1:
            gamma = 2 * beta - 1
        elif n_b is None:
            raise CollocationError("the Gauss scheme needs gamma or the basis size to choose it")
        else:
            gamma = choose_gamma(problem, mesh, n_b)
    interior = _interior(mesh, scheme, beta, gamma, sigma, rng_seed, replicate)
    colloc = _assemble_set(problem, mesh, scheme, interior, gamma)
    if n_b is not None:
        colloc.check_count(n_b)
    return colloc

