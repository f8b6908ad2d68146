"""
Polytopic partitions of the computational domain.

Generators build interval meshes, Voronoi tessellations and the quarter
plate-with-hole quadrilateral mesh; `pad_ghost` appends the ghost layer that
lets mollified bases reproduce polynomials up to the boundary.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import GeometryError, MeshError
from .geometry import (
    EPS_REL,
    AxisBox,
    ConvexPolytope,
    characteristic_length,
    clip_halfplane,
    clip_to_box,
    dedupe_vertices,
    minkowski_with_box,
)

logger = logging.getLogger(__name__)

BASE_BREAKPOINTS = (0.0, 0.15, 0.35, 0.5, 0.65, 0.85, 1.0)
LLOYD_ITERATIONS = 10
SIGNED_DISTANCE_THRESHOLD = 1e-5
# ghost supports must reach this fraction of h_m past the hole arc to be kept
GHOST_REACH = 0.02


def make_rng(seed, stream=0):
    """Counter-based generator keyed by (seed, stream)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


@dataclass(frozen=True, eq=False)
class Domain:
    """Axis-aligned box, optionally minus a disk. Signed distance is positive inside."""

    lower: np.ndarray
    upper: np.ndarray
    hole_center: np.ndarray = None
    hole_radius: float = 0.0

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.size not in (1, 2) or np.any(upper <= lower):
            raise MeshError(f"invalid domain box {lower} .. {upper}")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)
        if self.hole_center is not None:
            object.__setattr__(self, 'hole_center', np.asarray(self.hole_center, dtype=float))
            if self.hole_radius <= 0:
                raise MeshError("hole radius must be positive")

    @classmethod
    def box(cls, lower, upper):
        return cls(lower, upper)

    @classmethod
    def unit_interval(cls):
        return cls([0.0], [1.0])

    @classmethod
    def unit_square(cls):
        return cls([0.0, 0.0], [1.0, 1.0])

    @classmethod
    def quarter_plate(cls, radius=0.25):
        return cls([0.0, 0.0], [1.0, 1.0], hole_center=[0.0, 0.0], hole_radius=radius)

    @property
    def dim(self):
        return self.lower.size

    @property
    def has_hole(self):
        return self.hole_center is not None

    @property
    def is_tensor_product(self):
        return not self.has_hole

    @property
    def box_measure(self):
        return float(np.prod(self.upper - self.lower))

    @property
    def extent(self):
        return float((self.upper - self.lower).max())

    def signed_distance(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        phi = np.minimum(points - self.lower, self.upper - points).min(axis=1)
        if self.has_hole:
            phi = np.minimum(phi, np.linalg.norm(points - self.hole_center, axis=1) - self.hole_radius)
        return phi


@dataclass(frozen=True, eq=False)
class Mesh:
    cells: tuple
    is_ghost: np.ndarray
    domain: Domain
    seeds: np.ndarray = None
    kind: str = 'polygonal'
    ghost_width: float = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, 'cells', tuple(self.cells))
        is_ghost = np.asarray(self.is_ghost, dtype=bool)
        if is_ghost.shape != (len(self.cells),):
            raise MeshError("one ghost flag per cell is required")
        object.__setattr__(self, 'is_ghost', is_ghost)
        if any(cell.dim != self.domain.dim for cell in self.cells):
            raise MeshError("cell dimension does not match the domain")
        if np.any(self.h_cell <= 0):
            raise MeshError("every cell needs a positive size")

    @property
    def dim(self):
        return self.domain.dim

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_interior(self):
        return int((~self.is_ghost).sum())

    @property
    def n_ghost(self):
        return int(self.is_ghost.sum())

    @property
    def is_padded(self):
        return self.ghost_width is not None

    @cached_property
    def measures(self):
        return np.array([cell.measure for cell in self.cells])

    @cached_property
    def h_cell(self):
        return self.measures if self.dim == 1 else np.sqrt(self.measures)

    @property
    def h_max(self):
        return float(self.h_cell[~self.is_ghost].max())

    @property
    def h_avg(self):
        """Square root of the average interior cell measure (mean length in 1D)"""
        interior = self.measures[~self.is_ghost]
        return float((interior.sum() / len(interior)) ** (1 / self.dim))

    def interior_cells(self):
        return [cell for cell, ghost in zip(self.cells, self.is_ghost) if not ghost]

    def vertices(self):
        return np.concatenate([cell.vertices for cell in self.cells])


def mollifier_width(mesh, kappa=1.0):
    """h_m = 2 kappa max h_c in 1D and 2 kappa h_avg in 2D"""
    if kappa <= 0:
        raise MeshError(f"kappa must be positive, got {kappa}")
    return 2.0 * kappa * (mesh.h_max if mesh.dim == 1 else mesh.h_avg)


def intervals_1d(breakpoints):
    breakpoints = np.asarray(breakpoints, dtype=float).ravel()
    if len(breakpoints) < 2 or np.any(np.diff(breakpoints) <= 0):
        raise MeshError("interval breakpoints must be strictly increasing")
    cells = [ConvexPolytope.interval(a, b) for a, b in zip(breakpoints[:-1], breakpoints[1:])]
    domain = Domain([breakpoints[0]], [breakpoints[-1]])
    return Mesh(cells, np.zeros(len(cells), dtype=bool), domain, kind='intervals')


def uniform_intervals(n_cells, lower=0.0, upper=1.0):
    if n_cells < 1:
        raise MeshError("need at least one cell")
    return intervals_1d(np.linspace(lower, upper, n_cells + 1))


def bisect(mesh, times=1):
    """Split every cell of an unpadded interval mesh in two, `times` times"""
    if mesh.dim != 1 or mesh.is_padded:
        raise MeshError("bisection applies to unpadded 1D meshes")
    breakpoints = np.array([mesh.cells[0].vertices[0, 0]] + [cell.vertices[1, 0] for cell in mesh.cells])
    for _ in range(times):
        midpoints = (breakpoints[:-1] + breakpoints[1:]) / 2
        breakpoints = np.insert(breakpoints, np.arange(1, len(breakpoints)), midpoints)
    return intervals_1d(breakpoints)


def _box_polygon(lower, upper):
    (x0, y0), (x1, y1) = lower, upper
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


def _voronoi_cells(seeds, lower, upper):
    """Per-seed half-plane clipping, limited to neighbours inside the security radius"""
    n = len(seeds)
    tree = cKDTree(seeds)
    box = _box_polygon(lower, upper)
    k_start = min(n, 16)
    cells = []
    for i, seed in enumerate(seeds):
        k = k_start
        while True:
            dist, idx = tree.query(seed, k=k)
            vertices = box
            for j in idx[1:]:
                normal = seeds[j] - seed
                vertices = clip_halfplane(vertices, normal, normal @ (seeds[j] + seed) / 2)
            radius = np.linalg.norm(vertices - seed, axis=1).max()
            if k >= n or dist[-1] >= 2 * radius:
                break
            k = min(2 * k, n)
        try:
            vertices = dedupe_vertices(vertices, EPS_REL * characteristic_length(vertices))
            cells.append(ConvexPolytope.polygon(vertices))
        except GeometryError as exc:
            raise MeshError(f"Voronoi cell of seed {i} is degenerate") from exc
    return cells


def voronoi_2d(seeds, lower=(0.0, 0.0), upper=(1.0, 1.0)):
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    if len(seeds) < 2:
        raise MeshError("a Voronoi mesh needs at least two seeds")
    if len(np.unique(seeds, axis=0)) < len(seeds):
        raise MeshError("duplicate Voronoi seeds")
    if np.any(seeds < lower) or np.any(seeds > upper):
        raise MeshError("Voronoi seeds must lie inside the bounding box")
    cells = _voronoi_cells(seeds, lower, upper)
    return Mesh(cells, np.zeros(len(cells), dtype=bool), Domain(lower, upper), seeds=seeds, kind='voronoi')


def quasi_uniform_seeds(n, lower=(0.0, 0.0), upper=(1.0, 1.0), rng_seed=0, iterations=LLOYD_ITERATIONS):
    """Random seeds relaxed by Lloyd iterations towards cell centroids"""
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    seeds = make_rng(rng_seed).uniform(lower, upper, size=(n, 2))
    for _ in range(iterations):
        seeds = np.array([cell.centroid for cell in _voronoi_cells(seeds, lower, upper)])
    return seeds


def voronoi_mesh(n_cells, rng_seed=0, lower=(0.0, 0.0), upper=(1.0, 1.0)):
    return voronoi_2d(quasi_uniform_seeds(n_cells, lower, upper, rng_seed), lower, upper)


def _thin(coords, lo, hi, spacing):
    kept = [lo]
    for c in np.sort(coords):
        if c - kept[-1] >= spacing and hi - c >= spacing:
            kept.append(c)
    kept.append(hi)
    return kept


def _ghost_ring(mesh, h_m):
    lower, upper = mesh.domain.lower, mesh.domain.upper
    vertices = mesh.vertices()
    tol = EPS_REL * 1e3 * mesh.domain.extent
    ring = []
    for axis in (0, 1):
        other = 1 - axis
        for value, outward in ((lower[axis], -1.0), (upper[axis], 1.0)):
            on_side = np.abs(vertices[:, axis] - value) <= tol
            breaks = _thin(vertices[on_side, other], lower[other], upper[other], mesh.h_avg / 2)
            band = sorted([value, value + outward * h_m])
            for a, b in zip(breaks[:-1], breaks[1:]):
                lo, hi = np.empty(2), np.empty(2)
                lo[axis], hi[axis] = band
                lo[other], hi[other] = a, b
                ring.append(ConvexPolytope.rectangle(lo, hi))
    for x0 in (lower[0] - h_m, upper[0]):
        for y0 in (lower[1] - h_m, upper[1]):
            ring.append(ConvexPolytope.rectangle((x0, y0), (x0 + h_m, y0 + h_m)))
    return ring


def _reaches_domain(cell, domain, h_m):
    """Whether the cell's support, cell plus the mollifier box, meets the domain outside the hole"""
    box = AxisBox((domain.lower + domain.upper) / 2, (domain.upper - domain.lower) / 2)
    support = clip_to_box(minkowski_with_box(cell, h_m / 2), box)
    if support.is_empty:
        return False
    reach = np.linalg.norm(support.vertices - domain.hole_center, axis=1).max()
    return reach > domain.hole_radius + max(GHOST_REACH * h_m, SIGNED_DISTANCE_THRESHOLD)


def pad_ghost(mesh, h_m):
    """
    Append a ghost layer of thickness h_m around the bounding box.

    In 1D one cell is added at each end. In 2D the ring is split into
    rectangles at the mesh vertices lying on each side, plus four corner
    squares. On domains with a hole, ghost cells whose support never
    leaves the hole are dropped; other existing cells are kept unchanged.
    """
    if not h_m > 0:
        raise MeshError(f"ghost width must be positive, got {h_m}")
    if mesh.is_padded:
        raise MeshError("mesh is already padded")
    if mesh.dim == 1:
        a, b = mesh.domain.lower[0], mesh.domain.upper[0]
        ghosts = [ConvexPolytope.interval(a - h_m, a), ConvexPolytope.interval(b, b + h_m)]
        cells = [ghosts[0], *mesh.cells, ghosts[1]]
        is_ghost = np.concatenate([[True], mesh.is_ghost, [True]])
    else:
        ring = _ghost_ring(mesh, h_m)
        cells = [*mesh.cells, *ring]
        is_ghost = np.concatenate([mesh.is_ghost, np.ones(len(ring), dtype=bool)])
        if mesh.domain.has_hole:
            keep = [not ghost or _reaches_domain(cell, mesh.domain, h_m) for cell, ghost in zip(cells, is_ghost)]
            logger.debug("dropping %d ghost cells inside the hole", len(keep) - sum(keep))
            cells = [cell for cell, kept in zip(cells, keep) if kept]
            is_ghost = is_ghost[np.asarray(keep)]
    padded = Mesh(cells, is_ghost, mesh.domain, seeds=mesh.seeds, kind=mesh.kind, ghost_width=h_m)
    logger.debug("padded mesh: n_c=%d n_g=%d h_m=%.4g", padded.n_interior, padded.n_ghost, h_m)
    return padded


def _quadrisect(quad):
    v0, v1, v2, v3 = quad
    m01, m12, m23, m30 = (v0 + v1) / 2, (v1 + v2) / 2, (v2 + v3) / 2, (v3 + v0) / 2
    c = quad.mean(axis=0)
    return [
        np.array([v0, m01, c, m30]),
        np.array([m01, v1, m12, c]),
        np.array([c, m12, v2, m23]),
        np.array([m30, c, m23, v3]),
    ]


def _split_triangle(triangle):
    v0, v1, v2 = triangle
    m01, m12, m20 = (v0 + v1) / 2, (v1 + v2) / 2, (v2 + v0) / 2
    return [
        np.array([v0, m01, m20]),
        np.array([m01, v1, m12]),
        np.array([m20, m12, v2]),
        np.array([m01, m12, m20]),
    ]


def quarter_plate_hole_mesh(level=0, radius=0.25):
    """
    16 * 4^level quadrilaterals on the unit quarter plate around a hole at the origin.

    The base grid blends the hole arc with the outer edges x = 1 and y = 1.
    The region between the hole chords and the origin is covered by ghost
    triangles: the four triangles joining the origin to each base chord,
    split into four by edge midpoints at every level, so ghost and interior
    cells refine together and all cells tile the unit square.
    """
    if level < 0:
        raise MeshError("mesh level must be non-negative")
    s = np.linspace(0.0, 1.0, 5)
    t = np.linspace(0.0, 1.0, 5)

    def inner(t):
        theta = t * np.pi / 2
        return radius * np.array([np.cos(theta), np.sin(theta)])

    def outer(t):
        return np.array([1.0, 2 * t]) if t <= 0.5 else np.array([2 * (1 - t), 1.0])

    grid = np.array([[(1 - si) * inner(tj) + si * outer(tj) for tj in t] for si in s])
    quads = [
        np.array([grid[i, j], grid[i + 1, j], grid[i + 1, j + 1], grid[i, j + 1]])
        for i in range(4)
        for j in range(4)
    ]
    triangles = [np.array([np.zeros(2), grid[0, k], grid[0, k + 1]]) for k in range(4)]
    for _ in range(level):
        quads = [child for quad in quads for child in _quadrisect(quad)]
        triangles = [child for triangle in triangles for child in _split_triangle(triangle)]
    cells = [ConvexPolytope.polygon(quad) for quad in quads] + [ConvexPolytope.polygon(t) for t in triangles]
    is_ghost = np.concatenate([np.zeros(len(quads), dtype=bool), np.ones(len(triangles), dtype=bool)])
    return Mesh(cells, is_ghost, Domain.quarter_plate(radius), kind='quadrilateral')


def write_mesh(mesh, stream):
    """Text format: "DIM n_vertices n_cells", vertex lines, then "k i1 .. ik ghost" with 0-based indices"""
    index = {}
    vertices = []
    cell_lines = []
    for cell, ghost in zip(mesh.cells, mesh.is_ghost):
        ids = []
        for vertex in cell.vertices:
            key = tuple(np.round(vertex, 12))
            if key not in index:
                index[key] = len(vertices)
                vertices.append(vertex)
            ids.append(index[key])
        cell_lines.append(' '.join(map(str, [len(ids), *ids, int(ghost)])))
    stream.write(f"{mesh.dim} {len(vertices)} {mesh.n_cells}\n")
    for vertex in vertices:
        stream.write(' '.join(repr(float(x)) for x in vertex) + '\n')
    for line in cell_lines:
        stream.write(line + '\n')


def read_mesh(stream, domain=None):
    lines = [line.split() for line in stream.read().splitlines() if line.strip()]
    try:
        dim, n_vertices, n_cells = map(int, lines[0])
        vertices = np.array([[float(x) for x in line] for line in lines[1 : 1 + n_vertices]])
        cells, is_ghost = [], []
        for line in lines[1 + n_vertices : 1 + n_vertices + n_cells]:
            k = int(line[0])
            ids = [int(i) for i in line[1 : 1 + k]]
            cells.append(ConvexPolytope(vertices[ids]))
            is_ghost.append(bool(int(line[1 + k])))
    except (ValueError, IndexError) as exc:
        raise MeshError(f"malformed mesh file: {exc}") from exc
    if len(cells) != n_cells or vertices.shape != (n_vertices, dim):
        raise MeshError("mesh file header does not match its contents")
    if domain is None:
        interior = np.concatenate([c.vertices for c, g in zip(cells, is_ghost) if not g])
        domain = Domain(interior.min(axis=0), interior.max(axis=0))
    kind = 'intervals' if dim == 1 else 'polygonal'
    return Mesh(cells, np.array(is_ghost), domain, kind=kind)

