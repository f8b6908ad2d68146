"""
Mollified basis functions.

Each cell carries scaled monomials p(y) = prod ((2 (y - c) / h) ** e). The
basis function of a (cell, monomial) pair is the convolution of the
mollifier with that monomial restricted to the cell:

    N(x) = integral over cell of m(x - y) p(y) dy

It is evaluated by clipping the cell against the mollifier box centred at x,
splitting the clipped region at the kernel knot lines and integrating with a
Gauss rule exact for the piecewise-polynomial integrand. `eval_at` does this
one point at a time; `eval_matrix` clips every (point, cell) pair of a batch
together.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .exceptions import BasisError
from .geometry import (
    EPS_REL,
    AxisBox,
    clip_polygons,
    clip_to_box,
    contains,
    fan_rules,
    fan_triangulate,
    map_intervals,
    map_triangles,
    minkowski_with_box,
    reference_rule,
    rule_size,
    split_at,
)
from .mollifier import as_multi_index

logger = logging.getLogger(__name__)

POINT_CHUNK = 2048
QUADRATURE_BUDGET = 200_000


def monomial_exponents(order, dim):
    """Exponents of total degree <= order, sorted by total degree"""
    if dim == 1:
        return np.arange(order + 1).reshape(-1, 1)
    return np.array([(p - j, j) for p in range(order + 1) for j in range(p + 1)])


def multi_indices(order, dim):
    """All derivative multi-indices of total order `order`"""
    return [tuple(int(e) for e in row) for row in monomial_exponents(order, dim) if row.sum() == order]


@dataclass(frozen=True, eq=False)
class MonomialSet:
    order: int
    exponents: np.ndarray
    centroid: np.ndarray
    scale: float

    def __len__(self):
        return len(self.exponents)

    def evaluate(self, points):
        xi = 2.0 * (np.asarray(points, dtype=float) - self.centroid) / self.scale
        return np.prod(xi[:, None, :] ** self.exponents[None, :, :], axis=2)


class Row(NamedTuple):
    columns: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class BasisSet:
    mesh: object
    mollifier: object
    order: int
    monomials: tuple
    supports: tuple
    offsets: np.ndarray
    support_lower: np.ndarray
    support_upper: np.ndarray

    @property
    def dim(self):
        return self.mesh.dim

    @property
    def n_per_cell(self):
        return len(self.monomials[0])

    @property
    def n_b(self):
        return int(self.offsets[-1])

    @property
    def quadrature_degree(self):
        return self.dim * self.mollifier.degree + self.order

    @property
    def constant_columns(self):
        return self.offsets[:-1].copy()

    def column(self, cell, monomial):
        return int(self.offsets[cell] + monomial)

    def cell_of_column(self, column):
        return int(np.searchsorted(self.offsets, column, side='right') - 1)

    def support_of(self, cell):
        return self.supports[cell]

    def in_support(self, cell, points):
        """Mask of points inside the closed Minkowski support of a cell"""
        return contains(self.supports[cell], points, tol=EPS_REL * self.mollifier.width)

    def candidate_cells(self, x):
        inside = np.all((self.support_lower <= x) & (x <= self.support_upper), axis=1)
        return np.flatnonzero(inside)

    @cached_property
    def _cell_loops(self):
        """Cell vertices padded to a common count, with the true counts"""
        counts = np.array([len(cell.vertices) for cell in self.mesh.cells])
        loops = np.zeros((len(counts), counts.max(), self.dim))
        for i, cell in enumerate(self.mesh.cells):
            loops[i, : counts[i]] = cell.vertices
        return loops, counts

    @cached_property
    def _centroids(self):
        return np.array([m.centroid for m in self.monomials])

    @cached_property
    def _scales(self):
        return np.array([m.scale for m in self.monomials])

    @property
    def _empty_measure(self):
        return (EPS_REL * self.mollifier.width) ** self.dim

    def _integration_points(self, cell, x, box):
        tau = clip_to_box(self.mesh.cells[cell], box)
        if tau.is_empty:
            return None
        pieces = [tau]
        for knot in self.mollifier.knots:
            for axis in range(self.dim):
                pieces = [part for piece in pieces for part in split_at(piece, axis, x[axis] - knot)]
        degree = self.quadrature_degree
        if self.dim == 1:
            ends = np.array([piece.vertices[:, 0] for piece in pieces])
            return map_intervals(ends[:, 0], ends[:, 1], degree)
        triangles = np.concatenate([fan_triangulate(piece) for piece in pieces])
        return map_triangles(triangles, degree)

    def _check_deriv(self, deriv):
        deriv = as_multi_index(deriv, self.dim)
        limit = self.mollifier.smoothness + 1
        if sum(deriv) > limit:
            raise BasisError(
                f"derivative {deriv} exceeds the differentiability C^{limit} of the {self.mollifier.family} basis"
            )
        return deriv

    def eval_many(self, x, derivs):
        """Rows of several derivatives at one point, sharing the clipping work"""
        x = np.asarray(x, dtype=float).reshape(self.dim)
        derivs = [self._check_deriv(d) for d in derivs]
        box = AxisBox(x, self.mollifier.halfwidth)
        columns = []
        values = {d: [] for d in derivs}
        for cell in self.candidate_cells(x):
            integration = self._integration_points(cell, x, box)
            if integration is None:
                continue
            points, weights = integration
            weighted = self.monomials[cell].evaluate(points) * weights[:, None]
            offset = x - points
            axis_values = {}
            for d in derivs:
                kernel = np.ones(len(points))
                for axis, order in enumerate(d):
                    if (axis, order) not in axis_values:
                        axis_values[axis, order] = self.mollifier.eval1d(offset[:, axis], order)
                    kernel = kernel * axis_values[axis, order]
                values[d].append(kernel @ weighted)
            start = self.offsets[cell]
            columns.append(np.arange(start, start + self.n_per_cell))
        cols = np.concatenate(columns) if columns else np.empty(0, dtype=int)
        return {d: Row(cols, np.concatenate(values[d]) if columns else np.empty(0)) for d in derivs}

    def eval_at(self, x, deriv=0):
        deriv = as_multi_index(deriv, self.dim)
        return self.eval_many(x, [deriv])[deriv]

    def _pairs(self, points):
        """(point, cell) index pairs whose support bounding box holds the point"""
        point_index, cell_index = [np.empty(0, dtype=int)], [np.empty(0, dtype=int)]
        for start in range(0, len(points), POINT_CHUNK):
            chunk = points[start : start + POINT_CHUNK, None, :]
            inside = np.all((self.support_lower <= chunk) & (chunk <= self.support_upper), axis=2)
            p, c = np.nonzero(inside)
            point_index.append(p + start)
            cell_index.append(c)
        return np.concatenate(point_index), np.concatenate(cell_index)

    def _kernel_pieces(self, x):
        """Sub-boxes (k, s, dim) of the mollifier boxes at x on which the kernel is one polynomial"""
        edges = x[:, None, :] - self.mollifier.breakpoints[::-1][None, :, None]
        lower, upper = edges[:, :-1, :], edges[:, 1:, :]
        if self.dim == 1:
            return lower, upper
        n = lower.shape[1]

        def product(bounds):
            return np.stack([np.repeat(bounds[:, :, 0], n, axis=1), np.tile(bounds[:, :, 1], (1, n))], axis=2)

        return product(lower), product(upper)

    def _pair_rules(self, x, cells):
        """Gauss points (k, q, dim), weights (k, q) and clipped measure (k,) of each (point, cell) pair"""
        loops, counts = self._cell_loops
        lower, upper = self._kernel_pieces(x)
        k, s, _ = lower.shape
        degree = self.quadrature_degree
        if self.dim == 1:
            a = np.maximum(loops[cells, 0, 0][:, None], lower[..., 0])
            b = np.minimum(loops[cells, 1, 0][:, None], upper[..., 0])
            length = np.clip(b - a, 0.0, None)
            nodes, weights = reference_rule('interval', degree)
            points = a[..., None] + length[..., None] * nodes
            weights = length[..., None] * weights
            return points.reshape(k, -1, 1), weights.reshape(k, -1), length.sum(axis=1)
        clipped, clipped_counts = clip_polygons(
            np.repeat(loops[cells], s, axis=0), np.repeat(counts[cells], s), lower.reshape(-1, 2), upper.reshape(-1, 2)
        )
        points, weights = fan_rules(clipped, clipped_counts, degree)
        measure = weights.sum(axis=1).reshape(k, s).sum(axis=1)
        return points.reshape(k, -1, 2), weights.reshape(k, -1), measure

    def _pair_batch(self):
        """Number of (point, cell) pairs integrated together"""
        loops, _ = self._cell_loops
        pieces = (len(self.mollifier.breakpoints) - 1) ** self.dim
        n = rule_size(self.quadrature_degree)
        per_pair = pieces * (n if self.dim == 1 else (loops.shape[1] + 2) * n * n)
        return max(1, QUADRATURE_BUDGET // per_pair)

    def _triplets(self, points, derivs):
        point_index, cell_index = self._pairs(points)
        exponents = self.monomials[0].exponents
        n = self.n_per_cell
        rows, cols = [], []
        vals = {d: [] for d in derivs}
        batch = self._pair_batch()
        for start in range(0, len(cell_index), batch):
            p, c = point_index[start : start + batch], cell_index[start : start + batch]
            x = points[p]
            nodes, weights, measure = self._pair_rules(x, c)
            keep = measure > self._empty_measure
            if not keep.any():
                continue
            p, c, x, nodes, weights = p[keep], c[keep], x[keep], nodes[keep], weights[keep]
            xi = 2.0 * (nodes - self._centroids[c][:, None, :]) / self._scales[c][:, None, None]
            weighted = np.prod(xi[:, :, None, :] ** exponents[None, None, :, :], axis=3) * weights[..., None]
            offset = x[:, None, :] - nodes
            axis_values = {}
            for d in derivs:
                kernel = np.ones(weights.shape)
                for axis, order in enumerate(d):
                    if (axis, order) not in axis_values:
                        axis_values[axis, order] = self.mollifier.eval1d(offset[..., axis], order)
                    kernel = kernel * axis_values[axis, order]
                vals[d].append(np.einsum('kq,kqn->kn', kernel, weighted).ravel())
            rows.append(np.repeat(p, n))
            cols.append((self.offsets[c][:, None] + np.arange(n)).ravel())
        return rows, cols, vals

    def eval_matrix(self, points, derivs, workers=1):
        """
        Sparse matrices (n_points x n_b), one per derivative multi-index.

        Rows are independent, so with workers > 1 they are evaluated by a
        thread pool over contiguous chunks of points.
        """
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        derivs = list(dict.fromkeys(self._check_deriv(d) for d in derivs))
        if workers > 1 and len(points) > workers:
            chunks = np.array_split(np.arange(len(points)), workers)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda idx: (idx[0], self._triplets(points[idx], derivs)), chunks))
        else:
            parts = [(0, self._triplets(points, derivs))]
        rows, cols = [], []
        vals = {d: [] for d in derivs}
        for start, (r, c, v) in parts:
            rows.extend(block + start for block in r)
            cols.extend(c)
            for d in derivs:
                vals[d].extend(v[d])
        row_index = np.concatenate(rows) if rows else np.empty(0, dtype=int)
        col_index = np.concatenate(cols) if cols else np.empty(0, dtype=int)
        shape = (len(points), self.n_b)
        return {
            d: sparse.csr_matrix((np.concatenate(vals[d]) if vals[d] else np.empty(0), (row_index, col_index)), shape=shape)
            for d in derivs
        }


def build(mesh, mollifier, order):
    """Precompute monomials, Minkowski supports and the column layout"""
    if order < 0:
        raise BasisError(f"polynomial order must be non-negative, got {order}")
    if mesh.dim != mollifier.dim:
        raise BasisError(f"{mesh.dim}D mesh paired with a {mollifier.dim}D mollifier")
    if not mesh.is_padded:
        logger.warning("building a basis on a mesh without ghost cells; reproduction degrades at the boundary")
    exponents = monomial_exponents(order, mesh.dim)
    monomials, supports = [], []
    for cell, h in zip(mesh.cells, mesh.h_cell):
        scale = float(h) if mesh.dim == 1 else mesh.h_avg
        monomials.append(MonomialSet(order, exponents, cell.centroid, scale))
        supports.append(minkowski_with_box(cell, mollifier.halfwidth))
    offsets = np.arange(mesh.n_cells + 1) * len(exponents)
    lower = np.array([support.bounds[0] for support in supports])
    upper = np.array([support.bounds[1] for support in supports])
    basis = BasisSet(mesh, mollifier, order, tuple(monomials), tuple(supports), offsets, lower, upper)
    logger.debug("basis: %d cells x %d monomials = %d functions", mesh.n_cells, len(exponents), basis.n_b)
    return basis
