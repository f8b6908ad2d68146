"""
Assembly and least-squares solution of the collocation system C u = s.

Unknowns are laid out field-major: column b * n_b + j is basis function j of
field component b. Rows are interior equations per component, then boundary
value rows per component, then boundary normal-derivative rows per component.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import sparse

from .basis import multi_indices
from .exceptions import AssemblyError, ProblemError, SolveError
from .problems import NORMAL_DERIVATIVE, VALUE, strain

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-12
MIN_BLOCK_ROWS = 1024

INTERIOR = 'interior'
BOUNDARY_VALUE = 'boundary-value'
BOUNDARY_NORMAL = 'boundary-normal-derivative'


@dataclass(frozen=True, eq=False)
class CollocationSystem:
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    row_kind: np.ndarray
    row_scale: np.ndarray
    basis: object
    n_fields: int = 1
    # value and gradient matrices at the interior points, reused for error evaluation
    interior_evaluations: dict = field(default_factory=dict)

    @property
    def n_z(self):
        return self.matrix.shape[0]

    @property
    def n_unknowns(self):
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class Solution:
    coefficients: np.ndarray
    basis: object
    residual_norm: float = 0.0
    condition_estimate: float = None

    @property
    def n_fields(self):
        return self.coefficients.shape[1]

    def apply(self, matrix):
        """Field values from a precomputed (points x n_b) basis matrix"""
        return np.asarray(matrix @ self.coefficients)

    def evaluate(self, points, deriv=0):
        """Values (n_points, n_fields) of one derivative of every field component"""
        points = np.asarray(points, dtype=float).reshape(-1, self.basis.dim)
        matrix = next(iter(self.basis.eval_matrix(points, [deriv]).values()))
        return self.apply(matrix)

    def gradient(self, points):
        """Gradients (n_points, n_fields, dim)"""
        points = np.asarray(points, dtype=float).reshape(-1, self.basis.dim)
        matrices = self.basis.eval_matrix(points, multi_indices(1, self.basis.dim))
        return np.stack([self.apply(m) for m in matrices.values()], axis=2)


def _combine(matrices, terms):
    total = None
    for deriv, coefficient in terms.items():
        term = coefficient * matrices[deriv]
        total = term if total is None else total + term
    return total


def _block_rows(blocks_by_component, n_fields, n_rows, n_b):
    """One block row per component; missing couplings become empty blocks"""
    rows = []
    for a in range(n_fields):
        row = []
        for b in range(n_fields):
            block = blocks_by_component.get((a, b))
            row.append(block if block is not None else sparse.csr_matrix((n_rows, n_b)))
        rows.append(row)
    return sparse.bmat(rows, format='csr')


def assemble(problem, basis, colloc, scale_rows=True, workers=1):
    """
    Build C and s for a case on a basis and a collocation set.

    Rows of derivative order n are multiplied on both sides by h_m ** n;
    interior rows also carry the case's operator scale.
    """
    required = problem.order
    class_available = basis.mollifier.smoothness + 1
    if class_available < required:
        raise AssemblyError(
            f"{problem.name} needs a C^{required} basis (a C^{required - 1} mollifier); "
            f"the {basis.mollifier.family} mollifier only gives C^{class_available}"
        )
    if colloc.n_z < basis.n_b:
        raise AssemblyError(f"underdetermined: n_z = {colloc.n_z} < n_b = {basis.n_b}")

    n_fields, n_b, dim = problem.n_fields, basis.n_b, basis.dim
    h_m = basis.mollifier.width
    value = (0,) * dim
    gradient = multi_indices(1, dim)
    operator = problem.interior_operator()

    derivs = list(dict.fromkeys([value, *gradient, *problem.operator_terms()]))
    interior = basis.eval_matrix(colloc.interior, derivs, workers=workers)
    interior_scale = problem.operator_scale * h_m ** required if scale_rows else 1.0
    blocks = {key: _combine(interior, terms) for key, terms in operator.items()}
    matrices = [_block_rows(blocks, n_fields, colloc.n_interior, n_b) * interior_scale]
    source = problem.source(colloc.interior)
    rhs = [source.T.ravel() * interior_scale]
    kinds = [np.full(colloc.n_interior * n_fields, INTERIOR, dtype=object)]
    scales = [np.full(colloc.n_interior * n_fields, interior_scale)]

    for tag in dict.fromkeys(colloc.tags):
        points, normals = colloc.boundary_with_tag(tag)
        if tag == VALUE:
            row = basis.eval_matrix(points, [value], workers=workers)[value]
            data = problem.boundary_value(points)
            scale, kind = 1.0, BOUNDARY_VALUE
        elif tag == NORMAL_DERIVATIVE:
            grads = basis.eval_matrix(points, gradient, workers=workers)
            row = None
            for k, deriv in enumerate(gradient):
                term = sparse.diags(normals[:, k]) @ grads[deriv]
                row = term if row is None else row + term
            data = problem.normal_derivative(points, normals)
            scale, kind = (h_m if scale_rows else 1.0), BOUNDARY_NORMAL
        else:
            raise AssemblyError(f"unknown boundary tag {tag!r}")
        diagonal = {(a, a): row for a in range(n_fields)}
        matrices.append(_block_rows(diagonal, n_fields, len(points), n_b) * scale)
        rhs.append(data.T.ravel() * scale)
        kinds.append(np.full(len(points) * n_fields, kind, dtype=object))
        scales.append(np.full(len(points) * n_fields, scale))

    matrix = sparse.vstack(matrices, format='csr')
    system = CollocationSystem(
        matrix=matrix,
        rhs=np.concatenate(rhs),
        row_kind=np.concatenate(kinds),
        row_scale=np.concatenate(scales),
        basis=basis,
        n_fields=n_fields,
        interior_evaluations={d: interior[d] for d in [value, *gradient]},
    )
    logger.debug("assembled %d x %d system with %d non-zeros", *matrix.shape, matrix.nnz)
    return system


def _column_norms(matrix):
    return np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=0)).ravel())


def _unknowns_to_coefficients(u, system):
    return u.reshape(system.n_fields, system.basis.n_b).T


def _unscaled_residual(system, u):
    return float(np.linalg.norm((system.matrix @ u - system.rhs) / system.row_scale))


def solve(system, block_rows=None):
    """
    Least-squares solution by a column-equilibrated, row-blocked QR factorisation.

    The augmented matrix [C | s] is reduced block by block so only an
    (n + 1) x (n + 1) triangular factor is kept between blocks.
    """
    matrix, rhs = system.matrix, system.rhs
    m, n = matrix.shape
    if m < n:
        raise SolveError(f"underdetermined: {m} equations for {n} unknowns")
    norms = _column_norms(matrix)
    if np.any(norms == 0):
        empty = int((norms == 0).sum())
        raise SolveError(f"{empty} basis columns have no collocation point in their support", condition_estimate=np.inf)
    scaled = (matrix @ sparse.diags(1.0 / norms)).tocsr()
    block = block_rows or max(MIN_BLOCK_ROWS, n // 2)
    logger.debug("QR over %d rows in blocks of %d", m, block)

    triangle = np.zeros((0, n + 1))
    for start in range(0, m, block):
        stop = min(start + block, m)
        chunk = np.hstack([scaled[start:stop].toarray(), rhs[start:stop, None]])
        stacked = np.vstack([triangle, chunk])
        (factor,) = scipy.linalg.qr(stacked, mode='r', overwrite_a=True, check_finite=False)
        triangle = factor[: min(len(stacked), n + 1)]

    r = triangle[:n, :n]
    qtb = triangle[:n, n]
    diagonal = np.abs(np.diag(r))
    condition = float(diagonal.max() / diagonal.min()) if diagonal.min() > 0 else np.inf
    if diagonal.min() <= RANK_TOLERANCE * diagonal.max():
        raise SolveError(
            f"collocation matrix is numerically rank deficient (condition estimate {condition:.3e})",
            condition_estimate=condition,
        )
    logger.debug("triangular factor condition estimate %.3e", condition)
    u = scipy.linalg.solve_triangular(r, qtb, check_finite=False) / norms
    return Solution(
        coefficients=_unknowns_to_coefficients(u, system),
        basis=system.basis,
        residual_norm=_unscaled_residual(system, u),
        condition_estimate=condition,
    )


def solve_normal_equations(system):
    """Reference solve of C^T C u = C^T s"""
    matrix = system.matrix
    gram = (matrix.T @ matrix).toarray()
    moment = matrix.T @ system.rhs
    try:
        u = scipy.linalg.solve(gram, moment, assume_a='pos')
    except scipy.linalg.LinAlgError as exc:
        raise SolveError(f"normal equations are singular: {exc}") from exc
    return Solution(_unknowns_to_coefficients(u, system), system.basis, _unscaled_residual(system, u))


def evaluate_field(solution, x, deriv=0):
    """Field component values (n_fields,) of one derivative at a single point"""
    return solution.evaluate(np.atleast_2d(x), deriv)[0]


def relative_error_values(exact, approx):
    """sqrt(sum |v - v_h|^2 / sum |v|^2) over points and components"""
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    denominator = np.sum(exact ** 2)
    if denominator == 0:
        raise ProblemError("relative error is undefined: the exact field vanishes at every point")
    return float(np.sqrt(np.sum((exact - approx) ** 2) / denominator))


def relative_error(exact_field, solution, points, deriv=None):
    """
    Discrete relative error of a solution at the given points.

    deriv=None compares field values (the L2 figure of merit) and
    deriv='gradient' compares gradients (the H1 seminorm figure).
    """
    if deriv is None:
        return relative_error_values(exact_field(points), solution.evaluate(points))
    if deriv == 'gradient':
        return relative_error_values(exact_field(points), solution.gradient(points))
    raise ProblemError(f"unsupported error kind {deriv!r}; use None or 'gradient'")


def energy_error_values(material, exact_gradient, approx_gradient):
    """sqrt(sum (e - e_h):sigma(e - e_h) / sum e:sigma(e)) from displacement gradients"""

    def energy(eps):
        return np.sum(eps * material.stress(eps))

    exact_strain = strain(exact_gradient)
    difference = exact_strain - strain(approx_gradient)
    denominator = energy(exact_strain)
    if denominator == 0:
        raise ProblemError("energy error is undefined: the exact strain vanishes at every point")
    return float(np.sqrt(energy(difference) / denominator))


def energy_error(problem, solution, points):
    return energy_error_values(problem.material, problem.exact_gradient(points), solution.gradient(points))


def write_triplets(matrix, stream):
    """Matrix in "ROWS COLS NNZ" + 1-based "i j value" lines"""
    coo = sparse.coo_matrix(matrix)
    stream.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
    for i, j, v in zip(coo.row, coo.col, coo.data):
        stream.write(f"{i + 1} {j + 1} {float(v)!r}\n")


def write_vector(vector, stream):
    column = np.asarray(vector, dtype=float).reshape(-1, 1)
    write_triplets(sparse.coo_matrix(column), stream)
