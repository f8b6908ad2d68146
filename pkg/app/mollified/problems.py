"""
PDE cases with manufactured or analytic solutions.

A case exposes its exact field, gradient and source term as vectorised
functions of points (n, dim), and its interior operator as a mapping

    (row component a, unknown component b) -> {derivative multi-index: coefficient}

so that the assembled interior row of component a reads
sum_b sum_terms coefficient * D^deriv u_b = source_a.
"""
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ProblemError
from .mesh import Domain, make_rng

logger = logging.getLogger(__name__)

VALUE = 'value'
NORMAL_DERIVATIVE = 'normal_derivative'

PI = np.pi


@dataclass(frozen=True)
class Material:
    youngs_modulus: float
    poisson_ratio: float

    def __post_init__(self):
        if self.youngs_modulus <= 0 or not -1 < self.poisson_ratio < 0.5:
            raise ProblemError(f"invalid material E={self.youngs_modulus} nu={self.poisson_ratio}")

    @property
    def shear_modulus(self):
        return self.youngs_modulus / (2 * (1 + self.poisson_ratio))

    @property
    def lame(self):
        nu = self.poisson_ratio
        return self.youngs_modulus * nu / ((1 + nu) * (1 - 2 * nu))

    @property
    def plane_stress_lame(self):
        """lambda* = 2 lambda mu / (lambda + 2 mu)"""
        lam, mu = self.lame, self.shear_modulus
        return 2 * lam * mu / (lam + 2 * mu)

    @property
    def kolosov(self):
        """Plane-stress Kolosov constant (3 - nu) / (1 + nu)"""
        return (3 - self.poisson_ratio) / (1 + self.poisson_ratio)

    def stress(self, strain):
        """Plane-stress stress for strains of shape (..., 2, 2)"""
        trace = strain[..., 0, 0] + strain[..., 1, 1]
        return self.plane_stress_lame * trace[..., None, None] * np.eye(2) + 2 * self.shear_modulus * strain


def strain(gradient):
    """Symmetric part of displacement gradients (..., 2, 2)"""
    gradient = np.asarray(gradient, dtype=float)
    return 0.5 * (gradient + np.swapaxes(gradient, -1, -2))


def _unit(axis, dim, order=1):
    deriv = [0] * dim
    deriv[axis] = order
    return tuple(deriv)


def _add(operator, key, deriv, coefficient):
    terms = operator.setdefault(key, {})
    terms[deriv] = terms.get(deriv, 0.0) + coefficient


_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def _central_difference(f, points, deriv, step):
    total = 0.0
    for combo in itertools.product(*(zip(*_STENCILS[order]) for order in deriv)):
        shift = np.array([offset for offset, _ in combo], dtype=float) * step
        weight = np.prod([w for _, w in combo])
        total = total + weight * f(points + shift)
    return total / step ** sum(deriv)


def finite_difference(f, points, deriv, step):
    """Central differences with one Richardson extrapolation step"""
    coarse = _central_difference(f, points, deriv, step)
    fine = _central_difference(f, points, deriv, step / 2)
    return (4 * fine - coarse) / 3


@dataclass(frozen=True, eq=False)
class ProblemCase:
    """Base case: subclasses provide the exact field, its gradient, the source and the operator"""

    name: str = ''
    pde: str = 'poisson'
    domain: Domain = None
    n_fields: int = 1
    order: int = 2
    boundary_tags: tuple = (VALUE,)
    parameters: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.domain.dim

    @property
    def operator_scale(self):
        """Factor that makes the interior operator's leading coefficients of order one"""
        return 1.0

    def exact(self, points):
        raise NotImplementedError

    def exact_gradient(self, points):
        raise NotImplementedError

    def source(self, points):
        raise NotImplementedError

    def interior_operator(self):
        raise NotImplementedError

    def boundary_value(self, points):
        return self.exact(points)

    def normal_derivative(self, points, normals):
        return np.einsum('nfd,nd->nf', self.exact_gradient(points), np.asarray(normals, dtype=float))

    def operator_terms(self):
        """Derivative multi-indices appearing in the interior operator"""
        return sorted({deriv for terms in self.interior_operator().values() for deriv in terms})

    def apply_operator_fd(self, points, step):
        """Interior operator applied to the exact field by finite differences, plus the term scale"""
        points = np.asarray(points, dtype=float)
        result = np.zeros((len(points), self.n_fields))
        scale = np.zeros((len(points), self.n_fields))
        for (a, b), terms in self.interior_operator().items():
            for deriv, coefficient in terms.items():
                value = coefficient * finite_difference(lambda p: self.exact(p)[:, b], points, deriv, step)
                result[:, a] += value
                scale[:, a] += np.abs(value)
        return result, scale

    def check_consistency(self, n_points=20, rng_seed=0, rtol=1e-5):
        """Check the source against the operator applied to the exact field at random points"""
        step = (1e-2 if self.order >= 4 else 2e-3) * self.domain.extent
        margin = 4 * step
        rng = make_rng(rng_seed)
        points = np.empty((0, self.dim))
        while len(points) < n_points:
            candidates = rng.uniform(self.domain.lower, self.domain.upper, size=(4 * n_points, self.dim))
            candidates = candidates[self.domain.signed_distance(candidates) > margin]
            points = np.concatenate([points, candidates])[:n_points]
        applied, scale = self.apply_operator_fd(points, step)
        error = np.linalg.norm(applied - self.source(points))
        reference = max(np.linalg.norm(scale), np.linalg.norm(self.source(points)))
        if reference == 0 or error > rtol * reference:
            raise ProblemError(
                f"{self.name}: source is inconsistent with the exact solution "
                f"(relative mismatch {error / reference if reference else np.inf:.3e})"
            )
        return error / reference


def _scalar(values):
    return np.asarray(values, dtype=float)[:, None]


class Poisson1D(ProblemCase):
    def exact(self, points):
        x = np.asarray(points, dtype=float)[:, 0]
        return _scalar(np.sin(3 * PI * x))

    def exact_gradient(self, points):
        x = np.asarray(points, dtype=float)[:, 0]
        return (3 * PI * np.cos(3 * PI * x))[:, None, None]

    def source(self, points):
        x = np.asarray(points, dtype=float)[:, 0]
        return _scalar(9 * PI ** 2 * np.sin(3 * PI * x))

    def interior_operator(self):
        return {(0, 0): {(2,): -1.0}}


class Poisson2D(ProblemCase):
    def exact(self, points):
        x, y = np.asarray(points, dtype=float).T
        return _scalar(np.sin(PI * x) * np.sin(PI * y))

    def exact_gradient(self, points):
        x, y = np.asarray(points, dtype=float).T
        grad = np.stack([PI * np.cos(PI * x) * np.sin(PI * y), PI * np.sin(PI * x) * np.cos(PI * y)], axis=1)
        return grad[:, None, :]

    def source(self, points):
        return 2 * PI ** 2 * self.exact(points)

    def interior_operator(self):
        return {(0, 0): {(2, 0): -1.0, (0, 2): -1.0}}


class Biharmonic1D(ProblemCase):
    def exact(self, points):
        x = np.asarray(points, dtype=float)[:, 0]
        return _scalar(np.sin(3 * PI * x))

    def exact_gradient(self, points):
        x = np.asarray(points, dtype=float)[:, 0]
        return (3 * PI * np.cos(3 * PI * x))[:, None, None]

    def source(self, points):
        x = np.asarray(points, dtype=float)[:, 0]
        return _scalar((3 * PI) ** 4 * np.sin(3 * PI * x))

    def interior_operator(self):
        return {(0, 0): {(4,): 1.0}}


class PlateBending(ProblemCase):
    """Clamped Kirchhoff plate: D (u_xxxx + 2 u_xxyy + u_yyyy) = q"""

    @property
    def stiffness(self):
        return self.parameters.get('D', 1.0)

    def exact(self, points):
        x, y = np.asarray(points, dtype=float).T
        return _scalar((1 - np.cos(2 * PI * x)) * (1 - np.cos(2 * PI * y)))

    def exact_gradient(self, points):
        x, y = np.asarray(points, dtype=float).T
        gx = 2 * PI * np.sin(2 * PI * x) * (1 - np.cos(2 * PI * y))
        gy = 2 * PI * (1 - np.cos(2 * PI * x)) * np.sin(2 * PI * y)
        return np.stack([gx, gy], axis=1)[:, None, :]

    def source(self, points):
        x, y = np.asarray(points, dtype=float).T
        a, b = np.cos(2 * PI * x), np.cos(2 * PI * y)
        return _scalar(-16 * PI ** 4 * self.stiffness * (a - 4 * a * b + b))

    @property
    def operator_scale(self):
        return 1.0 / self.stiffness

    def interior_operator(self):
        d = self.stiffness
        return {(0, 0): {(4, 0): d, (2, 2): 2 * d, (0, 4): d}}


class Elasticity(ProblemCase):
    """Plane-stress linear elasticity: -div sigma(u) = b"""

    @property
    def material(self):
        return Material(self.parameters['E'], self.parameters['nu'])

    def interior_operator(self):
        mu = self.material.shear_modulus
        lam = self.material.plane_stress_lame
        operator = {}
        for a in range(2):
            for k in range(2):
                _add(operator, (a, a), _unit(k, 2, 2), -mu)
            for b in range(2):
                deriv = tuple(int(i) for i in np.add(_unit(a, 2), _unit(b, 2)))
                _add(operator, (a, b), deriv, -(lam + mu))
        return operator

    @property
    def operator_scale(self):
        return 1.0 / self.material.shear_modulus


class ManufacturedElasticity(Elasticity):
    def exact(self, points):
        x, y = np.asarray(points, dtype=float).T
        u = np.sin(PI * x) * np.sin(PI * y)
        return np.stack([u, u], axis=1)

    def exact_gradient(self, points):
        x, y = np.asarray(points, dtype=float).T
        g = np.stack([PI * np.cos(PI * x) * np.sin(PI * y), PI * np.sin(PI * x) * np.cos(PI * y)], axis=1)
        return np.stack([g, g], axis=1)

    def source(self, points):
        x, y = np.asarray(points, dtype=float).T
        mu = self.material.shear_modulus
        lam = self.material.plane_stress_lame
        s = np.sin(PI * x) * np.sin(PI * y)
        c = np.cos(PI * x) * np.cos(PI * y)
        b = PI ** 2 * ((lam + 3 * mu) * s - (lam + mu) * c)
        return np.stack([b, b], axis=1)


class PlateWithHole(Elasticity):
    """
    Infinite plate under uniaxial tension sigma_inf along x with a circular
    hole of radius a at the origin, restricted to the unit quarter plate.
    """

    @property
    def radius(self):
        return self.parameters['a']

    @property
    def tension(self):
        return self.parameters['sigma']

    def _polar(self, points):
        x, y = np.asarray(points, dtype=float).T
        r = np.hypot(x, y)
        if np.any(r <= 0):
            raise ProblemError("the analytic field is singular at the hole centre")
        return r, np.arctan2(y, x)

    def _parts(self, r, theta):
        kappa = self.material.kolosov
        a = self.radius
        q = a / r
        c1, c3 = np.cos(theta), np.cos(3 * theta)
        s1, s3 = np.sin(theta), np.sin(3 * theta)
        # u_x = c (F1 c1 + F3 c3), u_y = c (G1 s1 + G3 s3)
        f1 = (kappa + 1) / q + 2 * (1 + kappa) * q
        f3 = 2 * q - 2 * q ** 3
        g1 = (kappa - 3) / q + 2 * (1 - kappa) * q
        g3 = 2 * q - 2 * q ** 3
        # derivatives with respect to r of the radial factors (dq/dr = -q / r)
        df1 = (kappa + 1) / a - 2 * (1 + kappa) * q / r
        df3 = -2 * q / r + 6 * q ** 3 / r
        dg1 = (kappa - 3) / a - 2 * (1 - kappa) * q / r
        dg3 = -2 * q / r + 6 * q ** 3 / r
        return (f1, f3, g1, g3), (df1, df3, dg1, dg3), (c1, c3, s1, s3)

    @property
    def _amplitude(self):
        return self.tension * self.radius / (8 * self.material.shear_modulus)

    def exact(self, points):
        r, theta = self._polar(points)
        (f1, f3, g1, g3), _, (c1, c3, s1, s3) = self._parts(r, theta)
        c = self._amplitude
        return np.stack([c * (f1 * c1 + f3 * c3), c * (g1 * s1 + g3 * s3)], axis=1)

    def exact_gradient(self, points):
        r, theta = self._polar(points)
        (f1, f3, g1, g3), (df1, df3, dg1, dg3), (c1, c3, s1, s3) = self._parts(r, theta)
        c = self._amplitude
        ux_r = c * (df1 * c1 + df3 * c3)
        ux_t = -c * (f1 * s1 + 3 * f3 * s3)
        uy_r = c * (dg1 * s1 + dg3 * s3)
        uy_t = c * (g1 * c1 + 3 * g3 * c3)
        cos, sin = np.cos(theta), np.sin(theta)

        def cartesian(d_r, d_t):
            return np.stack([cos * d_r - sin / r * d_t, sin * d_r + cos / r * d_t], axis=1)

        return np.stack([cartesian(ux_r, ux_t), cartesian(uy_r, uy_t)], axis=1)

    def source(self, points):
        return np.zeros((len(points), 2))


def poisson_1d():
    return Poisson1D(name='poisson1d', pde='poisson', domain=Domain.unit_interval())


def poisson_2d():
    return Poisson2D(name='poisson2d', pde='poisson', domain=Domain.unit_square())


def biharmonic_1d():
    return Biharmonic1D(
        name='biharmonic1d',
        pde='biharmonic',
        domain=Domain.unit_interval(),
        order=4,
        boundary_tags=(VALUE, NORMAL_DERIVATIVE),
    )


def elasticity_2d():
    return ManufacturedElasticity(
        name='elasticity2d',
        pde='elasticity-plane-stress',
        domain=Domain.unit_square(),
        n_fields=2,
        parameters={'E': 1000.0, 'nu': 0.3},
    )


def plate_bending_2d():
    return PlateBending(
        name='plate_bending',
        pde='biharmonic',
        domain=Domain.unit_square(),
        order=4,
        boundary_tags=(VALUE, NORMAL_DERIVATIVE),
        parameters={'D': 1.0},
    )


def plate_with_hole():
    return PlateWithHole(
        name='plate_hole',
        pde='elasticity-plane-stress',
        domain=Domain.quarter_plate(0.25),
        n_fields=2,
        parameters={'E': 70e6, 'nu': 0.3, 'sigma': 1e6, 'a': 0.25},
    )


CASES = {
    'poisson1d': poisson_1d,
    'biharmonic1d': biharmonic_1d,
    'elasticity2d': elasticity_2d,
    'plate_bending': plate_bending_2d,
    'plate_hole': plate_with_hole,
    'poisson2d': poisson_2d,
}


def get_case(name):
    try:
        factory = CASES[name]
    except KeyError:
        raise ProblemError(f"unknown case {name!r}; choose one of {', '.join(CASES)}") from None
    return factory()
