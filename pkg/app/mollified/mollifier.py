"""
Symmetric, compactly supported, unit-volume polynomial mollifiers.

Every family is stored as a piecewise polynomial in the normalised offset
t = x / h_m on [-1/2, 1/2], so derivatives are exact:

    m^(n)(x) = shape^(n)(x / h_m) / h_m^(n + 1)
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import BSpline, PPoly
from scipy.special import roots_legendre

from .exceptions import MollifierError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MollifierFamily:
    name: str
    degree: int
    smoothness: int
    scale: float = 1.0
    # coefficients of the even kernels in powers of (x / h_m)^2
    coefficients: tuple = ()

    @property
    def is_bspline(self):
        return not self.coefficients


FAMILIES = {
    'bspline2': MollifierFamily('bspline2', degree=2, smoothness=1),
    'bspline3': MollifierFamily('bspline3', degree=3, smoothness=2),
    'hexic': MollifierFamily('hexic', degree=6, smoothness=2, scale=35 / 16, coefficients=(1, -12, 48, -64)),
    'octic': MollifierFamily('octic', degree=8, smoothness=3, scale=315 / 128, coefficients=(1, -16, 96, -256, 256)),
    'decic': MollifierFamily(
        'decic', degree=10, smoothness=4, scale=2772 / 1024, coefficients=(1, -20, 160, -640, 1280, -1024)
    ),
}


def as_multi_index(deriv, dim):
    """Normalise an int or tuple derivative spec to a tuple of length `dim`"""
    if isinstance(deriv, (int, np.integer)):
        if dim != 1 and deriv != 0:
            raise MollifierError(f"an integer derivative order is ambiguous in {dim}D")
        deriv = (int(deriv),) * (1 if dim == 1 else dim)
    deriv = tuple(int(d) for d in deriv)
    if len(deriv) != dim or any(d < 0 for d in deriv):
        raise MollifierError(f"invalid derivative multi-index {deriv} for dimension {dim}")
    return deriv


def _unit_shape(family):
    """Piecewise polynomial of the unit-width kernel on [-1/2, 1/2]"""
    if family.is_bspline:
        k = family.degree
        element = BSpline.basis_element(np.linspace(-0.5, 0.5, k + 2), extrapolate=False)
        spline = PPoly.from_spline(element, extrapolate=False)
        return PPoly(spline.c * (k + 1), spline.x, extrapolate=False)
    coefficients = np.zeros(family.degree + 1)
    coefficients[0::2] = family.coefficients
    kernel = family.scale * Polynomial(coefficients)
    # local variable u = t + 1/2 on the single piece [-1/2, 1/2]
    shifted = kernel(Polynomial([-0.5, 1.0]))
    local = np.zeros(family.degree + 1)
    local[: len(shifted.coef)] = shifted.coef
    return PPoly(local[::-1].reshape(-1, 1), np.array([-0.5, 0.5]), extrapolate=False)


@dataclass(frozen=True)
class Mollifier:
    """A mollifier family at a given support width, tensorised in 2D"""

    family: str
    width: float
    dim: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise MollifierError(f"unknown mollifier family {self.family!r}; choose one of {', '.join(FAMILIES)}")
        if not (math.isfinite(self.width) and self.width > 0):
            raise MollifierError(f"mollifier width must be positive, got {self.width}")
        if self.dim not in (1, 2):
            raise MollifierError(f"mollifier dimension must be 1 or 2, got {self.dim}")

    @property
    def spec(self):
        return FAMILIES[self.family]

    @property
    def degree(self):
        """Polynomial degree of each 1D piece"""
        return self.spec.degree

    @property
    def smoothness(self):
        return self.spec.smoothness

    @property
    def halfwidth(self):
        return self.width / 2

    @cached_property
    def _shapes(self):
        shape = _unit_shape(self.spec)
        return tuple([shape] + [shape.derivative(n) for n in range(1, self.degree + 1)])

    @cached_property
    def breakpoints(self):
        """Piece boundaries of the 1D kernel in physical offsets, from -h_m/2 to h_m/2"""
        x = self._shapes[0].x
        inside = x[(x >= -0.5) & (x <= 0.5)]
        return np.unique(inside) * self.width

    @property
    def knots(self):
        """Interior breakpoints where the kernel changes polynomial piece"""
        return self.breakpoints[1:-1]

    def eval1d(self, offset, order=0):
        if order > self.degree:
            raise MollifierError(
                f"derivative order {order} exceeds the piece degree {self.degree} of the {self.family} mollifier"
            )
        t = np.asarray(offset, dtype=float) / self.width
        values = self._shapes[order](t)
        inside = (t >= -0.5) & (t < 0.5)
        return np.where(inside, np.nan_to_num(values), 0.0) / self.width ** (order + 1)

    def eval(self, offset, deriv=0):
        """
        Tensor-product kernel or its partial derivative at the given offsets.

        In 1D `offset` is a scalar, an (n,) or an (n, 1) array; in 2D the last
        axis holds the two coordinates. Offsets on the upper support edge give
        zero and interior knots take the piece on their positive side.
        """
        deriv = as_multi_index(deriv, self.dim)
        offset = np.asarray(offset, dtype=float)
        if self.dim == 1:
            if offset.ndim >= 2 and offset.shape[-1] == 1:
                offset = offset[..., 0]
            return self.eval1d(offset, deriv[0])
        if offset.shape[-1] != 2:
            raise MollifierError(f"2D offsets need a trailing axis of size 2, got shape {offset.shape}")
        return self.eval1d(offset[..., 0], deriv[0]) * self.eval1d(offset[..., 1], deriv[1])

    def moment(self, order):
        """Integral of s^order m(s) ds along one axis"""
        if order < 0:
            raise MollifierError("moment order must be non-negative")
        n = math.ceil((order + self.degree + 1) / 2)
        nodes, weights = roots_legendre(n)
        edges = self.breakpoints
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            s = (a + b) / 2 + (b - a) / 2 * nodes
            total += (b - a) / 2 * np.sum(weights * s ** order * self.eval1d(s))
        return float(total)
