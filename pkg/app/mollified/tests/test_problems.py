import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from mollified.exceptions import ProblemError
from mollified.problems import (
    CASES,
    Material,
    finite_difference,
    get_case,
    plate_with_hole,
    strain,
)


class MaterialTests(SimpleTestCase):
    def test_plane_stress_lame_constant(self):
        material = Material(1000.0, 0.3)
        self.assertAlmostEqual(material.plane_stress_lame, 1000.0 * 0.3 / (1 - 0.3 ** 2))
        self.assertAlmostEqual(material.shear_modulus, 1000.0 / 2.6)

    def test_kolosov_constant(self):
        self.assertAlmostEqual(Material(1.0, 0.3).kolosov, 2.7 / 1.3)

    def test_invalid_poisson_ratio(self):
        with self.assertRaises(ProblemError):
            Material(1.0, 0.5)


class FiniteDifferenceTests(SimpleTestCase):
    def test_fourth_derivative_of_sine(self):
        x = np.array([[0.3], [0.7]])
        value = finite_difference(lambda p: np.sin(2 * p[:, 0]), x, (4,), 1e-2)
        assert_allclose(value, 16 * np.sin(2 * x[:, 0]), rtol=1e-6)

    def test_mixed_derivative(self):
        points = np.array([[0.2, 0.5]])
        value = finite_difference(lambda p: p[:, 0] ** 2 * p[:, 1] ** 3, points, (1, 2), 1e-2)
        assert_allclose(value, [2 * 0.2 * 6 * 0.5])


class CaseTests(SimpleTestCase):
    def test_every_source_matches_its_exact_solution(self):
        for name in CASES:
            with self.subTest(case=name):
                self.assertLess(get_case(name).check_consistency(), 1e-5)

    def test_operator_scales_make_leading_coefficients_of_order_one(self):
        self.assertEqual(get_case('poisson1d').operator_scale, 1.0)
        elasticity = get_case('elasticity2d')
        self.assertAlmostEqual(elasticity.operator_scale, 1 / elasticity.material.shear_modulus)
        for name in ('elasticity2d', 'plate_hole', 'plate_bending'):
            case = get_case(name)
            coefficients = [c for terms in case.interior_operator().values() for c in terms.values()]
            self.assertAlmostEqual(min(abs(c) for c in coefficients) * case.operator_scale, 1.0)

    def test_strain_is_the_symmetric_gradient(self):
        gradient = np.array([[[1.0, 0.4], [0.0, -2.0]]])
        assert_allclose(strain(gradient), [[[1.0, 0.2], [0.2, -2.0]]])
        assert_allclose(strain(np.stack([gradient[0], gradient[0].T])), [[[1.0, 0.2], [0.2, -2.0]]] * 2)

    def test_unknown_case(self):
        with self.assertRaisesMessage(ProblemError, 'unknown case'):
            get_case('navier_stokes')

    def test_shapes(self):
        for name in CASES:
            case = get_case(name)
            lower, upper = case.domain.lower, case.domain.upper
            points = lower + (upper - lower) * np.array([[0.6] * case.dim, [0.8] * case.dim])
            self.assertEqual(case.exact(points).shape, (2, case.n_fields))
            self.assertEqual(case.exact_gradient(points).shape, (2, case.n_fields, case.dim))
            self.assertEqual(case.source(points).shape, (2, case.n_fields))

    def test_gradient_matches_finite_differences(self):
        for name in ('poisson2d', 'plate_bending', 'elasticity2d', 'plate_hole'):
            case = get_case(name)
            points = np.array([[0.45, 0.62], [0.7, 0.3]])
            gradient = case.exact_gradient(points)
            for axis in range(2):
                deriv = (1, 0) if axis == 0 else (0, 1)
                for b in range(case.n_fields):
                    fd = finite_difference(lambda p: case.exact(p)[:, b], points, deriv, 1e-4)
                    assert_allclose(gradient[:, b, axis], fd, rtol=1e-7, atol=1e-9 * np.abs(gradient).max())


class PlateWithHoleTests(SimpleTestCase):
    def stress(self, case, points):
        gradient = case.exact_gradient(points)
        return case.material.stress(strain(gradient))

    def test_hole_surface_is_traction_free(self):
        case = plate_with_hole()
        theta = np.linspace(0.1, np.pi / 2 - 0.1, 7)
        normals = np.column_stack([np.cos(theta), np.sin(theta)])
        traction = np.einsum('nij,nj->ni', self.stress(case, 0.25 * normals), normals)
        assert_allclose(traction, 0.0, atol=1e-6 * case.tension)

    def test_stress_concentration_factor_of_three(self):
        case = plate_with_hole()
        sigma = self.stress(case, np.array([[0.0, 0.25]]))
        self.assertAlmostEqual(sigma[0, 0, 0] / case.tension, 3.0, places=8)

    def test_far_field_tends_to_uniaxial_tension(self):
        case = plate_with_hole()
        sigma = self.stress(case, np.array([[200.0, 150.0]]))
        assert_allclose(sigma[0] / case.tension, [[1.0, 0.0], [0.0, 0.0]], atol=1e-5)

    def test_singular_at_centre(self):
        with self.assertRaises(ProblemError):
            plate_with_hole().exact(np.zeros((1, 2)))
