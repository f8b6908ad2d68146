import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from mollified.exceptions import GeometryError, QuadratureError
from mollified.geometry import (
    AxisBox,
    ConvexPolytope,
    clip_halfplane,
    clip_polygons,
    clip_to_box,
    contains,
    convex_hull,
    fan_rules,
    fan_triangulate,
    gauss_rule,
    minkowski_with_box,
    quad_rule,
    reference_rule,
    split_at,
)


class ConvexPolytopeTests(SimpleTestCase):
    def test_unit_square_measure_and_centroid(self):
        square = ConvexPolytope.rectangle((0, 0), (1, 1))
        self.assertAlmostEqual(square.measure, 1.0)
        assert_allclose(square.centroid, [0.5, 0.5])

    def test_clockwise_loop_is_rejected(self):
        with self.assertRaises(GeometryError):
            ConvexPolytope.polygon([[0, 0], [0, 1], [1, 1], [1, 0]])

    def test_non_convex_loop_is_rejected(self):
        with self.assertRaises(GeometryError):
            ConvexPolytope.polygon([[0, 0], [2, 0], [1, 0.2], [2, 2], [0, 2]])

    def test_reversed_interval_is_rejected(self):
        with self.assertRaises(GeometryError):
            ConvexPolytope.interval(1.0, 0.5)

    def test_contains_is_closed(self):
        square = ConvexPolytope.rectangle((0, 0), (1, 1))
        mask = contains(square, [[0.5, 0.5], [1.0, 0.3], [1.1, 0.5]])
        self.assertEqual(mask.tolist(), [True, True, False])


class ClippingTests(SimpleTestCase):
    def test_halfplane_cuts_square_in_half(self):
        square = ConvexPolytope.rectangle((0, 0), (1, 1)).vertices
        half = ConvexPolytope(clip_halfplane(square, [1.0, 0.0], 0.5))
        self.assertAlmostEqual(half.measure, 0.5)

    def test_halfplane_missing_everything_is_empty(self):
        square = ConvexPolytope.rectangle((0, 0), (1, 1)).vertices
        self.assertEqual(len(clip_halfplane(square, [1.0, 0.0], -1.0)), 0)

    def test_clip_to_box_matches_overlap(self):
        square = ConvexPolytope.rectangle((0, 0), (1, 1))
        clipped = clip_to_box(square, AxisBox([1.0, 1.0], 0.25))
        self.assertAlmostEqual(clipped.measure, 0.0625)

    def test_clip_to_box_disjoint_is_empty(self):
        square = ConvexPolytope.rectangle((0, 0), (1, 1))
        self.assertTrue(clip_to_box(square, AxisBox([3.0, 3.0], 0.5)).is_empty)

    def test_clipping_twice_changes_nothing(self):
        hexagon = ConvexPolytope.polygon(
            [[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 6, endpoint=False)]
        )
        box = AxisBox([0.6, 0.2], [0.7, 0.5])
        once = clip_to_box(hexagon, box)
        twice = clip_to_box(once, box)
        self.assertAlmostEqual(twice.measure, once.measure, places=14)
        assert_allclose(twice.vertices, once.vertices, atol=1e-14)

    def test_clipped_area_matches_sampling(self):
        hexagon = ConvexPolytope.polygon(
            [[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 6, endpoint=False)]
        )
        box = AxisBox([0.6, 0.2], [0.7, 0.5])
        samples = np.random.default_rng(0).uniform(box.lower, box.upper, size=(200_000, 2))
        estimate = contains(hexagon, samples).mean() * np.prod(2 * box.halfwidth)
        self.assertAlmostEqual(clip_to_box(hexagon, box).measure, estimate, delta=0.02)

    def test_batched_clipping_matches_single_polygons(self):
        hexagon = np.array([[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 6, endpoint=False)])
        triangle = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        vertices = np.zeros((3, 6, 2))
        vertices[0], vertices[1, :3], vertices[2, :3] = hexagon, triangle, triangle
        counts = np.array([6, 3, 3])
        lower = np.array([[-0.1, -0.3], [0.2, -1.0], [3.0, 3.0]])
        upper = np.array([[1.3, 0.7], [2.0, 0.5], [4.0, 4.0]])
        clipped, clipped_counts = clip_polygons(vertices, counts, lower, upper)
        _, weights = fan_rules(clipped, clipped_counts, 2)
        expected = [
            clip_to_box(ConvexPolytope.polygon(hexagon), AxisBox((lower[0] + upper[0]) / 2, (upper[0] - lower[0]) / 2)),
            clip_to_box(ConvexPolytope.polygon(triangle), AxisBox((lower[1] + upper[1]) / 2, (upper[1] - lower[1]) / 2)),
        ]
        assert_allclose(weights.sum(axis=1), [expected[0].measure, expected[1].measure, 0.0], atol=1e-12)
        self.assertEqual(clipped_counts[2], 0)

    def test_clip_interval(self):
        clipped = clip_to_box(ConvexPolytope.interval(0.0, 1.0), AxisBox([0.9], 0.25))
        assert_allclose(clipped.vertices[:, 0], [0.65, 1.0])

    def test_split_preserves_area(self):
        triangle = ConvexPolytope.polygon([[0, 0], [1, 0], [0, 1]])
        parts = split_at(triangle, 0, 0.3)
        self.assertEqual(len(parts), 2)
        self.assertAlmostEqual(sum(part.measure for part in parts), 0.5)

    def test_split_outside_returns_polytope(self):
        square = ConvexPolytope.rectangle((0, 0), (1, 1))
        self.assertEqual(len(split_at(square, 1, 2.0)), 1)


class HullAndMinkowskiTests(SimpleTestCase):
    def test_minkowski_of_square_with_box(self):
        square = ConvexPolytope.rectangle((0, 0), (1, 1))
        support = minkowski_with_box(square, 0.5)
        self.assertAlmostEqual(support.measure, 4.0)
        lower, upper = support.bounds
        assert_allclose(lower, [-0.5, -0.5])
        assert_allclose(upper, [1.5, 1.5])

    def test_minkowski_of_triangle_area(self):
        # area(T) + 2w (x-extent + y-extent) + 4w^2 for the box [-w, w]^2
        triangle = ConvexPolytope.polygon([[0, 0], [1, 0], [0, 1]])
        support = minkowski_with_box(triangle, 0.1)
        self.assertAlmostEqual(support.measure, 0.5 + 0.2 * 1 + 0.2 * 1 + 0.04)

    def test_collinear_hull_is_degenerate(self):
        with self.assertRaisesMessage(GeometryError, 'degenerate hull'):
            convex_hull([[0, 0], [1, 1], [2, 2]])


class QuadratureTests(SimpleTestCase):
    def test_interval_rule_is_exact_to_its_degree(self):
        for degree in (1, 5, 12):
            rule = gauss_rule(ConvexPolytope.interval(0.2, 1.4), degree)
            expected = (1.4 ** (degree + 1) - 0.2 ** (degree + 1)) / (degree + 1)
            self.assertAlmostEqual(rule.integrate(rule.points[:, 0] ** degree), expected, places=10)

    def test_triangle_rules_integrate_monomials(self):
        # integral of x^a y^b over the unit triangle is a! b! / (a + b + 2)!
        from math import factorial

        for degree in (1, 2, 3, 7, 20):
            rule = gauss_rule(np.array([[0, 0], [1, 0], [0, 1]]), degree)
            self.assertTrue(np.all(rule.weights > 0))
            for a in range(degree + 1):
                b = degree - a
                expected = factorial(a) * factorial(b) / factorial(a + b + 2)
                value = rule.integrate(rule.points[:, 0] ** a * rule.points[:, 1] ** b)
                self.assertAlmostEqual(value, expected, places=12)

    def test_fan_triangulation_covers_polygon(self):
        hexagon = ConvexPolytope.polygon(
            [[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 6, endpoint=False)]
        )
        triangles = fan_triangulate(hexagon)
        self.assertEqual(triangles.shape, (6, 3, 2))
        total = sum(gauss_rule(tri, 1).measure for tri in triangles)
        self.assertAlmostEqual(total, hexagon.measure)

    def test_quadrilateral_rule_measures_area(self):
        quad = np.array([[0, 0], [2, 0], [2.5, 1.5], [0, 1]])
        rule = quad_rule(quad, 4)
        self.assertAlmostEqual(rule.measure, ConvexPolytope.polygon(quad).measure)

    def test_unsupported_degree(self):
        with self.assertRaises(QuadratureError):
            reference_rule('triangle', 31)
        with self.assertRaises(QuadratureError):
            reference_rule('triangle', 0)
