import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from mollified.exceptions import StudyError
from mollified.mesh import uniform_intervals
from mollified.problems import poisson_1d
from mollified.study import (
    CSV_COLUMNS,
    LevelResult,
    StudyConfig,
    build_mesh,
    fit_rate,
    fit_rates,
    render_csv,
    run_study,
    solve_level,
)


def poisson_config(**overrides):
    values = dict(case='poisson1d', rp=2, mollifier='bspline2', scheme='uniform', beta=6, levels=4)
    values.update(overrides)
    return StudyConfig(**values)


class RateFittingTests(SimpleTestCase):
    def test_exact_power_law(self):
        h = np.array([0.2, 0.1, 0.05, 0.025])
        self.assertAlmostEqual(fit_rate(h, 3.0 * h ** 2), 2.0)

    def test_constant_factor_does_not_change_the_rate(self):
        h = np.array([0.3, 0.15, 0.075])
        self.assertAlmostEqual(fit_rate(h, 7.5 * h ** 1.5), 1.5)
        self.assertAlmostEqual(fit_rate(h, 0.01 * h ** 1.5), 1.5)

    def test_needs_two_points(self):
        with self.assertRaises(StudyError):
            fit_rate([0.1], [0.01])

    def test_non_positive_errors_are_rejected(self):
        with self.assertRaises(StudyError):
            fit_rate([0.1, 0.05], [0.01, 0.0])

    def test_missing_energy_column_is_skipped(self):
        levels = [LevelResult(k, 6 * 2 ** k, 0.2 / 2 ** k, 0, 0, 4.0 ** -k, 2.0 ** -k) for k in range(3)]
        rates = fit_rates(levels)
        self.assertAlmostEqual(rates['e_L2'], 2.0)
        self.assertAlmostEqual(rates['e_H1'], 1.0)
        self.assertNotIn('e_energy', rates)


class CsvTests(SimpleTestCase):
    def test_header_and_blank_energy(self):
        text = render_csv([LevelResult(0, 6, 0.2, 24, 38, 0.5, 0.25, mean=0.5)])
        header, row = text.splitlines()
        self.assertEqual(header, ','.join(CSV_COLUMNS))
        fields = row.split(',')
        self.assertEqual(fields[:5], ['0', '6', '2.0000000000e-01', '24', '38'])
        self.assertEqual(fields[7], '')
        self.assertEqual(fields[9], '0.0000000000e+00')


class MeshLadderTests(SimpleTestCase):
    def test_cell_counts_per_case(self):
        self.assertEqual(build_mesh('poisson1d', 2).n_cells, 24)
        self.assertEqual(build_mesh('biharmonic1d', 1).n_cells, 16)
        self.assertEqual(build_mesh('plate_hole', 1).n_interior, 64)
        self.assertEqual(build_mesh('elasticity2d', 1).n_cells, 64)


class RunStudyTests(SimpleTestCase):
    def test_poisson_study_on_the_non_uniform_ladder(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = run_study(poisson_config(out=Path(tmp)))
            self.assertTrue((Path(tmp) / 'study.csv').exists())
            rates_text = (Path(tmp) / 'rates.txt').read_text()
        self.assertEqual(len(result.levels), 4)
        self.assertTrue(1.6 <= result.rates['e_H1'] <= 2.5, result.rates)
        self.assertGreater(result.rates['e_L2'], 1.0)
        self.assertLess(result.levels[-1].e_L2, result.levels[0].e_L2)
        self.assertIn('rate e_L2', rates_text)
        self.assertIn('numpy.random.Philox', rates_text)

    def test_poisson_converges_at_second_order_on_uniform_cells(self):
        problem = poisson_1d()
        config = poisson_config()
        outcomes = [solve_level(problem, config, uniform_intervals(6 * 2 ** level)) for level in range(4)]
        h = [outcome.h for outcome in outcomes]
        self.assertGreaterEqual(fit_rate(h, [outcome.e_L2 for outcome in outcomes]), 1.6)
        errors = [outcome.e_L2 for outcome in outcomes]
        self.assertEqual(errors, sorted(errors, reverse=True))

    def test_higher_polynomial_order_lowers_the_error(self):
        quadratic = run_study(poisson_config(levels=3))
        cubic = run_study(poisson_config(rp=3, levels=3))
        self.assertLess(cubic.levels[-1].e_L2, quadratic.levels[-1].e_L2)

    def test_other_width_factors_still_converge(self):
        for kappa in (0.75, 1.25):
            result = run_study(poisson_config(kappa=kappa, levels=3))
            self.assertLess(result.levels[-1].e_H1, result.levels[0].e_H1 / 2, kappa)

    def test_cubic_spline_mollifier_has_smaller_constants(self):
        quadratic = run_study(poisson_config(levels=3))
        cubic = run_study(poisson_config(mollifier='bspline3', levels=3))
        self.assertLessEqual(cubic.levels[-1].e_L2, quadratic.levels[-1].e_L2)

    def test_biharmonic_converges_at_order_rp_minus_two(self):
        config = StudyConfig(case='biharmonic1d', rp=5, mollifier='octic', scheme='uniform', beta=8, levels=4)
        result = run_study(config)
        errors = [level.e_L2 for level in result.levels]
        self.assertEqual(errors, sorted(errors, reverse=True))
        self.assertTrue(2.3 <= result.rates['e_L2'] <= 3.7, result.rates)
        self.assertTrue(2.3 <= result.rates['e_H1'] <= 3.7, result.rates)
        denser = run_study(StudyConfig(case='biharmonic1d', rp=5, mollifier='octic', scheme='uniform', beta=10, levels=4))
        self.assertLess(denser.levels[-1].e_L2, result.levels[-1].e_L2)

    def test_quasirandom_mean_error_is_not_below_uniform(self):
        uniform = run_study(poisson_config(levels=3))
        perturbed = run_study(poisson_config(scheme='quasirandom', sigma=0.1, replicates=20, levels=3))
        for exact, noisy in zip(uniform.levels, perturbed.levels):
            self.assertGreaterEqual(noisy.mean, exact.e_L2)

    def test_elasticity_converges_on_voronoi_meshes(self):
        config = StudyConfig(case='elasticity2d', rp=1, mollifier='hexic', scheme='gauss', beta=16, levels=3)
        result = run_study(config)
        self.assertLess(result.levels[-1].e_L2, result.levels[0].e_L2)
        self.assertGreaterEqual(result.rates['e_L2'], 0.6)
        self.assertGreaterEqual(result.rates['e_H1'], 0.6)

    def test_plate_with_hole_solves_past_the_first_refinement(self):
        config = StudyConfig(case='plate_hole', rp=1, mollifier='hexic', scheme='gauss', beta=16, levels=2)
        result = run_study(config)
        self.assertEqual(len(result.levels), 2)
        self.assertTrue(all(np.isfinite(level.e_energy) for level in result.levels))

    def test_zero_perturbation_reproduces_the_uniform_study(self):
        uniform = run_study(poisson_config(levels=2))
        again = run_study(poisson_config(levels=2))
        unperturbed = run_study(poisson_config(levels=2, scheme='quasirandom', sigma=0.0, replicates=5))
        self.assertEqual(uniform.to_csv(), again.to_csv())
        self.assertEqual(uniform.to_csv(), unperturbed.to_csv())

    def test_replicated_quasirandom_levels_report_spread(self):
        result = run_study(poisson_config(scheme='quasirandom', sigma=0.1, replicates=3, levels=2))
        for level in result.levels:
            self.assertGreater(level.std, 0.0)
            self.assertAlmostEqual(level.mean, level.e_L2)

    def test_uniform_points_on_the_plate_with_hole_fail_at_level_zero(self):
        config = StudyConfig(case='plate_hole', rp=1, mollifier='hexic', scheme='uniform', beta=4, levels=2)
        with self.assertRaises(StudyError) as caught:
            run_study(config)
        self.assertEqual(caught.exception.level, 0)
        self.assertIn('tensor-product', str(caught.exception))
