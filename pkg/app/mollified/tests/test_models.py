from django.test import TestCase
from django.urls import reverse

from mollified.models import StudyLevel, StudyRun
from mollified.study import LevelResult, StudyConfig, StudyResult, render_csv


def sample_result():
    config = StudyConfig(case='plate_hole', rp=1, mollifier='hexic', scheme='gauss', beta=16, levels=2, gamma=3)
    levels = (
        LevelResult(0, 16, 0.2165, 120, 180, 1.23456789e-2, 4.5e-2, 3.3e-2, mean=1.23456789e-2),
        LevelResult(1, 64, 0.10825, 420, 650, 3.1e-3, 2.2e-2, 1.6e-2, mean=3.1e-3),
    )
    return StudyResult(config, levels, {'e_L2': 1.99, 'e_H1': 1.03, 'e_energy': 1.04})


class StudyRunModelTests(TestCase):
    def test_record_stores_every_level(self):
        run = StudyRun.record(sample_result())
        self.assertEqual(run.levels.count(), 2)
        self.assertEqual(run.config['gamma'], 3)
        self.assertIsNone(run.config['out'])
        self.assertEqual(StudyLevel.objects.get(run=run, level=1).n_b, 420)

    def test_csv_is_reproduced_exactly(self):
        result = sample_result()
        run = StudyRun.record(result)
        self.assertEqual(StudyRun.objects.get(pk=run.pk).to_csv(), render_csv(result.levels))

    def test_level_round_trip(self):
        result = sample_result()
        run = StudyRun.record(result)
        self.assertEqual(run.level_results(), list(result.levels))


class StudyApiTests(TestCase):
    def setUp(self):
        self.run = StudyRun.record(sample_result())

    def test_list(self):
        response = self.client.get(reverse('study_list_api'))
        self.assertEqual(response.status_code, 200)
        studies = response.json()['studies']
        self.assertEqual(len(studies), 1)
        self.assertEqual(studies[0]['case'], 'plate_hole')
        self.assertNotIn('levels', studies[0])

    def test_list_filtered_by_case(self):
        response = self.client.get(reverse('study_list_api'), {'case': 'poisson1d'})
        self.assertEqual(response.json()['studies'], [])

    def test_detail_includes_levels_and_rates(self):
        response = self.client.get(reverse('study_detail_api', args=[self.run.pk]))
        data = response.json()
        self.assertEqual([level['level'] for level in data['levels']], [0, 1])
        self.assertAlmostEqual(data['rates']['e_energy'], 1.04)
        self.assertEqual(data['levels'][1]['e_energy'], 1.6e-2)

    def test_csv_download(self):
        response = self.client.get(reverse('study_csv', args=[self.run.pk]))
        self.assertEqual(response['Content-Type'], 'text/csv')
        self.assertEqual(response.content.decode(), self.run.to_csv())

    def test_unknown_study_is_404(self):
        self.assertEqual(self.client.get(reverse('study_detail_api', args=[999])).status_code, 404)
        self.assertEqual(self.client.get(reverse('study_csv', args=[999])).status_code, 404)

    def test_post_is_not_allowed(self):
        self.assertEqual(self.client.post(reverse('study_list_api')).status_code, 405)
