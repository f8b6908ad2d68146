import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from mollified.models import StudyRun


class RunStudyCommandTests(TestCase):
    def test_runs_and_stores_a_study(self):
        out = StringIO()
        call_command('run_study', case='poisson1d', levels=2, stdout=out)
        output = out.getvalue()
        self.assertIn('level,n_c,h,n_b,n_z,e_L2,e_H1,e_energy,mean,std', output)
        self.assertIn('rate e_L2', output)
        run = StudyRun.objects.get()
        self.assertEqual(run.levels.count(), 2)
        self.assertIn(f'Stored study #{run.pk}', output)

    def test_config_file_with_command_line_override(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'study.cfg'
            config.write_text("case=poisson1d\nrp=1\nlevels=3\n")
            call_command('run_study', config=str(config), levels=2, no_store=True, out=tmp, stdout=StringIO())
            csv_lines = (Path(tmp) / 'study.csv').read_text().splitlines()
        self.assertEqual(len(csv_lines), 3)
        self.assertFalse(StudyRun.objects.exists())

    def test_invalid_configuration(self):
        with self.assertRaisesMessage(CommandError, 'sigma'):
            call_command('run_study', case='poisson1d', sigma=0.7, stdout=StringIO())

    def test_missing_config_file(self):
        with self.assertRaises(CommandError):
            call_command('run_study', config='/nonexistent/study.cfg', stdout=StringIO())

    def test_study_failure_becomes_command_error(self):
        with self.assertRaisesMessage(CommandError, 'level 0'):
            call_command('run_study', case='plate_hole', scheme='uniform', levels=2, no_store=True, stdout=StringIO())


class ExportCaseCommandTests(TestCase):
    def test_writes_mesh_points_and_system(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = StringIO()
            call_command('export_case', 'poisson1d', level=0, out=tmp, stdout=out)
            folder = Path(tmp)
            for name in ('mesh.txt', 'points.csv', 'C.txt', 's.txt', 'u.txt'):
                self.assertTrue((folder / name).exists(), name)
            rows, cols, _ = map(int, (folder / 'C.txt').read_text().splitlines()[0].split())
            self.assertEqual(cols, 24)
            self.assertEqual((folder / 'u.txt').read_text().splitlines()[0].split()[:2], ['24', '1'])
            self.assertEqual((folder / 's.txt').read_text().splitlines()[0].split()[:2], [str(rows), '1'])
            self.assertEqual((folder / 'mesh.txt').read_text().splitlines()[0].split()[::2], ['1', '8'])
            self.assertEqual((folder / 'points.csv').read_text().splitlines()[0], 'x,y,kind,tag')
        self.assertIn('n_b=24', out.getvalue())

    def test_negative_level(self):
        with self.assertRaises(CommandError):
            call_command('export_case', 'poisson1d', level=-1, out='/tmp/unused', stdout=StringIO())
