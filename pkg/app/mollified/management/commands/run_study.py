from django.core.management.base import BaseCommand, CommandError
from django.forms import ValidationError

from mollified.exceptions import StudyError
from mollified.forms import CONFIG_KEYS, StudyConfigForm, read_config_file
from mollified.models import StudyRun
from mollified.study import run_study

OPTION_TYPES = {
    'rp': int, 'kappa': float, 'beta': int, 'gamma': int, 'sigma': float,
    'replicates': int, 'seed': int, 'levels': int, 'workers': int,
}


class Command(BaseCommand):
    help = 'Runs a convergence study for one case and prints the per-level errors and fitted rates'

    def add_arguments(self, parser):
        parser.add_argument('--config', help='key=value study file; command-line options override it')
        for key in CONFIG_KEYS:
            parser.add_argument(f'--{key}', type=OPTION_TYPES.get(key, str))
        parser.add_argument('--no-store', action='store_true', help='do not save the result in the database')

    def merged_values(self, options):
        values = {}
        if options.get('config'):
            try:
                values.update(read_config_file(options['config']))
            except OSError as exc:
                raise CommandError(f"cannot read {options['config']}: {exc}")
            except ValidationError as exc:
                raise CommandError('; '.join(exc.messages))
        for key in CONFIG_KEYS:
            if options.get(key) is not None:
                values[key] = options[key]
        return values

    def handle(self, *args, **options):
        form = StudyConfigForm(self.merged_values(options))
        if not form.is_valid():
            errors = '; '.join(f"{field}: {' '.join(messages)}" for field, messages in form.errors.items())
            raise CommandError(f"invalid study configuration: {errors}")
        config = form.to_config()

        try:
            result = run_study(config)
        except StudyError as exc:
            raise CommandError(str(exc))

        self.stdout.write(result.to_csv(), ending='')
        self.stdout.write(result.rates_summary(), ending='')
        if not {'e_L2', 'e_H1'} <= result.rates.keys():
            self.stdout.write(self.style.WARNING('Some error columns had too few positive values to fit a rate.'))

        if config.out is not None:
            self.stdout.write(self.style.SUCCESS(f'Wrote study.csv and rates.txt to {config.out}'))
        if not options['no_store']:
            run = StudyRun.record(result)
            self.stdout.write(self.style.SUCCESS(f'Stored study #{run.pk} ({len(result.levels)} levels)'))
