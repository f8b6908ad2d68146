from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from mollified import basis as basis_module
from mollified.collocation import collocation_set
from mollified.exceptions import CollocationToolkitError
from mollified.forms import StudyConfigForm
from mollified.mesh import mollifier_width, pad_ghost, write_mesh
from mollified.mollifier import Mollifier
from mollified.problems import get_case
from mollified.study import build_mesh, gamma_for
from mollified.system import assemble, solve, write_triplets, write_vector


class Command(BaseCommand):
    help = 'Writes the padded mesh, collocation points, assembled system and solution of one case at one level'

    def add_arguments(self, parser):
        parser.add_argument('case')
        parser.add_argument('--level', type=int, default=0)
        parser.add_argument('--rp', type=int)
        parser.add_argument('--mollifier')
        parser.add_argument('--kappa', type=float)
        parser.add_argument('--scheme')
        parser.add_argument('--beta', type=int)
        parser.add_argument('--gamma', type=int)
        parser.add_argument('--sigma', type=float)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--out', help='output directory (default: under COLLOCATION_OUTPUT_ROOT)')

    def handle(self, *args, **options):
        if options['level'] < 0:
            raise CommandError('level must be non-negative')
        keys = ('case', 'rp', 'mollifier', 'kappa', 'scheme', 'beta', 'gamma', 'sigma', 'seed')
        form = StudyConfigForm({key: options[key] for key in keys if options.get(key) is not None})
        if not form.is_valid():
            errors = '; '.join(f"{field}: {' '.join(messages)}" for field, messages in form.errors.items())
            raise CommandError(f"invalid configuration: {errors}")
        config = form.to_config()
        level = options['level']
        out = Path(options['out'] or Path(settings.COLLOCATION_OUTPUT_ROOT) / f'{config.case}-level{level}')

        try:
            problem = get_case(config.case)
            mesh = build_mesh(config.case, level, config.seed)
            h_m = mollifier_width(mesh, config.kappa)
            padded = pad_ghost(mesh, h_m)
            basis = basis_module.build(padded, Mollifier(config.mollifier, h_m, mesh.dim), config.rp)
            colloc = collocation_set(
                problem, padded, config.scheme, beta=config.beta, gamma=gamma_for(config),
                sigma=config.sigma, rng_seed=config.seed, n_b=basis.n_b,
            )
            system = assemble(problem, basis, colloc, workers=config.workers)
            solution = solve(system)
        except CollocationToolkitError as exc:
            raise CommandError(str(exc))

        out.mkdir(parents=True, exist_ok=True)
        with open(out / 'mesh.txt', 'w') as stream:
            write_mesh(padded, stream)
        with open(out / 'points.csv', 'w', newline='') as stream:
            colloc.write_csv(stream)
        with open(out / 'C.txt', 'w') as stream:
            write_triplets(system.matrix, stream)
        with open(out / 's.txt', 'w') as stream:
            write_vector(system.rhs, stream)
        with open(out / 'u.txt', 'w') as stream:
            # field-major, matching the column layout of C
            write_vector(solution.coefficients.T.ravel(), stream)

        self.stdout.write(self.style.SUCCESS(
            f'Exported {config.case} level {level}: {padded.n_cells} cells ({padded.n_ghost} ghost), '
            f'n_b={basis.n_b}, n_z={colloc.n_z}, residual {solution.residual_norm:.3e} to {out}'
        ))
