"""
Convergence studies: solve a case on a sequence of refined meshes, measure
relative errors at the collocation points and fit log-log rates.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import basis as basis_module
from .collocation import RNG_NAME, collocation_set
from .exceptions import CollocationToolkitError, StudyError
from .mesh import (
    BASE_BREAKPOINTS,
    bisect,
    intervals_1d,
    mollifier_width,
    pad_ghost,
    quarter_plate_hole_mesh,
    uniform_intervals,
    voronoi_mesh,
)
from .mollifier import Mollifier
from .problems import PlateWithHole, get_case
from .system import assemble, energy_error_values, relative_error_values, solve

logger = logging.getLogger(__name__)

CSV_COLUMNS = ('level', 'n_c', 'h', 'n_b', 'n_z', 'e_L2', 'e_H1', 'e_energy', 'mean', 'std')
RATE_COLUMNS = ('e_L2', 'e_H1', 'e_energy')

CASE_DEFAULTS = {
    'poisson1d': {'rp': 2, 'mollifier': 'bspline2', 'scheme': 'uniform', 'beta': 6, 'sigma': 0.10, 'levels': 4},
    'biharmonic1d': {'rp': 5, 'mollifier': 'octic', 'scheme': 'uniform', 'beta': 8, 'sigma': 0.10, 'levels': 4},
    'elasticity2d': {'rp': 1, 'mollifier': 'hexic', 'scheme': 'gauss', 'beta': 16, 'sigma': 0.15, 'levels': 3},
    'plate_bending': {
        'rp': 4, 'mollifier': 'decic', 'scheme': 'gauss', 'beta': 16, 'gamma': 7, 'sigma': 0.15, 'levels': 3,
    },
    'plate_hole': {'rp': 1, 'mollifier': 'hexic', 'scheme': 'gauss', 'beta': 16, 'sigma': 0.15, 'levels': 3},
    'poisson2d': {'rp': 2, 'mollifier': 'bspline2', 'scheme': 'uniform', 'beta': 16, 'sigma': 0.15, 'levels': 3},
}

BIHARMONIC_BASE_CELLS = 8
VORONOI_BASE_CELLS = 16


@dataclass(frozen=True)
class StudyConfig:
    case: str
    rp: int
    mollifier: str
    scheme: str
    beta: int
    levels: int
    kappa: float = 1.0
    gamma: int = None
    sigma: float = 0.0
    replicates: int = 1
    seed: int = 0
    out: Path = None
    workers: int = 1

    def as_dict(self):
        data = asdict(self)
        data['out'] = str(self.out) if self.out is not None else None
        return data


@dataclass(frozen=True)
class LevelResult:
    level: int
    n_c: int
    h: float
    n_b: int
    n_z: int
    e_L2: float
    e_H1: float
    e_energy: float = None
    mean: float = None
    std: float = 0.0

    def csv_fields(self):
        def number(value):
            return '' if value is None else f"{value:.10e}"

        return [
            str(self.level), str(self.n_c), number(self.h), str(self.n_b), str(self.n_z),
            number(self.e_L2), number(self.e_H1), number(self.e_energy), number(self.mean), number(self.std),
        ]


def render_csv(levels):
    lines = [','.join(CSV_COLUMNS)]
    lines.extend(','.join(level.csv_fields()) for level in levels)
    return '\n'.join(lines) + '\n'


def fit_rate(h_list, e_list):
    """Least-squares slope of log e against log h"""
    h = np.asarray(h_list, dtype=float)
    e = np.asarray(e_list, dtype=float)
    if len(h) != len(e) or len(h) < 2:
        raise StudyError("rate fitting needs at least two (h, e) pairs")
    if np.any(h <= 0) or np.any(e <= 0):
        raise StudyError("rate fitting needs positive sizes and errors")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


def fit_rates(levels):
    rates = {}
    for column in RATE_COLUMNS:
        pairs = [
            (level.h, getattr(level, column))
            for level in levels
            if getattr(level, column) is not None and np.isfinite(getattr(level, column)) and getattr(level, column) > 0
        ]
        if len(pairs) >= 2:
            rates[column] = fit_rate(*zip(*pairs))
    return rates


@dataclass(frozen=True)
class StudyResult:
    config: StudyConfig
    levels: tuple
    rates: dict = field(default_factory=dict)

    def to_csv(self):
        return render_csv(self.levels)

    def rates_summary(self):
        c = self.config
        lines = [
            f"case: {c.case}",
            f"mollifier: {c.mollifier}  rp: {c.rp}  kappa: {c.kappa:g}",
            f"scheme: {c.scheme}  beta: {c.beta}  replicates: {c.replicates}  seed: {c.seed}  rng: {RNG_NAME}",
        ]
        for column in RATE_COLUMNS:
            if column in self.rates:
                lines.append(f"rate {column}: {self.rates[column]:.4f}")
        return '\n'.join(lines) + '\n'

    def write(self, out_dir):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / 'study.csv'
        rates_path = out_dir / 'rates.txt'
        csv_path.write_text(self.to_csv())
        rates_path.write_text(self.rates_summary())
        return csv_path, rates_path


def build_mesh(case, level, seed=0):
    """Unpadded mesh of a case at a refinement level"""
    if case == 'poisson1d':
        return bisect(intervals_1d(BASE_BREAKPOINTS), level)
    if case == 'biharmonic1d':
        return uniform_intervals(BIHARMONIC_BASE_CELLS * 2 ** level)
    if case == 'plate_hole':
        return quarter_plate_hole_mesh(level)
    return voronoi_mesh(VORONOI_BASE_CELLS * 4 ** level, rng_seed=seed + level)


def gamma_for(config):
    if config.gamma is not None:
        return config.gamma
    if config.case == 'plate_hole':
        return config.rp + 2
    return None


@dataclass(frozen=True)
class LevelOutcome:
    n_c: int
    h: float
    n_b: int
    n_z: int
    e_L2: float
    e_H1: float
    e_energy: float = None


def solve_level(problem, config, mesh, replicate=0, workers=1):
    """Discretise, solve and measure errors on one (unpadded) mesh"""
    h_m = mollifier_width(mesh, config.kappa)
    padded = pad_ghost(mesh, h_m)
    basis = basis_module.build(padded, Mollifier(config.mollifier, h_m, mesh.dim), config.rp)
    colloc = collocation_set(
        problem,
        padded,
        config.scheme,
        beta=config.beta,
        gamma=gamma_for(config),
        sigma=config.sigma,
        rng_seed=config.seed,
        replicate=replicate,
        n_b=basis.n_b,
    )
    system = assemble(problem, basis, colloc, workers=workers)
    solution = solve(system)

    dim = mesh.dim
    value, gradient = (0,) * dim, basis_module.multi_indices(1, dim)
    boundary = colloc.locations()[colloc.n_interior :]
    points = np.concatenate([colloc.interior, boundary])
    interior_values = solution.apply(system.interior_evaluations[value])
    interior_gradient = np.stack([solution.apply(system.interior_evaluations[d]) for d in gradient], axis=2)
    approx = np.concatenate([interior_values, solution.evaluate(boundary)])
    approx_gradient = np.concatenate([interior_gradient, solution.gradient(boundary)])
    exact_gradient = problem.exact_gradient(points)

    e_energy = None
    if isinstance(problem, PlateWithHole):
        e_energy = energy_error_values(problem.material, exact_gradient, approx_gradient)
    return LevelOutcome(
        n_c=mesh.n_interior,
        h=mesh.h_max if dim == 1 else mesh.h_avg,
        n_b=basis.n_b,
        n_z=colloc.n_z,
        e_L2=relative_error_values(problem.exact(points), approx),
        e_H1=relative_error_values(exact_gradient, approx_gradient),
        e_energy=e_energy,
    )


def _replicate_count(config):
    if config.scheme != 'quasirandom' or config.sigma == 0:
        return 1
    return config.replicates


def run_level(problem, config, level):
    mesh = build_mesh(config.case, level, config.seed)
    logger.debug("level %d: %d interior cells", level, mesh.n_interior)
    replicates = _replicate_count(config)
    if replicates == 1:
        outcome = solve_level(problem, config, mesh, workers=config.workers)
        return LevelResult(level, outcome.n_c, outcome.h, outcome.n_b, outcome.n_z,
                           outcome.e_L2, outcome.e_H1, outcome.e_energy, mean=outcome.e_L2, std=0.0)

    def one(replicate):
        return solve_level(problem, config, mesh, replicate=replicate)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(one, range(replicates)))
    else:
        outcomes = [one(r) for r in range(replicates)]
    l2 = np.array([o.e_L2 for o in outcomes])
    energies = [o.e_energy for o in outcomes if o.e_energy is not None]
    first = outcomes[0]
    return LevelResult(
        level,
        first.n_c,
        first.h,
        first.n_b,
        first.n_z,
        float(l2.mean()),
        float(np.mean([o.e_H1 for o in outcomes])),
        float(np.mean(energies)) if energies else None,
        mean=float(l2.mean()),
        std=float(l2.std(ddof=1)),
    )


def run_study(config):
    """Run every refinement level, fit rates and write the outputs when `config.out` is set"""
    problem = get_case(config.case)
    try:
        problem.check_consistency()
    except CollocationToolkitError as exc:
        raise StudyError(str(exc)) from exc
    levels = []
    for level in range(config.levels):
        try:
            result = run_level(problem, config, level)
        except CollocationToolkitError as exc:
            raise StudyError(f"level {level}: {exc}", level=level) from exc
        logger.info(
            "level %d: n_c=%d n_b=%d n_z=%d e_L2=%.3e e_H1=%.3e%s",
            level, result.n_c, result.n_b, result.n_z, result.e_L2, result.e_H1,
            f" e_energy={result.e_energy:.3e}" if result.e_energy is not None else '',
        )
        levels.append(result)
    rates = fit_rates(levels)
    for column, rate in rates.items():
        logger.info("fitted rate %s: %.3f", column, rate)
    result = StudyResult(config, tuple(levels), rates)
    if config.out is not None:
        result.write(config.out)
    return result
