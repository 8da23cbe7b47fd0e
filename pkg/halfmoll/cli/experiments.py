"""
Experiments and their orchestration.

Each experiment takes a validated
[`ExperimentConfig`][halfmoll.cli.config.ExperimentConfig] and returns an
[`ExperimentOutcome`][halfmoll.cli.experiments.ExperimentOutcome]: a
main convergence table, named pass/fail checks, and additional artifacts
(solutions, per-scale tables). [`run`][halfmoll.cli.experiments.run]
writes everything under the output directory:

- `<experiment>.csv`, `<experiment>.json` and `<experiment>.dat`
- one `<artifact>.*` group per additional artifact
- `manifest.json`: config echo, library versions, wall-clock time,
  checks, and the grid, scales and tolerance behind every row
- `tb/`: tensorboard scalars (`logging_verbosity = 2`)

Tables never contain timings, so that identical configurations give
byte-identical CSV files.
"""
__all__ = [
    'ExperimentOutcome',
    'REGISTRY',
    'run',
    'run_experiment',
]
# stdlib
import json
import math
import time
import random
import logging
import platform
import warnings
from dataclasses import dataclass, field
from pathlib import Path

# externals
import numpy as np
import scipy
import torch

# internals
from halfmoll._version import __version__
from halfmoll.cli.config import ExperimentConfig
from halfmoll.grid.grids import StripGrid, TimeAxis
from halfmoll.grid.fields import SampledField
from halfmoll.fields.base import VelocityFieldSpec
from halfmoll.fields.scalars import Gaussian
from halfmoll.mollify.approximate import mollify_data
from halfmoll.mollify.commutator import commutator_convergence
from halfmoll.mollify.interchange import (
    interchange_residual, generalized_interchange_residual
)
from halfmoll.mollify.traces import trace_convergence, mollifier_defect
from halfmoll.transport.characteristics import solve_characteristics
from halfmoll.transport.weak import test_function_corpus, weak_residual
from halfmoll.transport.relabel import renormalize, relabel_data
from halfmoll.transport.energy import gronwall_check
from halfmoll.transport.uniqueness import uniqueness_experiment
from halfmoll.geometry.tubular import curved_trace_residual
from halfmoll.io.reports import ConvergenceReport
from halfmoll.io.utils import to_jsonable
from halfmoll.core.typing import Callable, Dict, Optional, Sequence
from halfmoll.core.utils import set_num_threads_from_env

logger = logging.getLogger(__name__)

SOLVER_TOLERANCE = 1e-10


@dataclass
class ExperimentOutcome:
    """
    Attributes
    ----------
    report : ConvergenceReport
        Main table.
    checks : dict[str, bool]
        Named pass/fail checks.
    artifacts : dict[str, object]
        Additional outputs, each with a `save(path)` method.
    """
    report: ConvergenceReport
    checks: Dict[str, bool] = field(default_factory=dict)
    artifacts: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _decreasing(values: Sequence[float], tol: float = 0.0) -> bool:
    return all(b <= a + tol for a, b in zip(values[:-1], values[1:]))


def _time_slice(b: VelocityFieldSpec) -> Optional[float]:
    return None if b.autonomous else 0.0


def _solve(config: ExperimentConfig, grid: StripGrid, time_axis: TimeAxis,
           b, h, u0, domain=None):
    """
    Classical solution of the problem, with the data mollified at the
    first scale when the field is not Lipschitz.

    Returns the solution, the data actually solved with, and the
    mollification scale (0 when the data are used as given).
    """
    eta = 0.0
    if b.regularity == 'sobolev':
        eta = config.eta[0]
        b, h, u0 = mollify_data(
            b, h, u0, eta, nodes_per_eta=config.nodes_per_eta,
            cache=grid if b.autonomous else None)
    logger.info('Solving on %s grid with %d time nodes',
                'x'.join(map(str, grid.shape)), time_axis.nb_nodes)
    u = solve_characteristics(b, h, u0, grid, time_axis, domain=domain,
                              far_value=config.far_value,
                              tol=SOLVER_TOLERANCE)
    return u, (b, h, u0), eta


def _weak_table(name, anchor, config, u, b, h, u0, grid, time_axis, eta,
                scale=1.0):
    report = ConvergenceReport(
        name=name, anchor=anchor,
        metadata={'spacing': grid.spacing, 'time_step': time_axis.step,
                  'eta': eta, 'derivative_scale': scale},
    )
    corpus = test_function_corpus(grid.dim, time_axis.horizon,
                                  grid.extent, grid.length)
    resolution = grid.spacing ** 2 + time_axis.step ** 2
    for index, phi in enumerate(corpus):
        result = weak_residual(u, b, h, u0, phi)
        budget = 10 * resolution * phi.c1_norm(grid, time_axis) * scale
        value = abs(result.value)
        report.add_row(eta, value, value / budget, index=index,
                       error_estimate=result.error_estimate, budget=budget)
        logger.info('%s: %s |W|=%.3e budget=%.3e',
                    name, phi.name, value, budget)
    report.metadata['test_functions'] = [phi.name for phi in corpus]
    return report


# ----------------------------------------------------------------------
#   experiments
# ----------------------------------------------------------------------


def converge_commutator(config: ExperimentConfig) -> ExperimentOutcome:
    grid, b = config.make_grid(), config.make_field()
    u = config.make_scalar('u0')
    report = commutator_convergence(
        u, b, config.p, config.beta, config.eta, grid, _time_slice(b),
        nodes_per_eta=config.nodes_per_eta, name=config.experiment)
    checks = {
        'decreasing': _decreasing(report.norm, config.tolerance),
        'bounded': report.is_bounded(2.0),
    }
    return ExperimentOutcome(report, checks)


def _default_partner(grid: StripGrid):
    center = [0.1] * (grid.dim - 1) + [0.45 * grid.length]
    return Gaussian(center, width=0.1)


def interchange(config: ExperimentConfig) -> ExperimentOutcome:
    grid, b = config.make_grid(), config.make_field()
    u = config.make_scalar('u0')
    v = config.make_scalar('v') if 'v' in config.data \
        else _default_partner(grid)
    pairing = interchange_residual if b.solenoidal \
        else generalized_interchange_residual
    report = ConvergenceReport(
        name=config.experiment,
        anchor='int r(u, b) v = int r*(v, b) u, with divergence '
               'corrections for compressible fields',
        metadata={'field': b.serialize(with_state=False),
                  'identity': pairing.__name__, 'spacing': grid.spacing},
    )
    for eta in config.eta:
        result = pairing(u, v, b, eta, grid, _time_slice(b))
        report.add_row(eta, result.residual, result.relative,
                       lhs=result.lhs, rhs=result.rhs)
        logger.info('%s: eta=%g residual=%.3e (relative %.3e)',
                    config.experiment, eta, result.residual, result.relative)
    checks = {
        'identity': all(r <= config.tolerance for r in report.bound_ratio),
    }
    return ExperimentOutcome(report, checks)


def trace_check(config: ExperimentConfig) -> ExperimentOutcome:
    grid, time_axis = config.make_grid(), config.make_time()
    b = config.make_field()
    h, u0 = config.make_data()
    u, (b, h, u0), _ = _solve(config, grid, time_axis, b, h, u0)
    report = trace_convergence(
        u, b, h, u0, config.eta, p=config.p,
        nodes_per_eta=config.nodes_per_eta, name=config.experiment)
    budgets = [
        5 * (grid.spacing ** 2 + eta * time_axis.step + SOLVER_TOLERANCE)
        for eta in report.eta
    ]
    report.bound_ratio = [n / c for n, c in zip(report.norm, budgets)]
    report.extra['budget'] = budgets
    checks = {
        'boundary': all(r <= 1 for r in report.bound_ratio),
        'initial': all(n <= c for n, c in
                       zip(report.extra['initial'], budgets)),
    }
    return ExperimentOutcome(report, checks, {'solution': u})


def solve(config: ExperimentConfig) -> ExperimentOutcome:
    grid, time_axis = config.make_grid(), config.make_time()
    b = config.make_field()
    h, u0 = config.make_data()
    u, (b, h, u0), eta = _solve(config, grid, time_axis, b, h, u0)
    report = _weak_table(
        config.experiment,
        'classical solutions satisfy the weak formulation',
        config, u, b, h, u0, grid, time_axis, eta)
    checks = {'weak': all(r <= 1 for r in report.bound_ratio)}
    return ExperimentOutcome(report, checks, {'solution': u})


def renormalized(config: ExperimentConfig) -> ExperimentOutcome:
    grid, time_axis = config.make_grid(), config.make_time()
    b = config.make_field()
    h, u0 = config.make_data()
    theta = config.make_relabel()
    u, (b, h, u0), eta = _solve(config, grid, time_axis, b, h, u0)
    relabeled = renormalize(u, theta)
    report = _weak_table(
        config.experiment,
        'theta(u) solves the problem with data (theta(h), theta(u0))',
        config, relabeled, b, relabel_data(theta, h), relabel_data(theta, u0),
        grid, time_axis, eta, scale=theta.derivative_bound)
    report.metadata['relabel'] = theta.name
    checks = {'weak': all(r <= 1 for r in report.bound_ratio)}
    return ExperimentOutcome(report, checks, {'solution': relabeled})


def uniqueness(config: ExperimentConfig) -> ExperimentOutcome:
    grid, time_axis = config.make_grid(), config.make_time()
    b = config.make_field()
    h, u0 = config.make_data()
    report = ConvergenceReport(
        name=config.experiment,
        anchor='solutions agree across mollification scales and ignore '
               'boundary data where b.nu >= 0',
        metadata={'field': b.serialize(with_state=False), 'p': config.p,
                  'spacing': grid.spacing, 'time_step': time_axis.step},
    )
    artifacts = {}
    for k, eta in enumerate(config.eta):
        table = uniqueness_experiment(
            b, h, u0, eta, eta / 2, config.p, grid=grid, time=time_axis,
            nodes_per_eta=config.nodes_per_eta, far_value=config.far_value,
            name=f'{config.experiment}-{k}')
        artifacts[table.name] = table
        report.add_row(eta, max(table.norm), float('nan'), eta2=eta / 2,
                       outflow_difference=max(
                           table.extra['outflow_difference']))
    contraction = all(
        finer <= config.tolerance or coarser / finer >= 1.5
        for coarser, finer in zip(report.norm[:-1], report.norm[1:])
    )
    checks = {
        'outflow': all(d <= config.tolerance
                       for d in report.extra['outflow_difference']),
        'contraction': contraction,
    }
    return ExperimentOutcome(report, checks, artifacts)


def gronwall(config: ExperimentConfig) -> ExperimentOutcome:
    grid, time_axis = config.make_grid(), config.make_time()
    b = config.make_field()
    h, u0 = config.make_data()
    u, (b, h, u0), eta = _solve(config, grid, time_axis, b, h, u0)
    bound = gronwall_check(u, b, h, config.p)
    report = ConvergenceReport(
        name=config.experiment,
        anchor='|u(t)|_p^p <= (|u(0)|_p^p + M2 t) exp(M1 t)',
        metadata={'p': config.p, 'm1': bound.m1, 'm2': bound.m2,
                  'slack': bound.slack, 'spacing': grid.spacing,
                  'time_step': time_axis.step},
    )
    for t, e, c in zip(bound.times, bound.energy, bound.bound):
        report.add_row(eta, e, e / c if c > 0 else float('nan'),
                       t=t, bound=c)
    return ExperimentOutcome(report, {'gronwall': bound.holds},
                             {'gronwall-bound': bound})


def defect(config: ExperimentConfig) -> ExperimentOutcome:
    report = ConvergenceReport(
        name=config.experiment,
        anchor='symmetric kernels halve constant data at the boundary, '
               'one-sided kernels reproduce them',
        metadata={'data': 1.0},
    )
    for eta in config.eta:
        values = mollifier_defect(1.0, eta)
        report.add_row(eta, values.symmetric, one_sided=0)
        report.add_row(eta, values.one_sided, one_sided=1)
    symmetric, one_sided = report.norm[0::2], report.norm[1::2]
    checks = {
        'symmetric_halves': all(abs(v - 0.5) <= config.tolerance
                                for v in symmetric),
        'one_sided_exact': all(abs(v - 1) <= config.tolerance
                               for v in one_sided),
    }
    return ExperimentOutcome(report, checks)


def curved_trace(config: ExperimentConfig) -> ExperimentOutcome:
    grid, time_axis = config.make_grid(), config.make_time()
    b = config.make_field()
    h, u0 = config.make_data()
    domain = config.make_domain()
    u, (b, h, u0), _ = _solve(config, grid, time_axis, b, h, u0,
                              domain=domain)
    report = ConvergenceReport(
        name=config.experiment,
        anchor='u_eta (b.nu) = (h b.nu) * rho~ along a curved boundary',
        metadata={'domain': repr(domain), 'spacing': grid.spacing,
                  'time_step': time_axis.step},
    )
    for eta in config.eta:
        residual = curved_trace_residual(
            u, b, h, eta, domain, nodes_per_eta=config.nodes_per_eta)
        report.add_row(eta, residual.norm, window_start=residual.window[0],
                       window_end=residual.window[1])
        logger.info('%s: eta=%g residual=%.3e',
                    config.experiment, eta, residual.norm)
    checks = {'decreasing': _decreasing(report.norm, config.tolerance)}
    return ExperimentOutcome(report, checks, {'solution': u})


REGISTRY: Dict[str, Callable[[ExperimentConfig], ExperimentOutcome]] = {
    'converge-commutator': converge_commutator,
    'interchange': interchange,
    'trace-check': trace_check,
    'solve': solve,
    'renormalize': renormalized,
    'uniqueness': uniqueness,
    'gronwall': gronwall,
    'mollifier-defect': defect,
    'curved-trace': curved_trace,
}


# ----------------------------------------------------------------------
#   orchestration
# ----------------------------------------------------------------------


def _versions() -> Dict[str, str]:
    return {
        'halfmoll': __version__,
        'python': platform.python_version(),
        'torch': torch.__version__,
        'numpy': np.__version__,
        'scipy': scipy.__version__,
    }


def _seed(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def _threads(config: ExperimentConfig) -> int:
    nb_threads = set_num_threads_from_env()
    if config.threads is not None:
        nb_threads = min(nb_threads, int(config.threads))
        torch.set_num_threads(nb_threads)
    return nb_threads


def _tensorboard(out: Path, report: ConvergenceReport) -> None:
    try:
        from torch.utils.tensorboard import SummaryWriter
    except ImportError:
        warnings.warn('tensorboard is not installed: no scalars written')
        return
    writer = SummaryWriter(str(out / 'tb'))
    for step, (eta, norm) in enumerate(zip(report.eta, report.norm)):
        if math.isfinite(norm):
            writer.add_scalar(f'{report.name}/norm', norm, step)
        writer.add_scalar(f'{report.name}/eta', eta, step)
    writer.close()


def run_experiment(config: ExperimentConfig) -> ExperimentOutcome:
    """Validate `config` and run its experiment (no files written)."""
    config.validate()
    _seed(config.seed)
    return REGISTRY[config.experiment](config)


def run(config: ExperimentConfig, assertions: bool = False) -> int:
    """
    Run an experiment and write its artifacts.

    Parameters
    ----------
    config : ExperimentConfig
        Configuration (validated here).
    assertions : bool
        Turn failed checks into a nonzero exit status.

    Returns
    -------
    status : {0, 1}
        1 if `assertions` is set and some check failed.

    Raises
    ------
    ConfigError
        If the configuration is invalid. Nothing is computed or written.
    """
    config.validate()
    nb_threads = _threads(config)
    out = Path(config.output)
    logger.info('Running %s with %d thread(s) into %s',
                config.experiment, nb_threads, out)
    tic = time.perf_counter()
    outcome = run_experiment(config)
    wallclock = time.perf_counter() - tic

    out.mkdir(parents=True, exist_ok=True)
    name = config.experiment
    outcome.report.save(out / name)
    outcome.report.to_dat(out / f'{name}.dat')
    files = [f'{name}.csv', f'{name}.json', f'{name}.dat']
    for key, artifact in outcome.artifacts.items():
        artifact.save(out / key)
        files.append(key)
    if config.logging_verbosity >= 2:
        _tensorboard(out, outcome.report)

    manifest = {
        'experiment': name,
        'config': config.serialize(),
        'versions': _versions(),
        'threads': nb_threads,
        'wallclock_s': wallclock,
        'checks': outcome.checks,
        'passed': outcome.passed,
        'files': files,
        'rows': [
            {'eta': eta, 'spacing': config.grid['spacing'],
             'time_step': config.grid['time_step'],
             'tolerance': config.tolerance}
            for eta in outcome.report.eta
        ],
    }
    with open(out / 'manifest.json', 'w') as f:
        json.dump(to_jsonable(manifest), f, indent=2, sort_keys=True)

    for check, ok in outcome.checks.items():
        log = logger.info if ok else logger.warning
        log('%s: check %s %s', name, check, 'passed' if ok else 'FAILED')
    if assertions and not outcome.passed:
        return 1
    return 0
