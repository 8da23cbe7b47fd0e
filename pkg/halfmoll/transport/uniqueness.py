"""
Stability of the solution under changes of the mollification scale,
and insensitivity to boundary data on the outflow part of the boundary.
"""
__all__ = [
    'outflow_perturbation',
    'uniqueness_experiment',
]
# stdlib
import time as _time
import logging

# externals
import torch

# internals
from halfmoll.grid.grids import StripGrid, TimeAxis
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.grid.quadrature import lp_norm
from halfmoll.fields.base import VelocityFieldSpec, ScalarFunction
from halfmoll.fields.norms import normal_trace
from halfmoll.mollify.approximate import mollify_data
from halfmoll.transport.characteristics import solve_characteristics
from halfmoll.io.reports import ConvergenceReport
from halfmoll.core.typing import Callable, Optional, Union
from halfmoll.core.utils import check_positive

logger = logging.getLogger(__name__)


def outflow_perturbation(
    h: Callable,
    b: VelocityFieldSpec,
    perturbation: Union[float, Callable] = 1.0,
) -> Callable:
    """
    Boundary data changed only where $b \\cdot \\nu \\geq 0$.

    Parameters
    ----------
    h : callable
        Boundary data `h(x, t)`.
    b : VelocityFieldSpec
        Velocity field defining the outflow set.
    perturbation : float or callable
        Added to `h` on the outflow set.

    Returns
    -------
    perturbed : callable
        `perturbed(x, t)`.
    """
    def perturbed(x, t=None):
        values = evaluate(h, x, t)
        bump = (evaluate(perturbation, x, t) if callable(perturbation)
                else torch.full_like(values, float(perturbation)))
        outflow = normal_trace(b, x, t) >= 0
        return torch.where(outflow, values + bump, values)
    return perturbed


def _solve(b, h, u0, eta, grid, time, options):
    b_eta, h_eta, u0_eta = mollify_data(
        b, h, u0, eta, nodes_per_eta=options['nodes_per_eta'],
        cache=grid if (options['cache'] and b.autonomous) else None)
    u = solve_characteristics(b_eta, h_eta, u0_eta, grid, time,
                              far_value=options['far_value'])
    return u, b_eta, h_eta, u0_eta


def uniqueness_experiment(
    b: VelocityFieldSpec,
    h: ScalarFunction,
    u0: ScalarFunction,
    eta1: float,
    eta2: float,
    p: float = 2.0,
    *,
    grid: Optional[StripGrid] = None,
    time: Optional[TimeAxis] = None,
    perturbation: Union[float, Callable] = 1.0,
    nodes_per_eta: int = 8,
    cache: bool = True,
    far_value: Optional[float] = None,
    timing: bool = False,
    name: str = 'uniqueness',
) -> ConvergenceReport:
    """
    Solve with data mollified at two scales and compare.

    One row is written per time node: `norm` holds
    $\\lVert u_{\\eta_1}(t) - u_{\\eta_2}(t) \\rVert_{L^p}$, the extra
    column `t` the time and `outflow_difference` the largest change of
    $u_{\\eta_1}(t)$ when the boundary data are perturbed on the outflow
    set $\\{b_{\\eta_1} \\cdot \\nu \\geq 0\\}$.

    Parameters
    ----------
    b : VelocityFieldSpec
        Velocity field.
    h, u0 : ScalarFunction
        Boundary and initial data.
    eta1, eta2 : float
        Mollification scales.
    p : float
        Exponent of the difference norm.
    grid : StripGrid
        Spatial grid (default: unit square, spacing 1/32).
    time : TimeAxis
        Time nodes (default: horizon 0.5, step 1/32).
    perturbation : float or callable
        Change of the boundary data on the outflow set.
    nodes_per_eta : int
        Quadrature nodes per kernel width of the mollified data.
    cache : bool
        Tabulate the mollified field on the grid (autonomous fields).
    far_value : float, optional
        Passed to the solver.

    Returns
    -------
    report : ConvergenceReport
    """
    eta1 = check_positive('eta1', eta1)
    eta2 = check_positive('eta2', eta2)
    grid = grid or StripGrid(b.dim, 1.0, 1.0, 1 / 32)
    time = time or TimeAxis(0.5, 1 / 32)
    options = dict(nodes_per_eta=nodes_per_eta, cache=cache,
                   far_value=far_value)
    tic = _time.perf_counter()
    u1, b1, h1, u01 = _solve(b, h, u0, eta1, grid, time, options)
    u2, *_ = _solve(b, h, u0, eta2, grid, time, options)
    perturbed = solve_characteristics(
        b1, outflow_perturbation(h1, b1, perturbation), u01, grid, time,
        far_value=far_value)
    toc = _time.perf_counter() - tic if timing else 0.0

    diff = SampledField(grid, u1.values - u2.values, time)
    norms = lp_norm(diff, p)
    outflow = (perturbed.values - u1.values).abs()
    outflow = outflow.reshape(-1, time.nb_nodes).amax(0)
    report = ConvergenceReport(
        name=name,
        anchor='solutions agree across mollification scales and ignore '
               'boundary data where b.nu >= 0',
        metadata={
            'field': b.serialize(with_state=False), 'p': float(p),
            'eta1': eta1, 'eta2': eta2, 'spacing': grid.spacing,
            'time_step': time.step,
        },
    )
    for k, t in enumerate(time.nodes().tolist()):
        report.add_row(eta1, float(norms[k]), float('nan'),
                       toc / time.nb_nodes, t=t, eta2=eta2,
                       outflow_difference=float(outflow[k]))
    logger.info('%s: max difference %.3e, max outflow difference %.3e',
                name, float(norms.max()), float(outflow.max()))
    return report
