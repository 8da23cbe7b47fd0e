"""
Boundary and initial traces of the approximate solution.

For a weak solution $u$ with data $(h, u_0)$, the one-sided kernels
recover the data exactly after mollification:

$$
u_\\eta(x', 0, t)\\,(b \\cdot \\nu) = (h\\,(b \\cdot \\nu)) * \\tilde\\rho^d_\\eta,
\\qquad
u_\\eta(x, 0) = u_0 * \\hat\\rho^d_\\eta.
$$

The residuals below measure both identities on sampled solutions.
Boundary residuals are taken on the window $\\eta \\leq t \\leq T - \\eta$
and initial residuals at depth $x_d \\geq \\eta$, away from the corner
where the inflow front meets the initial plane.
"""
__all__ = [
    'TraceResidual',
    'MollifierDefect',
    'boundary_trace_residual',
    'initial_trace_residual',
    'trace_convergence',
    'mollifier_defect',
]
# stdlib
import time
import logging
from dataclasses import dataclass

# externals
import torch
from scipy.integrate import quad

# internals
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.grid.quadrature import lp_norm
from halfmoll.grid.convolution import convolve_boundary_spacetime
from halfmoll.kernels.mollifiers import BoundaryTimeKernel
from halfmoll.fields.base import VelocityFieldSpec
from halfmoll.fields.norms import normal_trace
from halfmoll.mollify.approximate import mollify_solution
from halfmoll.io.reports import ConvergenceReport
from halfmoll.functional.kernels import eval_symmetric, eval_one_sided
from halfmoll.core.typing import Union, Callable, Optional, Sequence
from halfmoll.core.utils import default_dtype, check_positive
from halfmoll.core.errors import DimensionError, OutOfHorizonError

logger = logging.getLogger(__name__)

FieldLike = Union[SampledField, Callable]


@dataclass
class TraceResidual:
    """
    Attributes
    ----------
    field : SampledField
        Pointwise residual. Boundary residuals carry the solution's time
        axis and are zero outside the window.
    norm : float
        $L^1$ norm (boundary, over the window) or $L^p$ norm (initial).
    window : tuple[float, float]
        Time window (boundary) or depth range (initial).
    """
    field: SampledField
    norm: float
    window: tuple


@dataclass
class MollifierDefect:
    """Value at the boundary of the mollified constant function."""
    symmetric: float
    one_sided: float


def _time_window(u: SampledField, eta: float, stride: int = 1):
    t = u.time.nodes()
    keep = (t >= eta - 1e-9) & (t <= u.time.horizon - eta + 1e-9)
    first = int(keep.nonzero()[0]) if keep.any() else 0
    keep &= (torch.arange(len(t)) - first) % int(stride) == 0
    if not keep.any():
        raise OutOfHorizonError(
            f'No time node t with {eta} <= t <= T - {eta} '
            f'(T = {u.time.horizon})'
        )
    return t, keep


def boundary_trace_residual(
    u: SampledField,
    b: VelocityFieldSpec,
    h: FieldLike,
    eta: float,
    *,
    stride: int = 1,
    nodes_per_eta: int = 32,
    interpolation='linear',
) -> TraceResidual:
    """
    Boundary residual
    $u_\\eta(x', 0, t)(b \\cdot \\nu)(x', t)
    - ((h\\,(b \\cdot \\nu)) * \\tilde\\rho^d_\\eta)(x', t)$.

    Parameters
    ----------
    u : SampledField
        Space-time samples of a (numerical) weak solution.
    b : VelocityFieldSpec
        Velocity field of the problem.
    h : SampledField or callable
        Boundary data, `h(x, t)` at boundary points.
    eta : float
        Kernel width.
    stride : int
        Only evaluate every `stride`-th time node of the window.

    Returns
    -------
    residual : TraceResidual
        Residual on the boundary grid (at distance `eta` from the
        tangential faces), and its $L^1$ norm over the time window.

    Raises
    ------
    OutOfHorizonError
        If no time node satisfies $\\eta \\leq t \\leq T - \\eta$.
    """
    eta = check_positive('eta', eta)
    if u.time is None or u.is_boundary:
        raise DimensionError('Expected space-time samples on the strip')
    u_eta = mollify_solution(u, eta, nodes_per_eta=nodes_per_eta,
                             interpolation=interpolation)
    boundary = u.grid.subgrid(eta).boundary()
    t, keep = _time_window(u, eta, stride)
    x = boundary.coordinates()
    if boundary.dim == 1:
        x = x[None]
    kernel = BoundaryTimeKernel(u.dim, eta)

    def flux(y, s):
        return evaluate(h, y, s) * normal_trace(b, y, s)

    values = torch.zeros(x.shape[:-1] + (len(t),), dtype=default_dtype)
    for k in keep.nonzero()[:, 0].tolist():
        tk = torch.full(x.shape[:-1], float(t[k]), dtype=default_dtype)
        lhs = u_eta.boundary_trace(x, tk) * normal_trace(b, x, tk)
        rhs = convolve_boundary_spacetime(
            flux, kernel, x, tk, horizon=u.time.horizon,
            nodes_per_eta=nodes_per_eta)
        values[..., k] = lhs - rhs
    if boundary.dim == 1:
        values = values[0]
    field = SampledField(boundary, values, u.time)
    spatial = lp_norm(field, 1, 'boundary')
    norm = torch.trapezoid(spatial[keep], t[keep]) if keep.sum() > 1 \
        else spatial[keep].sum() * u.time.step
    window = (float(t[keep][0]), float(t[keep][-1]))
    logger.debug('Boundary trace residual: %g on %s', float(norm), window)
    return TraceResidual(field, float(norm), window)


def initial_trace_residual(
    u: SampledField,
    u0: FieldLike,
    eta: float,
    *,
    p: float = 2.0,
    depth: Optional[float] = None,
    nodes_per_eta: int = 32,
    interpolation='linear',
) -> TraceResidual:
    """
    Initial residual $u_\\eta(x, 0) - (u_0 * \\hat\\rho^d_\\eta)(x)$.

    Parameters
    ----------
    u : SampledField
        Space-time samples of a (numerical) weak solution.
    u0 : SampledField or callable
        Initial data.
    eta : float
        Kernel width.
    p : float
        Exponent of the reported norm.
    depth : float, optional
        Residuals are set to zero above this distance to the boundary
        (default `eta`).

    Returns
    -------
    residual : TraceResidual
        Residual on the sub-strip at distance `eta` from the artificial
        faces, and its $L^p$ norm.
    """
    eta = check_positive('eta', eta)
    if u.time is None or u.is_boundary:
        raise DimensionError('Expected space-time samples on the strip')
    depth = eta if depth is None else float(depth)
    options = dict(nodes_per_eta=nodes_per_eta, interpolation=interpolation)
    u_eta = mollify_solution(u, eta, **options)
    u0_eta = mollify_solution(u0, eta, dim=u.dim, static=True, **options)
    region = u.grid.subgrid(eta)
    x = region.coordinates()
    values = u_eta.initial_trace(x) - u0_eta(x)
    values = torch.where(x[..., -1] >= depth - 1e-9, values,
                         torch.zeros_like(values))
    field = SampledField(region, values)
    norm = float(lp_norm(field, p))
    return TraceResidual(field, norm, (depth, region.length))


def trace_convergence(
    u: SampledField,
    b: VelocityFieldSpec,
    h: FieldLike,
    u0: FieldLike,
    etas: Sequence[float],
    *,
    p: float = 2.0,
    stride: int = 1,
    nodes_per_eta: int = 32,
    timing: bool = False,
    name: str = 'trace-check',
) -> ConvergenceReport:
    """
    Boundary and initial trace residuals across kernel widths.

    The `norm` column holds the boundary $L^1$ residual; the extra
    column `initial` holds the initial $L^p$ residual.
    """
    report = ConvergenceReport(
        name=name,
        anchor='u_eta (b.nu) = (h b.nu) * rho~ on the boundary and '
               'u_eta(.,0) = u0 * rho^ at t = 0',
        metadata={
            'field': b.serialize(with_state=False), 'p': float(p),
            'spacing': u.grid.spacing, 'time_step': u.time.step,
        },
    )
    for eta in etas:
        tic = time.perf_counter()
        boundary = boundary_trace_residual(u, b, h, eta, stride=stride,
                                           nodes_per_eta=nodes_per_eta)
        initial = initial_trace_residual(u, u0, eta, p=p,
                                         nodes_per_eta=nodes_per_eta)
        toc = time.perf_counter() - tic if timing else 0.0
        report.add_row(eta, boundary.norm, float('nan'), toc,
                       initial=initial.norm)
        logger.info('%s: eta=%g boundary=%.3e initial=%.3e',
                    name, eta, boundary.norm, initial.norm)
    return report


def mollifier_defect(
    u: Union[float, Callable] = 1.0, eta: float = 0.1
) -> MollifierDefect:
    """
    Value at $x = 0$ of the mollification of data given on the half-line.

    The symmetric kernel straddles the boundary and only sees half of
    its mass inside, so constant data come out halved; the one-sided
    kernel only looks inside and reproduces them.

    Parameters
    ----------
    u : float or callable
        Data on $[0, \\infty)$ (a constant, or `u(y)` for scalar `y`).
    eta : float
        Kernel width.

    Returns
    -------
    defect : MollifierDefect
    """
    eta = check_positive('eta', eta)
    fn = u if callable(u) else (lambda y, c=float(u): c)
    options = dict(epsabs=1e-14, epsrel=1e-12, limit=200)
    # only the part of the symmetric support inside the half-line counts
    symmetric, _ = quad(
        lambda y: fn(y) * float(eval_symmetric(-y, eta)), 0, eta, **options)
    one_sided, _ = quad(
        lambda y: fn(y) * float(eval_one_sided(y, eta)), 0, eta, **options)
    return MollifierDefect(symmetric, one_sided)
