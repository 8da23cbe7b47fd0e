"""
Classical solutions by backward characteristics.

For each node $(x, t)$ the characteristic $dX/ds = b(X, s)$ is
integrated backward from $X(t) = x$. If it leaves the domain through the
boundary at time $\\tau > 0$, the node takes the boundary value
$h(X(\\tau), \\tau)$; otherwise it takes the initial value $u_0(X(0))$.
Backward characteristics only ever leave through the inflow part of the
boundary, so boundary data on the outflow part are never read.
"""
__all__ = [
    'CharacteristicTrace',
    'trace_characteristics',
    'solve_characteristics',
]
# stdlib
import logging
from dataclasses import dataclass

# externals
import torch
from torch import Tensor

# internals
from halfmoll.grid.grids import StripGrid, TimeAxis
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.fields.base import VelocityFieldSpec
from halfmoll.functional.ode import rk4_step, bisect_crossing
from halfmoll.core.typing import Optional, Callable, Union
from halfmoll.core.utils import default_dtype, as_points
from halfmoll.core.errors import TruncationError

logger = logging.getLogger(__name__)

HIT_INITIAL_PLANE = 0
HIT_BOUNDARY = 1
LEFT_STRIP = 2

KINDS = ('hit_initial_plane', 'hit_boundary', 'left_strip')

# exits closer than this to s = 0 count as reaching the initial plane
TIE_TOLERANCE = 1e-10


@dataclass
class CharacteristicTrace:
    """
    Terminal states of a batch of backward characteristics.

    Attributes
    ----------
    start : (N, d) tensor
        Start points $x$.
    start_time : (N,) tensor
        Start times $t$.
    kind : (N,) long tensor
        0 (`hit_initial_plane`), 1 (`hit_boundary`) or 2 (`left_strip`,
        through an artificial face).
    end : (N, d) tensor
        Terminal points (on the boundary for `hit_boundary`).
    end_time : (N,) tensor
        Terminal times (0 for `hit_initial_plane`).
    steps : (N,) long tensor
        Number of Runge-Kutta steps taken.
    """
    start: Tensor
    start_time: Tensor
    kind: Tensor
    end: Tensor
    end_time: Tensor
    steps: Tensor

    def kind_names(self):
        return [KINDS[k] for k in self.kind.tolist()]

    def __len__(self):
        return len(self.kind)


def _flat_level(x: Tensor) -> Tensor:
    return -x[..., -1]


def trace_characteristics(
    b: VelocityFieldSpec,
    x: Tensor,
    t: Union[float, Tensor],
    grid: StripGrid,
    *,
    domain=None,
    step: Optional[float] = None,
    tol: float = 1e-10,
) -> CharacteristicTrace:
    """
    Integrate backward characteristics from `(x, t)` until they reach
    the initial plane, the boundary, or an artificial face of the strip.

    Parameters
    ----------
    b : VelocityFieldSpec
        Smooth (Lipschitz) velocity field.
    x : (N, d) tensor
        Start points.
    t : float or (N,) tensor
        Start times.
    grid : StripGrid
        Computational strip (its artificial faces bound the search).
    domain : SmoothDomain2D, optional
        Curved domain: the boundary is `{signed_distance = 0}` instead
        of `{x_d = 0}`.
    step : float, optional
        Largest Runge-Kutta step (default `grid.spacing / 2`). Each
        trajectory uses the largest step below it that lands on `s = 0`.
    tol : float
        Tolerance of the exit bisection.

    Returns
    -------
    trace : CharacteristicTrace
    """
    x = as_points(x, b.dim).reshape(-1, b.dim)
    t = torch.as_tensor(t, dtype=default_dtype).expand(len(x)).clone()
    step = step or grid.spacing / 2
    if domain is None:
        level, project = _flat_level, None
    else:
        level, project = domain.signed_distance, domain.projection
    n = len(x)
    nb_steps = torch.ceil(t / step - 1e-9).clamp_min(1).long()
    ds = -t / nb_steps
    kind = torch.full([n], HIT_INITIAL_PLANE, dtype=torch.long)
    end, end_time = x.clone(), torch.zeros_like(t)
    steps = torch.zeros([n], dtype=torch.long)

    # start points on the boundary where the field points inward exit
    # at once: the backward path leaves the domain
    at_boundary = (level(x) >= -tol) & (t > TIE_TOLERANCE)
    if at_boundary.any():
        probe = x[at_boundary] - 1e-6 * b(x[at_boundary], t[at_boundary])
        leaves = level(probe) > level(x[at_boundary])
        index = at_boundary.nonzero()[:, 0][leaves]
        kind[index] = HIT_BOUNDARY
        end_time[index] = t[index]
        if project is not None:
            end[index] = project(x[index])

    active = (t > 0) & (kind == HIT_INITIAL_PLANE)
    if not active.any():
        return CharacteristicTrace(x, t, kind, end, end_time, steps)
    index = active.nonzero()[:, 0]
    xa, sa, dsa, left = x[index], t[index].clone(), ds[index], nb_steps[index]
    while len(index):
        x_new = rk4_step(b, xa, sa, dsa)
        steps[index] += 1
        left = left - 1
        crossed = level(x_new) > 0
        if crossed.any():
            x_exit, s_exit = bisect_crossing(
                b, xa[crossed], sa[crossed], dsa[crossed], level, tol)
            ids = index[crossed]
            tie = s_exit <= TIE_TOLERANCE
            if project is None:
                x_exit = x_exit.clone()
                x_exit[:, -1] = 0
            else:
                x_exit = project(x_exit)
            kind[ids] = torch.where(
                tie, torch.as_tensor(HIT_INITIAL_PLANE), HIT_BOUNDARY)
            end[ids] = x_exit
            end_time[ids] = torch.where(tie, torch.zeros_like(s_exit), s_exit)
        outside = ~crossed & ~grid.contains(x_new, tol=1e-12)
        if outside.any():
            ids = index[outside]
            kind[ids] = LEFT_STRIP
            end[ids] = x_new[outside]
            end_time[ids] = sa[outside] + dsa[outside]
        done = crossed | outside
        landed = ~done & (left <= 0)
        if landed.any():
            end[index[landed]] = x_new[landed]
        keep = ~done & ~landed
        index, xa, left = index[keep], x_new[keep], left[keep]
        sa, dsa = sa[keep] + dsa[keep], dsa[keep]
    logger.debug('Traced %d characteristics (%d steps max)',
                 n, int(steps.max()))
    return CharacteristicTrace(x, t, kind, end, end_time, steps)


def solve_characteristics(
    b: VelocityFieldSpec,
    h: Callable,
    u0: Union[Callable, SampledField],
    grid: StripGrid,
    time: TimeAxis,
    *,
    domain=None,
    far_value: Optional[float] = None,
    step: Optional[float] = None,
    tol: float = 1e-10,
) -> SampledField:
    """
    Solve $\\partial_t u + b \\cdot \\nabla u = 0$ with inflow data $h$
    and initial data $u_0$ by backward characteristics.

    Parameters
    ----------
    b : VelocityFieldSpec
        Bounded Lipschitz velocity field (use a mollified field for
        rough data).
    h : callable
        Boundary data `h(x, t)`, evaluated at boundary points.
    u0 : callable or SampledField
        Initial data.
    grid : StripGrid
        Spatial grid.
    time : TimeAxis
        Time nodes.
    domain : SmoothDomain2D, optional
        Curved domain inside the strip. Nodes outside it are filled with
        the boundary data at their projection.
    far_value : float, optional
        Value of nodes whose characteristic leaves through an artificial
        face. By default this raises.
    step : float, optional
        Largest Runge-Kutta step (default `min(h, dt) / 2`).

    Returns
    -------
    u : SampledField
        Solution on `grid` and `time`.

    Raises
    ------
    TruncationError
        If a characteristic leaves through an artificial face and no
        `far_value` is given.
    StabilityError
        If the integrator produces non-finite states.
    """
    step = step or min(grid.spacing, time.step) / 2
    x = grid.coordinates().reshape(-1, grid.dim)
    outside = None
    if domain is not None:
        outside = domain.signed_distance(x) > tol
    values = torch.zeros([len(x), time.nb_nodes], dtype=default_dtype)
    for k, tk in enumerate(time.nodes().tolist()):
        trace = trace_characteristics(
            b, x, tk, grid, domain=domain, step=step, tol=tol)
        if outside is not None:
            trace.kind[outside] = HIT_BOUNDARY
            trace.end[outside] = domain.projection(x[outside])
            trace.end_time[outside] = tk
        column = torch.zeros(len(x), dtype=default_dtype)
        initial = trace.kind == HIT_INITIAL_PLANE
        boundary = trace.kind == HIT_BOUNDARY
        far = trace.kind == LEFT_STRIP
        if far.any():
            if far_value is None:
                raise TruncationError(
                    f'{int(far.sum())} characteristic(s) from t={tk} left '
                    f'{grid} through an artificial face'
                )
            column[far] = float(far_value)
        if initial.any():
            column[initial] = evaluate(u0, trace.end[initial])
        if boundary.any():
            column[boundary] = evaluate(
                h, trace.end[boundary], trace.end_time[boundary])
        values[:, k] = column
        logger.debug('t=%g: %d initial, %d boundary, %d far',
                     tk, int(initial.sum()), int(boundary.sum()),
                     int(far.sum()))
    return SampledField(grid, values.reshape(*grid.shape, -1), time)
