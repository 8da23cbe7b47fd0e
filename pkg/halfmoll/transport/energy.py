"""
$L^p$ energy of sampled solutions: the Gronwall bound used for
existence, and the exact energy balance behind it.

For a solution of $\\partial_t u + b \\cdot \\nabla u = 0$,

$$
\\frac{d}{dt} \\int |u|^p = \\int |u|^p\\,\\mathrm{div}\\,b
- \\int_{\\partial} |u|^p\\,(b \\cdot n),
$$

where the boundary values are $h$ on the inflow part of $\\{x_d = 0\\}$.
Bounding the right-hand side gives
$\\lVert u(t) \\rVert_p^p \\leq (\\lVert u(0) \\rVert_p^p + M_2 t)\\,e^{M_1 t}$
with $M_1 = \\lVert \\mathrm{div}\\,b \\rVert_\\infty$ and
$M_2 = \\lVert b \\rVert_\\infty \\sup_t \\lVert h(t) \\rVert_p^p$.
"""
__all__ = [
    'GronwallReport',
    'EnergyBalance',
    'energy',
    'gronwall_check',
    'energy_identity_check',
]
# stdlib
import json
import math
import logging
from pathlib import Path
from dataclasses import dataclass, field

# externals
import torch
from torch import Tensor

# internals
from halfmoll.io.loadable import StateMixin
from halfmoll.io.utils import to_jsonable
from halfmoll.grid.grids import StripGrid
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.grid.quadrature import integrate
from halfmoll.fields.base import VelocityFieldSpec
from halfmoll.fields.norms import sup_norm, divergence_sup, normal_trace
from halfmoll.core.typing import Callable, List, Union
from halfmoll.core.utils import default_dtype
from halfmoll.core.errors import DimensionError, InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass
class GronwallReport(StateMixin):
    """
    Attributes
    ----------
    times : list[float]
        Time nodes.
    energy : list[float]
        $\\lVert u(t) \\rVert_p^p$.
    bound : list[float]
        $(\\lVert u(0) \\rVert_p^p + M_2 t)\\,e^{M_1 t}$.
    m1, m2 : float
        Constants of the bound.
    p : float
        Exponent.
    slack : float
        Relative slack granted to discretization errors.
    holds : bool
        Whether `energy <= (1 + slack) * bound` at every node.
    repair_factor : float
        Smallest factor $c \\geq 1$ with `energy <= c * bound` everywhere.
    """
    times: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    bound: List[float] = field(default_factory=list)
    m1: float = 0.0
    m2: float = 0.0
    p: float = 2.0
    slack: float = 0.05
    holds: bool = True
    repair_factor: float = 1.0

    def to_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w') as f:
            f.write(f'# gronwall: p={self.p} m1={self.m1!r} m2={self.m2!r}\n')
            f.write('t,energy,bound\n')
            for row in zip(self.times, self.energy, self.bound):
                f.write(','.join(repr(float(v)) for v in row) + '\n')

    def save(self, path: Union[str, Path]) -> None:
        """Write `<stem>.csv` and `<stem>.json`."""
        path = Path(path).with_suffix('')
        self.to_csv(path.with_suffix('.csv'))
        with open(path.with_suffix('.json'), 'w') as f:
            json.dump(to_jsonable(self.serialize()), f, indent=2,
                      sort_keys=True)


@dataclass
class EnergyBalance:
    """
    Integrated energy balance.

    Attributes
    ----------
    times : tensor
        Time nodes.
    energy : tensor
        Measured $\\int |u(t)|^p$.
    predicted : tensor
        $\\int |u(0)|^p$ plus the time integral of the right-hand side.
    defect : float
        Largest relative gap between `energy` and `predicted`.
    """
    times: Tensor
    energy: Tensor
    predicted: Tensor
    defect: float


def _check(u: SampledField, p: float) -> float:
    if u.time is None or u.is_boundary:
        raise DimensionError('Expected space-time samples on the strip')
    p = float(p)
    if not (1 <= p < math.inf):
        raise InvalidParameterError(f'Expected 1 <= p < inf, got {p}')
    return p


def energy(u: SampledField, p: float = 2.0) -> Tensor:
    """$\\int |u(t)|^p$ at every time node, `(nt,)`."""
    p = _check(u, p)
    return integrate(u.map(lambda v: v.abs().pow(p)))


def _boundary_energy(h, grid: StripGrid, t: float, p: float) -> float:
    boundary = grid.boundary()
    y = boundary.coordinates()
    if grid.dim == 1:
        y = y[None]
    tt = torch.full(y.shape[:-1], t, dtype=default_dtype)
    values = evaluate(h, y, tt).abs().pow(p)
    if grid.dim == 1:
        return float(values.sum())
    return float(integrate(SampledField(boundary, values), 'boundary'))


def _trapezoid_faces(values: Tensor, spacing: float) -> Tensor:
    while values.dim():
        values = torch.trapezoid(values, dx=spacing, dim=0)
    return values


def _outflux(
    values: Tensor,
    b: VelocityFieldSpec,
    h: Callable,
    grid: StripGrid,
    t: float,
    p: float,
) -> float:
    # net flux of |u|^p through every face of the strip
    x = grid.coordinates()
    tt = torch.full(x.shape[:-1], t, dtype=default_dtype)
    bx = b(x, tt)
    total = 0.0
    d = grid.dim
    for axis in range(d):
        faces = [(-1, 1.0)] if axis == d - 1 else [(0, -1.0), (-1, 1.0)]
        for index, sign in faces:
            bn = sign * bx.select(axis, index)[..., axis]
            flux = values.select(axis, index) * bn
            total += float(_trapezoid_faces(flux, grid.spacing))
    # flat boundary: data on the inflow part, trace elsewhere
    bottom = x.select(d - 1, 0)
    bn = normal_trace(b, bottom, tt.select(d - 1, 0))
    data = evaluate(h, bottom, tt.select(d - 1, 0)).abs().pow(p)
    trace = values.select(d - 1, 0)
    flux = torch.where(bn < 0, data, trace) * bn
    total += float(_trapezoid_faces(flux, grid.spacing))
    return total


def gronwall_check(
    u: SampledField,
    b: VelocityFieldSpec,
    h: Union[Callable, SampledField],
    p: float = 2.0,
    *,
    slack: float = 0.05,
) -> GronwallReport:
    """
    Check $\\lVert u(t) \\rVert_p^p \\leq (\\lVert u(0) \\rVert_p^p
    + M_2 t)\\,e^{M_1 t}$ at every time node.

    $M_1 = \\max|\\mathrm{div}\\,b|$ and
    $M_2 = \\max|b| \\cdot \\max_t \\int_{\\partial}|h(t)|^p$ are taken over
    the grid and time nodes.

    Parameters
    ----------
    u : SampledField
        Space-time samples of the solution.
    b : VelocityFieldSpec
        Velocity field (mollified for rough data).
    h : callable or SampledField
        Boundary data.
    p : float
        Exponent, $1 \\leq p < \\infty$.
    slack : float
        Relative slack granted to discretization errors.

    Returns
    -------
    report : GronwallReport
        When the inequality fails for these constants, `repair_factor`
        holds the smallest scaling of the bound that repairs it.
    """
    p = _check(u, p)
    times = u.time.nodes()
    grid = u.grid
    m1 = divergence_sup(b, grid, times)
    m2 = sup_norm(b, grid, times) * max(
        _boundary_energy(h, grid, t, p) for t in times.tolist())
    e = energy(u, p)
    bound = (e[0] + m2 * times) * torch.exp(m1 * times)
    ratio = torch.where(bound > 0, e / bound.clamp_min(1e-300),
                        torch.where(e > 1e-12, math.inf, 1.0))
    repair = max(1.0, float(ratio.max()))
    holds = bool((e <= (1 + slack) * bound + 1e-12).all())
    if not holds:
        logger.warning('Gronwall bound fails with M1=%g, M2=%g; '
                       'repair factor %g', m1, m2, repair)
    logger.info('Gronwall check: M1=%g M2=%g max ratio %g', m1, m2,
                float(ratio.max()))
    return GronwallReport(
        times=times.tolist(), energy=e.tolist(), bound=bound.tolist(),
        m1=m1, m2=m2, p=p, slack=slack, holds=holds, repair_factor=repair,
    )


def energy_identity_check(
    u: SampledField,
    b: VelocityFieldSpec,
    h: Union[Callable, SampledField],
    p: float = 2.0,
) -> EnergyBalance:
    """
    Compare $\\int |u(t)|^p$ with the integrated energy balance.

    The flux term covers every face of the strip: the artificial faces
    use the sampled values, the flat boundary uses $h$ where $b$ points
    inward and the sampled trace elsewhere. Time integrals use the
    cumulative trapezoidal rule.

    Returns
    -------
    balance : EnergyBalance
    """
    p = _check(u, p)
    grid = u.grid
    times = u.time.nodes()
    powered = u.values.abs().pow(p)
    x = grid.coordinates()
    rates = []
    for k, t in enumerate(times.tolist()):
        tt = torch.full(x.shape[:-1], t, dtype=default_dtype)
        source = integrate(SampledField(
            grid, powered[..., k] * b.divergence(x, tt)))
        rates.append(float(source) - _outflux(
            powered[..., k], b, h, grid, t, p))
    rates = torch.as_tensor(rates, dtype=default_dtype)
    e = integrate(SampledField(grid, powered, u.time))
    gained = torch.cat([
        torch.zeros(1, dtype=default_dtype),
        torch.cumulative_trapezoid(rates, dx=u.time.step),
    ])
    predicted = e[0] + gained
    scale = e.abs().max().clamp_min(1e-300)
    defect = float((e - predicted).abs().max() / scale)
    logger.debug('Energy balance defect: %g', defect)
    return EnergyBalance(times, e, predicted, defect)
