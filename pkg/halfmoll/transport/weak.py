"""
Weak formulation of the Dirichlet transport problem.

A function $u$ is a weak solution when, for every $C^1$ test function
$\\varphi$ with compact support in $\\bar\\Omega \\times [0, T)$,

$$
-\\int_0^T\\!\\!\\int_\\Omega u\\,\\partial_t\\varphi
-\\int_\\Omega u_0\\,\\varphi(\\cdot, 0)
+\\int_0^T\\!\\!\\int_{\\partial\\Omega} h\\,(b \\cdot \\nu)\\,\\varphi
-\\int_0^T\\!\\!\\int_\\Omega u\\,\\mathrm{div}(\\varphi b) = 0.
$$

No pointwise derivative or trace of $u$ appears, so the functional can
be evaluated on sampled (possibly discontinuous) solutions.
"""
__all__ = [
    'TestFunction',
    'WeakResidualReport',
    'test_function_corpus',
    'weak_residual',
]
# stdlib
import math
import logging
from dataclasses import dataclass, field

# externals
import torch
from torch import nn, Tensor

# internals
from halfmoll.io.loadable import LoadableMixin
from halfmoll.grid.grids import StripGrid, TimeAxis
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.grid.quadrature import integrate, integrate_time
from halfmoll.fields.base import VelocityFieldSpec
from halfmoll.fields.norms import normal_trace
from halfmoll.core.typing import Optional, Sequence, Tuple, Callable, Union
from halfmoll.core.utils import default_dtype, make_vector, as_points
from halfmoll.core.errors import CoverageError, DimensionError, NonFiniteError

logger = logging.getLogger(__name__)


def _bump(z: Tensor) -> Tuple[Tensor, Tensor]:
    # exp(1 - 1/(1 - z^2)), with value 1 at 0, and its derivative
    inside = z.abs() < 1
    q = torch.where(inside, 1 - z.square(), torch.ones_like(z))
    value = torch.where(inside, torch.exp(1 - 1 / q), torch.zeros_like(z))
    return value, value * (-2 * z / q.square())


def _transition(z: Tensor) -> Tuple[Tensor, Tensor]:
    # smooth step: 0 for z <= 0, 1 for z >= 1
    z = z.clamp(0, 1)
    f = torch.where(z > 0, torch.exp(-1 / z.clamp_min(1e-300)),
                    torch.zeros_like(z))
    g = torch.where(z < 1, torch.exp(-1 / (1 - z).clamp_min(1e-300)),
                    torch.zeros_like(z))
    df = torch.where(z > 0, f / z.clamp_min(1e-300).square(),
                     torch.zeros_like(z))
    dg = torch.where(z < 1, -g / (1 - z).clamp_min(1e-300).square(),
                     torch.zeros_like(z))
    value = f / (f + g)
    derivative = (df * (f + g) - f * (df + dg)) / (f + g).square()
    return value, derivative


def _plateau(s: Tensor, depth: float, width: float):
    # 1 on [0, depth], 0 beyond depth + width
    value, derivative = _transition((depth + width - s) / width)
    return value, -derivative / width


class TestFunction(LoadableMixin, nn.Module):
    """
    Tensor-product test function
    $\\varphi(x, t) = \\prod_i \\psi_i(x_i)\\,\\chi(t)$.

    Each spatial factor is a bump $\\exp(1 - 1/(1 - z^2))$ of the scaled
    coordinate, except that the normal factor can be a boundary plateau
    (equal to 1 for $x_d \\leq$ `plateau[0]`, decaying to 0 over
    `plateau[1]`), which makes $\\varphi$ independent of $x_d$ near the
    boundary. The time factor is a bump, or an initial plateau
    (equal to 1 on `[0, time_plateau[0]]`).
    """

    __test__ = False

    def __init__(
        self,
        center: Sequence[float],
        radius: Sequence[float],
        time_center: float,
        time_radius: float,
        plateau: Optional[Sequence[float]] = None,
        time_plateau: Optional[Sequence[float]] = None,
        name: str = 'phi',
    ):
        """
        Parameters
        ----------
        center, radius : sequence[float]
            Center and half-width of the bump along each axis (the normal
            entries are ignored when `plateau` is set).
        time_center, time_radius : float
            Center and half-width of the time bump (ignored when
            `time_plateau` is set).
        plateau : (depth, width), optional
            Boundary plateau of the normal factor.
        time_plateau : (length, width), optional
            Initial plateau of the time factor.
        name : str
            Identifier used in reports.
        """
        super().__init__()
        self.center = make_vector(center)
        self.radius = make_vector(radius, len(self.center))
        self.dim = len(self.center)
        self.time_center = float(time_center)
        self.time_radius = float(time_radius)
        self.plateau = tuple(map(float, plateau)) if plateau else None
        self.time_plateau = (tuple(map(float, time_plateau))
                             if time_plateau else None)
        self.name = name

    @property
    def support(self) -> Tuple[Tuple[float, float], ...]:
        """Support box: one `(lower, upper)` pair per axis, then time."""
        box = [(float(c - r), float(c + r))
               for c, r in zip(self.center, self.radius)]
        if self.plateau:
            box[-1] = (0.0, sum(self.plateau))
        if self.time_plateau:
            box.append((0.0, sum(self.time_plateau)))
        else:
            box.append((self.time_center - self.time_radius,
                        self.time_center + self.time_radius))
        return tuple(box)

    def _factors(self, x: Tensor, t: Tensor):
        z = (x - self.center) / self.radius
        values, derivatives = _bump(z)
        derivatives = derivatives / self.radius
        if self.plateau:
            v, dv = _plateau(x[..., -1], *self.plateau)
            values = torch.cat([values[..., :-1], v[..., None]], -1)
            derivatives = torch.cat([derivatives[..., :-1], dv[..., None]], -1)
        if self.time_plateau:
            vt, dvt = _plateau(t, *self.time_plateau)
        else:
            vt, dvt = _bump((t - self.time_center) / self.time_radius)
            dvt = dvt / self.time_radius
        return values, derivatives, vt, dvt

    def _inputs(self, x, t):
        x = as_points(x, self.dim)
        t = torch.as_tensor(0.0 if t is None else t, dtype=default_dtype)
        shape = torch.broadcast_shapes(x.shape[:-1], t.shape)
        return x.expand(*shape, self.dim), t.expand(shape)

    def forward(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        x, t = self._inputs(x, t)
        values, _, vt, _ = self._factors(x, t)
        return values.prod(-1) * vt

    def gradient(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        """Spatial gradient, `(..., d)`."""
        x, t = self._inputs(x, t)
        values, derivatives, vt, _ = self._factors(x, t)
        columns = []
        for i in range(self.dim):
            others = torch.cat([values[..., :i], values[..., i+1:]], -1)
            columns.append(derivatives[..., i] * others.prod(-1))
        return torch.stack(columns, -1) * vt[..., None]

    def time_derivative(
        self, x: Tensor, t: Optional[Tensor] = None
    ) -> Tensor:
        x, t = self._inputs(x, t)
        values, _, _, dvt = self._factors(x, t)
        return values.prod(-1) * dvt

    def c1_norm(self, grid: StripGrid, time: TimeAxis) -> float:
        """$\\sup|\\varphi| + \\sup|\\nabla_{x,t}\\varphi|$ over grid nodes."""
        x = grid.coordinates()
        best = [0.0, 0.0]
        for t in time.nodes().tolist():
            best[0] = max(best[0], float(self(x, t).abs().max()))
            slope = torch.cat([self.gradient(x, t),
                               self.time_derivative(x, t)[..., None]], -1)
            best[1] = max(best[1], float(slope.norm(dim=-1).max()))
        return sum(best)

    def extra_repr(self) -> str:
        return f'name={self.name}, support={self.support}'


def test_function_corpus(
    dim: int = 2,
    horizon: float = 1.0,
    extent: float = 1.0,
    length: float = 1.0,
) -> Sequence[TestFunction]:
    """
    Five test functions supported inside the strip
    $[-A, A]^{d-1} \\times [0, L] \\times [0, T)$.

    Two of them are independent of $x_d$ near the boundary, one has an
    initial plateau (it tests the initial-data term and lives away from
    the boundary), and the others are interior bumps vanishing near
    $t = 0$ and $t = T$.
    """
    A, L, T = float(extent), float(length), float(horizon)
    tangential = dim - 1

    def make(name, tc, tr, center, radius, **kwargs):
        return TestFunction(
            [center[0]] * tangential + [center[1]],
            [radius[0] * A] * tangential + [radius[1] * L],
            tc * T, tr * T, name=name, **kwargs,
        )

    return [
        make('interior', 0.5, 0.4, (0, 0.5 * L), (0.5, 0.3)),
        make('boundary_plateau', 0.5, 0.4, (0, 0), (0.5, 1.0),
             plateau=(0.2 * L, 0.3 * L)),
        make('wide_plateau', 0.4, 0.3, (0, 0), (0.8, 1.0),
             plateau=(0.1 * L, 0.5 * L)),
        make('off_center', 0.6, 0.3, (0.3 * A, 0.3 * L), (0.4, 0.25)),
        make('initial_slab', 0.0, 0.0, (0, 0.7 * L), (0.5, 0.2),
             time_plateau=(0.2 * T, 0.2 * T)),
    ]


@dataclass
class WeakResidualReport:
    """
    Attributes
    ----------
    name : str
        Test-function identifier.
    value : float
        Weak-form functional.
    error_estimate : float
        Quadrature error estimate (difference with the same functional
        on every other node, divided by 3), NaN when unavailable.
    terms : dict[str, float]
        The four terms: `time`, `initial`, `boundary`, `transport`.
    """
    name: str
    value: float
    error_estimate: float = float('nan')
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise NonFiniteError(f'Non-finite weak residual for {self.name}')


def _check_coverage(phi: TestFunction, grid: StripGrid, time: TimeAxis):
    box = phi.support
    tol = 1e-9
    for i, (lo, hi) in enumerate(box[:-2]):
        if lo < -grid.extent - tol or hi > grid.extent + tol:
            raise CoverageError(
                f'Support of {phi.name} along axis {i} ({lo}, {hi}) '
                f'exceeds the strip half-width {grid.extent}'
            )
    lo, hi = box[-2]
    if lo < -tol or hi > grid.length + tol:
        raise CoverageError(
            f'Normal support of {phi.name} ({lo}, {hi}) exceeds the strip '
            f'length {grid.length}'
        )
    lo, hi = box[-1]
    if lo < -tol or hi >= time.horizon - tol:
        raise CoverageError(
            f'Time support of {phi.name} ({lo}, {hi}) is not compact in '
            f'[0, {time.horizon})'
        )


def _terms(u, b, h, u0, phi, grid, time, values):
    x = grid.coordinates()
    t = time.nodes()
    xt = x[..., None, :].expand(*x.shape[:-1], len(t), grid.dim)
    tt = t.expand(*x.shape[:-1], len(t))
    div_phi_b = (phi.gradient(xt, tt) * b(xt, tt)).sum(-1) \
        + phi(xt, tt) * b.divergence(xt, tt)

    def space_time(integrand):
        f = SampledField(grid, integrand, time)
        return float(integrate_time(integrate(f), time))

    out = {
        'time': -space_time(values * phi.time_derivative(xt, tt)),
        'transport': -space_time(values * div_phi_b),
    }
    zero = torch.zeros([], dtype=default_dtype)
    out['initial'] = -float(integrate(SampledField(
        grid, evaluate(u0, x) * phi(x, zero))))
    boundary = grid.boundary()
    y = boundary.coordinates()
    if grid.dim == 1:
        y = y[None]
    yt = y[..., None, :].expand(*y.shape[:-1], len(t), grid.dim)
    ty = t.expand(*y.shape[:-1], len(t))
    flux = evaluate(h, yt, ty) * normal_trace(b, yt, ty) * phi(yt, ty)
    if grid.dim == 1:
        flux = flux[0]
    out['boundary'] = float(integrate_time(
        integrate(SampledField(boundary, flux, time), 'boundary'), time))
    return out


def _coarsen(u: SampledField):
    grid, time = u.grid, u.time
    if any((n - 1) % 2 for n in u.shape):
        return None
    coarse = StripGrid(grid.dim, grid.extent, grid.length, 2 * grid.spacing)
    coarse_time = TimeAxis(time.horizon, 2 * time.step)
    index = tuple(slice(None, None, 2) for _ in u.shape)
    return u.values[index], coarse, coarse_time


def weak_residual(
    u: SampledField,
    b: VelocityFieldSpec,
    h: Union[Callable, SampledField],
    u0: Union[Callable, SampledField],
    phi: TestFunction,
    *,
    estimate_error: bool = True,
) -> WeakResidualReport:
    """
    Evaluate the weak-form functional by trapezoidal quadrature.

    Parameters
    ----------
    u : SampledField
        Space-time samples on the strip.
    b : VelocityFieldSpec
        Velocity field.
    h : callable or SampledField
        Boundary data `h(x, t)`.
    u0 : callable or SampledField
        Initial data.
    phi : TestFunction
        Test function, supported inside the strip and in $[0, T)$.
    estimate_error : bool
        Also evaluate the functional on every other node (when the node
        counts allow it) to estimate the quadrature error.

    Returns
    -------
    report : WeakResidualReport

    Raises
    ------
    CoverageError
        If the support of `phi` exceeds the grids.
    """
    if u.time is None or u.is_boundary:
        raise DimensionError('Expected space-time samples on the strip')
    _check_coverage(phi, u.grid, u.time)
    terms = _terms(u, b, h, u0, phi, u.grid, u.time, u.values)
    value = sum(terms.values())
    error = float('nan')
    coarse = _coarsen(u) if estimate_error else None
    if coarse is not None:
        values, grid, time = coarse
        coarse_terms = _terms(u, b, h, u0, phi, grid, time, values)
        error = abs(value - sum(coarse_terms.values())) / 3
    logger.debug('Weak residual of %s: %g (%s)', phi.name, value, terms)
    return WeakResidualReport(phi.name, value, error, terms)
