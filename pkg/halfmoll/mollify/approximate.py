"""
Approximate solutions and mollified data.

The approximate solution is the composition of the spatial half-space
convolution and the forward time mollification

$$
u_\\eta(x, t) = \\int_0^\\infty (u(\\cdot, s) * \\hat\\rho^d_\\eta)(x)
\\,\\omega_\\eta(s - t)\\,ds,
$$

evaluated as nested quadrature over the kernel support only. Its space
and time derivatives fall on the kernels, so they are as accurate as
the value itself.
"""
__all__ = [
    'ApproximateSolution',
    'MollifiedField',
    'MollifiedScalar',
    'MollifiedBoundaryData',
    'mollify_solution',
    'mollify_field',
    'mollify_data',
]
# stdlib
import logging

# externals
import torch
import interpol
from torch import Tensor

# internals
from halfmoll.grid.grids import StripGrid
from halfmoll.grid.fields import SampledField
from halfmoll.grid.convolution import (
    convolve_half_space,
    convolve_boundary_spacetime,
    check_horizon,
)
from halfmoll.kernels.mollifiers import HalfSpaceKernel, BoundaryTimeKernel
from halfmoll.fields.base import VelocityFieldSpec, ScalarFunction
from halfmoll.mollify.commutator import commutator
from halfmoll.core.typing import (
    Union, Callable, Optional, Tuple, InterpolationType
)
from halfmoll.core.utils import default_dtype, as_points, check_positive
from halfmoll.core.errors import (
    UnderResolvedKernelError, DimensionError, InvalidParameterError
)

logger = logging.getLogger(__name__)

FieldLike = Union[SampledField, Callable]


def _check_resolution(u: FieldLike, eta: float) -> None:
    if isinstance(u, SampledField) and eta < 2 * u.grid.spacing * (1 - 1e-9):
        raise UnderResolvedKernelError(
            f'Kernel width {eta} resolves fewer than two cells of '
            f'spacing {u.grid.spacing}'
        )


def _time_sum(fn, x: Tensor, t: Tensor, tau: Tensor, weights: Tensor):
    # sum_q weights[q] * fn(x, t + tau[q]), fn may return trailing dims
    batch = torch.broadcast_shapes(x.shape[:-1], t.shape)
    xs = x.expand(*batch, x.shape[-1])[..., None, :]
    xs = xs.expand(*batch, len(tau), x.shape[-1])
    ts = t.expand(batch)[..., None] + tau
    values = fn(xs, ts)
    return torch.tensordot(values, weights, dims=([len(batch)], [0]))


class ApproximateSolution:
    """
    Space-time mollification $u_\\eta$ of a (weak) solution.

    The source is either a `SampledField` with a time axis, an analytic
    function `u(x, t)`, or a static field (no time axis) in which case
    only the spatial convolution is applied.

    !!! note "Admissible region"
        Evaluation needs $x_d + \\eta \\leq L$ and $|x_i| + \\eta \\leq A$
        for sampled sources, and $t + \\eta \\leq T$ whenever a horizon is
        known. The evaluator is undefined (not extended) beyond.
    """

    def __init__(
        self,
        u: FieldLike,
        eta: float,
        *,
        dim: Optional[int] = None,
        static: Optional[bool] = None,
        horizon: Optional[float] = None,
        nodes_per_eta: int = 32,
        interpolation: InterpolationType = 'linear',
        strict: bool = True,
    ):
        """
        Parameters
        ----------
        u : SampledField or callable
            Source field.
        eta : float
            Kernel width.
        dim : int, optional
            Space dimension (inferred from `u` when possible).
        static : bool, optional
            Source has no time dependence (inferred for sampled fields,
            default False for callables).
        horizon : float, optional
            Final time $T$ of an analytic source.
        nodes_per_eta : int
            Minimum number of quadrature intervals per kernel width.
        interpolation : InterpolationType
            Spline order used between grid nodes.
        strict : bool
            Raise when a kernel footprint overhangs the strip.
        """
        self.eta = check_positive('eta', eta)
        if isinstance(u, SampledField):
            if u.is_boundary:
                raise DimensionError('Cannot mollify a boundary field here')
            dim = u.dim
            static = u.time is None
            if u.time is not None:
                horizon = u.time.horizon
        if dim is None:
            dim = getattr(u, 'dim', None)
        if dim is None:
            raise InvalidParameterError(
                'Cannot infer the dimension of the source: pass `dim`'
            )
        self.source = u
        self.dim = int(dim)
        self.static = bool(static)
        self.horizon = horizon
        self.nodes_per_eta = nodes_per_eta
        self.interpolation = interpolation
        self.strict = strict
        self.kernel = HalfSpaceKernel(self.dim, self.eta)
        time_step = None
        if isinstance(u, SampledField) and u.time is not None:
            time_step = u.time.step
        self._time_stencil = self.kernel.time_stencil(time_step, nodes_per_eta)

    @property
    def time_offsets(self) -> Tensor:
        return self._time_stencil.offsets[:, 0]

    def space(
        self, x: Tensor, t: Optional[Tensor] = None, gradient: bool = False
    ) -> Tensor:
        """
        Spatial half-space mollification $(u(\\cdot, t) * \\hat\\rho)(x)$
        (or its gradient) at a fixed time.
        """
        return convolve_half_space(
            self.source, self.kernel, x, None if self.static else t,
            nodes_per_eta=self.nodes_per_eta,
            strict=self.strict,
            interpolation=self.interpolation,
            gradient=gradient,
        )

    def _prepare(self, x, t):
        x = as_points(x, self.dim)
        t = torch.as_tensor(0.0 if t is None else t, dtype=default_dtype)
        check_horizon(self.horizon, t, self.eta)
        return x, t

    def __call__(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        """
        Evaluate $u_\\eta(x, t)$.

        Parameters
        ----------
        x : (..., d) tensor
            Points.
        t : (...) tensor
            Times (ignored for static sources).

        Returns
        -------
        value : (...) tensor
        """
        if self.static:
            return self.space(x)
        x, t = self._prepare(x, t)
        return _time_sum(self.space, x, t, self.time_offsets,
                         self._time_stencil.weights)

    def gradient(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        """Spatial gradient $\\nabla u_\\eta$, `(..., d)`."""
        if self.static:
            return self.space(x, gradient=True)
        x, t = self._prepare(x, t)

        def fn(xs, ts):
            return self.space(xs, ts, gradient=True)

        return _time_sum(fn, x, t, self.time_offsets,
                         self._time_stencil.weights)

    def time_derivative(
        self, x: Tensor, t: Optional[Tensor] = None
    ) -> Tensor:
        """$\\partial_t u_\\eta$, with the derivative on $\\omega_\\eta$."""
        x, t = self._prepare(x, t)
        if self.static:
            return torch.zeros(
                torch.broadcast_shapes(x.shape[:-1], t.shape),
                dtype=default_dtype)
        return _time_sum(self.space, x, t, self.time_offsets,
                         self._time_stencil.gradients[:, 0])

    def boundary_trace(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        """$u_\\eta(x', 0, t)$ at boundary points (last coordinate forced to 0)."""
        x = as_points(x, self.dim).clone()
        x[..., -1] = 0
        return self(x, t)

    def initial_trace(self, x: Tensor) -> Tensor:
        """$u_\\eta(x, 0)$."""
        return self(x, 0.0)

    def approximate_pde_residual(
        self,
        b: VelocityFieldSpec,
        x: Tensor,
        t: Tensor,
    ) -> Tensor:
        """
        Pointwise residual of the approximate equation

        $$
        \\partial_t u_\\eta
        + \\int_0^\\infty \\left[b(x, s) \\cdot \\nabla (u * \\hat\\rho)(x, s)
        + r_\\eta(u, b)(x, s)\\right] \\omega_\\eta(s - t)\\,ds,
        $$

        which reduces to
        $\\partial_t u_\\eta + b \\cdot \\nabla u_\\eta
        + \\int r_\\eta(u, b)\\,\\omega_\\eta(s - t)\\,ds$
        for autonomous fields. It vanishes when `u` solves the
        transport equation in the weak sense.

        Returns
        -------
        residual : (...) tensor
        """
        if self.static:
            raise DimensionError('A static source has no time derivative')
        x, t = self._prepare(x, t)

        def transported(xs, ts):
            grad = self.space(xs, ts, gradient=True)
            drift = (b(xs, ts) * grad).sum(-1)
            return drift + commutator(
                self.source, b, self.eta, xs, ts,
                nodes_per_eta=self.nodes_per_eta,
                strict=self.strict,
                interpolation=self.interpolation,
            )

        rest = _time_sum(transported, x, t, self.time_offsets,
                         self._time_stencil.weights)
        return self.time_derivative(x, t) + rest

    def __repr__(self):
        return (f'ApproximateSolution(eta={self.eta}, dim={self.dim}, '
                f'static={self.static}, horizon={self.horizon})')


def mollify_solution(
    u: FieldLike, eta: float, **kwargs
) -> ApproximateSolution:
    """
    Build the approximate solution $u_\\eta$.

    Parameters
    ----------
    u : SampledField or callable
        Source field (space-time samples, or an analytic function).
    eta : float
        Kernel width, at least two grid cells for sampled sources.

    Other Parameters
    ----------------
    dim, static, horizon, nodes_per_eta, interpolation, strict
        See [`ApproximateSolution`][halfmoll.mollify.approximate.ApproximateSolution].

    Raises
    ------
    UnderResolvedKernelError
        If `eta < 2 * spacing`.
    """  # noqa: E501
    eta = check_positive('eta', eta)
    _check_resolution(u, eta)
    return ApproximateSolution(u, eta, **kwargs)


class MollifiedField(VelocityFieldSpec):
    """
    Mollified velocity field
    $b_\\eta(x, t) = \\int_0^\\infty (b * \\hat\\rho^d_\\eta)(x, s)
    \\,\\omega_\\eta(s - t)\\,ds$.

    The gradient is the convolution of the exact gradient (the boundary
    term vanishes since $\\omega_\\eta(-x_d) = 0$ for $x_d \\geq 0$),
    so solenoidal fields stay solenoidal.

    !!! note "Grid cache"
        When a `cache` grid is given (autonomous fields only), $b_\\eta$
        and its gradient are tabulated on the grid nodes once and
        evaluated by cubic spline interpolation afterwards.
    """

    name = 'mollified'
    regularity = 'smooth'

    def __init__(
        self,
        field: VelocityFieldSpec,
        eta: float,
        nodes_per_eta: int = 32,
        cache: Optional[StripGrid] = None,
    ):
        super().__init__(field.dim)
        self.field = field
        self.eta = check_positive('eta', eta)
        self.nodes_per_eta = nodes_per_eta
        self.solenoidal = field.solenoidal
        self.autonomous = field.autonomous
        self.bound = field.bound
        self.kernel = HalfSpaceKernel(field.dim, self.eta)
        self._time_stencil = self.kernel.time_stencil(None, nodes_per_eta)
        self.cache = None
        if cache is not None:
            if not field.autonomous:
                raise InvalidParameterError(
                    'Only autonomous fields can be tabulated'
                )
            self._tabulate(cache)

    def _convolve(self, fn, x, t):
        def space(xs, ts):
            return convolve_half_space(
                fn, self.kernel, xs, None if ts is None else ts,
                nodes_per_eta=self.nodes_per_eta)
        if self.autonomous:
            return space(x, None)
        t = torch.as_tensor(0.0 if t is None else t, dtype=default_dtype)
        return _time_sum(space, x, t, self._time_stencil.offsets[:, 0],
                         self._time_stencil.weights)

    def _tabulate(self, grid: StripGrid) -> None:
        x = grid.coordinates()
        values = self._convolve(self.field, x, None)
        gradient = self._convolve(self.field.gradient, x, None)
        d = self.dim
        table = torch.cat([values, gradient.reshape(*grid.shape, d * d)], -1)
        # channels first, as interpol expects
        self.cache = grid
        self._table = table.movedim(-1, 0).contiguous()
        logger.debug('Tabulated %s on %s', self.field, grid)

    def _pull(self, x: Tensor) -> Tensor:
        grid = self.cache
        batch = x.shape[:-1]
        index = grid.to_index(x).reshape(-1, self.dim)
        index = index.reshape([1, -1] + [1] * (self.dim - 1) + [self.dim])
        out = interpol.grid_pull(
            self._table[None], index,
            interpolation=3, bound='dct2', extrapolate=True, prefilter=True,
        )
        return out.reshape(-1, index.shape[1]).T.reshape(*batch, -1)

    def forward(self, x, t=None):
        x = self._points(x)
        if self.cache is not None:
            return self._pull(x)[..., :self.dim]
        return self._convolve(self.field, x, t)

    def gradient(self, x, t=None):
        x = self._points(x)
        if self.cache is not None:
            flat = self._pull(x)[..., self.dim:]
            return flat.reshape(*x.shape[:-1], self.dim, self.dim)
        return self._convolve(self.field.gradient, x, t)

    def divergence(self, x, t=None):
        if self.solenoidal:
            x = self._points(x)
            return torch.zeros(x.shape[:-1], dtype=default_dtype)
        return super().divergence(x, t)


def mollify_field(
    b: VelocityFieldSpec,
    eta: float,
    nodes_per_eta: int = 32,
    cache: Optional[StripGrid] = None,
) -> VelocityFieldSpec:
    """
    Mollify a velocity field in space (and forward in time).

    Uniform fields are returned unchanged, since both kernels have unit
    mass.
    """
    if b.is_uniform:
        return b
    return MollifiedField(b, eta, nodes_per_eta, cache)


class MollifiedScalar(ScalarFunction):
    """Spatially mollified initial data $u_0 * \\hat\\rho^d_\\eta$."""

    def __init__(self, base: ScalarFunction, eta: float,
                 nodes_per_eta: int = 32):
        super().__init__(base.dim)
        self.base = base
        self.eta = check_positive('eta', eta)
        self.nodes_per_eta = nodes_per_eta
        self.kernel = HalfSpaceKernel(base.dim, self.eta)

    def forward(self, x, t=None):
        return convolve_half_space(self.base, self.kernel, self._points(x),
                                   nodes_per_eta=self.nodes_per_eta)

    def gradient(self, x, t=None):
        return convolve_half_space(self.base, self.kernel, self._points(x),
                                   nodes_per_eta=self.nodes_per_eta,
                                   gradient=True)


class MollifiedBoundaryData(ScalarFunction):
    """
    Boundary data mollified along the boundary and forward in time,
    $h * \\tilde\\rho^d_\\eta$.
    """

    def __init__(self, base: ScalarFunction, eta: float,
                 horizon: Optional[float] = None, nodes_per_eta: int = 32):
        super().__init__(base.dim)
        self.base = base
        self.eta = check_positive('eta', eta)
        self.horizon = horizon
        self.nodes_per_eta = nodes_per_eta
        self.kernel = BoundaryTimeKernel(base.dim, self.eta)

    def forward(self, x, t=None):
        x = self._points(x).clone()
        x[..., -1] = 0
        t = torch.as_tensor(0.0 if t is None else t, dtype=default_dtype)
        return convolve_boundary_spacetime(
            self.base, self.kernel, x, t,
            horizon=self.horizon, nodes_per_eta=self.nodes_per_eta)


def mollify_data(
    b: VelocityFieldSpec,
    h: ScalarFunction,
    u0: ScalarFunction,
    eta: float,
    *,
    horizon: Optional[float] = None,
    nodes_per_eta: int = 32,
    cache: Optional[StripGrid] = None,
) -> Tuple[VelocityFieldSpec, ScalarFunction, ScalarFunction]:
    """
    Smooth approximations of the problem data.

    Parameters
    ----------
    b : VelocityFieldSpec
        Velocity field.
    h : ScalarFunction
        Boundary data `h(x, t)` (boundary points of $\\mathbb{R}^d$).
    u0 : ScalarFunction
        Initial data.
    eta : float
        Kernel width.
    horizon : float, optional
        Final time; the mollified boundary data are then only defined
        for $t + \\eta \\leq T$.
    cache : StripGrid, optional
        Tabulate $b_\\eta$ on this grid.

    Returns
    -------
    b_eta : VelocityFieldSpec
    h_eta : ScalarFunction
    u0_eta : ScalarFunction
    """
    eta = check_positive('eta', eta)
    b_eta = mollify_field(b, eta, nodes_per_eta, cache)
    h_eta = MollifiedBoundaryData(h, eta, horizon, nodes_per_eta)
    u0_eta = MollifiedScalar(u0, eta, nodes_per_eta)
    return b_eta, h_eta, u0_eta
