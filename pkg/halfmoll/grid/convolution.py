"""
Mollification of sampled (or analytic) data by quadrature over the
kernel support.

Both convolutions only ever sample the integrand on the interior side
of the evaluation point ($y_d \\geq x_d$) and, for the space-time
kernel, at future times ($s \\geq t$). No extension of the data below
the boundary is involved.
"""
__all__ = [
    'convolve_half_space',
    'convolve_boundary_spacetime',
    'check_margins',
    'check_horizon',
]
# stdlib
import warnings

# externals
import torch
from torch import Tensor

# internals
from halfmoll.grid.grids import StripGrid, BoundaryGrid
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.kernels.mollifiers import HalfSpaceKernel, BoundaryTimeKernel
from halfmoll.core.typing import Union, Callable, Optional
from halfmoll.core.utils import default_dtype, as_points, chunked
from halfmoll.core.errors import (
    TruncationError, OutOfHorizonError, DimensionError
)

FieldLike = Union[SampledField, Callable]


def check_margins(
    grid: StripGrid, x: Tensor, eta: float, strict: bool = True
) -> bool:
    """
    Check that the kernel footprint at `x` fits in the strip:
    $x_d + \\eta \\leq L$ and $|x_i| + \\eta \\leq A$.

    Returns False (after a warning) when `strict=False` and some
    footprint overhangs; raises `TruncationError` when `strict=True`.
    """
    if not isinstance(grid, StripGrid):
        return True
    if (x[..., -1] < -1e-9).any():
        raise TruncationError('Evaluation point below the boundary')
    ok = grid.contains(x, margin=eta).all()
    if not ok:
        message = (f'Kernel support of width {eta} overhangs the '
                   f'artificial faces of {grid}')
        if strict:
            raise TruncationError(message)
        warnings.warn(message + ' (zero extension used)')
    return bool(ok)


def check_horizon(
    horizon: Optional[float], t: Tensor, eta: float
) -> None:
    """Raise `OutOfHorizonError` unless $t + \\eta \\leq T$."""
    if horizon is None:
        return
    t = torch.as_tensor(t, dtype=default_dtype)
    if (t + eta > horizon + 1e-9).any():
        raise OutOfHorizonError(
            f'Forward time mollification at t={float(t.max())} with '
            f'eta={eta} needs samples beyond T={horizon}'
        )


def convolve_half_space(
    f: FieldLike,
    kernel: HalfSpaceKernel,
    x: Tensor,
    t: Optional[Tensor] = None,
    *,
    nodes_per_eta: int = 32,
    strict: bool = True,
    interpolation='linear',
    gradient: bool = False,
    chunk: int = 2048,
) -> Tensor:
    """
    Spatial half-space mollification
    $(f * \\hat\\rho^d_\\eta)(x) = \\int_{y_d > 0} f(y)\\hat\\rho^d_\\eta(x - y)\\,dy$.

    Parameters
    ----------
    f : SampledField or callable
        Integrand on the strip (`f(x)` or `f(x, t)`). Callables may
        return trailing value dimensions (e.g. vector fields).
    kernel : HalfSpaceKernel
        Half-space kernel.
    x : (..., d) tensor
        Evaluation points.
    t : (...) tensor, optional
        Time at which a space-time integrand is taken.
    nodes_per_eta : int
        Minimum number of quadrature intervals per kernel width.
    strict : bool
        Raise if the footprint overhangs the strip's artificial faces
        (otherwise warn and extend `f` by zero).
    gradient : bool
        Return the gradient of the mollification with respect to `x`
        instead of its value (the derivative falls on the kernel).

    Returns
    -------
    value : (...) or (..., d) tensor
    """  # noqa: E501
    eta = kernel.scale
    x = as_points(x, kernel.dim)
    spacing = None
    if isinstance(f, SampledField):
        if f.is_boundary or f.dim != kernel.dim:
            raise DimensionError(f'Cannot convolve {f} with {kernel}')
        strict = check_margins(f.grid, x, eta, strict)
        spacing = f.grid.spacing
    stencil = kernel.stencil(spacing, nodes_per_eta)
    batch = x.shape[:-1]
    x = x.reshape(-1, kernel.dim)
    if t is not None:
        t = torch.as_tensor(t, dtype=default_dtype).expand(batch).reshape(-1)
        x = torch.cat([x, t[:, None]], -1)
    options = dict(interpolation=interpolation, strict=strict) \
        if isinstance(f, SampledField) else {}

    def apply(xt):
        y = xt[:, None, :kernel.dim] + stencil.offsets
        s = xt[:, None, -1].expand(y.shape[:-1]) if t is not None else None
        values = evaluate(f, y, s, **options)
        if gradient:
            return torch.einsum('nq...,qj->n...j', values,
                                stencil.gradients)
        return torch.einsum('nq...,q->n...', values, stencil.weights)

    out = chunked(apply, x, chunk)
    return out.reshape(batch + out.shape[1:])


def convolve_boundary_spacetime(
    g: FieldLike,
    kernel: BoundaryTimeKernel,
    x: Tensor,
    t: Tensor,
    *,
    horizon: Optional[float] = None,
    nodes_per_eta: int = 32,
    interpolation='linear',
    chunk: int = 2048,
) -> Tensor:
    """
    Boundary space-time mollification
    $(g * \\tilde\\rho^d_\\eta)(x', t)$: symmetric in $x'$, forward
    one-sided in time (samples $s \\in [t, t + \\eta]$).

    Parameters
    ----------
    g : SampledField or callable
        Boundary data with a time axis, or `g(x, t)` with `x` a boundary
        point of $\\mathbb{R}^d$ (last coordinate 0).
    kernel : BoundaryTimeKernel
        Boundary space-time kernel.
    x : (..., d) tensor
        Boundary points.
    t : (...) tensor
        Times.
    horizon : float, optional
        Final time $T$ of analytic data. Sampled data use their own.

    Returns
    -------
    value : (...) tensor
    """
    eta = kernel.scale
    dim = kernel.dim
    x = as_points(x, dim)
    t = torch.as_tensor(t, dtype=default_dtype)
    batch = torch.broadcast_shapes(x.shape[:-1], t.shape)
    spacing = time_step = None
    if isinstance(g, SampledField):
        if not g.is_boundary or g.time is None:
            raise DimensionError(
                'Boundary mollification needs a boundary field with a '
                'time axis'
            )
        horizon = g.time.horizon
        spacing = g.grid.spacing if dim > 1 else None
        time_step = g.time.step
        if dim > 1 and not (
            x[..., :-1].abs() + eta <= g.grid.extent + 1e-9
        ).all():
            raise TruncationError(
                f'Kernel support of width {eta} overhangs the boundary grid'
            )
    check_horizon(horizon, t, eta)
    stencil = kernel.stencil(spacing, time_step, nodes_per_eta)
    xt = torch.cat([
        x.expand(*batch, dim).reshape(-1, dim),
        t.expand(batch).reshape(-1, 1),
    ], -1)
    options = dict(interpolation=interpolation) \
        if isinstance(g, SampledField) else {}

    def apply(xt):
        tangential = xt[:, None, :dim - 1] + stencil.offsets[:, :-1]
        zero = torch.zeros_like(tangential[..., :1])
        y = torch.cat([tangential, zero], -1)
        s = xt[:, None, -1] + stencil.offsets[:, -1]
        values = evaluate(g, y, s, **options)
        return values @ stencil.weights

    return chunked(apply, xt, chunk).reshape(batch)
