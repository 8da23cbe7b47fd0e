"""
The commutator of mollification and transport,

$$
r_\\eta(u, b) = (b \\cdot \\nabla u) * \\hat\\rho^d_\\eta
              - b \\cdot \\nabla (u * \\hat\\rho^d_\\eta),
$$

in its distributional form, where the derivative of $u$ is moved onto
the kernel and onto $b$:

$$
r_\\eta(u, b)(x) = \\int_{y_d > 0} u(y) \\left[(b(y) - b(x)) \\cdot
\\nabla\\hat\\rho^d_\\eta(x - y) - \\mathrm{div}\\, b(y)\\,
\\hat\\rho^d_\\eta(x - y)\\right] dy.
$$

This form only needs $u \\in L^p$, so it applies to sampled weak
solutions. The direct form needs $\\nabla u$ and serves as a check.

The adjoint commutator uses the reflected kernel and is the partner of
$r_\\eta$ in the interchange identities.
"""
__all__ = [
    'CommutatorSample',
    'commutator',
    'commutator_sample',
    'adjoint_commutator',
    'commutator_pairing',
    'commutator_convergence',
]
# stdlib
import time
import logging
from dataclasses import dataclass

# externals
import torch
from torch import Tensor

# internals
from halfmoll.grid.grids import StripGrid
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.grid.quadrature import lp_norm
from halfmoll.grid.convolution import check_margins
from halfmoll.kernels.mollifiers import HalfSpaceKernel
from halfmoll.functional.stencils import (
    Stencil, half_space_stencil, stencil_step
)
from halfmoll.fields.base import VelocityFieldSpec
from halfmoll.fields.norms import exponent_check, sobolev_seminorm
from halfmoll.io.reports import ConvergenceReport
from halfmoll.core.typing import (
    Union, Callable, Optional, Sequence, Tuple, MethodType
)
from halfmoll.core.utils import (
    default_dtype, as_points, chunked, check_positive
)
from halfmoll.core.errors import (
    DomainError, InvalidParameterError, UnderResolvedKernelError
)

logger = logging.getLogger(__name__)

FieldLike = Union[SampledField, Callable]


@dataclass
class CommutatorSample:
    """
    One evaluation of the commutator.

    Attributes
    ----------
    point : tensor
        Evaluation point $x$.
    time : float
        Evaluation time $s$.
    value : float
        $r_\\eta(u, b)(x, s)$.
    method : {'distributional', 'direct'}
        Evaluation route.
    """
    point: Tensor
    time: float
    value: float
    method: MethodType = 'distributional'


def _options(u, interpolation, strict):
    if isinstance(u, SampledField):
        return dict(interpolation=interpolation, strict=strict)
    return {}


def _has_time(u) -> bool:
    return not (isinstance(u, SampledField) and u.time is None)


def _prepare(u, b, eta, x, s, strict, nodes_per_eta):
    x = as_points(x, b.dim)
    spacing = None
    if isinstance(u, SampledField):
        spacing = u.grid.spacing
        strict = check_margins(u.grid, x, eta, strict)
    elif (x[..., -1] < -1e-9).any():
        raise DomainError('Commutator evaluated below the boundary')
    stencil = HalfSpaceKernel(b.dim, eta).stencil(spacing, nodes_per_eta)
    batch = x.shape[:-1]
    if s is not None:
        s = torch.as_tensor(s, dtype=default_dtype)
        batch = torch.broadcast_shapes(batch, s.shape)
        s = s.expand(batch).reshape(-1, 1)
    x = x.expand(*batch, b.dim).reshape(-1, b.dim)
    xs = torch.cat([x, s], -1) if s is not None else x
    return xs, stencil, batch, strict


def _sums(
    u: FieldLike,
    b: VelocityFieldSpec,
    stencil: Stencil,
    xs: Tensor,
    timed: bool,
    *,
    adjoint: bool = False,
    region: Optional[StripGrid] = None,
    options: dict = None,
) -> Tuple[Tensor, Tensor]:
    """
    Stencil sums of the (adjoint) distributional commutator and of the
    matching convolution, for a chunk of `(N, d[+1])` points.

    The sample points are `x + z` (or `x - z` for the adjoint, whose
    samples below the boundary are dropped). With `region`, samples
    outside it are dropped too.
    """
    d = b.dim
    x = xs[:, :d]
    s = xs[:, d] if timed else None
    sign = -1 if adjoint else 1
    y = x[:, None, :] + sign * stencil.offsets
    sy = s[:, None].expand(y.shape[:-1]) if timed else None
    mask = None
    if adjoint:
        mask = y[..., -1] >= -1e-9
    if region is not None:
        inside = region.contains(y)
        mask = inside if mask is None else mask & inside
    if mask is not None:
        # keep samples inside the evaluation domain; values at the
        # dropped points are multiplied by zero
        y = torch.where(mask[..., None], y, x[:, None, :])
    uy = evaluate(u, y, sy if _has_time(u) else None, **(options or {}))
    if mask is not None:
        uy = uy * mask
    by = b(y, sy)
    bx = b(x, s)
    div = b.divergence(y, sy)
    # gradient weights differentiate k(x - y) in x; the adjoint swaps
    # the roles of x and y
    drift = sign * ((by - bx[:, None]) * stencil.gradients).sum(-1)
    value = (uy * (drift - div * stencil.weights)).sum(-1)
    conv = uy @ stencil.weights
    return value, conv


def commutator(
    u: FieldLike,
    b: VelocityFieldSpec,
    eta: float,
    x: Tensor,
    s: Optional[Tensor] = None,
    *,
    method: MethodType = 'distributional',
    nodes_per_eta: int = 32,
    strict: bool = True,
    interpolation='linear',
    chunk: int = 1024,
) -> Tensor:
    """
    Evaluate the commutator $r_\\eta(u, b)(x, s)$.

    Parameters
    ----------
    u : SampledField or callable
        Transported quantity. Callables are called as `u(y, s)` when a
        time is given, `u(y)` otherwise.
    b : VelocityFieldSpec
        Velocity field, with exact divergence.
    eta : float
        Kernel width.
    x : (..., d) tensor
        Evaluation points, with $x_d + \\eta \\leq L$ for sampled `u`.
    s : (...) tensor, optional
        Evaluation times.
    method : {'distributional', 'direct'}
        `'direct'` evaluates $(b \\cdot \\nabla u) * \\hat\\rho -
        b \\cdot \\nabla(u * \\hat\\rho)$ and needs `u.gradient`.

    Returns
    -------
    value : (...) tensor

    Raises
    ------
    DomainError
        If a kernel footprint leaves the strip (or the half-space).
    """
    eta = check_positive('eta', eta)
    if method not in ('distributional', 'direct'):
        raise InvalidParameterError(f'Unknown commutator method "{method}"')
    xs, stencil, batch, strict = _prepare(
        u, b, eta, x, s, strict, nodes_per_eta)
    if b.is_uniform:
        return torch.zeros(batch, dtype=default_dtype)
    timed = s is not None
    options = _options(u, interpolation, strict)

    if method == 'distributional':
        def apply(xs):
            return _sums(u, b, stencil, xs, timed, options=options)[0]
    else:
        if not hasattr(u, 'gradient'):
            raise InvalidParameterError(
                'The direct commutator needs an analytic gradient of u'
            )

        def apply(xs):
            d = b.dim
            x = xs[:, :d]
            t = xs[:, d] if timed else None
            y = x[:, None, :] + stencil.offsets
            ty = t[:, None].expand(y.shape[:-1]) if timed else None
            advected = (b(y, ty) * u.gradient(y, ty)).sum(-1)
            smoothed = evaluate(u, y, ty) @ stencil.gradients
            return advected @ stencil.weights - (b(x, t) * smoothed).sum(-1)

    return chunked(apply, xs, chunk).reshape(batch)


def commutator_sample(
    u: FieldLike,
    b: VelocityFieldSpec,
    eta: float,
    x: Tensor,
    s: float = 0.0,
    method: MethodType = 'distributional',
    **kwargs
) -> CommutatorSample:
    """Evaluate the commutator at a single point and time."""
    x = as_points(x, b.dim)
    value = commutator(u, b, eta, x, s, method=method, **kwargs)
    return CommutatorSample(x, float(s), float(value), method)


def adjoint_commutator(
    v: FieldLike,
    b: VelocityFieldSpec,
    eta: float,
    y: Tensor,
    s: Optional[Tensor] = None,
    *,
    nodes_per_eta: int = 32,
    strict: bool = True,
    interpolation='linear',
    chunk: int = 1024,
) -> Tensor:
    """
    Adjoint commutator, built on the reflected kernel:

    $$
    r^*_\\eta(v, b)(y) = \\int_{x_d > 0} v(x) \\left[(b(y) - b(x)) \\cdot
    \\nabla\\hat\\rho^d_\\eta(x - y) - \\mathrm{div}\\, b(x)\\,
    \\hat\\rho^d_\\eta(x - y)\\right] dx.
    $$

    It satisfies $\\int r_\\eta(u, b)\\,v = \\int r^*_\\eta(v, b)\\,u$
    for solenoidal $b$.
    """
    eta = check_positive('eta', eta)
    xs, stencil, batch, strict = _prepare(
        v, b, eta, y, s, strict, nodes_per_eta)
    timed = s is not None
    options = _options(v, interpolation, strict)

    def apply(xs):
        return _sums(v, b, stencil, xs, timed, adjoint=True,
                     options=options)[0]

    return chunked(apply, xs, chunk).reshape(batch)


def commutator_pairing(
    u: FieldLike,
    v: FieldLike,
    b: VelocityFieldSpec,
    eta: float,
    grid: StripGrid,
    s: Optional[float] = None,
    *,
    divergence_correction: bool = False,
    nodes_per_eta: int = 32,
    interpolation='linear',
    chunk: int = 1024,
) -> Tuple[float, float]:
    """
    Both sides of the interchange identity,

    $$
    \\int (r_\\eta(u, b) - c\\,(u * \\hat\\rho)\\,\\mathrm{div}\\, b)\\,v
    \\quad\\text{and}\\quad
    \\int (r^*_\\eta(v, b) - c\\,(v \\star \\hat\\rho)\\,\\mathrm{div}\\, b)\\,u,
    $$

    with $c = 1$ when `divergence_correction` is set and $0$ otherwise.

    The outer integral runs over the nodes of the admissible sub-strip
    with weights $h^d$. The kernel integral runs over a stencil on a
    strictly finer lattice, so the left side pairs grid nodes $x$ with
    off-grid $y = x + z$ while the right side pairs grid nodes $y$ with
    off-grid $x = y - z$. Both sides share the kernel weights and differ
    only by the error of the outer quadrature. `u` and `v` are taken to
    vanish outside the sub-strip.

    Parameters
    ----------
    grid : StripGrid
        Strip; pairs are restricted to its sub-strip at distance `eta`
        from the artificial faces.
    nodes_per_eta : int
        Minimum number of kernel intervals per kernel width. The kernel
        lattice is refined at least twice with respect to `grid.spacing`.

    Returns
    -------
    lhs, rhs : float
    """
    eta = check_positive('eta', eta)
    if eta < 2 * grid.spacing * (1 - 1e-9):
        raise UnderResolvedKernelError(
            f'Kernel width {eta} resolves fewer than two lattice cells'
        )
    region = grid.subgrid(eta)
    step = min(stencil_step(eta, grid.spacing, nodes_per_eta),
               grid.spacing / 2)
    stencil = half_space_stencil(eta, b.dim, step)
    x = region.coordinates().reshape(-1, b.dim)
    timed = s is not None
    xs = x
    if timed:
        xs = torch.cat([x, torch.full_like(x[:, :1], float(s))], -1)
    options_u = _options(u, interpolation, True)
    options_v = _options(v, interpolation, True)
    su = torch.full_like(x[:, 0], float(s)) if timed else None
    tu = su if _has_time(u) else None
    tv = su if _has_time(v) else None
    ux = evaluate(u, x, tu, **options_u)
    vx = evaluate(v, x, tv, **options_v)
    div = b.divergence(x, su)

    def lhs_fn(xs):
        return torch.stack(_sums(u, b, stencil, xs, timed, region=region,
                                 options=options_u), -1)

    def rhs_fn(xs):
        return torch.stack(_sums(v, b, stencil, xs, timed, adjoint=True,
                                 region=region, options=options_v), -1)

    left = chunked(lhs_fn, xs, chunk)
    right = chunked(rhs_fn, xs, chunk)
    c = 1.0 if divergence_correction else 0.0
    weight = grid.spacing ** b.dim
    lhs = weight * ((left[:, 0] - c * left[:, 1] * div) * vx).sum()
    rhs = weight * ((right[:, 0] - c * right[:, 1] * div) * ux).sum()
    logger.debug('Pairing on %d nodes x %d stencil nodes: %g vs %g',
                 len(x), len(stencil), float(lhs), float(rhs))
    return float(lhs), float(rhs)


def _sample_on(u: FieldLike, grid: StripGrid, s) -> Tensor:
    x = grid.coordinates()
    if isinstance(u, SampledField):
        if u.time is None:
            return u.sample(x)
        return u.sample(x, torch.full(x.shape[:-1], float(s or 0.0),
                                      dtype=default_dtype))
    if s is None:
        return evaluate(u, x)
    return evaluate(u, x, torch.as_tensor(float(s), dtype=default_dtype))


def commutator_convergence(
    u: FieldLike,
    b: VelocityFieldSpec,
    p: float,
    beta: float,
    etas: Sequence[float],
    grid: StripGrid,
    s: Optional[float] = None,
    *,
    nodes_per_eta: int = 32,
    timing: bool = False,
    name: str = 'converge-commutator',
) -> ConvergenceReport:
    """
    Measure $\\lVert r_\\eta(u, b)\\rVert_{L^\\alpha}$ across scales,
    with $1/\\alpha = 1/\\beta + 1/p$, and its ratio to the a priori
    bound $\\lVert u\\rVert_{L^p}\\lVert\\nabla b\\rVert_{L^\\beta}$.

    Every norm is taken over the same admissible sub-strip (at distance
    `max(etas)` from the artificial faces).

    Parameters
    ----------
    u : SampledField or callable
        Transported quantity.
    b : VelocityFieldSpec
        Velocity field.
    p, beta : float
        Exponents, with $\\beta \\geq p'$.
    etas : sequence of float
        Decreasing kernel widths.
    grid : StripGrid
        Quadrature grid.
    s : float, optional
        Time slice.
    timing : bool
        Record wall-clock times (otherwise the column is zero, so that
        reruns are byte-identical).

    Returns
    -------
    report : ConvergenceReport
    """
    alpha = exponent_check(p, beta)
    etas = [check_positive('eta', eta) for eta in etas]
    if any(b_ >= a for a, b_ in zip(etas[:-1], etas[1:])):
        raise InvalidParameterError(f'Expected decreasing etas, got {etas}')
    spacing = u.grid.spacing if isinstance(u, SampledField) else grid.spacing
    if etas[-1] < 2 * spacing * (1 - 1e-9):
        raise UnderResolvedKernelError(
            f'Kernel width {etas[-1]} resolves fewer than two cells of '
            f'spacing {spacing}'
        )
    region = grid.subgrid(max(etas))
    x = region.coordinates()
    u_norm = float(lp_norm(SampledField(grid, _sample_on(u, grid, s)), p))
    grad_norm = sobolev_seminorm(b, beta, grid, s)
    bound = u_norm * grad_norm
    report = ConvergenceReport(
        name=name,
        anchor='commutator converges to zero in L^alpha and is bounded by '
               'C |u|_p |grad b|_beta',
        metadata={
            'field': b.serialize(with_state=False),
            'p': float(p), 'beta': float(beta), 'alpha': alpha,
            'spacing': grid.spacing, 'time': s,
            'u_norm': u_norm, 'grad_norm': grad_norm,
            'q_choice': 'conjugate exponent',
        },
    )
    for eta in etas:
        tic = time.perf_counter()
        times = None if s is None else torch.full(
            x.shape[:-1], float(s), dtype=default_dtype)
        r = commutator(u, b, eta, x, times, nodes_per_eta=nodes_per_eta)
        norm = float(lp_norm(SampledField(region, r), alpha))
        ratio = norm / bound if bound > 0 else 0.0
        toc = time.perf_counter() - tic if timing else 0.0
        report.add_row(eta, norm, ratio, toc)
        logger.info('%s: eta=%g |r|=%.6e ratio=%.4f',
                    name, eta, norm, ratio)
    return report
