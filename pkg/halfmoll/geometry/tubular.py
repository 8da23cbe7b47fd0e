"""
Mollification near a curved boundary in tubular coordinates.

Near $\\partial\\Omega$, points are written $x = \\Lambda^{-1}(\\sigma, s)$
with $\\sigma$ the arc length of the projection and $s$ the depth. The
one-sided kernel is applied in these coordinates,

$$
u_\\eta(x, t) = \\frac{\\iiint u(\\Lambda^{-1}(\\sigma', s'), \\tau)\\,
\\rho_\\eta(\\sigma - \\sigma')\\,\\omega_\\eta(s' - s)\\,
\\omega_\\eta(\\tau - t)\\,J(s')\\,d\\sigma'\\,ds'\\,d\\tau}
{\\iint \\rho_\\eta(\\sigma - \\sigma')\\,\\omega_\\eta(s' - s)\\,
J(s')\\,d\\sigma'\\,ds'},
$$

where $J$ is the area element of the change of variables. With a flat
boundary, $J \\equiv 1$ and the construction reduces to the half-space
convolution.
"""
__all__ = [
    'CurvedTraceResidual',
    'band_integral',
    'cartesian_band_integral',
    'tubular_kernel_mass',
    'cartesian_kernel_mass',
    'tubular_mollify',
    'curved_trace_residual',
]
# stdlib
import math
import logging
from dataclasses import dataclass

# externals
import torch
import numpy as np
from torch import Tensor
from scipy.integrate import dblquad

# internals
from halfmoll.geometry.domains import SmoothDomain2D
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.grid.convolution import check_horizon
from halfmoll.kernels.mollifiers import HalfSpaceKernel, BoundaryTimeKernel
from halfmoll.functional.kernels import eval_symmetric, eval_one_sided
from halfmoll.fields.base import VelocityFieldSpec
from halfmoll.core.typing import Callable, Optional, Union, List, Tuple
from halfmoll.core.utils import default_dtype, as_points, check_positive, \
    chunked
from halfmoll.core.errors import (
    DomainError, ScaleTooCoarseError, DimensionError, OutOfHorizonError
)

logger = logging.getLogger(__name__)

FieldLike = Union[SampledField, Callable]


@dataclass
class CurvedTraceResidual:
    """
    Attributes
    ----------
    pieces : list[tuple[int, tensor, tensor]]
        For each boundary piece: its index, the arc length nodes `(n,)`
        and the residual `(n, nt)` (zero outside the time window).
    times : tensor
        Time nodes.
    norm : float
        $L^1$ norm over the boundary and the time window.
    window : tuple[float, float]
        Time window.
    """
    pieces: List[Tuple[int, Tensor, Tensor]]
    times: Tensor
    norm: float
    window: tuple


# ----------------------------------------------------------------------
#   change of variables
# ----------------------------------------------------------------------


def _check_depth(domain: SmoothDomain2D, depth: Optional[float]) -> float:
    depth = 2 * domain.delta if depth is None else float(depth)
    if not (0 < depth <= 2 * domain.delta + 1e-12):
        raise DomainError(
            f'Band depth {depth} exceeds the tubular width {2 * domain.delta}')
    return depth


def band_integral(
    domain: SmoothDomain2D,
    f: Callable[[Tensor], Tensor],
    depth: Optional[float] = None,
    *,
    nb_arc: int = 512,
    nb_depth: int = 64,
) -> float:
    """
    $\\int_{\\partial\\Omega} \\int_0^{depth} f(\\Lambda^{-1}(\\sigma, s))
    \\,J(s)\\,ds\\,d\\sigma$.

    Circles use the periodic trapezoidal rule in arc length; the
    straight boundary and the depth use Gauss-Legendre nodes.

    Parameters
    ----------
    domain : SmoothDomain2D
        Domain.
    f : callable
        Integrand `f(x)` on `(..., 2)` points.
    depth : float, optional
        Band depth (default $2\\delta$).
    """
    depth = _check_depth(domain, depth)
    nodes, weights = np.polynomial.legendre.leggauss(nb_depth)
    s = torch.as_tensor((nodes + 1) * depth / 2, dtype=default_dtype)
    ws = torch.as_tensor(weights * depth / 2, dtype=default_dtype)
    total = 0.0
    for piece in range(domain.nb_pieces):
        length = domain.piece_length(piece)
        if domain.periodic:
            sigma = torch.arange(nb_arc, dtype=default_dtype) * length / nb_arc
            wa = torch.full([nb_arc], length / nb_arc, dtype=default_dtype)
        else:
            nodes_a, weights_a = np.polynomial.legendre.leggauss(nb_arc)
            sigma = torch.as_tensor(nodes_a * domain.extent,
                                    dtype=default_dtype)
            wa = torch.as_tensor(weights_a * domain.extent,
                                 dtype=default_dtype)
        y = domain.from_tubular(sigma[:, None], s[None, :], piece)
        jac = domain.jacobian_at(s, piece)
        values = torch.as_tensor(f(y), dtype=default_dtype)
        total += float(torch.einsum('as,a,s->', values, wa, ws * jac))
    return total


def _annular_pieces(a: float, b: float):
    # x-ranges and y-limits (upper half) of the ring a <= r <= b
    def top(r):
        return lambda x: math.sqrt(max(r * r - x * x, 0.0))
    pieces = [(-b, -a, None, top(b)), (a, b, None, top(b))]
    pieces.append((-a, a, top(a), top(b)))
    return pieces


def cartesian_band_integral(
    domain: SmoothDomain2D,
    f: Callable[[Tensor], Tensor],
    depth: Optional[float] = None,
    *,
    epsabs: float = 1e-12,
    epsrel: float = 1e-10,
) -> float:
    """
    The same band integral as
    [`band_integral`][halfmoll.geometry.tubular.band_integral], by
    adaptive quadrature in Cartesian coordinates.
    """
    depth = _check_depth(domain, depth)

    def scalar(y, x):
        point = torch.as_tensor([x, y], dtype=default_dtype)
        return float(f(point))

    options = dict(epsabs=epsabs, epsrel=epsrel)
    if domain.kind == 'half_plane':
        value, _ = dblquad(scalar, -domain.extent, domain.extent,
                           0.0, depth, **options)
        return value
    rings = [(domain.radius - depth, domain.radius)]
    if domain.kind == 'annulus':
        rings.append((domain.inner_radius, domain.inner_radius + depth))
    cx, cy = domain.center.tolist()
    total = 0.0
    for a, b in rings:
        for x0, x1, lower, upper in _annular_pieces(a, b):
            for sign in (1.0, -1.0):
                # upper and lower halves of the ring
                def g(y, x, sign=sign):
                    return scalar(cy + sign * y, cx + x)
                value, _ = dblquad(
                    g, x0, x1, lower or (lambda x: 0.0), upper, **options)
                total += value
    return total


# ----------------------------------------------------------------------
#   mollification
# ----------------------------------------------------------------------


def _check_scale(domain: SmoothDomain2D, eta: float) -> float:
    eta = check_positive('eta', eta)
    if eta >= domain.delta:
        raise ScaleTooCoarseError(
            f'Kernel width {eta} must be smaller than the tubular width '
            f'{domain.delta}'
        )
    return eta


def _check_points(domain: SmoothDomain2D, x: Tensor, eta: float) -> None:
    d = domain.signed_distance(x)
    if (d > 1e-9).any():
        raise DomainError('Evaluation point outside the domain')
    if (-d + eta >= 2 * domain.delta).any():
        raise DomainError(
            f'Kernel footprint of width {eta} leaves the tubular band')


def _tubular_stencil(domain, x, eta, spacing, nodes_per_eta):
    # sample points (N, Q, 2) and Jacobian-weighted weights (N, Q)
    stencil = HalfSpaceKernel(2, eta).stencil(spacing, nodes_per_eta)
    sigma, depth, piece = domain.to_tubular(x)
    a, b = stencil.offsets[:, 0], stencil.offsets[:, 1]
    y = domain.from_tubular(sigma[:, None] + a, depth[:, None] + b,
                            piece[:, None])
    jac = domain.jacobian_at(depth[:, None] + b, piece[:, None])
    return y, stencil.weights * jac


def tubular_kernel_mass(
    domain: SmoothDomain2D,
    eta: float,
    x: Tensor,
    *,
    spacing: Optional[float] = None,
    nodes_per_eta: int = 32,
) -> Tensor:
    """
    Discrete mass $\\iint \\rho_\\eta\\,\\omega_\\eta\\,J$ of the
    tubular kernel at points `x`, `(...)`.
    """
    eta = _check_scale(domain, eta)
    x = as_points(x, 2)
    _check_points(domain, x, eta)
    batch = x.shape[:-1]
    _, weights = _tubular_stencil(domain, x.reshape(-1, 2), eta, spacing,
                                  nodes_per_eta)
    return weights.sum(-1).reshape(batch)


def cartesian_kernel_mass(
    domain: SmoothDomain2D,
    eta: float,
    x: Tensor,
    *,
    epsabs: float = 1e-12,
    epsrel: float = 1e-10,
) -> float:
    """
    Mass of the tubular kernel at a single point `x`, by adaptive
    Cartesian quadrature of
    $\\rho_\\eta(\\sigma(y) - \\sigma(x))\\,\\omega_\\eta(s(y) - s(x))$.
    """
    eta = _check_scale(domain, eta)
    x = as_points(x, 2).reshape(2)
    sigma_x, depth_x, _ = domain.to_tubular(x)
    period = domain.piece_length(int(domain.piece_of(x)))

    def kernel(y1, y0):
        y = torch.as_tensor([y0, y1], dtype=default_dtype)
        sigma, depth, _ = domain.to_tubular(y)
        gap = sigma - sigma_x
        if domain.periodic:
            gap = torch.remainder(gap + period / 2, period) - period / 2
        return float(eval_symmetric(gap, eta) *
                     eval_one_sided(depth - depth_x, eta))

    x0, x1 = x.tolist()
    value, _ = dblquad(kernel, x0 - 2 * eta, x0 + 2 * eta,
                       x1 - 2 * eta, x1 + 2 * eta,
                       epsabs=epsabs, epsrel=epsrel)
    return value


def tubular_mollify(
    u: FieldLike,
    eta: float,
    x: Tensor,
    t: Optional[Tensor] = None,
    *,
    domain: SmoothDomain2D,
    nodes_per_eta: int = 32,
    interpolation='linear',
    strict: bool = True,
    chunk: int = 1024,
) -> Tensor:
    """
    One-sided mollification in tubular coordinates, normalized by the
    discrete kernel mass so that constants are reproduced.

    Parameters
    ----------
    u : SampledField or callable
        Source, on a strip grid covering the band. Sampled fields with a
        time axis (and callables when `t` is given) are also mollified
        forward in time.
    eta : float
        Kernel width, smaller than `domain.delta`.
    x : (..., 2) tensor
        Points in the domain with $-d(x) + \\eta < 2\\delta$.
    t : (...) tensor, optional
        Times.
    domain : SmoothDomain2D
        Domain.

    Returns
    -------
    value : (...) tensor

    Raises
    ------
    ScaleTooCoarseError
        If $\\eta \\geq \\delta$.
    DomainError
        If a point is outside the domain or too deep.
    """
    eta = _check_scale(domain, eta)
    x = as_points(x, 2)
    _check_points(domain, x, eta)
    sampled = isinstance(u, SampledField)
    spacing = u.grid.spacing if sampled else None
    timed = (u.time is not None) if sampled else t is not None
    kernel = HalfSpaceKernel(2, eta)
    tau = weights_t = None
    if timed:
        if t is None:
            raise DimensionError('Space-time source: pass `t`')
        t = torch.as_tensor(t, dtype=default_dtype)
        x, t = torch.broadcast_tensors(x, t[..., None])
        t = t[..., 0]
        if sampled:
            check_horizon(u.time.horizon, t, eta)
        stencil_t = kernel.time_stencil(u.time.step if sampled else None,
                                        nodes_per_eta)
        tau, weights_t = stencil_t.offsets[:, 0], stencil_t.weights
    batch = x.shape[:-1]
    flat = x.reshape(-1, 2)
    if timed:
        flat = torch.cat([flat, t.reshape(-1, 1)], -1)
    options = dict(interpolation=interpolation, strict=strict) \
        if sampled else {}

    def apply(xt):
        y, w = _tubular_stencil(domain, xt[:, :2], eta, spacing,
                                nodes_per_eta)
        if not timed:
            values = evaluate(u, y, **options)
            return (values * w).sum(-1) / w.sum(-1)
        total = 0.0
        for k in range(len(tau)):
            s = (xt[:, 2] + tau[k])[:, None].expand(y.shape[:-1])
            values = evaluate(u, y, s, **options)
            total = total + weights_t[k] * (values * w).sum(-1)
        return total / w.sum(-1)

    return chunked(apply, flat, chunk).reshape(batch)


def _window(times: Tensor, horizon: float, eta: float, stride: int):
    keep = (times >= eta - 1e-9) & (times <= horizon - eta + 1e-9)
    first = int(keep.nonzero()[0]) if keep.any() else 0
    keep &= (torch.arange(len(times)) - first) % int(stride) == 0
    if not keep.any():
        raise OutOfHorizonError(
            f'No time node t with {eta} <= t <= T - {eta} (T = {horizon})')
    return keep


def curved_trace_residual(
    u: SampledField,
    b: VelocityFieldSpec,
    h: FieldLike,
    eta: float,
    domain: SmoothDomain2D,
    *,
    spacing: Optional[float] = None,
    stride: int = 1,
    nodes_per_eta: int = 32,
    interpolation='linear',
) -> CurvedTraceResidual:
    """
    Boundary residual
    $u_\\eta(b \\cdot \\nu) - (h\\,(b \\cdot \\nu)) * \\tilde\\rho_\\eta$
    on a curved boundary, the boundary convolution being taken along
    arc length.

    Parameters
    ----------
    u : SampledField
        Space-time samples of a solution on a strip covering the domain.
    b : VelocityFieldSpec
        Velocity field.
    h : callable
        Boundary data `h(x, t)`.
    eta : float
        Kernel width, smaller than `domain.delta`.
    domain : SmoothDomain2D
        Domain.
    spacing : float, optional
        Arc length between boundary nodes (default: grid spacing).
    stride : int
        Only evaluate every `stride`-th time node of the window.

    Returns
    -------
    residual : CurvedTraceResidual
    """
    eta = _check_scale(domain, eta)
    if u.time is None or u.is_boundary:
        raise DimensionError('Expected space-time samples on the strip')
    times = u.time.nodes()
    keep = _window(times, u.time.horizon, eta, stride)
    spacing = spacing or u.grid.spacing
    stencil = BoundaryTimeKernel(2, eta).stencil(None, None, nodes_per_eta)
    z, tau = stencil.offsets[:, 0], stencil.offsets[:, 1]

    def flux(points, s):
        return evaluate(h, points, s) * (
            b(points, s) * domain.normal(points)).sum(-1)

    pieces, norm_t = [], torch.zeros(len(times), dtype=default_dtype)
    for piece, sigma in domain.boundary_nodes(spacing):
        if not domain.periodic:
            sigma = sigma[sigma.abs() <= domain.extent - eta + 1e-9]
        points = domain.from_tubular(sigma, torch.zeros_like(sigma), piece)
        values = torch.zeros(len(sigma), len(times), dtype=default_dtype)
        shifted = domain.from_tubular(sigma[:, None] + z,
                                      torch.zeros_like(z), piece)
        for k in keep.nonzero()[:, 0].tolist():
            tk = torch.full_like(sigma, float(times[k]))
            lhs = tubular_mollify(
                u, eta, points, tk, domain=domain,
                nodes_per_eta=nodes_per_eta, interpolation=interpolation)
            lhs = lhs * (b(points, tk) * domain.normal(points)).sum(-1)
            s = (tk[:, None] + tau).expand(shifted.shape[:-1])
            rhs = (flux(shifted, s) * stencil.weights).sum(-1)
            values[:, k] = lhs - rhs
        if domain.periodic:
            spatial = values.abs().sum(0) * (domain.piece_length(piece)
                                            / len(sigma))
        else:
            spatial = torch.trapezoid(values.abs(), sigma, dim=0)
        norm_t += spatial
        pieces.append((piece, sigma, values))
    t_keep = times[keep]
    norm = torch.trapezoid(norm_t[keep], t_keep) if keep.sum() > 1 \
        else norm_t[keep].sum() * u.time.step
    window = (float(t_keep[0]), float(t_keep[-1]))
    logger.debug('Curved trace residual: %g on %s', float(norm), window)
    return CurvedTraceResidual(pieces, times, float(norm), window)
