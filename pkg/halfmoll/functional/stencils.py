"""
Quadrature stencils for mollification sums.

A stencil is a set of offsets `z` and weights `w` such that a kernel
integral is approximated by `sum_q f(x + z_q) w_q`. Nodes are laid on a
uniform lattice of step `step` (a divisor of the grid spacing when the
integrand is sampled), the kernel is evaluated at each node, and the
weights are normalized to sum to one so that constants are reproduced
exactly. Bump kernels are flat to all orders at the ends of their
support, so this rule converges faster than any power of `step`.

Gradient weights are corrected so that summation against them is
integration by parts for every polynomial up to `MOMENT_DEGREE`: the
discrete derivative of a linear function is exact, and so is the
discrete commutator of two linear functions.
"""
__all__ = [
    'Stencil',
    'stencil_step',
    'symmetric_nodes',
    'one_sided_nodes',
    'half_space_stencil',
    'time_stencil',
    'boundary_time_stencil',
]
# stdlib
import math
import itertools
from dataclasses import dataclass
from functools import lru_cache

# externals
import torch
from torch import Tensor

# internals
from halfmoll.core.utils import default_dtype, check_positive
from halfmoll.core.typing import Optional
from halfmoll.functional.kernels import (
    eval_symmetric,
    eval_one_sided,
    one_sided_derivative,
    eval_half_space_kernel,
    kernel_gradient,
)


@dataclass(frozen=True)
class Stencil:
    """
    Attributes
    ----------
    offsets : (Q, n) tensor
        Sample offsets, added to the evaluation point.
    weights : (Q,) tensor
        Normalized kernel weights (sum to one).
    gradients : (Q, n) tensor, optional
        Weights of the derivative of the kernel with respect to the
        evaluation point, normalized consistently with `weights`.
        They sum to zero exactly.
    step : float
        Lattice step of the offsets.
    """
    offsets: Tensor
    weights: Tensor
    gradients: Optional[Tensor]
    step: float

    def __len__(self):
        return len(self.weights)


def stencil_step(
    eta: float,
    spacing: Optional[float] = None,
    nodes_per_eta: int = 32,
) -> float:
    """
    Choose the lattice step of a stencil.

    Parameters
    ----------
    eta : float
        Kernel width.
    spacing : float, optional
        Grid spacing of the sampled integrand. If provided, the step is
        `spacing / r` for the smallest integer `r` that gives at least
        `nodes_per_eta` intervals per kernel width, so that stencil
        nodes sit on the grid (or on a regular refinement of it).
    nodes_per_eta : int
        Minimum number of intervals per kernel width.

    Returns
    -------
    step : float
    """
    eta = check_positive('eta', eta)
    if spacing is None:
        return eta / nodes_per_eta
    spacing = check_positive('spacing', spacing)
    refine = max(1, math.ceil(spacing * nodes_per_eta / eta - 1e-9))
    return spacing / refine


def _nb_intervals(eta: float, step: float) -> int:
    return int(math.floor(eta / step + 1e-9))


def symmetric_nodes(eta: float, step: float) -> Tensor:
    """Nodes `j * step` for `|j * step| <= eta`."""
    n = _nb_intervals(eta, step)
    return torch.arange(-n, n + 1, dtype=default_dtype) * step


def one_sided_nodes(eta: float, step: float) -> Tensor:
    """Nodes `j * step` for `0 <= j * step <= eta`."""
    n = _nb_intervals(eta, step)
    return torch.arange(0, n + 1, dtype=default_dtype) * step


MOMENT_DEGREE = 6
"""Polynomial degree up to which gradient weights are made consistent."""


def _exponents(dim: int, degree: int) -> Tensor:
    exponents = [
        e for e in itertools.product(range(degree + 1), repeat=dim)
        if sum(e) <= degree
    ]
    return torch.as_tensor(exponents, dtype=torch.long)


def _match_moments(offsets, weights, gradients):
    # Add `weights * poly(z)` to the gradient weights so that, for every
    # polynomial P of degree <= MOMENT_DEGREE,
    #     sum_q P(z_q) g_q = sum_q grad P(z_q) w_q
    # i.e. summation by parts holds against the discrete kernel.
    dim = offsets.shape[-1]
    nb_values = min(len(torch.unique(offsets[:, i])) for i in range(dim))
    degree = min(MOMENT_DEGREE, nb_values - 1)
    center = weights @ offsets
    scale = (weights @ (offsets - center).square()).sqrt()
    if degree == 0 or not bool((scale > 0).all()):
        return gradients - weights[:, None] * gradients.sum(0)
    zeta = (offsets - center) / scale
    exponents = _exponents(dim, degree)
    powers = zeta[..., None] ** torch.arange(degree + 1, dtype=default_dtype)
    factors = [powers[:, i, exponents[:, i]] for i in range(dim)]
    basis = math.prod(factors)
    targets = []
    for i in range(dim):
        lowered = powers[:, i, (exponents[:, i] - 1).clamp_min(0)]
        lowered = exponents[:, i] * lowered
        derivative = math.prod(factors[:i] + [lowered] + factors[i + 1:])
        targets.append(weights @ derivative / scale[i])
    targets = torch.stack(targets, -1)
    gram = basis.T @ (weights[:, None] * basis)
    coeffs = torch.linalg.solve(gram, targets - basis.T @ gradients)
    return gradients + weights[:, None] * (basis @ coeffs)


def _normalize(offsets, weights, gradients, step):
    mass = weights.sum()
    weights = weights / mass
    if gradients is not None:
        gradients = _match_moments(offsets, weights, gradients / mass)
    return Stencil(offsets, weights, gradients, step)


@lru_cache(maxsize=64)
def half_space_stencil(eta: float, dim: int, step: float) -> Stencil:
    """
    Stencil of the half-space mollification
    $\\int u(y)\\hat\\rho^d_\\eta(x - y)\\,dy$.

    Offsets are `z = y - x`, with tangential components in
    $[-\\eta, \\eta]$ and normal component in $[0, \\eta]$: the sum
    only ever looks into the interior, never below $x_d$.

    Parameters
    ----------
    eta : float
        Kernel width.
    dim : int
        Space dimension.
    step : float
        Lattice step (see [`stencil_step`][halfmoll.functional.stencils.stencil_step]).
    """  # noqa: E501
    axes = [symmetric_nodes(eta, step)] * (dim - 1)
    axes += [one_sided_nodes(eta, step)]
    grid = torch.meshgrid(*axes, indexing='ij')
    offsets = torch.stack([g.reshape(-1) for g in grid], -1)
    weights = eval_half_space_kernel(-offsets, eta, dim)
    gradients = kernel_gradient(-offsets, eta, dim)
    keep = weights > 0
    return _normalize(offsets[keep], weights[keep], gradients[keep], step)


@lru_cache(maxsize=64)
def time_stencil(eta: float, step: float) -> Stencil:
    """
    Stencil of the forward time mollification
    $\\int u(s)\\omega_\\eta(s - t)\\,ds$.

    Offsets are `tau = s - t` in $[0, \\eta]$; `gradients` holds the
    weights of the derivative with respect to `t`.
    """
    tau = one_sided_nodes(eta, step)
    weights = eval_one_sided(tau, eta)
    gradients = -one_sided_derivative(tau, eta)
    keep = weights > 0
    return _normalize(
        tau[keep, None], weights[keep], gradients[keep, None], step
    )


@lru_cache(maxsize=64)
def boundary_time_stencil(
    eta: float, dim: int, step: float, time_step: float
) -> Stencil:
    """
    Stencil of the boundary space-time mollification
    $\\int\\int g(y', s)\\tilde\\rho^d_\\eta(x' - y', t - s)\\,dy'\\,ds$.

    Offsets are `(z', tau)`, with `z'` in $[-\\eta, \\eta]^{d-1}$ and
    `tau = s - t` in $[0, \\eta]$. The last column holds `tau`.
    """
    axes = [symmetric_nodes(eta, step)] * (dim - 1)
    axes += [one_sided_nodes(eta, time_step)]
    grid = torch.meshgrid(*axes, indexing='ij')
    offsets = torch.stack([g.reshape(-1) for g in grid], -1)
    weights = eval_one_sided(offsets[:, -1], eta)
    for i in range(dim - 1):
        weights = weights * eval_symmetric(offsets[:, i], eta)
    keep = weights > 0
    return _normalize(offsets[keep], weights[keep], None, step)
