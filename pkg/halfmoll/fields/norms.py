"""
Norms, traces and exponent bookkeeping for velocity fields.
"""
__all__ = [
    'conjugate_exponent',
    'exponent_check',
    'sobolev_seminorm',
    'normal_trace',
    'sup_norm',
    'divergence_sup',
    'gradient_defect',
    'divergence_defect',
]
# stdlib
import math
import logging

# externals
import torch
from torch import Tensor

# internals
from halfmoll.fields.base import VelocityFieldSpec
from halfmoll.grid.grids import StripGrid
from halfmoll.grid.fields import SampledField
from halfmoll.grid.quadrature import lp_norm
from halfmoll.core.typing import Optional
from halfmoll.core.utils import default_dtype
from halfmoll.core.errors import (
    InvalidParameterError, HypothesisViolationError
)

logger = logging.getLogger(__name__)


def conjugate_exponent(p: float) -> float:
    """$p'$ such that $1/p + 1/p' = 1$ (`inf` for `p == 1`)."""
    p = float(p)
    if p < 1:
        raise InvalidParameterError(f'Expected p >= 1, got {p}')
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def exponent_check(p: float, beta: float) -> float:
    """
    Commutator exponent $\\alpha$ with $1/\\alpha = 1/\\beta + 1/p$.

    Parameters
    ----------
    p : float
        Integrability of the transported quantity, $p \\geq 1$.
    beta : float
        Integrability of $\\nabla b$, $\\beta \\geq p'$.

    Returns
    -------
    alpha : float
        Always $\\geq 1$ when the hypotheses hold.

    Raises
    ------
    InvalidParameterError
        If `p < 1`.
    HypothesisViolationError
        If `beta < p'`.
    """
    p, beta = float(p), float(beta)
    conjugate = conjugate_exponent(p)
    if beta < conjugate * (1 - 1e-12):
        raise HypothesisViolationError(
            f'Commutator estimate needs beta >= p\' = {conjugate}, '
            f'got beta = {beta} (p = {p})'
        )
    alpha = 1 / (1 / beta + 1 / p)
    return alpha


def _times(times) -> list:
    if times is None:
        return [None]
    return list(torch.as_tensor(times, dtype=default_dtype).reshape(-1))


def sobolev_seminorm(
    b: VelocityFieldSpec,
    beta: float,
    grid: StripGrid,
    t: Optional[Tensor] = None,
) -> float:
    """
    $\\lVert \\nabla b(\\cdot, t) \\rVert_{L^\\beta}$ over the strip, with
    the pointwise Euclidean (Frobenius) matrix norm.

    Parameters
    ----------
    b : VelocityFieldSpec
        Velocity field.
    beta : float
        Exponent, $\\beta \\geq 1$ (`inf` gives the maximum over nodes).
    grid : StripGrid
        Quadrature grid.
    t : float, optional
        Time (default 0).

    Returns
    -------
    seminorm : float
    """
    beta = float(beta)
    if beta < 1:
        raise InvalidParameterError(f'Expected beta >= 1, got {beta}')
    if b.is_uniform:
        return 0.0
    x = grid.coordinates()
    tt = None if t is None else torch.full(x.shape[:-1], float(t),
                                           dtype=default_dtype)
    norm = b.gradient(x, tt).square().sum((-1, -2)).sqrt()
    if math.isinf(beta):
        return float(norm.max())
    return float(lp_norm(SampledField(grid, norm), beta))


def normal_trace(
    b: VelocityFieldSpec, x: Tensor, t: Optional[Tensor] = None
) -> Tensor:
    """
    $b \\cdot \\nu$ on the flat boundary, with outward normal
    $\\nu = -e_d$. Negative values mark inflow.

    Parameters
    ----------
    x : (..., d) tensor
        Boundary points (the last coordinate is forced to 0).
    t : (...) tensor, optional
        Times.

    Returns
    -------
    trace : (...) tensor
    """
    x = b._points(x).clone()
    x[..., -1] = 0
    return -b(x, t)[..., -1]


def sup_norm(
    b: VelocityFieldSpec, grid: StripGrid, times: Optional[Tensor] = None
) -> float:
    """$\\max |b|$ over the grid nodes (and time nodes)."""
    if b.is_uniform and b.autonomous:
        return float(b(torch.zeros([b.dim], dtype=default_dtype)).norm())
    x = grid.coordinates()
    return max(float(b(x, t).norm(dim=-1).max()) for t in _times(times))


def divergence_sup(
    b: VelocityFieldSpec, grid: StripGrid, times: Optional[Tensor] = None
) -> float:
    """$\\max |\\mathrm{div}\\, b|$ over the grid nodes (and time nodes)."""
    if b.is_uniform:
        return 0.0
    x = grid.coordinates()
    return max(float(b.divergence(x, t).abs().max()) for t in _times(times))


def gradient_defect(
    b: VelocityFieldSpec,
    x: Tensor,
    t: Optional[Tensor] = None,
    step: float = 1e-6,
) -> float:
    """
    Largest relative gap between the analytic gradient and central
    finite differences of the components at points `x`.
    """
    x = b._points(x)
    grad = b.gradient(x, t)
    columns = []
    for j in range(b.dim):
        e = torch.zeros(b.dim, dtype=default_dtype)
        e[j] = step
        columns.append((b(x + e, t) - b(x - e, t)) / (2 * step))
    approx = torch.stack(columns, -1)
    scale = grad.abs().amax((-1, -2)).clamp_min(1.0)
    defect = (approx - grad).abs().amax((-1, -2)) / scale
    return float(defect.max())


def divergence_defect(
    b: VelocityFieldSpec, x: Tensor, t: Optional[Tensor] = None
) -> float:
    """$\\max |\\mathrm{div}\\, b - \\mathrm{tr}\\,\\nabla b|$ at points `x`."""
    x = b._points(x)
    trace = b.gradient(x, t).diagonal(0, -2, -1).sum(-1)
    return float((b.divergence(x, t) - trace).abs().max())
