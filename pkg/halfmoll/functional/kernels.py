"""
Closed-form mollifier profiles and their derivatives.

The symmetric profile is the standard bump

$$\\rho(x) = C_\\rho \\exp\\left(-\\frac{1}{1 - x^2}\\right), \\quad |x| < 1,$$

and the one-sided profile is

$$\\omega(x) = C_\\omega \\exp\\left(\\frac{1}{4(x - 1/2)^2 - 1}\\right),
\\quad 0 < x < 1.$$

Both vanish identically (exactly `0.0`) outside their open support.
Scaled versions are `(1/eta) * profile(x / eta)`.
"""
__all__ = [
    'symmetric_normalization',
    'one_sided_normalization',
    'eval_symmetric',
    'eval_one_sided',
    'symmetric_derivative',
    'one_sided_derivative',
    'eval_half_space_kernel',
    'kernel_gradient',
    'eval_boundary_time_kernel',
    'moment',
]
# stdlib
import math
from functools import lru_cache

# externals
import torch
from torch import Tensor
from scipy.integrate import quad

# internals
from halfmoll.core.utils import default_dtype, as_points, check_positive
from halfmoll.core.errors import InvalidParameterError
from halfmoll.core.typing import ScalarLike, PointLike


def _bump(x: Tensor) -> Tensor:
    inside = x.abs() < 1
    xs = torch.where(inside, x, torch.zeros_like(x))
    value = torch.exp(-1 / (1 - xs * xs))
    return torch.where(inside, value, torch.zeros_like(x))


def _bump_derivative(x: Tensor) -> Tensor:
    inside = x.abs() < 1
    xs = torch.where(inside, x, torch.zeros_like(x))
    den = 1 - xs * xs
    value = torch.exp(-1 / den) * (-2 * xs / (den * den))
    return torch.where(inside, value, torch.zeros_like(x))


def _one_sided_bump(x: Tensor) -> Tensor:
    inside = (x > 0) & (x < 1)
    xs = torch.where(inside, x, torch.full_like(x, 0.5))
    q = 4 * (xs - 0.5) ** 2 - 1
    value = torch.exp(1 / q)
    return torch.where(inside, value, torch.zeros_like(x))


def _one_sided_bump_derivative(x: Tensor) -> Tensor:
    # flat to all orders at 0 and 1, so the derivative is 0 there
    inside = (x > 0) & (x < 1)
    xs = torch.where(inside, x, torch.full_like(x, 0.5))
    q = 4 * (xs - 0.5) ** 2 - 1
    value = torch.exp(1 / q) * (-8 * (xs - 0.5) / (q * q))
    return torch.where(inside, value, torch.zeros_like(x))


def _scalar_bump(x: float) -> float:
    return math.exp(-1 / (1 - x * x)) if abs(x) < 1 else 0.0


def _scalar_one_sided_bump(x: float) -> float:
    return math.exp(1 / (4 * (x - 0.5) ** 2 - 1)) if 0 < x < 1 else 0.0


@lru_cache
def symmetric_normalization() -> float:
    """Constant $C_\\rho$ such that $\\int \\rho = 1$."""
    mass, _ = quad(
        _scalar_bump, -1, 1,
        epsabs=1e-14, epsrel=1e-13, limit=200,
    )
    return 1 / mass


@lru_cache
def one_sided_normalization() -> float:
    """Constant $C_\\omega$ such that $\\int \\omega = 1$ ($\\approx 4.50$)."""
    mass, _ = quad(
        _scalar_one_sided_bump, 0, 1,
        epsabs=1e-14, epsrel=1e-13, limit=200,
    )
    return 1 / mass


def _as_tensor(x: ScalarLike) -> Tensor:
    return torch.as_tensor(x, dtype=default_dtype)


def eval_symmetric(x: ScalarLike, eta: float = 1.0) -> Tensor:
    """
    Evaluate the scaled symmetric mollifier $\\rho_\\eta$.

    Parameters
    ----------
    x : float or tensor
        Evaluation point(s).
    eta : float
        Kernel width. Support is $[-\\eta, \\eta]$.

    Returns
    -------
    value : tensor
        $(1/\\eta)\\rho(x/\\eta)$, exactly zero outside the support.
    """
    eta = check_positive('eta', eta)
    x = _as_tensor(x)
    return symmetric_normalization() * _bump(x / eta) / eta


def eval_one_sided(x: ScalarLike, eta: float = 1.0) -> Tensor:
    """
    Evaluate the scaled one-sided mollifier $\\omega_\\eta$.

    Parameters
    ----------
    x : float or tensor
        Evaluation point(s).
    eta : float
        Kernel width. Support is $[0, \\eta]$.

    Returns
    -------
    value : tensor
        $(1/\\eta)\\omega(x/\\eta)$, exactly zero for $x \\le 0$ or
        $x \\ge \\eta$.
    """
    eta = check_positive('eta', eta)
    x = _as_tensor(x)
    return one_sided_normalization() * _one_sided_bump(x / eta) / eta


def symmetric_derivative(x: ScalarLike, eta: float = 1.0) -> Tensor:
    """Derivative of [`eval_symmetric`][halfmoll.functional.kernels.eval_symmetric] with respect to `x`."""  # noqa: E501
    eta = check_positive('eta', eta)
    x = _as_tensor(x)
    return symmetric_normalization() * _bump_derivative(x / eta) / (eta * eta)


def one_sided_derivative(x: ScalarLike, eta: float = 1.0) -> Tensor:
    """Derivative of [`eval_one_sided`][halfmoll.functional.kernels.eval_one_sided] with respect to `x`."""  # noqa: E501
    eta = check_positive('eta', eta)
    x = _as_tensor(x)
    return (
        one_sided_normalization() * _one_sided_bump_derivative(x / eta)
        / (eta * eta)
    )


def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 1:
        raise InvalidParameterError(f'Expected dimension d >= 1, got {dim}')
    return int(dim)


def eval_half_space_kernel(x: PointLike, eta: float, dim: int) -> Tensor:
    """
    Evaluate the half-space kernel
    $\\hat\\rho^d_\\eta(x) = \\rho^{(d-1)}_\\eta(x')\\,\\omega_\\eta(-x_d)$.

    Parameters
    ----------
    x : (..., d) tensor
        Evaluation point(s). For `d == 1`, scalars are accepted.
    eta : float
        Kernel width.
    dim : int
        Space dimension `d >= 1`.

    Returns
    -------
    value : (...) tensor
        Zero whenever $x_d > 0$ or $x_d < -\\eta$.
    """
    dim = _check_dim(dim)
    x = as_points(x, dim)
    value = eval_one_sided(-x[..., -1], eta)
    for i in range(dim - 1):
        value = value * eval_symmetric(x[..., i], eta)
    return value


def kernel_gradient(x: PointLike, eta: float, dim: int) -> Tensor:
    """
    Analytic gradient of the half-space kernel.

    Parameters
    ----------
    x : (..., d) tensor
        Evaluation point(s).
    eta : float
        Kernel width.
    dim : int
        Space dimension.

    Returns
    -------
    gradient : (..., d) tensor
    """
    dim = _check_dim(dim)
    x = as_points(x, dim)
    tangential = [eval_symmetric(x[..., i], eta) for i in range(dim - 1)]
    tangential_dx = [symmetric_derivative(x[..., i], eta)
                     for i in range(dim - 1)]
    normal = eval_one_sided(-x[..., -1], eta)
    normal_dx = -one_sided_derivative(-x[..., -1], eta)
    grad = []
    for i in range(dim - 1):
        g = tangential_dx[i] * normal
        for j in range(dim - 1):
            if j != i:
                g = g * tangential[j]
        grad.append(g)
    g = normal_dx
    for j in range(dim - 1):
        g = g * tangential[j]
    grad.append(g)
    return torch.stack(grad, -1)


def eval_boundary_time_kernel(
    x: PointLike, t: ScalarLike, eta: float, dim: int
) -> Tensor:
    """
    Evaluate the boundary space-time kernel
    $\\tilde\\rho^d_\\eta(x', t) = \\rho^{(d-1)}_\\eta(x')\\,\\omega_\\eta(-t)$.

    Parameters
    ----------
    x : (..., d-1) tensor
        Tangential coordinates (ignored when `d == 1`).
    t : (...) tensor
        Time offset.
    """
    dim = _check_dim(dim)
    value = eval_one_sided(-_as_tensor(t), eta)
    if dim > 1:
        x = as_points(x, dim - 1)
        for i in range(dim - 1):
            value = value * eval_symmetric(x[..., i], eta)
    return value


@lru_cache
def moment(k: int) -> float:
    """
    Moment $m_k = \\int_0^1 z^k \\omega(z)\\,dz$ of the one-sided profile.

    `moment(0) == 1` and, by symmetry of $\\omega$ about $1/2$,
    `moment(1) == 0.5`.
    """
    if int(k) != k or k < 0:
        raise InvalidParameterError(f'Expected moment order k >= 0, got {k}')
    c = one_sided_normalization()
    value, _ = quad(
        lambda z: z ** k * _scalar_one_sided_bump(z), 0, 1,
        epsabs=1e-14, epsrel=1e-13, limit=200,
    )
    return c * value
