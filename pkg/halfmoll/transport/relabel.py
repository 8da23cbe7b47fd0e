"""
Relabeling functions $\\theta$ and the renormalized solution
$\\theta(u)$.

Three kinds are supported:

- `smooth_given`: an explicit $C^1$ function with bounded derivative
  (`tanh`, `arctan`, `identity` are registered);
- `truncation`: $\\theta_{\\eta, M} = g_M * \\rho_\\eta - (g_M * \\rho_\\eta)(0)$
  with $g_M(\\sigma) = (|\\sigma| \\wedge M)^p$, used to control
  $L^p$ norms of renormalized solutions;
- `inverse`: the inverse of an increasing relabeling on $[-C, C]$,
  continued linearly outside with matching slopes.
"""
__all__ = [
    'RelabelFunction',
    'RELABELINGS',
    'make_relabel',
    'renormalize',
    'relabel_data',
    'truncation_relabel',
    'inverse_relabel',
]
# stdlib
import math
import logging

# externals
import torch
import numpy as np
from torch import Tensor

# internals
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.functional.kernels import eval_symmetric
from halfmoll.core.typing import Callable, Optional, Union, ScalarLike
from halfmoll.core.utils import default_dtype, check_positive, chunked
from halfmoll.core.errors import InvalidParameterError, UnknownNameError

logger = logging.getLogger(__name__)

KINDS = ('smooth_given', 'truncation', 'inverse')


class RelabelFunction:
    """
    A $C^1$ relabeling $\\theta : \\mathbb{R} \\to \\mathbb{R}$ with a
    bounded derivative.

    Attributes
    ----------
    kind : {'smooth_given', 'truncation', 'inverse'}
    name : str
    params : dict
        Parameters of the construction (for reports).
    derivative_bound : float
        $\\sup|\\theta'|$.
    """

    def __init__(
        self,
        evaluator: Callable[[Tensor], Tensor],
        derivative: Callable[[Tensor], Tensor],
        derivative_bound: float,
        *,
        kind: str = 'smooth_given',
        name: str = 'theta',
        params: Optional[dict] = None,
    ):
        if kind not in KINDS:
            raise InvalidParameterError(
                f'Unknown relabeling kind "{kind}", expected one of {KINDS}')
        derivative_bound = float(derivative_bound)
        if not math.isfinite(derivative_bound):
            raise InvalidParameterError(
                f'Relabeling "{name}" must have a bounded derivative')
        self.evaluator = evaluator
        self._derivative = derivative
        self.derivative_bound = derivative_bound
        self.kind = kind
        self.name = name
        self.params = dict(params or {})

    def __call__(self, sigma: ScalarLike) -> Tensor:
        return self.evaluator(torch.as_tensor(sigma, dtype=default_dtype))

    def derivative(self, sigma: ScalarLike) -> Tensor:
        return self._derivative(torch.as_tensor(sigma, dtype=default_dtype))

    def __repr__(self):
        args = ', '.join(f'{k}={v}' for k, v in self.params.items())
        return f'RelabelFunction({self.kind}:{self.name}, {args})'


def _identity():
    return RelabelFunction(lambda s: s.clone(), torch.ones_like, 1.0,
                           name='identity')


def _tanh():
    return RelabelFunction(torch.tanh,
                           lambda s: 1 - torch.tanh(s).square(), 1.0,
                           name='tanh')


def _arctan():
    return RelabelFunction(torch.atan, lambda s: 1 / (1 + s.square()), 1.0,
                           name='arctan')


RELABELINGS = {
    'identity': _identity,
    'tanh': _tanh,
    'arctan': _arctan,
}


def make_relabel(theta: Union[str, dict, RelabelFunction]) -> RelabelFunction:
    """
    Instantiate a relabeling from an instance, a registered name, or a
    table such as `{'kind': 'truncation', 'M': 1, 'eta_r': 0.1, 'p': 2}`.
    """
    if isinstance(theta, RelabelFunction):
        return theta
    if isinstance(theta, dict):
        theta = dict(theta)
        kind = theta.pop('kind', None) or theta.pop('name', None)
        if kind == 'truncation':
            return truncation_relabel(**theta)
        if kind == 'inverse':
            base = make_relabel(theta.pop('theta', 'tanh'))
            return inverse_relabel(base, base.derivative, **theta)
        theta = kind
    if theta not in RELABELINGS:
        raise UnknownNameError(
            f'Unknown relabeling "{theta}". '
            f'Known relabelings: {sorted(RELABELINGS) + ["truncation"]}'
        )
    return RELABELINGS[theta]()


def renormalize(u: SampledField, theta: RelabelFunction) -> SampledField:
    """
    Pointwise composition $\\theta \\circ u$.

    Pair it with [`relabel_data`][halfmoll.transport.relabel.relabel_data]
    to build the relabeled data $(\\theta(h), \\theta(u_0))$.
    """
    return u.map(theta)


def relabel_data(
    theta: RelabelFunction, data: Union[SampledField, Callable]
) -> Union[SampledField, Callable]:
    """Relabeled data `theta(data(x, t))`."""
    if isinstance(data, SampledField):
        return data.map(theta)

    def relabeled(x, t=None):
        return theta(evaluate(data, x, t))
    return relabeled


def _kernel_rule(eta: float, nb_nodes: int):
    # Gauss-Legendre nodes on [-eta, eta] weighted by the symmetric
    # kernel, normalized to unit mass
    nodes, weights = np.polynomial.legendre.leggauss(nb_nodes)
    y = torch.as_tensor(nodes * eta, dtype=default_dtype)
    w = torch.as_tensor(weights * eta, dtype=default_dtype)
    w = w * eval_symmetric(y, eta)
    return y, w / w.sum()


def truncation_relabel(
    M: float,
    eta_r: float,
    p: float = 2.0,
    *,
    nb_nodes: int = 256,
) -> RelabelFunction:
    """
    Mollified $L^p$ truncation
    $\\theta_{\\eta_r, M}(\\sigma) = (g_M * \\rho_{\\eta_r})(\\sigma)
    - (g_M * \\rho_{\\eta_r})(0)$, $g_M(\\sigma) = (|\\sigma| \\wedge M)^p$.

    Parameters
    ----------
    M : float
        Truncation level.
    eta_r : float
        Width of the (symmetric) kernel.
    p : float
        Exponent, $p \\geq 1$.
    nb_nodes : int
        Number of Gauss-Legendre nodes of the convolution.

    Returns
    -------
    theta : RelabelFunction
        `theta(0) == 0` exactly, and `|theta'| <= p M^(p-1)`.
    """
    M = check_positive('M', M)
    eta_r = check_positive('eta_r', eta_r)
    p = float(p)
    if p < 1:
        raise InvalidParameterError(f'Expected p >= 1, got {p}')
    y, w = _kernel_rule(eta_r, nb_nodes)

    def g(s):
        return s.abs().clamp_max(M).pow(p)

    def dg(s):
        inside = s.abs() < M
        slope = p * s.abs().pow(p - 1) * s.sign()
        return torch.where(inside, slope, torch.zeros_like(s))

    at_zero = g(-y)
    shift = (at_zero * w).sum()

    def convolve(fn, s):
        flat = s.reshape(-1)
        out = chunked(lambda v: (fn(v[:, None] - y) * w).sum(-1), flat)
        return out.reshape(s.shape)

    def centered(z):
        # vanishes term by term at s = 0
        return g(z) - at_zero

    def evaluator(s):
        return convolve(centered, s)

    def derivative(s):
        return convolve(dg, s)

    logger.debug('Truncation relabeling M=%g eta_r=%g p=%g (shift %g)',
                 M, eta_r, p, float(shift))
    return RelabelFunction(
        evaluator, derivative, p * M ** (p - 1), kind='truncation',
        name='truncation', params=dict(M=M, eta_r=eta_r, p=p),
    )


def inverse_relabel(
    theta: Union[RelabelFunction, Callable],
    dtheta: Callable,
    C: float,
    *,
    nb_checks: int = 4097,
    nb_iter: int = 200,
) -> RelabelFunction:
    """
    Inverse relabeling
    $$
    \\tilde\\theta(\\sigma) = \\begin{cases}
    \\frac{\\sigma - \\theta(C)}{\\theta'(C)} + C
        & \\sigma > \\theta(C) \\\\
    \\theta^{-1}(\\sigma) & \\theta(-C) \\leq \\sigma \\leq \\theta(C) \\\\
    \\frac{\\sigma - \\theta(-C)}{\\theta'(-C)} - C
        & \\sigma < \\theta(-C)
    \\end{cases}
    $$

    The middle branch is computed by vectorized bisection, to machine
    precision.

    Parameters
    ----------
    theta : callable
        Strictly increasing $C^1$ function with $\\theta(0) = 0$.
    dtheta : callable
        Its derivative, positive on $[-C, C]$.
    C : float
        Half-width of the inverted range.

    Returns
    -------
    inverse : RelabelFunction
        $\\tilde\\theta$, with $\\sup|\\tilde\\theta'| =
        1 / \\min_{[-C, C]} \\theta'$.

    Raises
    ------
    InvalidParameterError
        If `theta` is not strictly increasing on `[-C, C]`, or does not
        vanish at 0.
    """
    C = check_positive('C', C)

    def f(s):
        return torch.as_tensor(theta(s), dtype=default_dtype)

    def df(s):
        return torch.as_tensor(dtheta(s), dtype=default_dtype)

    grid = torch.linspace(-C, C, nb_checks, dtype=default_dtype)
    values, slopes = f(grid), df(grid)
    if not ((values[1:] > values[:-1]).all() and (slopes > 0).all()):
        raise InvalidParameterError(
            f'Relabeling is not strictly increasing on [-{C}, {C}]')
    if abs(float(f(torch.zeros([], dtype=default_dtype)))) > 1e-12:
        raise InvalidParameterError('Relabeling must vanish at 0')
    ends = torch.as_tensor([-C, C], dtype=default_dtype)
    lower, upper = f(ends)
    slope_lower, slope_upper = df(ends)

    def invert(s):
        lo = torch.full_like(s, -C)
        hi = torch.full_like(s, C)
        for _ in range(nb_iter):
            mid = (lo + hi) / 2
            below = f(mid) < s
            lo = torch.where(below, mid, lo)
            hi = torch.where(below, hi, mid)
        return (lo + hi) / 2

    def evaluator(s):
        middle = invert(s.clamp(lower, upper))
        out = torch.where(s > upper, (s - upper) / slope_upper + C, middle)
        return torch.where(s < lower, (s - lower) / slope_lower - C, out)

    def derivative(s):
        middle = 1 / df(invert(s.clamp(lower, upper)))
        out = torch.where(s > upper, 1 / slope_upper, middle)
        return torch.where(s < lower, 1 / slope_lower, out)

    name = getattr(theta, 'name', getattr(theta, '__name__', 'theta'))
    return RelabelFunction(
        evaluator, derivative, 1 / float(slopes.min()), kind='inverse',
        name=f'inverse_{name}', params=dict(C=C),
    )
