"""
Analytic scalar functions used as initial data, boundary data and
exact solutions.

Boundary data are evaluated at boundary points of $\\mathbb{R}^d$ (last
coordinate 0) and times, so that the same objects serve on the flat
boundary, on a curved boundary, and as interior data.
"""
__all__ = [
    'Constant',
    'Gaussian',
    'Linear',
    'Translated',
    'Rotated',
    'SCALARS',
    'make_scalar',
]
# stdlib
import math

# externals
import torch
from torch import nn

# internals
from halfmoll.fields.base import ScalarFunction
from halfmoll.io.utils import import_fullname
from halfmoll.core.typing import Sequence, Union, Optional
from halfmoll.core.utils import default_dtype, make_vector
from halfmoll.core.errors import UnknownNameError


def _times(x, t):
    if t is None:
        return torch.zeros(x.shape[:-1], dtype=default_dtype)
    return torch.as_tensor(t, dtype=default_dtype).expand(x.shape[:-1])


class Constant(ScalarFunction):
    """$u \\equiv c$."""

    def __init__(self, value: float = 1.0, dim: int = 2):
        super().__init__(dim)
        self.value = float(value)

    def forward(self, x, t=None):
        x = self._points(x)
        return torch.full(x.shape[:-1], self.value, dtype=default_dtype)

    def gradient(self, x, t=None):
        return torch.zeros_like(self._points(x))


class Gaussian(ScalarFunction):
    """$u(x) = a\\exp(-|x - c|^2 / (2w^2))$."""

    def __init__(self, center: Sequence[float] = (0.0, 0.5),
                 width: float = 0.1, amplitude: float = 1.0):
        super().__init__(len(center))
        self.center = make_vector(center)
        self.width = float(width)
        self.amplitude = float(amplitude)

    def forward(self, x, t=None):
        r = self._points(x) - self.center
        return self.amplitude * torch.exp(
            -r.square().sum(-1) / (2 * self.width ** 2))

    def gradient(self, x, t=None):
        r = self._points(x) - self.center
        return -r / self.width ** 2 * self.forward(x)[..., None]

    @property
    def support_radius(self) -> float:
        """Radius beyond which the value is below 1e-16 of the peak."""
        return self.width * math.sqrt(2 * math.log(1e16))


class Linear(ScalarFunction):
    """$u(x, t) = a \\cdot x + c + r\\,t$."""

    def __init__(self, coefficients: Sequence[float] = (0.0, 1.0),
                 offset: float = 0.0, time_rate: float = 0.0):
        super().__init__(len(coefficients))
        self.coefficients = make_vector(coefficients)
        self.offset = float(offset)
        self.time_rate = float(time_rate)

    def forward(self, x, t=None):
        x = self._points(x)
        return x @ self.coefficients + self.offset \
            + self.time_rate * _times(x, t)

    def gradient(self, x, t=None):
        x = self._points(x)
        return self.coefficients.expand(x.shape).clone()

    def time_derivative(self, x, t=None):
        x = self._points(x)
        return torch.full(x.shape[:-1], self.time_rate, dtype=default_dtype)


class Translated(ScalarFunction):
    """
    Data carried by a uniform velocity: $u(x, t) = u_0(x - v t)$.
    This is the exact solution of $\\partial_t u + v \\cdot \\nabla u = 0$.
    """

    def __init__(self, base: ScalarFunction,
                 velocity: Sequence[float] = (0.0, 1.0)):
        super().__init__(base.dim)
        self.base = base
        self.velocity = make_vector(velocity, base.dim)

    def _foot(self, x, t):
        x = self._points(x)
        return x - _times(x, t)[..., None] * self.velocity

    def forward(self, x, t=None):
        return self.base(self._foot(x, t))

    def gradient(self, x, t=None):
        return self.base.gradient(self._foot(x, t))

    def time_derivative(self, x, t=None):
        return -(self.gradient(x, t) @ self.velocity)


class Rotated(ScalarFunction):
    """
    Data carried by a rigid rotation (2D):
    $u(x, t) = u_0(c + R_{-\\Omega t}(x - c))$, the exact solution of
    transport by [`RigidRotation`][halfmoll.fields.library.RigidRotation].
    """

    def __init__(self, base: ScalarFunction,
                 center: Sequence[float] = (0.0, 0.0), omega: float = 1.0):
        super().__init__(2)
        self.base = base
        self.center = make_vector(center, 2)
        self.omega = float(omega)

    def _rotation(self, angle):
        c, s = torch.cos(angle), torch.sin(angle)
        return torch.stack([torch.stack([c, -s], -1),
                            torch.stack([s, c], -1)], -2)

    def _foot(self, x, t):
        x = self._points(x)
        rot = self._rotation(-self.omega * _times(x, t))
        r = (rot @ (x - self.center)[..., None])[..., 0]
        return r + self.center, rot

    def forward(self, x, t=None):
        foot, _ = self._foot(x, t)
        return self.base(foot)

    def gradient(self, x, t=None):
        foot, rot = self._foot(x, t)
        g = self.base.gradient(foot)
        return (rot.transpose(-1, -2) @ g[..., None])[..., 0]

    def time_derivative(self, x, t=None):
        x = self._points(x)
        r = x - self.center
        b = self.omega * torch.stack([-r[..., 1], r[..., 0]], -1)
        return -(self.gradient(x, t) * b).sum(-1)


SCALARS = {
    'constant': Constant,
    'gaussian': Gaussian,
    'linear': Linear,
}


def make_scalar(
    fn: Union[str, dict, ScalarFunction], dim: Optional[int] = None,
    **params
) -> ScalarFunction:
    """
    Instantiate scalar data from an instance, a registered name
    (`constant`, `gaussian`, `linear`), a fully qualified class name, or
    a `{'name': ..., **params}` table.
    """
    if isinstance(fn, nn.Module):
        return fn
    if isinstance(fn, dict):
        params = {**{k: v for k, v in fn.items() if k != 'name'}, **params}
        fn = fn['name']
    if fn == 'constant' and dim is not None:
        params.setdefault('dim', dim)
    if fn in SCALARS:
        return SCALARS[fn](**params)
    if '.' in fn:
        return import_fullname(fn)(**params)
    raise UnknownNameError(
        f'Unknown scalar data "{fn}". Known data: {sorted(SCALARS)}'
    )
