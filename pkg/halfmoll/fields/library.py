"""
Built-in velocity fields.

| name             | $b(x, t)$                                  | div b          |
| ---------------- | ------------------------------------------ | -------------- |
| `constant`       | $v$                                        | 0              |
| `vertical_inflow`| $s\\,e_d$                                  | 0              |
| `rigid_rotation` | $\\Omega\\,(-(x_2 - c_2), x_1 - c_1)$      | 0              |
| `shear`          | $(\\dot\\gamma\\,x_d, 0, \\dots, 0)$        | 0              |
| `rough_power`    | $\\lvert x - x_0\\rvert^\\gamma\\,e$       | $\\gamma\\lvert r\\rvert^{\\gamma-2}\\,r \\cdot e$ |
| `compressive`    | $(\\lambda/d)(x - c)$                      | $\\lambda$     |
| `pulsed_inflow`  | $s(1 + a\\sin\\omega t)\\,e_d$             | 0              |
| `radial_inflow`  | $-s\\,(x - c)/\\lvert x - c\\rvert$       | $-s(d-1)/\\lvert x - c\\rvert$ |

`rough_power` lies in $W^{1,\\beta}_{loc}$ for $(1 - \\gamma)\\beta < d$
but is not Lipschitz at $x_0$. Its default singular point is placed off
every dyadic lattice.
"""
__all__ = [
    'ConstantField',
    'VerticalInflow',
    'RigidRotation',
    'Shear',
    'RoughPower',
    'Compressive',
    'PulsedInflow',
    'RadialInflow',
    'FIELDS',
    'builtin_field',
    'make_field',
]
# stdlib
import math

# externals
import torch
from torch import nn, Tensor

# internals
from halfmoll.fields.base import VelocityFieldSpec
from halfmoll.io.utils import import_fullname
from halfmoll.core.typing import Optional, Sequence, Union, Type
from halfmoll.core.utils import default_dtype, make_vector
from halfmoll.core.errors import (
    InvalidParameterError, DimensionError, UnknownNameError
)


def _batch_zeros(x: Tensor, *shape) -> Tensor:
    return torch.zeros(x.shape[:-1] + shape, dtype=default_dtype)


def _radius(x: Tensor, center: Tensor):
    # distance to a singular point, replaced by one at the point itself;
    # callers zero their values there with `away`
    r = x - center
    rho = r.norm(dim=-1)
    away = rho > 0
    return r, torch.where(away, rho, torch.ones_like(rho)), away


class ConstantField(VelocityFieldSpec):
    """Uniform field $b \\equiv v$."""

    name = 'constant'
    regularity = 'constant'
    solenoidal = True

    def __init__(self, velocity: Sequence[float] = (0.0, 1.0)):
        """
        Parameters
        ----------
        velocity : list[float]
            Constant vector $v$; its length sets the dimension.
        """
        velocity = make_vector(velocity)
        super().__init__(len(velocity))
        self.velocity = velocity
        self.bound = float(velocity.norm())

    def forward(self, x, t=None):
        x = self._points(x)
        return self.velocity.expand(x.shape).clone()

    def gradient(self, x, t=None):
        x = self._points(x)
        return _batch_zeros(x, self.dim, self.dim)

    def divergence(self, x, t=None):
        x = self._points(x)
        return _batch_zeros(x)


class VerticalInflow(ConstantField):
    """Uniform inflow $b = s\\,e_d$ through the flat boundary."""

    name = 'vertical_inflow'

    def __init__(self, dim: int = 2, speed: float = 1.0):
        velocity = [0.0] * (dim - 1) + [float(speed)]
        super().__init__(velocity)


class RigidRotation(VelocityFieldSpec):
    """Rigid rotation about `center` with angular velocity `omega` (2D)."""

    name = 'rigid_rotation'
    solenoidal = True

    def __init__(self, center: Sequence[float] = (0.0, 0.0),
                 omega: float = 1.0):
        super().__init__(2)
        self.center = make_vector(center, 2)
        self.omega = float(omega)

    def forward(self, x, t=None):
        r = self._points(x) - self.center
        return self.omega * torch.stack([-r[..., 1], r[..., 0]], -1)

    def gradient(self, x, t=None):
        x = self._points(x)
        grad = _batch_zeros(x, 2, 2)
        grad[..., 0, 1] = -self.omega
        grad[..., 1, 0] = self.omega
        return grad

    def divergence(self, x, t=None):
        return _batch_zeros(self._points(x))


class Shear(VelocityFieldSpec):
    """Shear flow $b = (\\dot\\gamma\\,x_d, 0, \\dots, 0)$."""

    name = 'shear'
    solenoidal = True

    def __init__(self, dim: int = 2, rate: float = 1.0):
        if dim < 2:
            raise DimensionError('A shear flow needs d >= 2')
        super().__init__(dim)
        self.rate = float(rate)

    def forward(self, x, t=None):
        x = self._points(x)
        b = _batch_zeros(x, self.dim)
        b[..., 0] = self.rate * x[..., -1]
        return b

    def gradient(self, x, t=None):
        x = self._points(x)
        grad = _batch_zeros(x, self.dim, self.dim)
        grad[..., 0, -1] = self.rate
        return grad

    def divergence(self, x, t=None):
        return _batch_zeros(self._points(x))


class RoughPower(VelocityFieldSpec):
    """
    Power-law field $b(x) = |x - x_0|^\\gamma e$ with $0 < \\gamma < 1$.

    Its gradient $\\gamma|r|^{\\gamma - 2}\\,e \\otimes r$ blows up at
    $x_0$, so the field is Sobolev but not Lipschitz. The derivatives are
    set to zero at $x_0$ itself.
    """

    name = 'rough_power'
    regularity = 'sobolev'

    def __init__(
        self,
        gamma: float = 0.5,
        center: Optional[Sequence[float]] = None,
        direction: Optional[Sequence[float]] = None,
        dim: int = 2,
    ):
        """
        Parameters
        ----------
        gamma : float
            Exponent in $(0, 1)$.
        center : list[float]
            Singular point $x_0$. Default: an irrational point of the
            unit cube, never on a dyadic lattice.
        direction : list[float]
            Direction $e$ (normalized). Default: $e_1$.
        dim : int
            Space dimension (ignored if `center` is given).
        """
        if not (0 < gamma < 1):
            raise InvalidParameterError(
                f'Expected 0 < gamma < 1, got {gamma}'
            )
        if center is not None:
            dim = len(center)
        super().__init__(dim)
        self.gamma = float(gamma)
        if center is None:
            center = [math.sqrt(2) / 10] * (dim - 1) + [math.sqrt(3) / 2]
        self.center = make_vector(center, dim)
        if direction is None:
            direction = [1.0] + [0.0] * (dim - 1)
        direction = make_vector(direction, dim)
        self.direction = direction / direction.norm()

    def forward(self, x, t=None):
        rho = (self._points(x) - self.center).norm(dim=-1)
        return (rho ** self.gamma)[..., None] * self.direction

    def gradient(self, x, t=None):
        r, rho, away = _radius(self._points(x), self.center)
        scale = self.gamma * rho ** (self.gamma - 2) * away
        return scale[..., None, None] * (
            self.direction[:, None] * r[..., None, :]
        )

    def divergence(self, x, t=None):
        r, rho, away = _radius(self._points(x), self.center)
        scale = self.gamma * rho ** (self.gamma - 2) * away
        return scale * (r @ self.direction)

    def critical_exponent(self) -> float:
        """$\\beta^* = d/(1 - \\gamma)$: $\\nabla b \\in L^\\beta_{loc}$ iff $\\beta < \\beta^*$."""  # noqa: E501
        return self.dim / (1 - self.gamma)


class Compressive(VelocityFieldSpec):
    """Isotropic expansion $b = (\\lambda/d)(x - c)$, $\\operatorname{div} b = \\lambda$."""  # noqa: E501

    name = 'compressive'

    def __init__(self, rate: float = 1.0,
                 center: Optional[Sequence[float]] = None, dim: int = 2):
        if center is not None:
            dim = len(center)
        super().__init__(dim)
        self.rate = float(rate)
        self.center = make_vector(center if center is not None else 0.0, dim)

    def forward(self, x, t=None):
        return (self.rate / self.dim) * (self._points(x) - self.center)

    def gradient(self, x, t=None):
        x = self._points(x)
        eye = torch.eye(self.dim, dtype=default_dtype)
        return (self.rate / self.dim) * eye.expand(x.shape[:-1] + eye.shape)

    def divergence(self, x, t=None):
        x = self._points(x)
        return torch.full(x.shape[:-1], self.rate, dtype=default_dtype)


class PulsedInflow(VelocityFieldSpec):
    """Time-modulated inflow $b = s(1 + a\\sin\\omega t)\\,e_d$."""

    name = 'pulsed_inflow'
    regularity = 'constant'
    solenoidal = True
    autonomous = False

    def __init__(self, dim: int = 2, speed: float = 1.0,
                 amplitude: float = 0.5, frequency: float = 2 * math.pi):
        if abs(amplitude) >= 1:
            raise InvalidParameterError(
                'Pulse amplitude must be < 1 so that the flow stays inflow'
            )
        super().__init__(dim)
        self.speed = float(speed)
        self.amplitude = float(amplitude)
        self.frequency = float(frequency)
        self.bound = abs(self.speed) * (1 + abs(self.amplitude))

    def modulation(self, t: Tensor) -> Tensor:
        return self.speed * (1 + self.amplitude * torch.sin(
            self.frequency * t))

    def forward(self, x, t=None):
        x = self._points(x)
        t = torch.zeros([], dtype=default_dtype) if t is None else \
            torch.as_tensor(t, dtype=default_dtype)
        b = _batch_zeros(x, self.dim)
        b[..., -1] = self.modulation(t.expand(x.shape[:-1]))
        return b

    def gradient(self, x, t=None):
        x = self._points(x)
        return _batch_zeros(x, self.dim, self.dim)

    def divergence(self, x, t=None):
        return _batch_zeros(self._points(x))


class RadialInflow(VelocityFieldSpec):
    """
    Radial field $b = -s\\,(x - c)/|x - c|$ pointing towards `center`.
    Singular at the center, where the field and its derivatives are set
    to zero.
    """

    name = 'radial_inflow'

    def __init__(self, center: Sequence[float] = (0.0, 0.0),
                 speed: float = 1.0):
        super().__init__(len(center))
        self.center = make_vector(center)
        self.speed = float(speed)
        self.bound = abs(self.speed)

    def forward(self, x, t=None):
        r, rho, _ = _radius(self._points(x), self.center)
        return -self.speed * r / rho[..., None]

    def gradient(self, x, t=None):
        r, rho, away = _radius(self._points(x), self.center)
        rho = rho[..., None, None]
        eye = torch.eye(self.dim, dtype=default_dtype)
        outer = r[..., :, None] * r[..., None, :]
        grad = -self.speed * (eye / rho - outer / rho ** 3)
        return grad * away[..., None, None]

    def divergence(self, x, t=None):
        _, rho, away = _radius(self._points(x), self.center)
        return -self.speed * (self.dim - 1) / rho * away


FIELDS = {
    klass.name: klass for klass in (
        ConstantField, VerticalInflow, RigidRotation, Shear, RoughPower,
        Compressive, PulsedInflow, RadialInflow,
    )
}


def builtin_field(name: str, **params) -> VelocityFieldSpec:
    """
    Instantiate a built-in field by name.

    Parameters
    ----------
    name : str
        One of `FIELDS`.
    **params
        Constructor parameters of the field.

    Raises
    ------
    UnknownNameError
        If `name` is not registered.
    """
    if name not in FIELDS:
        raise UnknownNameError(
            f'Unknown field "{name}". Known fields: {sorted(FIELDS)}'
        )
    return FIELDS[name](**params)


def make_field(
    field: Union[str, dict, Type[VelocityFieldSpec], VelocityFieldSpec],
    **params,
) -> VelocityFieldSpec:
    """
    Instantiate a field from an instance, a class, a registered name,
    a fully qualified class name, or a `{'name': ..., **params}` table.
    """
    if isinstance(field, nn.Module):
        return field
    if isinstance(field, dict):
        params = {**{k: v for k, v in field.items() if k != 'name'},
                  **params}
        field = field['name']
    if isinstance(field, str):
        if field in FIELDS:
            return FIELDS[field](**params)
        if '.' not in field:
            return builtin_field(field, **params)
        field = import_fullname(field)
    return field(**params)
