"""
Uniform tensor grids on a truncated half-space strip, its flat
boundary, and a time axis.

Node coordinates are always rebuilt from integer indices,
`x = index * spacing + lower`, so that they are exactly reproducible.
"""
__all__ = [
    'StripGrid',
    'BoundaryGrid',
    'TimeAxis',
]
# stdlib
import math

# externals
import torch
from torch import Tensor

# internals
from halfmoll.io.loadable import LoadableMixin
from halfmoll.core.typing import Tuple, Optional
from halfmoll.core.utils import default_dtype, check_positive
from halfmoll.core.errors import InvalidParameterError, DimensionError


def _nb_cells(name: str, length: float, spacing: float) -> int:
    n = round(length / spacing)
    if n < 1 or abs(n * spacing - length) > 1e-9 * max(1.0, length):
        raise InvalidParameterError(
            f'{name} ({length}) must be a positive multiple of the '
            f'spacing ({spacing})'
        )
    return int(n)


class _UniformGrid(LoadableMixin, save_args=False):
    """Shared machinery of tensor grids with one spacing per axis."""

    lower: Tuple[float, ...]
    spacings: Tuple[float, ...]
    shape: Tuple[int, ...]

    @property
    def nb_axes(self) -> int:
        return len(self.shape)

    @property
    def nb_nodes(self) -> int:
        return math.prod(self.shape)

    @property
    def upper(self) -> Tuple[float, ...]:
        return tuple(lo + (n - 1) * h for lo, n, h
                     in zip(self.lower, self.shape, self.spacings))

    def axis(self, i: int) -> Tensor:
        """Node coordinates along axis `i`."""
        index = torch.arange(self.shape[i], dtype=default_dtype)
        return index * self.spacings[i] + self.lower[i]

    def axis_coordinates(self) -> Tensor:
        """`(*shape, nb_axes)` tensor of node coordinates."""
        if not self.shape:
            return torch.zeros([0], dtype=default_dtype)
        axes = [self.axis(i) for i in range(self.nb_axes)]
        return torch.stack(torch.meshgrid(*axes, indexing='ij'), -1)

    def to_index(self, coord: Tensor) -> Tensor:
        """Fractional (voxel) indices of `(..., nb_axes)` coordinates."""
        lower = torch.as_tensor(self.lower, dtype=default_dtype)
        spacings = torch.as_tensor(self.spacings, dtype=default_dtype)
        return (coord - lower) / spacings

    def __eq__(self, other):
        return (
            type(self) is type(other) and
            self.shape == other.shape and
            all(abs(a - b) <= 1e-12 for a, b in zip(self.lower, other.lower))
            and all(abs(a - b) <= 1e-12
                    for a, b in zip(self.spacings, other.spacings))
        )

    def __repr__(self):
        return (f'{type(self).__name__}(shape={self.shape}, '
                f'lower={self.lower}, spacings={self.spacings})')


class StripGrid(_UniformGrid):
    """
    Uniform grid on the truncated half-space
    $[-A, A]^{d-1} \\times [0, L]$ with spacing `h` on every axis.
    """

    def __init__(
        self,
        dim: int = 2,
        extent: float = 1.0,
        length: float = 1.0,
        spacing: float = 1 / 64,
    ):
        """
        Parameters
        ----------
        dim : int
            Space dimension $d \\geq 1$.
        extent : float
            Tangential half-width $A$ (multiple of `spacing`).
        length : float
            Normal extent $L$ (multiple of `spacing`).
        spacing : float
            Grid spacing $h$.
        """
        if int(dim) != dim or dim < 1:
            raise InvalidParameterError(f'Expected dim >= 1, got {dim}')
        self.dim = int(dim)
        self.spacing = check_positive('spacing', spacing)
        self.extent = check_positive('extent', extent)
        self.length = check_positive('length', length)
        nt = _nb_cells('2 * extent', 2 * self.extent, self.spacing)
        nn = _nb_cells('length', self.length, self.spacing)
        self.shape = (nt + 1,) * (self.dim - 1) + (nn + 1,)
        self.lower = (-self.extent,) * (self.dim - 1) + (0.0,)
        self.spacings = (self.spacing,) * self.dim

    @property
    def measure(self) -> float:
        """Lebesgue measure of the strip."""
        return (2 * self.extent) ** (self.dim - 1) * self.length

    def coordinates(self) -> Tensor:
        """`(*shape, d)` tensor of node coordinates."""
        return self.axis_coordinates()

    def boundary(self) -> 'BoundaryGrid':
        """Grid of the flat boundary $\\{x_d = 0\\}$."""
        return BoundaryGrid(self.dim, self.extent, self.spacing)

    def margins(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        """
        Tangential and normal room left around points `(..., d)`.

        Returns
        -------
        tangential : (...) tensor
            $A - \\max_i |x_i|$ (infinite when `d == 1`).
        normal : (...) tensor
            $L - x_d$.
        """
        if self.dim > 1:
            tangential = self.extent - x[..., :-1].abs().amax(-1)
        else:
            tangential = torch.full_like(x[..., 0], float('inf'))
        return tangential, self.length - x[..., -1]

    def contains(self, x: Tensor, margin: float = 0.0, tol: float = 1e-9):
        """Whether points `(..., d)` lie in the strip with room `margin`."""
        tangential, normal = self.margins(x)
        return (
            (x[..., -1] >= -tol) &
            (tangential >= margin - tol) &
            (normal >= margin - tol)
        )

    def subgrid(self, margin: float) -> 'StripGrid':
        """
        Largest sub-strip (on the same lattice) whose nodes keep a
        distance `margin` from the artificial faces.
        """
        h = self.spacing
        cells = math.ceil(margin / h - 1e-9)
        extent = self.extent - cells * h
        length = self.length - cells * h
        if length < h / 2 or (self.dim > 1 and extent < h / 2):
            raise DimensionError(
                f'No admissible region left in {self} for margin {margin}'
            )
        return StripGrid(self.dim, extent if self.dim > 1 else self.extent,
                         length, h)

    def __repr__(self):
        return (f'StripGrid(dim={self.dim}, extent={self.extent}, '
                f'length={self.length}, spacing={self.spacing})')


class BoundaryGrid(_UniformGrid):
    """
    Uniform grid on the flat boundary $[-A, A]^{d-1} \\times \\{0\\}$.

    Nodes are reported as full points of $\\mathbb{R}^d$ (with
    $x_d = 0$), so that boundary data can be evaluated on them directly.
    In one dimension the boundary is the single point $x = 0$.
    """

    def __init__(self, dim: int = 2, extent: float = 1.0,
                 spacing: float = 1 / 64):
        if int(dim) != dim or dim < 1:
            raise InvalidParameterError(f'Expected dim >= 1, got {dim}')
        self.dim = int(dim)
        self.spacing = check_positive('spacing', spacing)
        self.extent = check_positive('extent', extent)
        nt = _nb_cells('2 * extent', 2 * self.extent, self.spacing)
        self.shape = (nt + 1,) * (self.dim - 1)
        self.lower = (-self.extent,) * (self.dim - 1)
        self.spacings = (self.spacing,) * (self.dim - 1)

    @property
    def measure(self) -> float:
        """$(d-1)$-dimensional measure (counting measure when `d == 1`)."""
        return (2 * self.extent) ** (self.dim - 1)

    def coordinates(self) -> Tensor:
        """`(*shape, d)` tensor of boundary points (last coordinate 0)."""
        tangential = self.axis_coordinates()
        if self.dim == 1:
            return torch.zeros([1], dtype=default_dtype)
        zero = torch.zeros_like(tangential[..., :1])
        return torch.cat([tangential, zero], -1)

    def __repr__(self):
        return (f'BoundaryGrid(dim={self.dim}, extent={self.extent}, '
                f'spacing={self.spacing})')


class TimeAxis(LoadableMixin):
    """Uniform time nodes `k * step`, `k = 0..horizon/step`."""

    def __init__(self, horizon: float = 1.0, step: Optional[float] = None):
        """
        Parameters
        ----------
        horizon : float
            Final time $T$.
        step : float
            Time step $\\Delta t$ ($T$ must be a multiple of it).
        """
        self.horizon = check_positive('horizon', horizon)
        self.step = check_positive('step', step or horizon)
        self.nb_steps = _nb_cells('horizon', self.horizon, self.step)

    @property
    def nb_nodes(self) -> int:
        return self.nb_steps + 1

    def nodes(self) -> Tensor:
        return torch.arange(self.nb_nodes, dtype=default_dtype) * self.step

    def __eq__(self, other):
        return (isinstance(other, TimeAxis) and
                self.nb_steps == other.nb_steps and
                abs(self.step - other.step) <= 1e-12)

    def __repr__(self):
        return f'TimeAxis(horizon={self.horizon}, step={self.step})'
