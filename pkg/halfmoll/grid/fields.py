__all__ = [
    'SampledField',
    'evaluate',
]
# stdlib
import math

# externals
import torch
import interpol
from torch import Tensor

# internals
from halfmoll.grid.grids import StripGrid, BoundaryGrid, TimeAxis
from halfmoll.core.typing import (
    Union, Optional, Callable, InterpolationType, BoundType
)
from halfmoll.core.utils import default_dtype
from halfmoll.core.errors import (
    DimensionError, NonFiniteError, TruncationError
)

GridType = Union[StripGrid, BoundaryGrid]


class SampledField:
    """
    Scalar values sampled on the nodes of a strip (or boundary) grid,
    optionally on a time axis as well.

    The value tensor has shape `grid.shape` or `grid.shape + (nt,)`:
    spatial axes first, time last. Sampled fields are immutable; every
    transformation returns a new object.
    """

    def __init__(
        self,
        grid: GridType,
        values: Tensor,
        time: Optional[TimeAxis] = None,
    ):
        """
        Parameters
        ----------
        grid : StripGrid or BoundaryGrid
            Spatial grid.
        values : tensor
            Node values, shape `grid.shape [+ (time.nb_nodes,)]`.
        time : TimeAxis, optional
            Time axis.

        Raises
        ------
        DimensionError
            If the number of values does not match the node count.
        NonFiniteError
            If any value is NaN or infinite.
        """
        values = torch.as_tensor(values, dtype=default_dtype)
        shape = tuple(grid.shape) + ((time.nb_nodes,) if time else ())
        if values.numel() != math.prod(shape):
            raise DimensionError(
                f'Expected {math.prod(shape)} values for shape {shape}, '
                f'got {values.numel()}'
            )
        values = values.reshape(shape)
        if not torch.isfinite(values).all():
            raise NonFiniteError('SampledField values must be finite')
        self.grid = grid
        self.time = time
        self._values = values

    @property
    def values(self) -> Tensor:
        # a copy, so that the field stays immutable
        return self._values.clone()

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def is_boundary(self) -> bool:
        return isinstance(self.grid, BoundaryGrid)

    @property
    def shape(self):
        return tuple(self._values.shape)

    @classmethod
    def from_function(
        cls,
        grid: GridType,
        fn: Callable,
        time: Optional[TimeAxis] = None,
    ) -> 'SampledField':
        """
        Sample `fn(x)` (or `fn(x, t)` when a time axis is given) on the
        grid nodes. `x` is a `(*shape, d)` tensor of points.
        """
        x = grid.coordinates()
        if time is None:
            values = fn(x)
        else:
            t = time.nodes()
            xt = x[..., None, :].expand(*x.shape[:-1], len(t), x.shape[-1])
            tt = t.expand(*x.shape[:-1], len(t))
            values = fn(xt, tt)
        return cls(grid, torch.as_tensor(values, dtype=default_dtype), time)

    def map(self, fn: Callable[[Tensor], Tensor]) -> 'SampledField':
        """Pointwise transform of the values."""
        return SampledField(self.grid, fn(self._values), self.time)

    def at_time(self, k: int) -> 'SampledField':
        """Spatial slice at time node `k`."""
        if self.time is None:
            raise DimensionError('Field has no time axis')
        return SampledField(self.grid, self._values[..., k])

    def with_values(self, values: Tensor) -> 'SampledField':
        return SampledField(self.grid, values, self.time)

    def _axes(self):
        lower = list(self.grid.lower)
        spacings = list(self.grid.spacings)
        if self.time is not None:
            lower.append(0.0)
            spacings.append(self.time.step)
        return (torch.as_tensor(lower, dtype=default_dtype),
                torch.as_tensor(spacings, dtype=default_dtype))

    def _coordinates(self, x: Tensor, t: Optional[Tensor]) -> Tensor:
        x = torch.as_tensor(x, dtype=default_dtype)
        if self.is_boundary:
            x = x[..., :self.dim - 1]
        if self.time is not None:
            if t is None:
                raise DimensionError('Field has a time axis: pass `t`')
            t = torch.as_tensor(t, dtype=default_dtype)
            shape = torch.broadcast_shapes(x.shape[:-1], t.shape)
            x = x.expand(*shape, x.shape[-1])
            x = torch.cat([x, t.expand(shape)[..., None]], -1)
        return x

    def sample(
        self,
        x: Tensor,
        t: Optional[Tensor] = None,
        interpolation: InterpolationType = 'linear',
        bound: BoundType = 'dct2',
        strict: bool = True,
    ) -> Tensor:
        """
        Sample the field at arbitrary points.

        Points that fall on grid nodes (within 1e-9 cell) are gathered
        exactly; other points are interpolated with
        [`interpol.grid_pull`](https://github.com/balbasty/torch-interpol).

        Parameters
        ----------
        x : (..., d) tensor
            Sampling points (boundary fields only use `x[..., :d-1]`).
        t : (...) tensor, optional
            Sampling times (required when the field has a time axis).
        interpolation : InterpolationType
            Spline order.
        bound : BoundType
            Boundary condition beyond the grid (only used when
            `strict=False`).
        strict : bool
            Raise `TruncationError` if a point lies outside the grid.

        Returns
        -------
        values : (...) tensor
        """
        coord = self._coordinates(x, t)
        batch = coord.shape[:-1]
        if coord.shape[-1] == 0:
            return self._values.expand(batch).clone()
        lower, spacings = self._axes()
        index = ((coord - lower) / spacings).reshape(-1, coord.shape[-1])
        upper = torch.as_tensor(self.shape, dtype=default_dtype) - 1
        outside = ((index < -1e-9) | (index > upper + 1e-9)).any(-1)
        if strict and outside.any():
            raise TruncationError(
                f'{int(outside.sum())} sampling point(s) outside the grid '
                f'{self.grid}'
            )
        rounded = index.round()
        if not outside.any() and (index - rounded).abs().max() <= 1e-9:
            sub = rounded.long().unbind(-1)
            return self._values[sub].reshape(batch)
        nb_axes = index.shape[-1]
        grid = index.reshape([1, -1] + [1] * (nb_axes - 1) + [nb_axes])
        order = interpolation
        prefilter = order not in (0, 1, 'nearest', 'linear')
        out = interpol.grid_pull(
            self._values[None, None], grid,
            interpolation=order,
            bound=bound,
            extrapolate=not strict,
            prefilter=prefilter,
        )
        return out.reshape(batch)

    def __call__(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        return self.sample(x, t)

    def save(self, path) -> None:
        """Write `<path>.bin` (little-endian float64) and `<path>.json`."""
        from halfmoll.io.fields import save_field
        save_field(self, path)

    @classmethod
    def load(cls, path) -> 'SampledField':
        from halfmoll.io.fields import load_field
        return load_field(path)

    def to_csv(self, path) -> None:
        """One row per node: coordinates (then time), value."""
        from halfmoll.io.fields import field_to_csv
        field_to_csv(self, path)

    def __repr__(self):
        return (f'SampledField(grid={self.grid}, time={self.time}, '
                f'shape={self.shape})')


def evaluate(
    u: Union[SampledField, Callable],
    x: Tensor,
    t: Optional[Tensor] = None,
    **kwargs
) -> Tensor:
    """
    Evaluate a sampled field or an analytic function at points.

    Analytic functions are called as `u(x)` when `t` is None and
    `u(x, t)` otherwise.
    """
    if isinstance(u, SampledField):
        return u.sample(x, t, **kwargs)
    if t is None:
        return torch.as_tensor(u(x), dtype=default_dtype)
    t = torch.as_tensor(t, dtype=default_dtype)
    shape = torch.broadcast_shapes(x.shape[:-1], t.shape)
    return torch.as_tensor(
        u(x.expand(*shape, x.shape[-1]), t.expand(shape)),
        dtype=default_dtype,
    )
