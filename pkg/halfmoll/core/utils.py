"""
Small helpers shared by every subpackage: double-precision tensors,
argument checks, batched evaluation and lazy submodule import.
"""
__all__ = [
    'default_dtype',
    'make_vector',
    'as_points',
    'check_positive',
    'chunked',
    'set_num_threads_from_env',
    'import_submodules',
]
# stdlib
import os
import math
import logging
from importlib import import_module

# externals
import torch
from torch import Tensor

# internals
from halfmoll.core.typing import Any, Optional, Callable, List
from halfmoll.core.errors import InvalidParameterError, DimensionError

logger = logging.getLogger(__name__)

default_dtype = torch.float64
"""All numerical work is carried out in double precision."""


def make_vector(values: Any, length: Optional[int] = None) -> Tensor:
    """
    Flatten `values` into a double-precision vector.

    When `length` is given, a shorter vector is padded by repeating its
    last entry (a scalar therefore fills the whole vector) and a longer
    one is cropped.

    Parameters
    ----------
    values : scalar or sequence or tensor
        Coordinates, e.g. a center or a constant velocity.
    length : int, optional
        Target length.

    Returns
    -------
    vector : (length,) tensor
    """
    vector = torch.as_tensor(values, dtype=default_dtype).flatten()
    if length is None:
        return vector
    if len(vector) >= length:
        return vector[:length]
    fill = vector[-1] if len(vector) else 0.0
    pad = vector.new_full([length - len(vector)], float(fill))
    return torch.cat([vector, pad])


def as_points(x: Any, dim: int) -> Tensor:
    """
    Convert point-like input to a `(..., dim)` double tensor.

    A scalar, or a tensor whose last dimension is not `dim`, is
    interpreted as a batch of one-dimensional points when `dim == 1`.

    Raises
    ------
    DimensionError
        If the last dimension does not match `dim`.
    """
    x = torch.as_tensor(x, dtype=default_dtype)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.ndim == 0 or x.shape[-1] != dim:
        raise DimensionError(
            f'Expected points of dimension {dim}, got shape '
            f'{tuple(x.shape)}'
        )
    return x


def check_positive(name: str, value: float, strict: bool = True) -> float:
    """Raise `InvalidParameterError` unless `value > 0` (or `>= 0`)."""
    value = float(value)
    if not math.isfinite(value) or value < 0 or (strict and value == 0):
        relation = '> 0' if strict else '>= 0'
        raise InvalidParameterError(f'Expected {name} {relation}, got {value}')
    return value


def chunked(
    fn: Callable[[Tensor], Tensor],
    points: Tensor,
    chunk: int = 4096,
) -> Tensor:
    """
    Apply `fn` to a `(N, ...)` batch of points, `chunk` rows at a time,
    and concatenate the outputs along the first dimension.
    """
    if points.shape[0] <= chunk:
        return fn(points)
    return torch.cat([
        fn(points[i:i+chunk]) for i in range(0, points.shape[0], chunk)
    ])


def set_num_threads_from_env(variable: str = 'HALFMOLL_THREADS') -> int:
    """
    Cap the number of intra-op torch threads from an environment variable.

    Returns
    -------
    nb_threads : int
        The number of threads in use after the call.
    """
    value = os.environ.get(variable)
    if value:
        try:
            torch.set_num_threads(max(1, int(value)))
        except ValueError:
            logger.warning('Ignoring %s=%r (not an integer)', variable, value)
    return torch.get_num_threads()


def import_submodules(
    submodules: List[str],
    module: str,
    all: Optional[List[str]] = None,
    import_into: bool = False,
) -> None:
    """
    Attach submodules to their parent package, so that
    `halfmoll.grid.grids.StripGrid` works after a bare `import halfmoll`.

    Parameters
    ----------
    submodules : list[str]
        Submodule names, relative to `module`.
    module : str
        Parent package (`__name__`).
    all : list[str], optional
        The parent's `__all__`, extended in place.
    import_into : bool
        Also expose every name a submodule exports in its `__all__`.
    """
    parent = import_module(module)
    for name in submodules:
        child = import_module('.' + name, module)
        setattr(parent, name, child)
        exported = [name]
        if import_into:
            for key in child.__all__:
                setattr(parent, key, getattr(child, key))
            exported += list(child.__all__)
        if all is not None:
            all += exported
