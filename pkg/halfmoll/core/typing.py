"""
Type hints used across halfmoll, and the generic aliases it imports
from a single place.
"""
__all__ = [
    # halfmoll-specific type hints
    'BoundType',
    'InterpolationType',
    'ScalarLike',
    'PointLike',
    'KernelKind',
    'RegionType',
    'MethodType',
    # aliases
    'Union',
    'Optional',
    'Literal',
    'Any',
    'ClassVar',
    'IO',
    'Type',
    'List',
    'Tuple',
    'Dict',
    'Sequence',
    'Callable',
]
# stdlib
import sys
from typing import Union, Optional, Literal, Any, ClassVar, IO

# externals
import numpy as np
import torch
from bounds.types import BoundLike as BoundType

if sys.version_info >= (3, 9):
    from collections.abc import Sequence, Callable
    Type, List, Tuple, Dict = type, list, tuple, dict
else:
    from typing import Sequence, Callable, Type, List, Tuple, Dict

InterpolationType = Union[int, str]
"""Spline order used to sample grid values: `'nearest'`, `'linear'`,
`'quadratic'`, `'cubic'`, or the corresponding integer."""

ScalarLike = Union[float, int, torch.Tensor]
"""A python number or a zero-dimensional tensor."""

PointLike = Union[float, Sequence[float], np.ndarray, torch.Tensor]
"""One point `(d,)` or a batch of points `(..., d)` in the half-space."""

KernelKind = Literal['symmetric', 'one_sided']
"""Kind of a one-dimensional mollifier."""

RegionType = Literal['full', 'boundary']
"""Integration region: the strip itself or its flat boundary."""

MethodType = Literal['distributional', 'direct']
"""Evaluation route of the commutator."""
