"""
Name resolution and JSON conversion for serialized objects.
"""
__all__ = [
    'import_qualname',
    'import_fullname',
    'to_jsonable',
]
# stdlib
import math
from types import ModuleType
from importlib import import_module

# externals
import numpy as np
import torch

# internals
from halfmoll.core.typing import Any, Union


def import_qualname(scope: Union[ModuleType, str, dict], qualname: str):
    """
    Resolve a dotted attribute path such as `"Shear.forward"` inside a
    module (or module path), or inside a dictionary such as `locals()`.
    """
    obj = import_module(scope) if isinstance(scope, str) else scope
    for part in qualname.split('.'):
        obj = obj[part] if isinstance(obj, dict) else getattr(obj, part)
    return obj


def import_fullname(fullname: str):
    """
    Resolve a fully qualified name such as
    `"halfmoll.fields.scalars.Gaussian"`, whose split between module
    path and attribute path is unknown.

    The longest importable module prefix is used.
    """
    parts = fullname.split('.')
    module, depth = import_module(parts[0]), 1
    while depth < len(parts) and not hasattr(module, parts[depth]):
        try:
            module = import_module('.'.join(parts[:depth + 1]))
        except ImportError:
            break
        depth += 1
    if depth == len(parts):
        return module
    return import_qualname(module, '.'.join(parts[depth:]))


def to_jsonable(obj: Any) -> Any:
    """
    Recursively convert tensors, arrays and numpy scalars to python
    objects that `json.dump` accepts. NaN floats become `None`.
    """
    if isinstance(obj, (torch.Tensor, np.ndarray)):
        return obj.tolist()
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj
