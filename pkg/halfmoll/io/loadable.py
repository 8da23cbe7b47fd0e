"""
Persistence of halfmoll objects.

Two mixins cover everything that is written to disk:

- [`LoadableMixin`][halfmoll.io.loadable.LoadableMixin] records the
  constructor arguments of kernels, fields, test functions and grids, so
  that they can be rebuilt from a dictionary, saved next to results,
  and echoed into run manifests;
- [`StateMixin`][halfmoll.io.loadable.StateMixin] turns dataclasses
  (experiment configurations, convergence tables) into plain tables
  stored as TOML, YAML, JSON or torch files.
"""
__all__ = [
    'LoadableMixin',
    'StateMixin',
    'load',
]
# stdlib
import sys
import json
import dataclasses
from pathlib import Path
from warnings import warn
from inspect import signature

# externals
import torch
from torch import nn

# internals
from halfmoll.io.utils import import_qualname, to_jsonable
from halfmoll.core.typing import Any, Dict, Union, IO

FORMAT_KEY = 'halfmoll.Loadable'

PathLike = Union[str, Path, IO]


def _is_json(path: PathLike) -> bool:
    return isinstance(path, (str, Path)) and Path(path).suffix == '.json'


def _encode(obj: Any) -> Any:
    # loadable objects nested in constructor arguments become tables
    if isinstance(obj, LoadableMixin):
        return obj.serialize()
    if isinstance(obj, nn.Module):
        raise TypeError(
            f'Cannot serialize {type(obj).__name__}: only modules that '
            f'inherit from LoadableMixin record their arguments'
        )
    if isinstance(obj, (list, tuple)):
        return type(obj)(_encode(item) for item in obj)
    if isinstance(obj, dict):
        return {key: _encode(value) for key, value in obj.items()}
    return obj


def _decode(obj: Any, klass: type = None) -> Any:
    if isinstance(obj, (list, tuple)):
        return type(obj)(_decode(item) for item in obj)
    if not isinstance(obj, dict):
        return obj
    if FORMAT_KEY not in obj:
        return {key: _decode(value) for key, value in obj.items()}
    if klass is None:
        try:
            klass = import_qualname(obj['module'], obj['qualname'])
        except (ImportError, AttributeError, KeyError) as e:
            raise ImportError(
                f'Cannot locate {obj.get("qualname")} in module '
                f'{obj.get("module")}'
            ) from e
    instance = klass(*_decode(obj.get('args', [])),
                     **_decode(obj.get('kwargs', {})))
    buffers = obj.get('state')
    if buffers and hasattr(instance, 'load_state_dict'):
        instance.load_state_dict({
            key: torch.as_tensor(value) for key, value in buffers.items()
        })
    return instance


class LoadableMixin:
    """
    Record constructor arguments so that an object can be rebuilt.

    Subclasses are registered automatically; pass `save_args=False` in
    the class statement of an intermediate base whose own `__init__`
    should not be recorded.

    Example
    -------
    ```python
    field = Shear(rate=2.0)
    state = field.serialize()
    # {'halfmoll.Loadable': '1.0', 'module': 'halfmoll.fields.library',
    #  'qualname': 'Shear', 'args': (), 'kwargs': {'rate': 2.0},
    #  'state': {}}
    field = LoadableMixin.load(state)

    field.save('shear.json')
    field = load('shear.json')
    ```
    """

    __version__ = '1.0'
    """Version of the serialized format."""

    def __init_subclass__(cls, /, save_args: bool = True, **kwargs):
        super().__init_subclass__(**kwargs)
        if save_args:
            cls.__init__ = cls._save_args(cls.__init__)

    @classmethod
    def _save_args(cls, init):
        """Wrap `__init__` so that it records its arguments."""

        def wrapper(self, *args, **kwargs):
            # the outermost constructor wins: parents called through
            # super().__init__ do not overwrite the leaf arguments
            if not hasattr(self, '_args'):
                self._args = _encode(args)
                self._kwargs = _encode(kwargs)
            init(self, *args, **kwargs)

        return wrapper

    def serialize(self, with_state: bool = True) -> Dict[str, Any]:
        """
        Table from which the object can be rebuilt.

        Parameters
        ----------
        with_state : bool
            Include buffers (`state_dict`). Manifests only need the
            constructor arguments.
        """
        klass = type(self)
        table = {
            FORMAT_KEY: LoadableMixin.__version__,
            'module': klass.__module__,
            'qualname': klass.__qualname__,
            'args': getattr(self, '_args', ()),
            'kwargs': getattr(self, '_kwargs', {}),
        }
        if with_state and hasattr(self, 'state_dict'):
            table['state'] = dict(self.state_dict())
        return table

    def save(self, path: PathLike) -> None:
        """
        Write the serialized object: JSON for `.json` paths,
        [`torch.save`][torch.save] for anything else (including open
        files).
        """
        nb_params = len(signature(self.__init__).parameters)
        if not hasattr(self, '_args') and nb_params > 1:
            warn(f'{type(self).__name__} has no recorded arguments and '
                 f'may not be rebuilt identically')
        if _is_json(path):
            with open(path, 'w') as f:
                json.dump(to_jsonable(self.serialize()), f, indent=2)
        else:
            torch.save(self.serialize(), path)

    @classmethod
    def load(cls, state: Union[dict, PathLike]):
        """
        Rebuild an object from its table or from a file written by
        [`save`][halfmoll.io.loadable.LoadableMixin.save].

        When called on a subclass, that subclass is instantiated
        regardless of the recorded qualified name.
        """
        if not isinstance(state, dict):
            if _is_json(state):
                with open(state) as f:
                    state = json.load(f)
            else:
                state = torch.load(state)
        return _decode(state, None if cls is LoadableMixin else cls)


def load(state: Union[dict, PathLike]):
    """Rebuild any loadable object from its table or file."""
    return LoadableMixin.load(state)


# ----------------------------------------------------------------------
#   state files
# ----------------------------------------------------------------------


def _read_toml(path: Path) -> dict:
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    with open(path, 'rb') as f:
        return tomllib.load(f)


def _read_yaml(path: Path) -> dict:
    import yaml
    with open(path) as f:
        return yaml.safe_load(f)


def _read_json(path: Path) -> dict:
    with open(path) as f:
        return json.load(f)


def _write_yaml(state: dict, path: Path) -> None:
    import yaml
    with open(path, 'w') as f:
        yaml.safe_dump(to_jsonable(state), f)


def _write_json(state: dict, path: Path) -> None:
    with open(path, 'w') as f:
        json.dump(to_jsonable(state), f, indent=2)


def _write_toml(state: dict, path: Path) -> None:
    raise ValueError(f'TOML state files are read-only: {path}')


_READERS = {
    '.toml': _read_toml,
    '.yaml': _read_yaml,
    '.yml': _read_yaml,
    '.json': _read_json,
}
_WRITERS = {
    '.toml': _write_toml,
    '.yaml': _write_yaml,
    '.yml': _write_yaml,
    '.json': _write_json,
}


def _read_state(state: Union[dict, str, Path]) -> dict:
    if not isinstance(state, (str, Path)):
        return state
    path = Path(state)
    return _READERS.get(path.suffix, torch.load)(path)


class StateMixin:
    """
    Tables for `@dataclass` containers.

    The suffix of a path selects its format: `.toml` (read only),
    `.yaml`/`.yml`, `.json`, and [`torch.save`][torch.save] for anything
    else. The class of the object is not stored.

    Example
    -------
    ```python
    @dataclass
    class Sweep(StateMixin):
        eta: float = 0.1

    Sweep(eta=0.05).save_state_dict('sweep.json')
    sweep = Sweep.from_state_dict('sweep.json')
    ```
    """

    def serialize(self) -> dict:
        """Fields of the dataclass, recursively converted to tables."""
        return dataclasses.asdict(self)

    def load_state_dict(self, state: Union[dict, str, Path]) -> 'StateMixin':
        """Update fields in place from a table or a file."""
        for key, value in _read_state(state).items():
            setattr(self, key, value)
        return self

    @classmethod
    def from_state_dict(cls, state: Union[dict, str, Path]) -> 'StateMixin':
        """
        New instance from a table or a file.

        Raises
        ------
        TypeError
            If the table has keys that are not fields of the class.
        """
        return cls(**_read_state(state))

    def save_state_dict(self, path: Union[str, Path]) -> None:
        """
        Write the fields to `path`.

        Raises
        ------
        ValueError
            For `.toml` paths.
        """
        path = Path(path)
        writer = _WRITERS.get(path.suffix)
        if writer is None:
            torch.save(self.serialize(), path)
        else:
            writer(self.serialize(), path)
