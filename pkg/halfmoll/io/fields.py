"""
On-disk formats of sampled fields.

A field is stored as a flat little-endian float64 payload
(`<stem>.bin`, C order, spatial axes first and time last) next to a
JSON header (`<stem>.json`) describing the grid and time axis.
"""
__all__ = [
    'save_field',
    'load_field',
    'field_to_csv',
]
# stdlib
import json
from pathlib import Path

# externals
import numpy as np
import torch

# internals
from halfmoll.core.typing import Union
from halfmoll.core.errors import DimensionError

HEADER_VERSION = '1.0'


def _stem(path: Union[str, Path]) -> Path:
    path = Path(path)
    if path.suffix in ('.bin', '.json'):
        path = path.with_suffix('')
    return path


def save_field(field, path: Union[str, Path]) -> None:
    """
    Write a [`SampledField`][halfmoll.grid.fields.SampledField].

    Parameters
    ----------
    field : SampledField
        Field to save.
    path : str or Path
        Output stem; `.bin` and `.json` are appended.
    """
    from halfmoll.grid.grids import StripGrid
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    grid = field.grid
    header = {
        'format': 'halfmoll.SampledField',
        'version': HEADER_VERSION,
        'kind': 'strip' if isinstance(grid, StripGrid) else 'boundary',
        'dimension': grid.dim,
        'extent': grid.extent,
        'length': getattr(grid, 'length', None),
        'spacing': grid.spacing,
        'horizon': field.time.horizon if field.time else None,
        'time_step': field.time.step if field.time else None,
        'shape': list(field.shape),
        'dtype': '<f8',
    }
    payload = field.values.numpy().astype('<f8', copy=False)
    payload.tofile(stem.with_suffix('.bin'))
    with open(stem.with_suffix('.json'), 'w') as f:
        json.dump(header, f, indent=2)


def load_field(path: Union[str, Path]):
    """
    Read a field written by [`save_field`][halfmoll.io.fields.save_field].
    """
    from halfmoll.grid.grids import StripGrid, BoundaryGrid, TimeAxis
    from halfmoll.grid.fields import SampledField
    stem = _stem(path)
    with open(stem.with_suffix('.json'), 'r') as f:
        header = json.load(f)
    if header.get('format') != 'halfmoll.SampledField':
        raise DimensionError(f'{stem}.json is not a sampled field header')
    if header['kind'] == 'strip':
        grid = StripGrid(header['dimension'], header['extent'],
                         header['length'], header['spacing'])
    else:
        grid = BoundaryGrid(header['dimension'], header['extent'],
                            header['spacing'])
    time = None
    if header.get('horizon') is not None:
        time = TimeAxis(header['horizon'], header['time_step'])
    payload = np.fromfile(stem.with_suffix('.bin'), dtype='<f8')
    values = torch.from_numpy(payload.astype(np.float64))
    return SampledField(grid, values.reshape(header['shape']), time)


def field_to_csv(field, path: Union[str, Path]) -> None:
    """
    Export a field as CSV: one row per node, coordinates (then time)
    and value.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x = field.grid.coordinates().reshape(-1, field.dim)
    names = [f'x{i + 1}' for i in range(field.dim)]
    if field.time is None:
        columns = [x, field.values.reshape(-1, 1)]
    else:
        t = field.time.nodes()
        nt = len(t)
        columns = [
            x.repeat_interleave(nt, 0),
            t.repeat(len(x))[:, None],
            field.values.reshape(-1, 1),
        ]
        names.append('t')
    table = torch.cat(columns, -1).numpy()
    np.savetxt(path, table, delimiter=',', header=','.join(names + ['value']),
               comments='', fmt='%.17g')
