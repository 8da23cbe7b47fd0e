__all__ = [
    'integrate',
    'integrate_time',
    'lp_norm',
]
# externals
import torch
from torch import Tensor

# internals
from halfmoll.grid.grids import StripGrid, BoundaryGrid, TimeAxis
from halfmoll.grid.fields import SampledField
from halfmoll.core.typing import RegionType
from halfmoll.core.errors import DimensionError, InvalidParameterError


def _check_region(f: SampledField, region: RegionType) -> None:
    expected = {'full': StripGrid, 'boundary': BoundaryGrid}.get(region)
    if expected is None:
        raise InvalidParameterError(f'Unknown region "{region}"')
    if not isinstance(f.grid, expected):
        raise DimensionError(
            f'Region "{region}" needs a {expected.__name__}, '
            f'got {type(f.grid).__name__}'
        )


def _trapezoid_space(values: Tensor, grid) -> Tensor:
    # spatial axes come first, so integrating axis 0 repeatedly
    # consumes them in order
    for h in grid.spacings:
        values = torch.trapezoid(values, dx=h, dim=0)
    return values


def integrate(f: SampledField, region: RegionType = 'full') -> Tensor:
    """
    Composite trapezoidal quadrature over the strip or its boundary.

    Parameters
    ----------
    f : SampledField
        Integrand.
    region : {'full', 'boundary'}
        Integration region; must match the kind of grid of `f`.

    Returns
    -------
    integral : tensor
        A scalar, or one value per time node if `f` has a time axis.
        On the boundary of a one-dimensional strip (a single point) the
        counting measure is used.
    """
    _check_region(f, region)
    return _trapezoid_space(f.values, f.grid)


def integrate_time(values: Tensor, time: TimeAxis) -> Tensor:
    """Trapezoidal quadrature along the last (time) axis."""
    return torch.trapezoid(values, dx=time.step, dim=-1)


def lp_norm(
    f: SampledField, p: float = 2.0, region: RegionType = 'full'
) -> Tensor:
    """
    $L^p$ norm $(\\int |f|^p)^{1/p}$ by trapezoidal quadrature.

    Parameters
    ----------
    f : SampledField
        Integrand.
    p : float
        Exponent, $1 \\leq p < \\infty$.
    region : {'full', 'boundary'}
        Integration region.

    Returns
    -------
    norm : tensor
        A scalar, or one value per time node.
    """
    p = float(p)
    if not (1 <= p < float('inf')):
        raise InvalidParameterError(f'Expected 1 <= p < inf, got {p}')
    _check_region(f, region)
    integral = _trapezoid_space(f.values.abs() ** p, f.grid)
    return integral.clamp_min(0) ** (1 / p)
