__all__ = [
    'VelocityFieldSpec',
    'ScalarFunction',
    'ScalarDataSpec',
]
# stdlib
import math
from dataclasses import dataclass

# externals
import torch
from torch import nn, Tensor

# internals
from halfmoll.io.loadable import LoadableMixin
from halfmoll.core.typing import Optional, ClassVar
from halfmoll.core.utils import default_dtype, as_points
from halfmoll.core.errors import InvalidParameterError


def _time_like(x: Tensor, t: Optional[Tensor]) -> Tensor:
    if t is None:
        return torch.zeros(x.shape[:-1], dtype=default_dtype)
    t = torch.as_tensor(t, dtype=default_dtype)
    return t.expand(x.shape[:-1])


class VelocityFieldSpec(LoadableMixin, nn.Module):
    """
    Base class for analytic velocity fields $b(x, t)$ with exact
    gradient and divergence.

    Subclasses implement `forward` and `gradient`; `divergence`
    defaults to the trace of the gradient.

    Attributes
    ----------
    dim : int
        Space dimension.
    name : str
        Registry name.
    regularity : {'constant', 'smooth', 'sobolev'}
        Regularity class. `'sobolev'` fields are not Lipschitz.
    solenoidal : bool
        Divergence vanishes identically.
    autonomous : bool
        Field does not depend on time.
    bound : float
        $\\sup|b|$ over the whole space (`inf` if unbounded; see
        [`sup_norm`][halfmoll.fields.norms.sup_norm] for a strip bound).
    """

    name: ClassVar[str] = 'field'
    regularity: ClassVar[str] = 'smooth'
    solenoidal: bool = False
    autonomous: bool = True
    bound: float = math.inf

    def __init__(self, dim: int = 2):
        super().__init__()
        if int(dim) != dim or dim < 1:
            raise InvalidParameterError(f'Expected dim >= 1, got {dim}')
        self.dim = int(dim)

    @property
    def is_uniform(self) -> bool:
        """Spatially constant (mollification leaves it unchanged)."""
        return self.regularity == 'constant'

    def _points(self, x) -> Tensor:
        return as_points(x, self.dim)

    def forward(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        """
        Parameters
        ----------
        x : (..., d) tensor
            Points.
        t : (...) tensor, optional
            Times (default 0).

        Returns
        -------
        b : (..., d) tensor
        """
        raise NotImplementedError

    def gradient(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        """
        Returns
        -------
        grad : (..., d, d) tensor
            `grad[..., i, j]` $= \\partial_j b_i$.
        """
        raise NotImplementedError

    def divergence(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        """
        Returns
        -------
        div : (...) tensor
        """
        return self.gradient(x, t).diagonal(0, -2, -1).sum(-1)

    def extra_repr(self) -> str:
        args = getattr(self, '_kwargs', {})
        return ', '.join(f'{k}={v}' for k, v in args.items())


class ScalarFunction(LoadableMixin, nn.Module):
    """
    Base class for analytic scalar data $u(x, t)$: initial data, boundary
    data (evaluated at boundary points, last coordinate 0) or exact
    solutions.

    Subclasses implement `forward` and `gradient`; `time_derivative`
    defaults to zero.
    """

    def __init__(self, dim: int = 2):
        super().__init__()
        if int(dim) != dim or dim < 1:
            raise InvalidParameterError(f'Expected dim >= 1, got {dim}')
        self.dim = int(dim)

    def _points(self, x) -> Tensor:
        return as_points(x, self.dim)

    def forward(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        raise NotImplementedError

    def gradient(self, x: Tensor, t: Optional[Tensor] = None) -> Tensor:
        """Spatial gradient, `(..., d)`."""
        raise NotImplementedError

    def time_derivative(
        self, x: Tensor, t: Optional[Tensor] = None
    ) -> Tensor:
        x = self._points(x)
        return torch.zeros(x.shape[:-1], dtype=default_dtype)


@dataclass
class ScalarDataSpec:
    """
    Initial and boundary data of a transport problem.

    Attributes
    ----------
    u0 : ScalarFunction
        Initial data on the strip.
    h : ScalarFunction
        Boundary data, evaluated at boundary points and times.
    p : float
        Integrability exponent, $1 \\leq p < \\infty$.
    support_radius : float
        Radius of a ball containing the supports of the data
        (`inf` if not compactly supported).
    """
    u0: ScalarFunction
    h: ScalarFunction
    p: float = 2.0
    support_radius: float = math.inf

    def __post_init__(self):
        if not (1 <= float(self.p) < math.inf):
            raise InvalidParameterError(
                f'Expected 1 <= p < inf, got {self.p}'
            )
        self.p = float(self.p)
