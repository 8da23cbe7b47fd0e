"""
Analytic planar domains with closed-form signed distance, projection
and curvature.

Conventions
-----------
- The signed distance $d$ is negative inside the domain.
- Tubular coordinates are $\\Lambda(x) = (\\sigma, s)$ with $\\sigma$ the
  arc length of the projection $\\pi(x)$ and $s = -d(x)$ the depth.
- The curvature $\\kappa$ is positive where the domain is convex
  ($1/R$ on the boundary of a disk of radius $R$, $-1/R_1$ on the inner
  circle of an annulus), so that the area element is
  $J = 1 + \\kappa\\,d = 1 - \\kappa\\,s$.
"""
__all__ = [
    'SmoothDomain2D',
    'DOMAINS',
    'make_domain',
]
# stdlib
import math
import logging

# externals
import torch
from torch import Tensor

# internals
from halfmoll.io.loadable import LoadableMixin
from halfmoll.core.typing import Optional, Sequence, Union, List, Tuple
from halfmoll.core.utils import default_dtype, as_points, check_positive, \
    make_vector
from halfmoll.core.errors import (
    InvalidParameterError, DomainError, UnknownNameError
)

logger = logging.getLogger(__name__)

DOMAINS = ('disk', 'annulus', 'half_plane')


class SmoothDomain2D(LoadableMixin):
    """
    Disk, annulus or half-plane $\\{x_2 > 0\\}$.

    Each boundary component is a *piece*: the outer circle (index 0)
    and, for an annulus, the inner circle (index 1). The half-plane has
    a single straight piece parameterized by $x_1 \\in [-A, A]$.

    Attributes
    ----------
    kind : {'disk', 'annulus', 'half_plane'}
    delta : float
        Tubular half-width: the band is $\\{|d| < 2\\delta\\}$.
    """

    def __init__(
        self,
        kind: str = 'disk',
        radius: float = 1.0,
        inner_radius: Optional[float] = None,
        center: Sequence[float] = (0.0, 1.5),
        extent: float = 1.0,
        delta: Optional[float] = None,
    ):
        """
        Parameters
        ----------
        kind : {'disk', 'annulus', 'half_plane'}
            Domain type.
        radius : float
            (Outer) radius.
        inner_radius : float
            Inner radius of an annulus.
        center : (2,) sequence
            Center of a disk or annulus.
        extent : float
            Half-length of the boundary of a half-plane used in band
            integrals.
        delta : float, optional
            Tubular half-width. Defaults to a quarter of the (outer)
            radius, a quarter of the annulus gap if smaller, and 0.25
            for the half-plane.
        """
        if kind not in DOMAINS:
            raise UnknownNameError(
                f'Unknown domain "{kind}". Known domains: {DOMAINS}')
        self.kind = kind
        self.center = make_vector(center, 2)
        self.radius = check_positive('radius', radius)
        self.extent = check_positive('extent', extent)
        self.inner_radius = None
        if kind == 'annulus':
            if inner_radius is None or not (0 < inner_radius < radius):
                raise InvalidParameterError(
                    f'Annulus needs 0 < inner_radius < radius, got '
                    f'{inner_radius} and {radius}'
                )
            self.inner_radius = float(inner_radius)
        if delta is None:
            if kind == 'disk':
                delta = self.radius / 4
            elif kind == 'annulus':
                delta = min(self.radius, self.radius - self.inner_radius) / 4
            else:
                delta = 0.25
        self.delta = check_positive('delta', delta)
        if kind == 'annulus' and 4 * self.delta > \
                self.radius - self.inner_radius:
            raise InvalidParameterError(
                'Tubular bands of the two circles overlap: reduce delta')

    # ------------------------------------------------------------------
    #   pieces
    # ------------------------------------------------------------------

    @property
    def nb_pieces(self) -> int:
        return 2 if self.kind == 'annulus' else 1

    def _circle(self, piece: int) -> Tuple[float, float]:
        # (radius, orientation): +1 when the domain lies inside the circle
        if piece == 0:
            return self.radius, 1.0
        return self.inner_radius, -1.0

    def piece_length(self, piece: int = 0) -> float:
        """Length of a boundary piece."""
        if self.kind == 'half_plane':
            return 2 * self.extent
        return 2 * math.pi * self._circle(piece)[0]

    @property
    def periodic(self) -> bool:
        return self.kind != 'half_plane'

    def piece_of(self, x: Tensor) -> Tensor:
        """Index of the boundary piece nearest to `x`."""
        x = as_points(x, 2)
        if self.kind != 'annulus':
            return torch.zeros(x.shape[:-1], dtype=torch.long)
        r = (x - self.center).norm(dim=-1)
        middle = (self.radius + self.inner_radius) / 2
        return (r < middle).long()

    def _piece_parameters(self, piece: Tensor):
        radius = torch.full(piece.shape, self.radius, dtype=default_dtype)
        sign = torch.ones(piece.shape, dtype=default_dtype)
        if self.kind == 'annulus':
            inner = piece == 1
            inner_radius = torch.full_like(radius, self.inner_radius)
            radius = torch.where(inner, inner_radius, radius)
            sign = torch.where(inner, -sign, sign)
        return radius, sign

    # ------------------------------------------------------------------
    #   geometry
    # ------------------------------------------------------------------

    def signed_distance(self, x: Tensor) -> Tensor:
        """Signed distance to the boundary, negative inside."""
        x = as_points(x, 2)
        if self.kind == 'half_plane':
            return -x[..., 1]
        r = (x - self.center).norm(dim=-1)
        outer = r - self.radius
        if self.kind == 'disk':
            return outer
        return torch.maximum(outer, self.inner_radius - r)

    def depth(self, x: Tensor) -> Tensor:
        """Normal coordinate $s = -d(x)$."""
        return -self.signed_distance(x)

    def _unit(self, x: Tensor) -> Tensor:
        r = x - self.center
        return r / r.norm(dim=-1, keepdim=True)

    def projection(self, x: Tensor) -> Tensor:
        """Nearest boundary point $\\pi(x)$."""
        x = as_points(x, 2)
        if self.kind == 'half_plane':
            return torch.stack([x[..., 0], torch.zeros_like(x[..., 0])], -1)
        radius, _ = self._piece_parameters(self.piece_of(x))
        return self.center + radius[..., None] * self._unit(x)

    def normal(self, x: Tensor) -> Tensor:
        """Outward unit normal at $\\pi(x)$."""
        x = as_points(x, 2)
        if self.kind == 'half_plane':
            out = torch.zeros_like(x)
            out[..., 1] = -1
            return out
        _, sign = self._piece_parameters(self.piece_of(x))
        return sign[..., None] * self._unit(x)

    def curvature(self, x: Tensor) -> Tensor:
        """Curvature $\\kappa(\\pi(x))$."""
        x = as_points(x, 2)
        if self.kind == 'half_plane':
            return torch.zeros(x.shape[:-1], dtype=default_dtype)
        radius, sign = self._piece_parameters(self.piece_of(x))
        return sign / radius

    def arclength(self, x: Tensor) -> Tensor:
        """Arc length coordinate $\\sigma$ of $\\pi(x)$ on its piece."""
        x = as_points(x, 2)
        if self.kind == 'half_plane':
            return x[..., 0].clone()
        radius, _ = self._piece_parameters(self.piece_of(x))
        r = x - self.center
        return radius * torch.atan2(r[..., 1], r[..., 0])

    def to_tubular(self, x: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
        """$(\\sigma, s, \\text{piece})$ of points `x`."""
        x = as_points(x, 2)
        return self.arclength(x), self.depth(x), self.piece_of(x)

    def from_tubular(
        self,
        sigma: Tensor,
        depth: Tensor,
        piece: Union[int, Tensor] = 0,
    ) -> Tensor:
        """
        Point at arc length `sigma` and depth `depth` (positive inside),
        $\\Lambda^{-1}(\\sigma, s) = \\pi(\\sigma) - s\\,\\nu(\\sigma)$.
        """
        sigma = torch.as_tensor(sigma, dtype=default_dtype)
        depth = torch.as_tensor(depth, dtype=default_dtype)
        sigma, depth = torch.broadcast_tensors(sigma, depth)
        if self.kind == 'half_plane':
            return torch.stack([sigma, depth], -1)
        piece = torch.as_tensor(piece).expand(sigma.shape)
        radius, sign = self._piece_parameters(piece)
        angle = sigma / radius
        r = radius - sign * depth
        return self.center + r[..., None] * torch.stack(
            [torch.cos(angle), torch.sin(angle)], -1)

    def in_band(self, x: Tensor, margin: float = 0.0) -> Tensor:
        """Whether $|d(x)| + $ `margin` $< 2\\delta$."""
        return self.signed_distance(x).abs() + margin < 2 * self.delta

    def band_box(self) -> Tuple[Tensor, Tensor]:
        """
        Lower and upper corners of the smallest box that contains the
        tubular band of a disk or annulus.
        """
        if self.kind == 'half_plane':
            raise DomainError('The band of a half-plane is unbounded')
        reach = self.radius + 2 * self.delta
        return self.center - reach, self.center + reach

    def jacobian(self, x: Tensor) -> Tensor:
        """
        Area element of tubular coordinates,
        $J(\\Lambda(x)) = 1 + \\kappa(\\pi(x))\\,d(x)$.

        Raises
        ------
        DomainError
            If some point lies outside the band $|d| < 2\\delta$.
        """
        x = as_points(x, 2)
        if not self.in_band(x).all():
            raise DomainError(
                f'Points outside the tubular band |d| < {2 * self.delta}')
        return 1 + self.curvature(x) * self.signed_distance(x)

    def jacobian_at(self, depth: Tensor, piece: Union[int, Tensor] = 0):
        """$J$ at depth `depth` below a piece, $1 - \\kappa s$."""
        depth = torch.as_tensor(depth, dtype=default_dtype)
        if self.kind == 'half_plane':
            return torch.ones_like(depth)
        piece = torch.as_tensor(piece).expand(depth.shape)
        radius, sign = self._piece_parameters(piece)
        return 1 - sign * depth / radius

    def boundary_nodes(self, spacing: float) -> List[Tuple[int, Tensor]]:
        """
        Arc length nodes, about `spacing` apart, on every piece.

        Periodic pieces get `n` equispaced nodes over a full turn; the
        half-plane gets nodes on `[-extent, extent]` (both ends
        included).
        """
        out = []
        for piece in range(self.nb_pieces):
            length = self.piece_length(piece)
            n = max(int(math.ceil(length / spacing - 1e-9)), 4)
            if self.periodic:
                sigma = torch.arange(n, dtype=default_dtype) * (length / n)
                sigma = sigma - length / 2
            else:
                sigma = torch.linspace(-self.extent, self.extent, n + 1,
                                       dtype=default_dtype)
            out.append((piece, sigma))
        return out

    def __repr__(self):
        if self.kind == 'half_plane':
            return f'SmoothDomain2D(half_plane, delta={self.delta})'
        radii = f'radius={self.radius}'
        if self.inner_radius is not None:
            radii += f', inner_radius={self.inner_radius}'
        return (f'SmoothDomain2D({self.kind}, {radii}, '
                f'center={self.center.tolist()}, delta={self.delta})')


def make_domain(domain: Union[str, dict, SmoothDomain2D]) -> SmoothDomain2D:
    """Instantiate a domain from an instance, a kind, or a parameter table."""
    if isinstance(domain, SmoothDomain2D):
        return domain
    if isinstance(domain, str):
        return SmoothDomain2D(domain)
    params = dict(domain)
    kind = params.pop('kind', None) or params.pop('name', 'disk')
    return SmoothDomain2D(kind, **params)
