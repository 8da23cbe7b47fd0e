"""
Interchange identities of the commutator pairing.

For solenoidal $b$,
$\\int r_\\eta(u, b)\\,v = \\int r^*_\\eta(v, b)\\,u$; for general $b$
the identity holds once both sides are corrected by the divergence terms
$(u * \\hat\\rho)\\,\\mathrm{div}\\, b$ and $(v \\star \\hat\\rho)\\,\\mathrm{div}\\, b$.
"""
__all__ = [
    'InterchangeResult',
    'interchange_residual',
    'generalized_interchange_residual',
]
# stdlib
from typing import NamedTuple

# internals
from halfmoll.grid.grids import StripGrid
from halfmoll.fields.base import VelocityFieldSpec
from halfmoll.mollify.commutator import commutator_pairing, FieldLike
from halfmoll.core.typing import Optional
from halfmoll.core.errors import NonSolenoidalError


class InterchangeResult(NamedTuple):
    lhs: float
    rhs: float
    residual: float

    @property
    def relative(self) -> float:
        """Residual relative to `|lhs| + |rhs| + 1`."""
        return self.residual / (abs(self.lhs) + abs(self.rhs) + 1)


def _pairing(u, v, b, eta, grid, s, correction, **kwargs):
    lhs, rhs = commutator_pairing(
        u, v, b, eta, grid, s, divergence_correction=correction, **kwargs
    )
    return InterchangeResult(lhs, rhs, abs(lhs - rhs))


def interchange_residual(
    u: FieldLike,
    v: FieldLike,
    b: VelocityFieldSpec,
    eta: float,
    grid: StripGrid,
    s: Optional[float] = None,
    **kwargs
) -> InterchangeResult:
    """
    Both sides of the solenoidal interchange identity and their gap.

    Parameters
    ----------
    u, v : SampledField or callable
        Compactly supported functions inside the admissible sub-strip.
    b : VelocityFieldSpec
        Solenoidal velocity field.
    eta : float
        Kernel width.
    grid : StripGrid
        Quadrature grid.
    s : float, optional
        Time slice.

    Other Parameters
    ----------------
    nodes_per_eta, interpolation, chunk
        See [`commutator_pairing`][halfmoll.mollify.commutator.commutator_pairing].

    Returns
    -------
    lhs, rhs, residual : float

    Raises
    ------
    NonSolenoidalError
        If `b` is not flagged solenoidal (use
        [`generalized_interchange_residual`][halfmoll.mollify.interchange.generalized_interchange_residual]).
    """  # noqa: E501
    if not b.solenoidal:
        raise NonSolenoidalError(
            f'{type(b).__name__} is not solenoidal: use '
            f'generalized_interchange_residual'
        )
    return _pairing(u, v, b, eta, grid, s, False, **kwargs)


def generalized_interchange_residual(
    u: FieldLike,
    v: FieldLike,
    b: VelocityFieldSpec,
    eta: float,
    grid: StripGrid,
    s: Optional[float] = None,
    **kwargs
) -> InterchangeResult:
    """
    Both sides of the divergence-corrected interchange identity

    $$
    \\int (r_\\eta(u, b) - (u * \\hat\\rho)\\,\\mathrm{div}\\, b)\\,v =
    \\int (r^*_\\eta(v, b) - (v \\star \\hat\\rho)\\,\\mathrm{div}\\, b)\\,u,
    $$

    valid for any divergence. When $\\mathrm{div}\\, b = 0$ the result
    coincides with [`interchange_residual`][halfmoll.mollify.interchange.interchange_residual].
    """  # noqa: E501
    return _pairing(u, v, b, eta, grid, s, True, **kwargs)
