__all__ = [
    'Kernel1D',
    'HalfSpaceKernel',
    'BoundaryTimeKernel',
    'make_kernel',
]
# externals
from torch import nn, Tensor

# internals
from halfmoll.io.loadable import LoadableMixin
from halfmoll.core.typing import KernelKind, PointLike, ScalarLike, Tuple
from halfmoll.core.utils import check_positive
from halfmoll.core.errors import InvalidParameterError
from halfmoll.functional import kernels as F
from halfmoll.functional.stencils import (
    Stencil,
    stencil_step,
    half_space_stencil,
    time_stencil,
    boundary_time_stencil,
)


class Kernel1D(LoadableMixin, nn.Module):
    """
    One-dimensional mollifier.

    !!! note "Canonical choice"
        The symmetric kernel is the standard bump
        $\\exp(-1/(1 - x^2))$ normalized on $(-1, 1)$. Any even,
        nonnegative, compactly supported unit-mass kernel would do; the
        constants of the estimates (not their validity) depend on it.
    """

    def __init__(self, kind: KernelKind = 'symmetric', scale: float = 1.0):
        """
        Parameters
        ----------
        kind : {'symmetric', 'one_sided'}
            Kernel kind. Support is `[-scale, scale]` for the symmetric
            kernel and `[0, scale]` for the one-sided kernel.
        scale : float
            Kernel width $\\eta > 0$.
        """
        super().__init__()
        if kind not in ('symmetric', 'one_sided'):
            raise InvalidParameterError(f'Unknown kernel kind "{kind}"')
        self.kind = kind
        self.scale = check_positive('scale', scale)

    @property
    def normalization(self) -> float:
        """Normalization constant $C$ of the unscaled profile."""
        if self.kind == 'symmetric':
            return F.symmetric_normalization()
        return F.one_sided_normalization()

    @property
    def support(self) -> Tuple[float, float]:
        """Closed support interval."""
        if self.kind == 'symmetric':
            return (-self.scale, self.scale)
        return (0.0, self.scale)

    def forward(self, x: ScalarLike) -> Tensor:
        if self.kind == 'symmetric':
            return F.eval_symmetric(x, self.scale)
        return F.eval_one_sided(x, self.scale)

    def derivative(self, x: ScalarLike) -> Tensor:
        """Exact derivative, zero at the ends of the support."""
        if self.kind == 'symmetric':
            return F.symmetric_derivative(x, self.scale)
        return F.one_sided_derivative(x, self.scale)

    def extra_repr(self) -> str:
        return f'kind={self.kind}, scale={self.scale}'


class HalfSpaceKernel(LoadableMixin, nn.Module):
    """
    Half-space kernel
    $\\hat\\rho^d_\\eta(x) = \\rho^{(d-1)}_\\eta(x')\\,\\omega_\\eta(-x_d)$.

    Its support is $[-\\eta, \\eta]^{d-1} \\times [-\\eta, 0]$, so that
    the convolution $u * \\hat\\rho^d_\\eta$ at $x$ only samples $u$ at
    points $y$ with $y_d \\in [x_d, x_d + \\eta]$. In one dimension it
    reduces to $\\omega_\\eta(-x)$.
    """

    def __init__(self, dim: int = 2, scale: float = 1.0):
        """
        Parameters
        ----------
        dim : int
            Space dimension $d \\geq 1$.
        scale : float
            Kernel width $\\eta > 0$.
        """
        super().__init__()
        if int(dim) != dim or dim < 1:
            raise InvalidParameterError(f'Expected dim >= 1, got {dim}')
        self.dim = int(dim)
        self.scale = check_positive('scale', scale)
        self.tangential = Kernel1D('symmetric', self.scale)
        self.normal = Kernel1D('one_sided', self.scale)

    @property
    def support(self) -> Tuple[Tuple[float, float], ...]:
        """Support box, one `(lower, upper)` pair per axis."""
        eta = self.scale
        return ((-eta, eta),) * (self.dim - 1) + ((-eta, 0.0),)

    def forward(self, x: PointLike) -> Tensor:
        return F.eval_half_space_kernel(x, self.scale, self.dim)

    def gradient(self, x: PointLike) -> Tensor:
        """Analytic gradient, `(..., d)`."""
        return F.kernel_gradient(x, self.scale, self.dim)

    def stencil(self, spacing: float = None, nodes_per_eta: int = 32) -> Stencil:
        """
        Normalized quadrature stencil of the convolution.

        See [`stencil_step`][halfmoll.functional.stencils.stencil_step].
        """
        step = stencil_step(self.scale, spacing, nodes_per_eta)
        return half_space_stencil(self.scale, self.dim, step)

    def time_stencil(
        self, time_step: float = None, nodes_per_eta: int = 32
    ) -> Stencil:
        """Stencil of the forward time mollification $\\omega_\\eta(s - t)$."""
        step = stencil_step(self.scale, time_step, nodes_per_eta)
        return time_stencil(self.scale, step)

    def extra_repr(self) -> str:
        return f'dim={self.dim}, scale={self.scale}'


class BoundaryTimeKernel(LoadableMixin, nn.Module):
    """
    Boundary space-time kernel
    $\\tilde\\rho^d_\\eta(x', t) = \\rho^{(d-1)}_\\eta(x')\\,\\omega_\\eta(-t)$,
    symmetric along the boundary and one-sided (forward) in time.
    """

    def __init__(self, dim: int = 2, scale: float = 1.0):
        super().__init__()
        if int(dim) != dim or dim < 1:
            raise InvalidParameterError(f'Expected dim >= 1, got {dim}')
        self.dim = int(dim)
        self.scale = check_positive('scale', scale)

    def forward(self, x: PointLike, t: ScalarLike) -> Tensor:
        return F.eval_boundary_time_kernel(x, t, self.scale, self.dim)

    def stencil(
        self,
        spacing: float = None,
        time_step: float = None,
        nodes_per_eta: int = 32,
    ) -> Stencil:
        """Normalized `(z', tau)` stencil; the last column holds `tau`."""
        step = stencil_step(self.scale, spacing, nodes_per_eta)
        tstep = stencil_step(self.scale, time_step, nodes_per_eta)
        return boundary_time_stencil(self.scale, self.dim, step, tstep)

    def extra_repr(self) -> str:
        return f'dim={self.dim}, scale={self.scale}'


def make_kernel(kernel, dim: int = None, scale: float = None):
    """
    Instantiate a kernel.

    Parameters
    ----------
    kernel : str or type or nn.Module
        An instantiated kernel, a kernel class, or one of
        `{'symmetric', 'one_sided', 'half_space', 'boundary_time'}`.
    dim : int
        Space dimension (multi-dimensional kernels only).
    scale : float
        Kernel width.
    """
    if isinstance(kernel, nn.Module):
        return kernel
    if isinstance(kernel, str):
        if kernel in ('symmetric', 'one_sided'):
            return Kernel1D(kernel, scale)
        kernel = {
            'half_space': HalfSpaceKernel,
            'boundary_time': BoundaryTimeKernel,
        }.get(kernel, kernel)
        if isinstance(kernel, str):
            raise InvalidParameterError(f'Unknown kernel "{kernel}"')
    return kernel(dim, scale)
