import math

import pytest
import torch

from halfmoll.grid.grids import StripGrid, TimeAxis
from halfmoll.grid.fields import SampledField
from halfmoll.grid.convolution import convolve_half_space
from halfmoll.kernels.mollifiers import HalfSpaceKernel
from halfmoll.fields.library import RadialInflow
from halfmoll.fields.scalars import Constant, Gaussian
from halfmoll.transport.characteristics import solve_characteristics
from halfmoll.geometry.domains import SmoothDomain2D, make_domain
from halfmoll.geometry.tubular import (
    band_integral, cartesian_band_integral, tubular_kernel_mass,
    cartesian_kernel_mass, tubular_mollify, curved_trace_residual
)
from halfmoll.core.errors import (
    DomainError, ScaleTooCoarseError, InvalidParameterError,
    UnknownNameError
)

f64 = torch.float64


@pytest.fixture
def disk():
    return SmoothDomain2D('disk', radius=1.0, center=(0.0, 1.25))


@pytest.fixture
def annulus():
    return SmoothDomain2D('annulus', radius=1.0, inner_radius=0.5,
                          center=(0.0, 0.0))


def test_disk_geometry(disk):
    x = torch.tensor([0.0, 0.5], dtype=f64)
    assert float(disk.signed_distance(x)) == pytest.approx(-0.25)
    assert disk.projection(x).tolist() == pytest.approx([0.0, 0.25])
    assert disk.normal(x).tolist() == pytest.approx([0.0, -1.0])
    assert float(disk.curvature(x)) == 1.0
    assert float(disk.jacobian(x)) == pytest.approx(0.75)
    assert disk.delta == 0.25


def test_annulus_geometry(annulus):
    x = torch.tensor([0.6, 0.0], dtype=f64)
    assert int(annulus.piece_of(x)) == 1
    assert float(annulus.signed_distance(x)) == pytest.approx(-0.1)
    assert float(annulus.curvature(x)) == pytest.approx(-2.0)
    assert annulus.normal(x).tolist() == pytest.approx([-1.0, 0.0])
    # the inner circle bends away from the domain: J > 1 inside
    assert float(annulus.jacobian(x)) == pytest.approx(1.2)
    assert annulus.delta == pytest.approx(0.125)


def test_tubular_coordinates(disk, annulus):
    for domain in (disk, annulus, SmoothDomain2D('half_plane')):
        for piece in range(domain.nb_pieces):
            sigma = torch.tensor([-0.3, 0.1, 0.4], dtype=f64)
            depth = torch.tensor([0.0, 0.05, 0.2], dtype=f64)
            x = domain.from_tubular(sigma, depth, piece)
            s, d, p = domain.to_tubular(x)
            assert torch.allclose(s, sigma, atol=1e-12)
            assert torch.allclose(d, depth, atol=1e-12)
            assert (p == piece).all()
            assert torch.allclose(domain.jacobian(x),
                                  domain.jacobian_at(depth, piece),
                                  atol=1e-12)


def test_jacobian_outside_band(disk):
    with pytest.raises(DomainError):
        disk.jacobian(torch.tensor([0.0, 1.25], dtype=f64))


def test_band_box(disk, annulus):
    lower, upper = disk.band_box()
    assert lower.tolist() == pytest.approx([-1.5, -0.25])
    assert upper.tolist() == pytest.approx([1.5, 2.75])
    lower, upper = annulus.band_box()
    assert upper.tolist() == pytest.approx([1.25, 1.25])
    lower, upper = SmoothDomain2D().band_box()
    assert float(lower[1]) == pytest.approx(0.0), \
        "The default disk band must fit above the flat boundary"
    with pytest.raises(DomainError):
        SmoothDomain2D('half_plane').band_box()


def test_invalid_domains():
    with pytest.raises(UnknownNameError):
        SmoothDomain2D('square')
    with pytest.raises(InvalidParameterError):
        SmoothDomain2D('annulus', radius=1.0, inner_radius=1.5)
    with pytest.raises(InvalidParameterError):
        SmoothDomain2D('annulus', radius=1.0, inner_radius=0.5, delta=0.2)
    domain = make_domain({'kind': 'disk', 'radius': 0.5})
    assert domain.radius == 0.5 and domain.delta == 0.125
    assert make_domain('half_plane').kind == 'half_plane'


def test_band_area(disk, annulus):
    def one(y):
        return torch.ones(y.shape[:-1], dtype=f64)

    depth = 0.5
    assert band_integral(disk, one) == \
        pytest.approx(math.pi * (1 - (1 - depth) ** 2), rel=1e-12)
    depth = 0.25
    ring = math.pi * (1 - (1 - depth) ** 2) \
        + math.pi * ((0.5 + depth) ** 2 - 0.25)
    assert band_integral(annulus, one) == pytest.approx(ring, rel=1e-12)
    flat = SmoothDomain2D('half_plane', extent=0.75)
    assert band_integral(flat, one, 0.3) == pytest.approx(1.5 * 0.3)
    with pytest.raises(DomainError):
        band_integral(disk, one, 0.6)


def test_band_integral_matches_cartesian():
    domain = SmoothDomain2D('disk', radius=0.5, center=(0.1, 0.7))

    def f(y):
        return y[..., 0] ** 2 + y[..., 1]

    tubular = band_integral(domain, f)
    cartesian = cartesian_band_integral(domain, f, epsabs=1e-9,
                                        epsrel=1e-8)
    assert tubular == pytest.approx(cartesian, rel=1e-6)


def test_kernel_mass(disk):
    x = torch.tensor([0.0, 0.35], dtype=f64)
    eta = 0.1
    # J is linear in depth and the kernel mean is eta / 2
    mass = tubular_kernel_mass(disk, eta, x)
    assert float(mass) == pytest.approx(1 - (0.1 + eta / 2), rel=1e-10)
    exact = cartesian_kernel_mass(disk, eta, x, epsabs=1e-10, epsrel=1e-8)
    assert exact == pytest.approx(float(mass), rel=1e-5)
    flat = SmoothDomain2D('half_plane')
    assert float(tubular_kernel_mass(flat, eta, x)) == \
        pytest.approx(1.0, abs=1e-13)


def test_kernel_scale(disk):
    x = torch.tensor([0.0, 0.35], dtype=f64)
    with pytest.raises(ScaleTooCoarseError):
        tubular_kernel_mass(disk, 0.25, x)
    with pytest.raises(DomainError):
        tubular_kernel_mass(disk, 0.1, torch.tensor([0.0, 0.1], dtype=f64))
    with pytest.raises(DomainError):
        tubular_kernel_mass(disk, 0.1, torch.tensor([0.0, 0.8], dtype=f64))


def test_tubular_mollify(disk):
    x = torch.tensor([[0.0, 0.3], [0.5, 0.5], [0.2, 0.4]], dtype=f64)
    x = disk.projection(x) - 0.05 * disk.normal(x)
    value = tubular_mollify(Constant(3.0), 0.1, x, domain=disk)
    assert torch.allclose(value, torch.full([3], 3.0, dtype=f64),
                          atol=1e-12)


def test_tubular_mollify_flat_reduction():
    flat = SmoothDomain2D('half_plane')
    u = Gaussian([0.1, 0.1], 0.1)
    x = torch.tensor([[0.0, 0.0], [0.2, 0.1], [-0.1, 0.3]], dtype=f64)
    tubular = tubular_mollify(u, 0.1, x, domain=flat)
    half_space = convolve_half_space(u, HalfSpaceKernel(2, 0.1), x)
    assert torch.allclose(tubular, half_space, atol=1e-12)


def _constant_solution():
    grid = StripGrid(2, 0.5, 1.0, 1 / 32)
    time = TimeAxis(0.25, 1 / 16)
    u = SampledField(grid, torch.ones(grid.shape + (time.nb_nodes,),
                                      dtype=f64), time)
    domain = SmoothDomain2D('disk', radius=0.3, center=(0.0, 0.5))
    b = RadialInflow(center=[0.0, 0.5])
    return u, b, domain


def test_curved_trace_residual():
    u, b, domain = _constant_solution()
    residual = curved_trace_residual(u, b, Constant(1.0), 0.05, domain,
                                     nodes_per_eta=8)
    assert residual.window == (0.0625, 0.1875)
    assert residual.norm < 1e-10
    assert len(residual.pieces) == 1

    wrong = curved_trace_residual(u, b, Constant(0.0), 0.05, domain,
                                  nodes_per_eta=8)
    perimeter = 2 * math.pi * 0.3
    assert wrong.norm == pytest.approx(perimeter * 0.125, rel=1e-9)
    with pytest.raises(ScaleTooCoarseError):
        curved_trace_residual(u, b, Constant(1.0), 0.1, domain)


def test_curved_trace_of_radial_inflow_solution():
    grid = StripGrid(2, 0.5, 1.0, 1 / 32)
    time = TimeAxis(0.25, 1 / 16)
    domain = SmoothDomain2D('disk', radius=0.3, center=(0.0, 0.5))
    # the center of the field is the grid node (16, 16), where b = 0
    b = RadialInflow(center=[0.0, 0.5])
    front = solve_characteristics(b, Constant(1.0), Constant(0.0), grid,
                                  time, domain=domain)
    assert bool(torch.isfinite(front.values).all())
    assert front.values[16, 16].tolist() == [0.0] * time.nb_nodes, \
        "The front enters at speed 1 and reaches the center at t = 0.3"
    # (0.25, 0.5) lies 0.05 inside the circle
    assert front.values[24, 16].tolist() == [0.0] + [1.0] * 4

    u = solve_characteristics(b, Constant(1.0), Constant(1.0), grid, time,
                              domain=domain)
    residual = curved_trace_residual(u, b, Constant(1.0), 0.05, domain,
                                     nodes_per_eta=8)
    assert residual.norm < 1e-10
