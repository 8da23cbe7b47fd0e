import math

import pytest
import torch

from halfmoll.grid.grids import StripGrid, BoundaryGrid, TimeAxis
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.grid.quadrature import integrate, integrate_time, lp_norm
from halfmoll.grid.convolution import (
    convolve_half_space, convolve_boundary_spacetime, check_horizon
)
from halfmoll.kernels.mollifiers import HalfSpaceKernel, BoundaryTimeKernel
from halfmoll.core.errors import (
    InvalidParameterError, DimensionError, NonFiniteError, TruncationError,
    OutOfHorizonError
)

f64 = torch.float64


@pytest.fixture
def grid():
    return StripGrid(2, extent=1.0, length=1.0, spacing=0.25)


@pytest.fixture
def linear(grid):
    return SampledField.from_function(
        grid, lambda x: x[..., 0] + 2 * x[..., 1])


def _ones(y, s=None):
    shape = y.shape[:-1] if s is None else s.shape
    return torch.ones(shape, dtype=f64)


def test_strip_grid(grid):
    assert grid.shape == (9, 5)
    x = grid.coordinates()
    assert x.shape == (9, 5, 2)
    assert x[0, 0].tolist() == [-1.0, 0.0]
    assert x[-1, -1].tolist() == [1.0, 1.0]
    assert grid.measure == 2.0
    with pytest.raises(InvalidParameterError):
        StripGrid(2, 1.0, 1.0, 0.3)
    with pytest.raises(InvalidParameterError):
        StripGrid(0, 1.0, 1.0, 0.25)


def test_subgrid_and_boundary(grid):
    sub = StripGrid(2, 1.0, 1.0, 0.1).subgrid(0.2)
    assert sub.extent == pytest.approx(0.8)
    assert sub.length == pytest.approx(0.8)
    with pytest.raises(DimensionError):
        grid.subgrid(1.0)
    boundary = grid.boundary()
    assert isinstance(boundary, BoundaryGrid)
    assert boundary.shape == (9,)
    assert bool((boundary.coordinates()[..., -1] == 0).all())
    assert StripGrid(1, spacing=0.25).boundary().coordinates().tolist() == [0.0]


def test_contains(grid):
    x = torch.tensor([[0.0, 0.5], [0.95, 0.5], [0.0, -0.1]], dtype=f64)
    assert grid.contains(x).tolist() == [True, True, False]
    assert grid.contains(x, margin=0.1).tolist() == [True, False, False]


def test_time_axis():
    time = TimeAxis(1.0, 0.25)
    assert time.nb_nodes == 5
    assert time.nodes().tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert TimeAxis(0.5).nb_nodes == 2
    with pytest.raises(InvalidParameterError):
        TimeAxis(1.0, 0.3)


def test_sampled_field_checks(grid):
    with pytest.raises(DimensionError):
        SampledField(grid, torch.zeros(7))
    values = torch.zeros(grid.shape, dtype=f64)
    values[1, 1] = float('nan')
    with pytest.raises(NonFiniteError):
        SampledField(grid, values)
    f = SampledField(grid, torch.zeros(grid.shape))
    f.values[0, 0] = 5
    assert float(f.values[0, 0]) == 0, "Sampled fields must be immutable"
    g = f.map(lambda v: v + 1)
    assert float(g.values.min()) == 1 and float(f.values.max()) == 0


def test_sample_linear(linear):
    nodes = linear.grid.coordinates()
    assert torch.equal(linear.sample(nodes), linear.values)
    x = torch.tensor([[0.1, 0.3], [-0.6, 0.85]], dtype=f64)
    expected = x[:, 0] + 2 * x[:, 1]
    assert torch.allclose(linear.sample(x), expected, atol=1e-12), \
        "Linear interpolation must reproduce linear functions"
    assert torch.allclose(evaluate(linear, x), expected, atol=1e-12)
    with pytest.raises(TruncationError):
        linear.sample(torch.tensor([[0.0, 1.5]], dtype=f64))


def test_sample_space_time(grid):
    time = TimeAxis(1.0, 0.25)
    f = SampledField.from_function(grid, lambda x, t: x[..., 1] + t, time)
    assert f.shape == (9, 5, 5)
    value = f.sample(torch.tensor([0.0, 0.5], dtype=f64),
                     torch.tensor(0.3, dtype=f64))
    assert float(value) == pytest.approx(0.8, abs=1e-12)
    with pytest.raises(DimensionError):
        f.sample(torch.tensor([0.0, 0.5], dtype=f64))
    assert f.at_time(2).shape == (9, 5)


def test_quadrature(grid, linear):
    ones = SampledField(grid, torch.ones(grid.shape))
    assert float(integrate(ones)) == pytest.approx(grid.measure)
    # trapezoidal quadrature is exact on linear integrands
    assert float(integrate(linear)) == pytest.approx(2 * 1.0, abs=1e-12)
    line = StripGrid(1, length=1.0, spacing=0.25)
    two = SampledField(line, 2 * torch.ones(line.shape))
    assert float(lp_norm(two, 2)) == pytest.approx(2.0)
    assert float(lp_norm(two, 1)) == pytest.approx(2.0)
    with pytest.raises(InvalidParameterError):
        lp_norm(two, 0.5)
    with pytest.raises(DimensionError):
        integrate(ones, 'boundary')
    time = TimeAxis(1.0, 0.25)
    assert float(integrate_time(time.nodes(), time)) == pytest.approx(0.5)


def test_quadrature_per_time_node(grid):
    time = TimeAxis(1.0, 0.5)
    f = SampledField.from_function(grid, lambda x, t: t + 0 * x[..., 0],
                                   time)
    norms = lp_norm(f, 1)
    assert norms.shape == (3,)
    assert torch.allclose(norms, torch.tensor([0.0, 1.0, 2.0], dtype=f64))


def test_one_sided_convolution_preserves_boundary_values():
    kernel = HalfSpaceKernel(2, 0.1)
    inside = lambda y: (y[..., -1] >= 0).to(f64)  # noqa: E731
    x = torch.tensor([[0.0, 0.0], [0.3, 0.0]], dtype=f64)
    assert torch.allclose(convolve_half_space(inside, kernel, x),
                          torch.ones(2, dtype=f64), atol=1e-14)
    assert torch.allclose(convolve_half_space(_ones, kernel, x),
                          torch.ones(2, dtype=f64), atol=1e-14)


def test_convolution_of_linear_function():
    eta = 0.1
    kernel = HalfSpaceKernel(2, eta)
    x = torch.tensor([0.1, 0.2], dtype=f64)
    value = convolve_half_space(lambda y: y[..., 0] + y[..., 1], kernel, x)
    # the one-sided kernel shifts by its mean eta / 2 along x_d
    assert float(value) == pytest.approx(0.1 + 0.2 + eta / 2, abs=1e-12)
    grad = convolve_half_space(lambda y: y[..., 0] + y[..., 1], kernel, x,
                               gradient=True)
    assert torch.allclose(grad, torch.ones(2, dtype=f64), atol=1e-10)


def test_convolution_margins(linear):
    kernel = HalfSpaceKernel(2, 0.5)
    x = torch.tensor([[0.0, 0.75]], dtype=f64)
    with pytest.raises(TruncationError):
        convolve_half_space(linear, kernel, x)
    with pytest.warns(UserWarning):
        convolve_half_space(linear, kernel, x, strict=False)
    with pytest.raises(DimensionError):
        convolve_half_space(linear, HalfSpaceKernel(3, 0.5), x)


def test_boundary_spacetime_convolution():
    kernel = BoundaryTimeKernel(2, 0.1)
    x = torch.tensor([[0.0, 0.0], [0.5, 0.0]], dtype=f64)
    t = torch.tensor([0.2, 0.3], dtype=f64)
    value = convolve_boundary_spacetime(_ones, kernel, x, t, horizon=1.0)
    assert torch.allclose(value, torch.ones(2, dtype=f64), atol=1e-14)
    # forward in time: the mean of the time offsets is eta / 2
    value = convolve_boundary_spacetime(
        lambda y, s: s, kernel, x, t, horizon=1.0)
    assert torch.allclose(value, t + 0.05, atol=1e-12)
    with pytest.raises(OutOfHorizonError):
        convolve_boundary_spacetime(_ones, kernel, x, t, horizon=0.35)
    check_horizon(None, t, 10.0)
    assert math.isfinite(float(value.sum()))
