import math

import pytest
import torch

from halfmoll.grid.grids import StripGrid, TimeAxis
from halfmoll.grid.fields import SampledField, evaluate
from halfmoll.fields.library import (
    ConstantField, VerticalInflow, Shear, RigidRotation, Compressive
)
from halfmoll.fields.scalars import Constant, Gaussian, Linear, Translated
from halfmoll.mollify.approximate import (
    ApproximateSolution, mollify_solution, mollify_field, mollify_data
)
from halfmoll.mollify.commutator import (
    commutator, commutator_sample, commutator_convergence, adjoint_commutator
)
from halfmoll.mollify.interchange import (
    interchange_residual, generalized_interchange_residual
)
from halfmoll.mollify.traces import (
    boundary_trace_residual, initial_trace_residual, trace_convergence,
    mollifier_defect
)
from halfmoll.core.errors import (
    InvalidParameterError, HypothesisViolationError, NonSolenoidalError,
    UnderResolvedKernelError, OutOfHorizonError, DomainError, DimensionError
)

f64 = torch.float64


def test_uniform_field_commutes():
    u = Gaussian([0.0, 0.5], 0.1)
    x = torch.tensor([[0.0, 0.2], [0.3, 0.0]], dtype=f64)
    r = commutator(u, ConstantField([0.3, 1.0]), 0.1, x)
    assert torch.equal(r, torch.zeros(2, dtype=f64))


@pytest.mark.parametrize('method', ['distributional', 'direct'])
@pytest.mark.parametrize('eta', [0.2, 0.05])
@pytest.mark.parametrize('nodes_per_eta', [16, 32])
def test_linear_commutator(method, eta, nodes_per_eta):
    # u(y) = y and b(y) = y on the half-line: r = mean of the kernel
    u = Linear([1.0])
    b = Compressive(rate=1.0, dim=1)
    x = torch.tensor([[0.0], [0.3], [0.5]], dtype=f64)
    r = commutator(u, b, eta, x, method=method, nodes_per_eta=nodes_per_eta)
    assert torch.allclose(r, torch.full([3], eta / 2, dtype=f64),
                          rtol=0, atol=1e-9), \
        f"Commutator {r.tolist()} != eta/2 = {eta / 2}"


def test_commutator_methods_agree():
    u = Gaussian([0.1, 0.4], 0.15)
    b = RigidRotation([0.05, -0.1], 2.0)
    x = torch.tensor([[0.0, 0.0], [0.2, 0.3], [-0.1, 0.5]], dtype=f64)
    distributional = commutator(u, b, 0.1, x)
    direct = commutator(u, b, 0.1, x, method='direct')
    assert torch.allclose(distributional, direct, atol=1e-6)
    sample = commutator_sample(u, b, 0.1, x[1])
    assert sample.value == pytest.approx(float(distributional[1]))


def test_commutator_errors():
    u = Gaussian([0.0, 0.5], 0.1)
    b = Shear()
    with pytest.raises(DomainError):
        commutator(u, b, 0.1, torch.tensor([0.0, -0.1], dtype=f64))
    with pytest.raises(InvalidParameterError):
        commutator(u, b, 0.1, torch.tensor([0.0, 0.1], dtype=f64),
                   method='symbolic')
    # the direct form needs an analytic gradient
    with pytest.raises(InvalidParameterError):
        commutator(lambda y: y[..., 0], b, 0.1,
                   torch.tensor([0.0, 0.1], dtype=f64), method='direct')


def test_commutator_convergence():
    grid = StripGrid(2, 0.5, 0.5, 1 / 32)
    u = Gaussian([0.0, 0.2], 0.1)
    report = commutator_convergence(u, Shear(rate=1.0), 2, 2, [0.2, 0.1],
                                    grid, nodes_per_eta=8)
    assert len(report) == 2
    assert report.is_decreasing(), report.norm
    assert report.is_bounded()
    assert all(ratio > 0 for ratio in report.bound_ratio)
    assert report.metadata['alpha'] == pytest.approx(1.0)

    with pytest.raises(InvalidParameterError):
        commutator_convergence(u, Shear(), 2, 2, [0.1, 0.2], grid)
    with pytest.raises(HypothesisViolationError):
        commutator_convergence(u, Shear(), 2, 1.5, [0.2, 0.1], grid)
    with pytest.raises(UnderResolvedKernelError):
        commutator_convergence(u, Shear(), 2, 2, [0.2, 0.05], grid)


def _pair():
    grid = StripGrid(2, 0.5, 1.0, 1 / 32)
    u = Gaussian([0.0, 0.5], 0.05)
    v = Gaussian([0.05, 0.47], 0.05)
    return grid, u, v


def test_interchange_identity():
    grid, u, v = _pair()
    result = interchange_residual(u, v, Shear(rate=2.0), 0.125, grid)
    assert abs(result.lhs) > 1e-6, "The pairing should not be trivial"
    assert result.relative < 1e-8, result
    with pytest.raises(NonSolenoidalError):
        interchange_residual(u, v, Compressive(), 0.125, grid)
    same = interchange_residual(u, u, Shear(), 0.125, grid)
    assert same.relative < 1e-8, same


def test_generalized_interchange_identity():
    grid, u, v = _pair()
    result = generalized_interchange_residual(
        u, v, Compressive(rate=1.5, center=[0.05, 0.3]), 0.125, grid)
    assert result.relative < 1e-8, result
    solenoidal = interchange_residual(u, v, Shear(), 0.125, grid)
    corrected = generalized_interchange_residual(u, v, Shear(), 0.125, grid)
    assert corrected.lhs == pytest.approx(solenoidal.lhs, abs=1e-14)


@pytest.mark.parametrize('field', [Shear(rate=2.0), RigidRotation()])
def test_interchange_against_refined_quadrature(field):
    # right side integrated independently: adjoint commutator sampled
    # on a lattice four times finer than the coarse grid
    _, u, v = _pair()
    eta = 0.125
    fine = StripGrid(2, 0.375, 0.875, 1 / 64)
    y = fine.coordinates().reshape(-1, 2)
    reference = float(
        (adjoint_commutator(v, field, eta, y) * evaluate(u, y)).sum()
    ) / 64 ** 2
    assert abs(reference) > 1e-6
    gaps, residuals = [], []
    for spacing in (1 / 16, 1 / 32):
        result = interchange_residual(
            u, v, field, eta, StripGrid(2, 0.5, 1.0, spacing))
        gaps.append(abs(result.rhs - reference))
        residuals.append(result.residual)
    assert gaps[1] < 1e-8 * (abs(reference) + 1), gaps
    assert gaps[0] >= 3 * gaps[1], gaps
    assert residuals[1] < 1e-8, residuals
    assert residuals[0] >= 3 * residuals[1], residuals


def test_generalized_interchange_under_grid_halving():
    u = Gaussian([0.5], 0.05)
    v = Gaussian([0.47], 0.05)
    residuals = []
    for spacing in (1 / 16, 1 / 32):
        grid = StripGrid(1, length=1.0, spacing=spacing)
        result = generalized_interchange_residual(
            u, v, Compressive(rate=1.0, dim=1), 0.125, grid)
        assert abs(result.lhs) > 1e-6, result
        residuals.append(result.residual)
    assert residuals[1] < 1e-6, residuals
    assert residuals[0] >= 3 * residuals[1], residuals


def test_approximate_equation_for_exact_solution():
    velocity = [0.3, 1.0]
    u = Translated(Gaussian([0.0, 0.5], 0.1), velocity)
    u_eta = ApproximateSolution(u, 0.1, dim=2)
    x = torch.tensor([[0.0, 0.4], [0.2, 0.3], [-0.1, 0.0]], dtype=f64)
    t = torch.tensor(0.1, dtype=f64)
    residual = u_eta.approximate_pde_residual(ConstantField(velocity), x, t)
    scale = float(u_eta.gradient(x, t).abs().max())
    assert scale > 1
    assert float(residual.abs().max()) < 1e-4 * scale


def test_static_mollification_keeps_constants():
    u_eta = ApproximateSolution(Constant(2.0, 2), 0.1, static=True)
    x = torch.tensor([[0.0, 0.0], [0.3, 0.0], [0.1, 0.7]], dtype=f64)
    assert torch.allclose(u_eta(x), torch.full([3], 2.0, dtype=f64),
                          atol=1e-13)
    assert float(u_eta.gradient(x).abs().max()) < 1e-10
    with pytest.raises(DimensionError):
        u_eta.approximate_pde_residual(ConstantField(), x, 0.0)


def test_mollify_field_keeps_uniform_fields():
    b = VerticalInflow()
    assert mollify_field(b, 0.1) is b


def test_mollify_data_keeps_constants():
    b = ConstantField([0.3, 1.0])
    b_eta, h_eta, u0_eta = mollify_data(
        b, Constant(2.0), Constant(-1.0), 0.1, horizon=1.0)
    assert b_eta is b
    x = torch.tensor([[0.0, 0.0], [0.4, 0.0], [-0.2, 0.0]], dtype=f64)
    h = h_eta(x, torch.tensor(0.2, dtype=f64))
    assert torch.allclose(h, torch.full([3], 2.0, dtype=f64), atol=1e-12)
    u0 = u0_eta(x + torch.tensor([0.0, 0.3], dtype=f64))
    assert torch.allclose(u0, torch.full([3], -1.0, dtype=f64), atol=1e-12)
    with pytest.raises(OutOfHorizonError):
        h_eta(x, torch.tensor(0.95, dtype=f64))
    with pytest.raises(InvalidParameterError):
        mollify_data(b, Constant(2.0), Constant(-1.0), 0.0)


def _unit_solution():
    grid = StripGrid(2, 0.5, 0.5, 1 / 16)
    time = TimeAxis(0.5, 1 / 16)
    return SampledField(grid, torch.ones(grid.shape + (time.nb_nodes,),
                                         dtype=f64), time)


def test_mollify_solution_resolution():
    u = _unit_solution()
    with pytest.raises(UnderResolvedKernelError):
        mollify_solution(u, 0.1)


def test_trace_residuals_of_exact_solution():
    u = _unit_solution()
    b = VerticalInflow()
    boundary = boundary_trace_residual(u, b, Constant(1.0), 0.125)
    assert boundary.norm < 1e-12
    assert boundary.window == (0.125, 0.375)
    initial = initial_trace_residual(u, Constant(1.0), 0.125)
    assert initial.norm < 1e-12

    report = trace_convergence(u, b, Constant(1.0), Constant(1.0),
                               [0.25, 0.125])
    assert max(report.norm) < 1e-12
    assert max(report.extra['initial']) < 1e-12


def test_trace_residuals_detect_wrong_data():
    u = _unit_solution()
    boundary = boundary_trace_residual(u, VerticalInflow(), Constant(0.0),
                                       0.125)
    # |u_eta b.nu| = 1 on [-3/8, 3/8] x [1/8, 3/8]
    assert boundary.norm == pytest.approx(0.75 * 0.25, rel=1e-10)
    initial = initial_trace_residual(u, Constant(0.5), 0.125)
    assert initial.norm > 0.1


def test_trace_window():
    u = _unit_solution()
    with pytest.raises(OutOfHorizonError):
        boundary_trace_residual(u, VerticalInflow(), Constant(1.0), 0.3)


def test_mollifier_defect():
    defect = mollifier_defect(1.0, 0.1)
    assert defect.symmetric == pytest.approx(0.5, abs=1e-10)
    assert defect.one_sided == pytest.approx(1.0, abs=1e-10)
    ramp = mollifier_defect(lambda y: y, 0.2)
    assert ramp.one_sided == pytest.approx(0.1, abs=1e-10)
    assert math.isfinite(ramp.symmetric) and ramp.symmetric > 0
