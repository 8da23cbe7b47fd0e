import math

import pytest
import torch

from halfmoll.grid.grids import StripGrid
from halfmoll.fields.library import (
    FIELDS, ConstantField, VerticalInflow, RigidRotation, Shear, RoughPower,
    Compressive, PulsedInflow, RadialInflow, builtin_field, make_field
)
from halfmoll.fields.scalars import (
    Constant, Gaussian, Linear, Translated, Rotated, make_scalar
)
from halfmoll.fields.norms import (
    conjugate_exponent, exponent_check, sobolev_seminorm, normal_trace,
    sup_norm, divergence_sup, gradient_defect, divergence_defect
)
from halfmoll.io.loadable import LoadableMixin
from halfmoll.core.errors import (
    InvalidParameterError, DimensionError, HypothesisViolationError,
    UnknownNameError
)

f64 = torch.float64
POINTS = torch.tensor([[0.5, 0.3], [-0.4, 0.2], [0.7, 0.6]], dtype=f64)


@pytest.fixture
def grid():
    return StripGrid(2, 1.0, 1.0, 0.25)


@pytest.mark.parametrize('field', [
    ConstantField([0.3, 1.0]),
    RigidRotation(omega=2.0),
    Shear(rate=1.5),
    RoughPower(gamma=0.5),
    Compressive(rate=1.0),
    RadialInflow(center=[0.0, -0.5]),
])
def test_analytic_gradients(field):
    assert gradient_defect(field, POINTS) < 1e-6, \
        f"Analytic gradient of {field} differs from finite differences"
    assert divergence_defect(field, POINTS) < 1e-12


def test_registry():
    assert set(FIELDS) == {
        'constant', 'vertical_inflow', 'rigid_rotation', 'shear',
        'rough_power', 'compressive', 'pulsed_inflow', 'radial_inflow',
    }
    assert isinstance(make_field('shear', rate=2.0), Shear)
    rough = make_field({'name': 'rough_power', 'gamma': 0.25})
    assert isinstance(rough, RoughPower) and rough.gamma == 0.25
    assert isinstance(make_field('halfmoll.fields.library.Compressive'),
                      Compressive)
    field = Shear()
    assert make_field(field) is field
    with pytest.raises(UnknownNameError):
        make_field('vortex')
    with pytest.raises(KeyError):
        make_field('vortex')
    rotation = builtin_field('rigid_rotation', omega=2.0)
    assert isinstance(rotation, RigidRotation) and rotation.omega == 2.0
    with pytest.raises(UnknownNameError):
        builtin_field('halfmoll.fields.library.Shear')


def test_singular_centers_are_finite():
    center = torch.tensor([[0.0, 0.5], [0.3, 0.5]], dtype=f64)
    radial = RadialInflow(center=[0.0, 0.5])
    assert radial(center)[0].tolist() == [0.0, 0.0]
    assert radial(center)[1].tolist() == pytest.approx([-1.0, 0.0])
    assert radial.gradient(center)[0].abs().max() == 0
    assert float(radial.divergence(center)[0]) == 0
    assert float(radial.divergence(center)[1]) == pytest.approx(-1 / 0.3)
    rough = RoughPower(gamma=0.5, center=[0.0, 0.5])
    for value in (rough(center), rough.gradient(center),
                  rough.divergence(center)):
        assert bool(torch.isfinite(value).all()), \
            "Rough field is not finite at its center"
    assert rough.gradient(center)[0].abs().max() == 0


def test_field_flags():
    for field in (ConstantField(), RigidRotation(), Shear()):
        assert field.solenoidal
        assert float(field.divergence(POINTS).abs().max()) == 0
    assert torch.allclose(Compressive(rate=3.0).divergence(POINTS),
                          torch.full([3], 3.0, dtype=f64))
    assert not PulsedInflow().autonomous
    assert RoughPower().regularity == 'sobolev'
    assert RoughPower(gamma=0.5).critical_exponent() == pytest.approx(4.0)


def test_invalid_fields():
    with pytest.raises(InvalidParameterError):
        RoughPower(gamma=1.0)
    with pytest.raises(InvalidParameterError):
        PulsedInflow(amplitude=1.0)
    with pytest.raises(DimensionError):
        Shear(dim=1)
    with pytest.raises(DimensionError):
        Shear()(torch.zeros(3, dtype=f64))


def test_normal_trace():
    x = torch.tensor([[0.0, 0.0], [0.5, 0.3]], dtype=f64)
    inflow = normal_trace(VerticalInflow(2, 2.0), x)
    assert inflow.tolist() == [-2.0, -2.0], "b = e_d enters the half-space"
    outflow = normal_trace(ConstantField([0.0, -1.0]), x)
    assert outflow.tolist() == [1.0, 1.0]
    # the trace is taken at the projection on the boundary
    shear = normal_trace(Shear(), x)
    assert shear.tolist() == [0.0, 0.0]


def test_exponents():
    assert conjugate_exponent(1) == math.inf
    assert conjugate_exponent(2) == 2
    assert conjugate_exponent(4) == pytest.approx(4 / 3)
    with pytest.raises(InvalidParameterError):
        conjugate_exponent(0.5)
    assert exponent_check(2, 2) == pytest.approx(1.0)
    assert exponent_check(4, 4) == pytest.approx(2.0)
    with pytest.raises(HypothesisViolationError):
        exponent_check(2, 1.5)
    with pytest.raises(ValueError):
        exponent_check(2, 1.5)


def test_norms(grid):
    shear = Shear(rate=2.0)
    assert sobolev_seminorm(shear, 2, grid) == \
        pytest.approx(2 * math.sqrt(grid.measure))
    assert sobolev_seminorm(shear, math.inf, grid) == pytest.approx(2.0)
    assert sobolev_seminorm(ConstantField(), 2, grid) == 0
    assert sup_norm(shear, grid) == pytest.approx(2.0)
    assert sup_norm(ConstantField([3.0, 4.0]), grid) == pytest.approx(5.0)
    times = torch.tensor([0.0, 0.25], dtype=f64)
    assert sup_norm(PulsedInflow(), grid, times) == pytest.approx(1.5)
    assert divergence_sup(Compressive(rate=-2.0), grid) == pytest.approx(2)
    assert divergence_sup(RigidRotation(), grid) == 0


def test_scalars():
    u = make_scalar('constant', 3, value=2.0)
    assert isinstance(u, Constant) and u.dim == 3
    assert float(u(torch.zeros(3, dtype=f64))) == 2.0
    g = make_scalar({'name': 'gaussian', 'center': [0.0, 0.5],
                     'width': 0.2})
    assert isinstance(g, Gaussian) and g.dim == 2
    assert float(g(torch.tensor([0.0, 0.5], dtype=f64))) == 1.0
    assert g.support_radius > 5 * g.width
    with pytest.raises(UnknownNameError):
        make_scalar('sawtooth')
    lin = Linear([1.0, 2.0], offset=1.0, time_rate=-1.0)
    x = torch.tensor([0.5, 0.25], dtype=f64)
    assert float(lin(x, torch.tensor(2.0, dtype=f64))) == pytest.approx(0.0)
    assert lin.gradient(x).tolist() == [1.0, 2.0]


@pytest.mark.parametrize('carried,field', [
    (Translated(Gaussian([0.0, 0.5], 0.2), [0.3, 1.0]),
     ConstantField([0.3, 1.0])),
    (Rotated(Gaussian([0.3, 0.5], 0.2), [0.0, 0.0], 1.5),
     RigidRotation([0.0, 0.0], 1.5)),
])
def test_carried_data_solve_transport(carried, field):
    t = torch.full([3], 0.4, dtype=f64)
    dt = 1e-6
    fd = (carried(POINTS, t + dt) - carried(POINTS, t - dt)) / (2 * dt)
    assert torch.allclose(carried.time_derivative(POINTS, t), fd,
                          atol=1e-6)
    transport = carried.time_derivative(POINTS, t) + \
        (carried.gradient(POINTS, t) * field(POINTS, t)).sum(-1)
    assert float(transport.abs().max()) < 1e-12, \
        "Carried data must solve the transport equation"


def test_field_loadable():
    reference = Shear(rate=2.5)
    loaded = LoadableMixin.load(reference.serialize())
    assert isinstance(loaded, Shear) and loaded.rate == 2.5
    assert torch.equal(loaded(POINTS), reference(POINTS))
