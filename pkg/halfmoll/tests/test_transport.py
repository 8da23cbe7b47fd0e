import math

import pytest
import torch

from halfmoll.grid.grids import StripGrid, TimeAxis
from halfmoll.grid.fields import SampledField
from halfmoll.fields.library import ConstantField, VerticalInflow
from halfmoll.fields.scalars import Constant, Gaussian, Linear
from halfmoll.transport import weak
from halfmoll.transport.characteristics import (
    trace_characteristics, solve_characteristics
)
from halfmoll.transport.relabel import (
    make_relabel, renormalize, relabel_data, truncation_relabel,
    inverse_relabel
)
from halfmoll.transport.energy import (
    energy, gronwall_check, energy_identity_check
)
from halfmoll.transport.uniqueness import (
    outflow_perturbation, uniqueness_experiment
)
from halfmoll.core.errors import (
    TruncationError, CoverageError, InvalidParameterError, UnknownNameError
)

f64 = torch.float64


def _inflow_problem():
    """u = 1 + t - x_d, carried upward from the boundary."""
    b = VerticalInflow(2, 1.0)
    h = Linear([0.0, 0.0], offset=1.0, time_rate=1.0)
    u0 = Linear([0.0, -1.0], offset=1.0)
    return b, h, u0


def _exact(grid, time):
    x = grid.coordinates()[..., None, -1]
    return 1 + time.nodes() - x


def test_characteristics_kinds():
    grid = StripGrid(2, 0.5, 1.0, 1 / 8)
    x = torch.tensor([[0.0, 0.5], [0.0, 0.1], [0.0, 0.0]], dtype=f64)
    trace = trace_characteristics(VerticalInflow(), x, 0.25, grid)
    assert trace.kind_names() == [
        'hit_initial_plane', 'hit_boundary', 'hit_boundary']
    assert trace.end_time[1].item() == pytest.approx(0.15, abs=1e-9)
    assert trace.end[0, -1].item() == pytest.approx(0.25, abs=1e-12)
    assert trace.end_time[2].item() == 0.25
    outward = trace_characteristics(ConstantField([0.0, -1.0]), x, 0.6, grid)
    assert outward.kind_names()[0] == 'left_strip'


def test_solve_linear_inflow():
    b, h, u0 = _inflow_problem()
    grid = StripGrid(2, 0.25, 1.0, 1 / 8)
    time = TimeAxis(0.5, 1 / 8)
    u = solve_characteristics(b, h, u0, grid, time)
    assert u.shape == grid.shape + (time.nb_nodes,)
    assert torch.allclose(u.values, _exact(grid, time), atol=1e-8)


def test_solve_front():
    grid = StripGrid(2, 0.25, 1.0, 1 / 8)
    time = TimeAxis(0.3, 0.3)
    u = solve_characteristics(VerticalInflow(), Constant(1.0),
                              Constant(0.0), grid, time)
    assert float(u.values[..., 0].abs().max()) == 0
    depth = grid.coordinates()[..., -1]
    expected = (depth < 0.3).to(f64)
    assert torch.equal(u.values[..., 1], expected)


def test_solve_outflow():
    grid = StripGrid(2, 0.25, 1.0, 1 / 8)
    time = TimeAxis(0.25, 1 / 8)
    b = ConstantField([0.0, -1.0])
    u0 = Linear([0.0, 1.0])
    with pytest.raises(TruncationError):
        solve_characteristics(b, Constant(0.0), u0, grid, time)
    u1 = solve_characteristics(b, Constant(0.0), u0, grid, time,
                               far_value=-1.0)
    u2 = solve_characteristics(b, Constant(5.0), u0, grid, time,
                               far_value=-1.0)
    # boundary data on the outflow part are never read
    assert torch.equal(u1.values, u2.values)
    reach = grid.coordinates()[..., None, -1] + time.nodes()
    inside = reach < 1 - 1e-9
    assert torch.allclose(u1.values[inside], reach[inside], atol=1e-10)
    assert (u1.values[reach > 1 + 1e-9] == -1).all()


def test_weak_residual():
    b, h, u0 = _inflow_problem()
    grid = StripGrid(2, 1.0, 1.0, 1 / 16)
    time = TimeAxis(1.0, 1 / 16)
    u = SampledField.from_function(grid, lambda x, t: 1 + t - x[..., -1],
                                   time)
    zero = SampledField(grid, torch.zeros(u.shape, dtype=f64), time)
    corpus = weak.test_function_corpus(2, 1.0, 1.0, 1.0)
    assert len(corpus) == 5
    budget = 10 * (grid.spacing ** 2 + time.step ** 2)
    for phi in corpus:
        report = weak.weak_residual(u, b, h, u0, phi)
        c1 = phi.c1_norm(grid, time)
        assert abs(report.value) <= budget * c1, (phi.name, report)
        assert set(report.terms) == {
            'time', 'transport', 'initial', 'boundary'}
        assert math.isfinite(report.error_estimate)
    plateau = corpus[1]
    assert plateau.name == 'boundary_plateau'
    wrong = weak.weak_residual(zero, b, h, u0, plateau)
    assert abs(wrong.value) > 0.05


def test_weak_residual_coverage():
    b, h, u0 = _inflow_problem()
    grid = StripGrid(2, 1.0, 1.0, 1 / 8)
    time = TimeAxis(1.0, 1 / 8)
    u = SampledField(grid, torch.zeros(grid.shape + (time.nb_nodes,),
                                       dtype=f64), time)
    for phi in weak.test_function_corpus(2, horizon=2.0):
        if phi.time_plateau:
            continue
        with pytest.raises(CoverageError):
            weak.weak_residual(u, b, h, u0, phi)


def test_relabel_registry():
    theta = make_relabel('tanh')
    assert theta.derivative_bound == 1.0
    assert float(theta(0.0)) == 0.0
    zeros = theta(torch.tensor([0.0, -0.0, 0.0], dtype=f64))
    assert zeros.tolist() == [0.0, 0.0, 0.0]
    assert make_relabel(theta) is theta
    assert make_relabel({'name': 'arctan'}).name == 'arctan'
    with pytest.raises(UnknownNameError):
        make_relabel('cube')


def test_truncation_relabel():
    theta = truncation_relabel(M=1.0, eta_r=0.1, p=2)
    sigma = torch.linspace(-3, 3, 601, dtype=f64)
    assert float(theta(0.0)) == 0.0
    assert theta.derivative_bound == 2.0
    assert float(theta.derivative(sigma).abs().max()) <= 2.0 + 1e-9
    values = theta(sigma)
    assert torch.allclose(values, values.flip(0), atol=1e-12), \
        "Truncation of |sigma|^p is even"
    far = theta(torch.tensor([2.0, 3.0], dtype=f64))
    assert float(far[0]) == pytest.approx(float(far[1]), abs=1e-12)
    with pytest.raises(InvalidParameterError):
        truncation_relabel(M=1.0, eta_r=0.1, p=0.5)


def test_inverse_relabel():
    tanh = make_relabel('tanh')
    inverse = inverse_relabel(tanh, tanh.derivative, 2.0)
    sigma = torch.linspace(-2, 2, 101, dtype=f64)
    assert torch.allclose(inverse(tanh(sigma)), sigma, atol=1e-10)
    assert inverse.derivative_bound == pytest.approx(math.cosh(2) ** 2)
    # linear continuation outside [theta(-C), theta(C)]
    upper = float(tanh(2.0))
    beyond = inverse(torch.tensor([upper + 0.01], dtype=f64))
    assert float(beyond) == pytest.approx(2 + 0.01 * math.cosh(2) ** 2)
    assert make_relabel({'kind': 'inverse', 'C': 2.0}).name == \
        'inverse_tanh'
    with pytest.raises(InvalidParameterError):
        inverse_relabel(lambda s: s ** 2, lambda s: 2 * s, 1.0)
    with pytest.raises(InvalidParameterError):
        inverse_relabel(lambda s: s + 1, torch.ones_like, 1.0)


def test_renormalized_solution():
    b, h, u0 = _inflow_problem()
    theta = make_relabel('tanh')
    grid = StripGrid(2, 0.25, 1.0, 1 / 8)
    time = TimeAxis(0.5, 1 / 8)
    u = solve_characteristics(b, h, u0, grid, time)
    relabeled = solve_characteristics(
        b, relabel_data(theta, h), relabel_data(theta, u0), grid, time)
    assert torch.allclose(renormalize(u, theta).values, relabeled.values,
                          atol=1e-8)


def test_gronwall():
    b, h, u0 = _inflow_problem()
    grid = StripGrid(2, 0.25, 1.0, 1 / 8)
    time = TimeAxis(0.5, 1 / 8)
    u = solve_characteristics(b, h, u0, grid, time)
    e = energy(u)
    assert e.shape == (time.nb_nodes,)
    assert (e[1:] > e[:-1]).all()

    report = gronwall_check(u, b, h)
    assert report.holds and report.repair_factor == 1.0
    assert report.m1 == 0
    assert report.m2 == pytest.approx(0.5 * 1.5 ** 2)
    assert report.times == time.nodes().tolist()

    failing = gronwall_check(u, b, Constant(0.0))
    assert not failing.holds
    assert failing.repair_factor > 1


def test_gronwall_at_rest():
    rest = ConstantField([0.0, 0.0])
    grid = StripGrid(2, 0.5, 1.0, 1 / 16)
    time = TimeAxis(0.5, 1 / 8)
    u = solve_characteristics(
        rest, Constant(0.0), Gaussian([0.0, 0.5], 0.08), grid, time)
    report = gronwall_check(u, rest, Constant(0.0))
    assert report.m1 == 0 and report.m2 == 0
    assert report.holds and report.repair_factor == 1.0
    assert report.energy == pytest.approx(report.bound, rel=1e-12)
    assert report.energy == pytest.approx(
        [report.energy[0]] * time.nb_nodes, rel=1e-12)


def test_gronwall_solenoidal_outflow():
    # no inflow: the bump only leaves through the top face
    b = VerticalInflow(2, 1.0)
    grid = StripGrid(2, 0.5, 1.0, 1 / 16)
    time = TimeAxis(0.5, 1 / 8)
    u = solve_characteristics(
        b, Constant(0.0), Gaussian([0.0, 0.5], 0.1), grid, time)
    assert float(u.values.abs().max()) <= 1
    for p in (1.0, 2.0, 3.0):
        e = energy(u, p)
        assert (e[1:] <= e[:-1] * (1 + 1e-12)).all(), (p, e)
        assert e[-1] < 0.75 * e[0]
        report = gronwall_check(u, b, Constant(0.0), p)
        assert report.m2 == 0
        assert report.holds


def test_gronwall_report_files(tmp_path):
    b, h, u0 = _inflow_problem()
    grid = StripGrid(2, 0.25, 1.0, 1 / 8)
    time = TimeAxis(0.25, 1 / 8)
    u = solve_characteristics(b, h, u0, grid, time)
    gronwall_check(u, b, h).save(tmp_path / 'gronwall')
    lines = (tmp_path / 'gronwall.csv').read_text().splitlines()
    assert lines[1] == 't,energy,bound'
    assert len(lines) == 2 + time.nb_nodes
    assert (tmp_path / 'gronwall.json').exists()


def test_energy_identity():
    b, h, u0 = _inflow_problem()
    grid = StripGrid(2, 0.25, 1.0, 1 / 8)
    time = TimeAxis(0.5, 1 / 8)
    u = solve_characteristics(b, h, u0, grid, time)
    balance = energy_identity_check(u, b, h)
    assert balance.defect < 1e-6, balance


def test_outflow_perturbation():
    b = ConstantField([0.3, -1.0])
    h = outflow_perturbation(Constant(1.0), b, 2.0)
    x = torch.tensor([[0.0, 0.0], [0.5, 0.0]], dtype=f64)
    assert h(x, None).tolist() == [3.0, 3.0]
    inflow = outflow_perturbation(Constant(1.0), VerticalInflow(), 2.0)
    assert inflow(x, None).tolist() == [1.0, 1.0]


def test_uniqueness_constant_data():
    grid = StripGrid(2, 0.5, 0.5, 1 / 16)
    time = TimeAxis(0.25, 1 / 16)
    report = uniqueness_experiment(
        VerticalInflow(), Constant(1.0), Constant(1.0), 0.2, 0.1,
        grid=grid, time=time)
    assert len(report) == time.nb_nodes
    assert max(report.norm) < 1e-12
    assert max(report.extra['outflow_difference']) == 0
    assert report.extra['t'] == time.nodes().tolist()


def test_uniqueness_outflow():
    grid = StripGrid(2, 0.5, 0.5, 1 / 16)
    time = TimeAxis(0.25, 1 / 16)
    report = uniqueness_experiment(
        ConstantField([0.0, -1.0]), Constant(0.0),
        Gaussian([0.0, 0.25], 0.1), 0.2, 0.1, grid=grid, time=time,
        far_value=0.0)
    assert max(report.extra['outflow_difference']) == 0
    assert all(math.isfinite(n) for n in report.norm)
    assert max(report.norm) > 0


def test_uniqueness_identical_scales():
    b, h, u0 = _inflow_problem()
    grid = StripGrid(2, 0.5, 0.5, 1 / 16)
    time = TimeAxis(0.25, 1 / 16)
    report = uniqueness_experiment(b, h, Gaussian([0.0, 0.25], 0.1),
                                   0.1, 0.1, grid=grid, time=time)
    assert report.norm == [0.0] * time.nb_nodes


def test_uniqueness_contraction():
    # linear data: the mollification bias is linear in eta
    b, h, u0 = _inflow_problem()
    grid = StripGrid(2, 0.5, 0.5, 1 / 16)
    time = TimeAxis(0.25, 1 / 16)
    norms = [
        max(uniqueness_experiment(b, h, u0, eta, eta / 2,
                                  grid=grid, time=time).norm)
        for eta in (0.2, 0.1, 0.05)
    ]
    assert norms[-1] > 0
    for coarser, finer in zip(norms[:-1], norms[1:]):
        assert coarser >= 1.5 * finer, norms
