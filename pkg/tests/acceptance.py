"""
End-to-end checks of the experiment harness, slower than the unit tests.

Example
-------
>>> pytest tests/acceptance.py
"""
import json

import pytest
import torch

from halfmoll.cli.config import ExperimentConfig
from halfmoll.cli.experiments import run_experiment
from halfmoll.cli.main import main
from halfmoll.fields.library import ConstantField, Compressive
from halfmoll.fields.scalars import Gaussian, Linear
from halfmoll.mollify.commutator import commutator

f64 = torch.float64


def test_boundary_defect_contrast(tmp_path):
    status = main(['mollifier-defect', '--eta', '1', '0.1', '0.01',
                   '--out', str(tmp_path), '--assert'])
    assert status == 0
    manifest = json.loads((tmp_path / 'manifest.json').read_text())
    assert manifest['passed'], manifest['checks']


def test_commutator_oracles():
    torch.manual_seed(0)
    x = torch.rand(50, 2, dtype=f64) * torch.tensor([1.0, 0.5], dtype=f64)
    u = Gaussian([0.0, 0.3], 0.1)
    r = commutator(u, ConstantField([0.3, 1.0]), 0.1, x)
    assert r.abs().max() <= 1e-8

    y = torch.linspace(0, 0.5, 50, dtype=f64)[:, None]
    for eta in (0.2, 0.05):
        r = commutator(Linear([1.0]), Compressive(rate=1.0, dim=1), eta, y)
        expected = torch.full([50], eta / 2, dtype=f64)
        assert torch.allclose(r, expected, rtol=1e-9), (eta, r)


def test_interchange_rigid_rotation():
    config = ExperimentConfig(
        experiment='interchange',
        field={'name': 'rigid_rotation'},
        data={'u0': {'name': 'gaussian', 'center': [0.0, 0.5],
                     'width': 0.05},
              'v': {'name': 'gaussian', 'center': [0.05, 0.47],
                    'width': 0.05}},
        eta=[0.125],
        grid={'extent': 0.5, 'length': 1.0, 'spacing': 1 / 32},
    )
    outcome = run_experiment(config)
    assert outcome.passed, outcome.report


def test_rough_power_commutator_converges():
    config = ExperimentConfig(
        experiment='converge-commutator',
        field={'name': 'rough_power', 'gamma': 0.5},
        data={'u0': {'name': 'gaussian', 'center': [0.1, 0.6],
                     'width': 0.15}},
        p=2.0, beta=2.0, eta=[0.2, 0.1, 0.05, 0.025],
        grid={'extent': 0.75, 'length': 1.25, 'spacing': 1 / 128},
    )
    outcome = run_experiment(config)
    assert outcome.passed, outcome.checks
    norms = outcome.report.norm
    assert all(b < a for a, b in zip(norms[:-1], norms[1:])), norms
    assert norms[-1] < 0.3 * norms[0], norms
    ratios = outcome.report.bound_ratio
    assert max(ratios) <= 2 * ratios[0], ratios


def test_trace_residuals_within_budget():
    spacing, time_step, eta = 1 / 256, 1 / 64, 1 / 16
    config = ExperimentConfig(
        experiment='trace-check',
        field={'name': 'constant', 'velocity': [0.0, 1.0]},
        data={'h': {'name': 'constant', 'value': 1.0},
              'u0': {'name': 'constant', 'value': 0.0}},
        eta=[eta],
        grid={'extent': 0.25, 'length': 0.5, 'spacing': spacing,
              'horizon': 0.25, 'time_step': time_step},
    )
    outcome = run_experiment(config)
    assert outcome.passed, outcome.report.bound_ratio
    budget = 5 * (spacing ** 2 + eta * time_step)
    assert outcome.report.norm[0] < budget
    assert outcome.report.extra['initial'][0] < budget


def test_classical_solution_is_weak():
    config = ExperimentConfig(
        experiment='solve',
        field={'name': 'vertical_inflow'},
        data={'h': {'name': 'linear', 'coefficients': [0.0, 0.0],
                    'offset': 1.0, 'time_rate': 1.0},
              'u0': {'name': 'linear', 'coefficients': [0.0, -1.0],
                     'offset': 1.0}},
        eta=[0.125],
        grid={'extent': 1.0, 'length': 1.0, 'spacing': 1 / 16,
              'horizon': 1.0, 'time_step': 1 / 16},
    )
    outcome = run_experiment(config)
    assert len(outcome.report) == 5
    assert outcome.passed, outcome.report.bound_ratio
    exact = outcome.artifacts['solution']
    assert exact.values.max() == pytest.approx(2.0, abs=1e-8)
