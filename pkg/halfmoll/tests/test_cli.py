import json

import pytest

from halfmoll.cli.config import ExperimentConfig, GRID_DEFAULTS
from halfmoll.cli.experiments import REGISTRY, run_experiment
from halfmoll.cli.main import main, make_parser, EXIT_CONFIG
from halfmoll.io.reports import ConvergenceReport
from halfmoll.core.errors import ConfigError


def _run(tmp_path, name, *flags):
    out = tmp_path / name
    status = main(['mollifier-defect', '--eta', '0.1', '--out', str(out),
                   '--assert', *flags])
    return status, out


def test_parser():
    args = make_parser().parse_args(
        ['solve', '--eta', '0.2', '0.1', '--grid-h', '0.05', '-vv'])
    assert args.experiment == 'solve'
    assert args.eta == [0.2, 0.1]
    assert args.spacing == 0.05
    assert args.verbosity == 2
    assert args.config is None and not args.assertions
    with pytest.raises(SystemExit):
        make_parser().parse_args(['not-an-experiment'])


def test_registry():
    assert set(REGISTRY) == {
        'converge-commutator', 'interchange', 'trace-check', 'solve',
        'renormalize', 'uniqueness', 'gronwall', 'mollifier-defect',
        'curved-trace',
    }


def test_defaults_are_merged():
    config = ExperimentConfig(grid={'spacing': 0.125}, eta=0.1)
    assert config.grid == {**GRID_DEFAULTS, 'spacing': 0.125}
    assert config.eta == [0.1]
    assert set(config.data) == {'u0', 'h'}


def test_override():
    config = ExperimentConfig(field={'name': 'shear', 'rate': 2.0})
    config.override(eta=[0.05], spacing=0.01, field='rigid_rotation',
                    seed=3, verbosity=0)
    assert config.eta == [0.05]
    assert config.grid['spacing'] == 0.01
    assert config.field == {'name': 'rigid_rotation'}
    assert config.seed == 3 and config.logging_verbosity == 0
    # None leaves values unchanged
    config.override()
    assert config.eta == [0.05]


@pytest.mark.parametrize('options, key', [
    (dict(experiment='nope'), 'experiment'),
    (dict(eta=[0.0]), 'eta'),
    (dict(eta=[]), 'eta'),
    (dict(p=0.5), 'p >= 1'),
    (dict(logging_verbosity=5), 'logging_verbosity'),
    (dict(grid={'step': 0.1}), 'grid'),
    (dict(experiment='solve', eta=[0.01]), 'spacing'),
    (dict(experiment='solve', field={'name': 'vortex'}), 'field'),
    (dict(experiment='solve', field={'name': 'shear', 'dim': 3}), 'field'),
    (dict(experiment='converge-commutator', eta=[0.1, 0.2]), 'decreasing'),
    (dict(experiment='converge-commutator', beta=1.5), 'beta'),
    (dict(experiment='trace-check', eta=[0.3]), 'horizon'),
    (dict(experiment='renormalize', relabel='cubic'), 'relabel'),
    (dict(experiment='curved-trace', grid={'extent': 1.0, 'length': 1.0}),
     'cover'),
    (dict(experiment='curved-trace', eta=[0.2],
          domain={'kind': 'disk', 'radius': 0.4, 'center': [0.0, 0.5]}),
     'delta'),
])
def test_validate(options, key):
    with pytest.raises(ConfigError, match=key):
        ExperimentConfig(**options).validate()


def test_valid_configurations():
    ExperimentConfig(experiment='mollifier-defect', eta=[1.0]).validate()
    ExperimentConfig(
        experiment='curved-trace', eta=[0.05],
        domain={'kind': 'disk', 'radius': 0.3, 'center': [0.0, 0.5]},
    ).validate()


def test_curved_trace_strip_fits_the_domain():
    config = ExperimentConfig(experiment='curved-trace').validate()
    # unit disk centered at (0, 1.5): the band reaches 1.5 from the center
    assert config.strip_size() == (1.5, 3.0)
    assert config.make_grid().shape == (193, 193)
    config = ExperimentConfig(experiment='curved-trace', grid={'extent': 2.0})
    assert config.strip_size() == (2.0, 3.0)
    config = ExperimentConfig(
        experiment='curved-trace', eta=[0.05],
        domain={'kind': 'disk', 'radius': 0.3, 'center': [0.0, 0.5]})
    # band [-0.45, 0.45] x [0.05, 0.95], rounded up to whole cells of 1/64
    assert config.strip_size() == (29 / 64, 61 / 64)
    assert ExperimentConfig(experiment='solve').strip_size() == (1.0, 1.0)


def test_config_file(tmp_path):
    path = tmp_path / 'config.toml'
    path.write_text(
        'experiment = "solve"\n'
        'eta = [0.2, 0.1]\n'
        'tolerance = 1e-8\n'
        '\n'
        '[grid]\n'
        'spacing = 0.125\n'
        '\n'
        '[field]\n'
        'name = "vertical_inflow"\n'
    )
    config = ExperimentConfig.from_state_dict(path)
    assert config.experiment == 'solve'
    assert config.eta == [0.2, 0.1]
    assert config.tolerance == 1e-8
    assert config.grid['spacing'] == 0.125
    assert config.grid['horizon'] == GRID_DEFAULTS['horizon']
    assert config.field == {'name': 'vertical_inflow'}
    # flags win over the file
    config.override(eta=[0.05])
    assert config.eta == [0.05]


def test_main_config_errors(tmp_path, capsys):
    assert main(['solve', '--eta', '0', '--out', str(tmp_path)]) \
        == EXIT_CONFIG
    assert 'configuration error' in capsys.readouterr().err
    path = tmp_path / 'bad.toml'
    path.write_text('unknown_key = 1\n')
    assert main(['solve', str(path)]) == EXIT_CONFIG
    assert main(['solve', str(tmp_path / 'missing.toml')]) == EXIT_CONFIG
    # nothing was computed
    assert not (tmp_path / 'solve.csv').exists()


def test_mollifier_defect_run(tmp_path):
    status, out = _run(tmp_path, 'first')
    assert status == 0
    lines = (out / 'mollifier-defect.csv').read_text().splitlines()
    assert lines[0] == '# experiment: mollifier-defect'
    assert lines[2] == 'eta,norm,bound_ratio,wallclock_s,one_sided'
    assert len(lines) == 5

    report = ConvergenceReport.read_csv(out / 'mollifier-defect.csv')
    assert report.eta == [0.1, 0.1]
    assert report.norm[0] == pytest.approx(0.5, abs=1e-10)
    assert report.norm[1] == pytest.approx(1.0, abs=1e-10)

    manifest = json.loads((out / 'manifest.json').read_text())
    assert manifest['passed'] is True
    assert manifest['checks'] == {'symmetric_halves': True,
                                  'one_sided_exact': True}
    assert 'mollifier-defect.csv' in manifest['files']
    assert manifest['config']['eta'] == [0.1]
    assert (out / 'mollifier-defect.json').exists()
    assert (out / 'mollifier-defect.dat').exists()


def test_rerun_is_byte_identical(tmp_path):
    _, first = _run(tmp_path, 'first')
    _, second = _run(tmp_path, 'second')
    for suffix in ('.csv', '.json', '.dat'):
        name = 'mollifier-defect' + suffix
        assert (first / name).read_bytes() == (second / name).read_bytes(), \
            f'{name} differs between identical runs'


def test_run_experiment_writes_nothing(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    config = ExperimentConfig(experiment='mollifier-defect',
                              eta=[0.2, 0.1], tolerance=1e-9)
    outcome = run_experiment(config)
    assert outcome.passed
    assert len(outcome.report) == 4
    assert outcome.report.extra['one_sided'] == [0, 1, 0, 1]
    assert not any(tmp_path.iterdir())
