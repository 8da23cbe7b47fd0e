import math
from dataclasses import dataclass, field

import pytest
import torch

from halfmoll.io.loadable import LoadableMixin, StateMixin, load
from halfmoll.io.reports import ConvergenceReport
from halfmoll.io.fields import save_field, load_field, field_to_csv
from halfmoll.io.utils import to_jsonable, import_fullname
from halfmoll.grid.grids import StripGrid, TimeAxis
from halfmoll.grid.fields import SampledField
from halfmoll.fields.scalars import Gaussian, Translated
from halfmoll.core.utils import (
    make_vector, check_positive, chunked, set_num_threads_from_env
)
from halfmoll.core import errors


class _Loadable(LoadableMixin):
    def __init__(self, a=1, b=2):
        super().__init__()
        self.a = a
        self.b = b


@dataclass
class _Sweep(StateMixin):
    name: str = 'sweep'
    eta: list = field(default_factory=lambda: [0.1])
    p: float = 2.0


def test_loadable_mixin() -> None:
    reference_object = _Loadable(3, b=4)
    reference_state = reference_object.serialize()

    for loader in (LoadableMixin.load, load):
        loaded_object = loader(reference_state)
        loaded_state = loaded_object.serialize()
        assert (
            reference_object.a == loaded_object.a and
            reference_object.b == loaded_object.b
        ), "Reference and loaded objects differ."
        assert reference_state == loaded_state, \
            "Reference and loaded states differ."


def test_loadable_nested(tmp_path) -> None:
    reference = Translated(Gaussian([0.0, 0.5], 0.1), [0.0, 1.0])
    path = tmp_path / 'data.json'
    reference.save(path)
    loaded = load(path)
    assert isinstance(loaded, Translated)
    assert isinstance(loaded.base, Gaussian)
    x = torch.tensor([[0.1, 0.3], [0.0, 0.8]], dtype=torch.float64)
    t = torch.tensor(0.2, dtype=torch.float64)
    assert torch.equal(loaded(x, t), reference(x, t))


@pytest.mark.parametrize('suffix', ['.json', '.yaml'])
def test_state_mixin(tmp_path, suffix) -> None:
    reference = _Sweep('convergence', [0.2, 0.1], 4.0)
    path = tmp_path / f'state{suffix}'
    reference.save_state_dict(path)
    assert _Sweep.from_state_dict(path) == reference
    assert _Sweep().load_state_dict(path) == reference


def test_state_mixin_toml(tmp_path) -> None:
    path = tmp_path / 'state.toml'
    path.write_text('name = "toml"\neta = [0.5, 0.25]\np = 1.5\n')
    assert _Sweep.from_state_dict(path) == _Sweep('toml', [0.5, 0.25], 1.5)
    with pytest.raises(ValueError):
        _Sweep().save_state_dict(path)


def _report():
    report = ConvergenceReport('demo', anchor='norm decreases')
    report.add_row(0.2, 1e-1, 0.5, 0.0, step=1.0)
    report.add_row(0.1, 2.5e-2, 0.25, 0.0, step=2.0)
    report.add_row(0.05, 1 / 160, float('nan'), 0.0, step=3.0)
    return report


def test_convergence_report(tmp_path) -> None:
    report = _report()
    assert len(report) == 3
    assert report.is_decreasing()
    assert report.is_bounded()
    assert report.fitted_order() == pytest.approx(2.0)
    assert report.decay_ratio == pytest.approx(1 / 16)

    report.to_csv(tmp_path / 'demo.csv')
    lines = (tmp_path / 'demo.csv').read_text().splitlines()
    assert lines[0] == '# experiment: demo'
    assert lines[2] == 'eta,norm,bound_ratio,wallclock_s,step'
    assert len(lines) == 6

    loaded = ConvergenceReport.read_csv(tmp_path / 'demo.csv')
    assert loaded.name == 'demo' and loaded.anchor == 'norm decreases'
    assert loaded.eta == report.eta and loaded.norm == report.norm
    assert loaded.extra == report.extra
    assert math.isnan(loaded.bound_ratio[-1])


def test_convergence_report_deterministic(tmp_path) -> None:
    _report().save(tmp_path / 'a')
    _report().save(tmp_path / 'b.csv')
    for suffix in ('.csv', '.json'):
        a = (tmp_path / f'a{suffix}').read_bytes()
        b = (tmp_path / f'b{suffix}').read_bytes()
        assert a == b, "Identical reports must give identical files"
    assert '"decreasing": true' in (tmp_path / 'a.json').read_text()


def test_report_checks() -> None:
    report = ConvergenceReport()
    report.add_row(0.1, 1.0, 1.0)
    report.add_row(0.05, 1.0, 3.0)
    assert not report.is_decreasing()
    assert report.is_decreasing(strict=False)
    assert not report.is_bounded()
    assert report.is_bounded(factor=3.0)


def test_save_field(tmp_path) -> None:
    grid = StripGrid(2, 0.5, 0.5, 0.25)
    time = TimeAxis(0.5, 0.25)
    values = torch.arange(3 * 5 * 3, dtype=torch.float64).reshape(5, 3, 3)
    reference = SampledField(grid, values, time)
    save_field(reference, tmp_path / 'u')
    assert (tmp_path / 'u.bin').stat().st_size == 8 * values.numel()
    loaded = load_field(tmp_path / 'u.json')
    assert torch.equal(loaded.values, values)
    assert loaded.grid.spacing == grid.spacing
    assert loaded.time.step == time.step

    field_to_csv(reference, tmp_path / 'u.csv')
    lines = (tmp_path / 'u.csv').read_text().splitlines()
    assert lines[0] == 'x1,x2,t,value'
    assert len(lines) == 1 + values.numel()


def test_load_field_rejects_foreign_header(tmp_path) -> None:
    (tmp_path / 'u.json').write_text('{"format": "other"}')
    with pytest.raises(errors.DimensionError):
        load_field(tmp_path / 'u')


def test_utils(monkeypatch) -> None:
    vector = make_vector([1.0, 2.0], 4)
    assert vector.dtype == torch.float64
    assert vector.tolist() == [1.0, 2.0, 2.0, 2.0]
    with pytest.raises(errors.InvalidParameterError):
        check_positive('eta', 0.0)
    assert check_positive('eta', 0.0, strict=False) == 0.0
    points = torch.arange(10, dtype=torch.float64)[:, None]
    assert torch.equal(chunked(lambda x: 2 * x, points, chunk=3), 2 * points)
    assert to_jsonable({'a': torch.ones(2), 'b': float('nan')}) == \
        {'a': [1.0, 1.0], 'b': None}
    assert import_fullname('halfmoll.fields.scalars.Gaussian') is Gaussian

    threads = torch.get_num_threads()
    try:
        monkeypatch.setenv('HALFMOLL_THREADS', '1')
        assert set_num_threads_from_env() == 1
    finally:
        torch.set_num_threads(threads)


def test_error_hierarchy() -> None:
    assert issubclass(errors.TruncationError, errors.DomainError)
    assert issubclass(errors.CoverageError, ValueError)
    assert issubclass(errors.NonSolenoidalError,
                      errors.HypothesisViolationError)
    assert issubclass(errors.UnknownNameError, KeyError)
    assert issubclass(errors.StabilityError, ArithmeticError)
    assert issubclass(errors.ConfigError, ValueError)
    message = str(errors.UnknownNameError('unknown field "vortex"'))
    assert message == 'unknown field "vortex"'
