"""
Experiment configuration.

A run is described by a TOML (or YAML, JSON) table whose keys mirror
the fields of [`ExperimentConfig`][halfmoll.cli.config.ExperimentConfig]:

```toml
experiment = "converge-commutator"
p = 2.0
beta = 2.0
eta = [0.2, 0.1, 0.05, 0.025]

[field]
name = "rough_power"
gamma = 0.5

[data.u0]
name = "gaussian"
center = [0.0, 0.5]
width = 0.1

[grid]
dim = 2
spacing = 0.00390625
```

Missing keys keep their default; nested tables (`grid`, `data`) are
merged key by key with the defaults.
"""
__all__ = [
    'EXPERIMENTS',
    'GRID_DEFAULTS',
    'ExperimentConfig',
]
# stdlib
import math
import dataclasses
from dataclasses import dataclass
from pathlib import Path

# internals
from halfmoll.io.loadable import StateMixin
from halfmoll.grid.grids import StripGrid, TimeAxis
from halfmoll.fields.base import VelocityFieldSpec, ScalarFunction
from halfmoll.fields.library import make_field
from halfmoll.fields.scalars import make_scalar
from halfmoll.fields.norms import exponent_check
from halfmoll.geometry.domains import SmoothDomain2D, make_domain
from halfmoll.transport.relabel import RelabelFunction, make_relabel
from halfmoll.core.typing import Dict, List, Optional, Union, Tuple
from halfmoll.core.errors import ConfigError

EXPERIMENTS = (
    'converge-commutator',
    'interchange',
    'trace-check',
    'solve',
    'renormalize',
    'uniqueness',
    'gronwall',
    'mollifier-defect',
    'curved-trace',
)

GRID_DEFAULTS = {
    'dim': 2,
    # None: sized by `ExperimentConfig.strip_size`
    'extent': None,
    'length': None,
    'spacing': 1 / 64,
    'horizon': 0.5,
    'time_step': 1 / 32,
}

# experiments whose kernels are sampled on the grid
_GRIDDED = set(EXPERIMENTS) - {'mollifier-defect'}
# experiments that need a time window [eta, T - eta]
_WINDOWED = {'trace-check', 'curved-trace'}


def _default_data():
    return {
        'u0': {'name': 'gaussian', 'center': [0.0, 0.5], 'width': 0.1},
        'h': {'name': 'constant', 'value': 1.0},
    }


@dataclass
class ExperimentConfig(StateMixin):
    """
    Attributes
    ----------
    experiment : str
        One of `EXPERIMENTS`.
    field : dict
        Velocity field: `{'name': ..., **params}`.
    data : dict
        Tables `u0` (initial data) and `h` (boundary data), each
        `{'name': ..., **params}`. The `interchange` experiment also
        reads an optional second function `v`.
    p, beta : float
        Integrability exponents of the transported quantity and of the
        velocity gradient.
    eta : list[float]
        Mollification scales.
    grid : dict
        Keys `dim`, `extent`, `length`, `spacing`, `horizon`,
        `time_step`. Unset `extent` and `length` are chosen by
        [`strip_size`][halfmoll.cli.config.ExperimentConfig.strip_size].
    domain : dict
        Curved domain: `{'kind': ..., **params}`.
    relabel : str or dict
        Relabeling function of the `renormalize` experiment.
    output : str
        Output directory.
    seed : int
        Seed of the random number generators.
    tolerance : float
        Threshold of the pass/fail checks that compare against zero.
    far_value : float, optional
        Value of nodes whose characteristic leaves the strip through an
        artificial face (by default such nodes are an error).
    logging_verbosity : {0, 1, 2}
        0: warnings only, 1: progress lines, 2: progress lines and
        tensorboard scalars.
    nodes_per_eta : int
        Quadrature nodes per kernel width.
    threads : int, optional
        Cap on the number of torch threads.
    """
    experiment: str = 'converge-commutator'
    field: Dict = dataclasses.field(
        default_factory=lambda: {'name': 'rough_power', 'gamma': 0.5})
    data: Dict = dataclasses.field(default_factory=_default_data)
    p: float = 2.0
    beta: float = 2.0
    eta: List[float] = dataclasses.field(
        default_factory=lambda: [0.2, 0.1, 0.05])
    grid: Dict = dataclasses.field(
        default_factory=lambda: dict(GRID_DEFAULTS))
    domain: Dict = dataclasses.field(
        default_factory=lambda: {'kind': 'disk'})
    relabel: Union[str, Dict] = 'tanh'
    output: str = 'halfmoll-out'
    seed: int = 0
    tolerance: float = 1e-6
    far_value: Optional[float] = None
    logging_verbosity: int = 1
    nodes_per_eta: int = 16
    threads: Optional[int] = None

    def __post_init__(self):
        self._merge()

    def _merge(self):
        self.grid = {**GRID_DEFAULTS, **(self.grid or {})}
        self.data = {**_default_data(), **(self.data or {})}
        if isinstance(self.eta, (int, float)):
            self.eta = [self.eta]
        self.eta = [float(eta) for eta in self.eta]

    def load_state_dict(self, state) -> "ExperimentConfig":
        super().load_state_dict(state)
        self._merge()
        return self

    def override(
        self,
        eta: Optional[List[float]] = None,
        spacing: Optional[float] = None,
        field: Optional[str] = None,
        output: Optional[Union[str, Path]] = None,
        seed: Optional[int] = None,
        verbosity: Optional[int] = None,
    ) -> "ExperimentConfig":
        """Apply command-line overrides (`None` leaves a key unchanged)."""
        if eta is not None:
            self.eta = [float(x) for x in eta]
        if spacing is not None:
            self.grid['spacing'] = float(spacing)
        if field is not None:
            # a new name drops the parameters of the previous field
            self.field = {'name': field}
        if output is not None:
            self.output = str(output)
        if seed is not None:
            self.seed = int(seed)
        if verbosity is not None:
            self.logging_verbosity = int(verbosity)
        return self

    # ------------------------------------------------------------------
    #   builders
    # ------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return int(self.grid['dim'])

    def strip_size(self) -> Tuple[float, float]:
        """
        Half-width and height of the strip.

        Values set in `grid` are used as given. Unset values are 1,
        except for `curved-trace` on a disk or an annulus, where the
        strip is the smallest one (in whole cells) around the tubular
        band of the domain.
        """
        extent, length = self.grid['extent'], self.grid['length']
        fit_extent = fit_length = 1.0
        if (extent is None or length is None) \
                and self.experiment == 'curved-trace':
            domain = self.make_domain()
            if domain.kind != 'half_plane':
                h = float(self.grid['spacing'])
                lower, upper = domain.band_box()
                reach = max(-float(lower[0]), float(upper[0]))
                fit_extent = math.ceil(reach / h - 1e-9) * h
                fit_length = math.ceil(float(upper[1]) / h - 1e-9) * h
        extent = fit_extent if extent is None else float(extent)
        length = fit_length if length is None else float(length)
        return extent, length

    def make_grid(self) -> StripGrid:
        extent, length = self.strip_size()
        return StripGrid(self.dim, extent, length, self.grid['spacing'])

    def make_time(self) -> TimeAxis:
        return TimeAxis(self.grid['horizon'], self.grid['time_step'])

    def make_field(self) -> VelocityFieldSpec:
        return make_field(self.field)

    def make_scalar(self, key: str) -> ScalarFunction:
        return make_scalar(self.data[key], self.dim)

    def make_data(self) -> Tuple[ScalarFunction, ScalarFunction]:
        """Boundary and initial data `(h, u0)`."""
        return self.make_scalar('h'), self.make_scalar('u0')

    def make_domain(self) -> SmoothDomain2D:
        return make_domain(self.domain)

    def make_relabel(self) -> RelabelFunction:
        return make_relabel(self.relabel)

    # ------------------------------------------------------------------
    #   validation
    # ------------------------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        """
        Check every precondition of the selected experiment before any
        computation.

        Raises
        ------
        ConfigError
            With a message naming the violated constraint.
        """
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f'experiment: unknown "{self.experiment}", expected one of '
                f'{EXPERIMENTS}'
            )
        self._validate_numbers()
        if self.experiment == 'mollifier-defect':
            return self
        if self.experiment == 'curved-trace':
            self._build('domain', self.make_domain)
        grid, time = self._build('grid', self.make_grid), \
            self._build('grid', self.make_time)
        field = self._build('field', self.make_field)
        if field.dim != grid.dim:
            raise ConfigError(
                f'field: dimension {field.dim} does not match grid.dim '
                f'{grid.dim}'
            )
        for key in ('h', 'u0') + (('v',) if 'v' in self.data else ()):
            scalar = self._build(f'data.{key}', lambda: self.make_scalar(key))
            if scalar.dim != grid.dim:
                raise ConfigError(
                    f'data.{key}: dimension {scalar.dim} does not match '
                    f'grid.dim {grid.dim}'
                )
        if self.experiment in _GRIDDED:
            for eta in self.eta:
                if eta < 2 * grid.spacing * (1 - 1e-9):
                    raise ConfigError(
                        f'eta >= 2 * grid.spacing: {eta} < '
                        f'2 * {grid.spacing}'
                    )
        if self.experiment in _WINDOWED:
            for eta in self.eta:
                if 2 * eta > time.horizon * (1 + 1e-9):
                    raise ConfigError(
                        f'eta <= horizon / 2 (time margins): {eta} > '
                        f'{time.horizon} / 2'
                    )
        if self.experiment == 'converge-commutator':
            self._build('beta', lambda: exponent_check(self.p, self.beta))
            if any(b >= a for a, b in zip(self.eta[:-1], self.eta[1:])):
                raise ConfigError(f'eta: expected decreasing, got {self.eta}')
        if self.experiment == 'renormalize':
            self._build('relabel', self.make_relabel)
        if self.experiment == 'curved-trace':
            self._validate_domain(grid)
        return self

    def _validate_numbers(self):
        if not self.eta:
            raise ConfigError('eta: expected at least one scale')
        if any(not (math.isfinite(eta) and eta > 0) for eta in self.eta):
            raise ConfigError(f'eta > 0: got {self.eta}')
        if not self.p >= 1:
            raise ConfigError(f'p >= 1: got {self.p}')
        if not self.tolerance > 0:
            raise ConfigError(f'tolerance > 0: got {self.tolerance}')
        if self.logging_verbosity not in (0, 1, 2):
            raise ConfigError(
                f'logging_verbosity in (0, 1, 2): got '
                f'{self.logging_verbosity}'
            )
        if int(self.nodes_per_eta) < 2:
            raise ConfigError(
                f'nodes_per_eta >= 2: got {self.nodes_per_eta}')
        if self.threads is not None and int(self.threads) < 1:
            raise ConfigError(f'threads >= 1: got {self.threads}')
        unknown = set(self.grid) - set(GRID_DEFAULTS)
        if unknown:
            raise ConfigError(f'grid: unknown keys {sorted(unknown)}')

    def _validate_domain(self, grid: StripGrid):
        domain = self._build('domain', self.make_domain)
        if grid.dim != 2:
            raise ConfigError(f'grid.dim == 2 for curved domains: '
                              f'got {grid.dim}')
        for eta in self.eta:
            if eta >= domain.delta:
                raise ConfigError(
                    f'eta < domain.delta: {eta} >= {domain.delta}')
        if domain.kind == 'half_plane':
            return
        lower, upper = domain.band_box()
        tol = 1e-9 * max(1.0, grid.extent, grid.length)
        if lower[0] < -grid.extent - tol or upper[0] > grid.extent + tol \
                or lower[1] < -tol or upper[1] > grid.length + tol:
            raise ConfigError(
                'grid must cover the tubular band of the domain: '
                f'[{float(lower[0])}, {float(upper[0])}] x '
                f'[{float(lower[1])}, {float(upper[1])}] is not inside '
                f'[-{grid.extent}, {grid.extent}] x [0, {grid.length}]'
            )

    @staticmethod
    def _build(key, builder):
        try:
            return builder()
        except ConfigError:
            raise
        except (ValueError, KeyError, TypeError) as e:
            raise ConfigError(f'{key}: {e}') from e
