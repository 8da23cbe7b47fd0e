"""
Convergence tables.

A [`ConvergenceReport`][halfmoll.io.reports.ConvergenceReport] holds one
row per mollification scale with the fixed columns
`eta, norm, bound_ratio, wallclock_s` (plus optional extra columns),
and a metadata block. It is written as CSV, with `#`-prefixed header
comment lines, next to a JSON file holding the metadata.
"""
__all__ = [
    'ConvergenceReport',
]
# stdlib
import json
import math
from pathlib import Path
from dataclasses import dataclass, field

# externals
import numpy as np

# internals
from halfmoll.io.loadable import StateMixin
from halfmoll.io.utils import to_jsonable
from halfmoll.core.typing import List, Dict, Optional, Union

COLUMNS = ('eta', 'norm', 'bound_ratio', 'wallclock_s')


@dataclass
class ConvergenceReport(StateMixin):
    """
    Attributes
    ----------
    name : str
        Experiment name.
    anchor : str
        One-line description of the property the table tests.
    eta : list[float]
        Mollification scales, in the order they were run.
    norm : list[float]
        Measured norm for each scale.
    bound_ratio : list[float]
        Norm divided by the a priori bound (NaN when not applicable).
    wallclock_s : list[float]
        Wall-clock time of each row (0 when timing is disabled).
    extra : dict[str, list[float]]
        Additional columns, written after the fixed ones.
    metadata : dict
        Parameters of the run (field, exponents, grid spacing, ...).
    """
    name: str = ''
    anchor: str = ''
    eta: List[float] = field(default_factory=list)
    norm: List[float] = field(default_factory=list)
    bound_ratio: List[float] = field(default_factory=list)
    wallclock_s: List[float] = field(default_factory=list)
    extra: Dict[str, List[float]] = field(default_factory=dict)
    metadata: Dict[str, object] = field(default_factory=dict)

    def add_row(
        self,
        eta: float,
        norm: float,
        bound_ratio: float = float('nan'),
        wallclock_s: float = 0.0,
        **extra: float
    ) -> None:
        """Append a row. Extra columns must be given for every row."""
        self.eta.append(float(eta))
        self.norm.append(float(norm))
        self.bound_ratio.append(float(bound_ratio))
        self.wallclock_s.append(float(wallclock_s))
        for key, value in extra.items():
            self.extra.setdefault(key, []).append(float(value))

    def __len__(self):
        return len(self.eta)

    @property
    def decay_ratio(self) -> float:
        """Last norm divided by first norm (NaN if the first is 0)."""
        if not self.norm or self.norm[0] == 0:
            return float('nan')
        return self.norm[-1] / self.norm[0]

    def is_decreasing(self, strict: bool = True) -> bool:
        """Whether the norm decreases from row to row."""
        pairs = zip(self.norm[:-1], self.norm[1:])
        if strict:
            return all(b < a for a, b in pairs)
        return all(b <= a for a, b in pairs)

    def is_bounded(self, factor: float = 2.0) -> bool:
        """
        Whether every finite bound ratio stays within `factor` of the
        first one (from above).
        """
        ratios = [r for r in self.bound_ratio if math.isfinite(r)]
        if not ratios:
            return True
        return all(r <= factor * ratios[0] + 1e-300 for r in ratios)

    def fitted_order(self) -> float:
        """Least-squares slope of `log(norm)` against `log(eta)`."""
        eta = np.asarray(self.eta)
        norm = np.asarray(self.norm)
        keep = (eta > 0) & (norm > 0)
        # a single scale (repeated or not) has no slope
        if len(np.unique(eta[keep])) < 2:
            return float('nan')
        slope, _ = np.polyfit(np.log(eta[keep]), np.log(norm[keep]), 1)
        return float(slope)

    def summary(self) -> dict:
        return {
            'rows': len(self),
            'decay_ratio': self.decay_ratio,
            'decreasing': self.is_decreasing() if len(self) > 1 else True,
            'bounded': self.is_bounded(),
            'fitted_order': self.fitted_order(),
        }

    def to_csv(self, path: Union[str, Path],
               comment: Optional[str] = None) -> None:
        """
        Write the table as CSV with `#`-prefixed header comment lines.
        Numbers use `repr`, so identical runs give identical files.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        extras = sorted(self.extra)
        with open(path, 'w') as f:
            f.write(f'# experiment: {self.name}\n')
            if self.anchor:
                f.write(f'# tests: {self.anchor}\n')
            if comment:
                f.write(f'# {comment}\n')
            f.write(','.join(COLUMNS + tuple(extras)) + '\n')
            for i in range(len(self)):
                row = [self.eta[i], self.norm[i], self.bound_ratio[i],
                       self.wallclock_s[i]]
                row += [self.extra[key][i] for key in extras]
                f.write(','.join(repr(float(v)) for v in row) + '\n')

    def to_dat(self, path: Union[str, Path]) -> None:
        """Whitespace-separated columns for gnuplot."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        extras = sorted(self.extra)
        with open(path, 'w') as f:
            f.write('# ' + ' '.join(COLUMNS + tuple(extras)) + '\n')
            for i in range(len(self)):
                row = [self.eta[i], self.norm[i], self.bound_ratio[i],
                       self.wallclock_s[i]]
                row += [self.extra[key][i] for key in extras]
                f.write(' '.join(repr(float(v)) for v in row) + '\n')

    def save(self, path: Union[str, Path]) -> None:
        """Write `<stem>.csv` and the metadata block `<stem>.json`."""
        path = Path(path).with_suffix('')
        self.to_csv(path.with_suffix('.csv'))
        meta = dict(self.metadata)
        meta.update(name=self.name, anchor=self.anchor,
                    summary=self.summary())
        with open(path.with_suffix('.json'), 'w') as f:
            json.dump(to_jsonable(meta), f, indent=2, sort_keys=True)

    @classmethod
    def read_csv(cls, path: Union[str, Path]) -> 'ConvergenceReport':
        """Read back a table written by `to_csv` (metadata not included)."""
        report = cls()
        with open(path, 'r') as f:
            lines = [line.strip() for line in f if line.strip()]
        comments = [line for line in lines if line.startswith('#')]
        for line in comments:
            if line.startswith('# experiment:'):
                report.name = line.split(':', 1)[1].strip()
            if line.startswith('# tests:'):
                report.anchor = line.split(':', 1)[1].strip()
        body = [line for line in lines if not line.startswith('#')]
        header = body[0].split(',')
        for line in body[1:]:
            values = dict(zip(header, map(float, line.split(','))))
            extra = {k: v for k, v in values.items() if k not in COLUMNS}
            report.add_row(values['eta'], values['norm'],
                           values['bound_ratio'], values['wallclock_s'],
                           **extra)
        return report
