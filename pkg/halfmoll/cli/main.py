"""
Command line entry point.

```
halfmoll <experiment> [config.toml] [--eta ETA ...] [--grid-h H]
         [--field NAME] [--out DIR] [--seed N] [--assert] [-v]
```

Values are taken from the defaults, then the configuration file, then
the flags. Exit status: 0 on success, 1 when `--assert` is given and a
check fails, 2 on an invalid configuration.
"""
__all__ = ['main', 'make_parser', 'configure_logging']
# stdlib
import sys
import logging
import argparse
from pathlib import Path

# internals
from halfmoll.cli.config import ExperimentConfig, EXPERIMENTS
from halfmoll.cli.experiments import run
from halfmoll.core.typing import List, Optional
from halfmoll.core.errors import ConfigError

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_ASSERTION, EXIT_CONFIG = 0, 1, 2


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='halfmoll',
        description='One-sided mollification and transport experiments.',
    )
    parser.add_argument('experiment', choices=EXPERIMENTS)
    parser.add_argument(
        'config', nargs='?', type=Path,
        help='Configuration file (.toml, .yaml or .json)')
    parser.add_argument(
        '--eta', type=float, nargs='+',
        help='Mollification scales (replace the configured list)')
    parser.add_argument(
        '--grid-h', type=float, dest='spacing', help='Grid spacing')
    parser.add_argument('--field', help='Velocity field name')
    parser.add_argument('--out', type=Path, help='Output directory')
    parser.add_argument('--seed', type=int, help='Random seed')
    parser.add_argument(
        '--assert', action='store_true', dest='assertions',
        help='Exit with status 1 if a check fails')
    parser.add_argument(
        '-v', '--verbose', action='count', dest='verbosity',
        help='Verbosity (-v: progress, -vv: progress and tensorboard)')
    return parser


def configure_logging(verbosity: int) -> None:
    """Root logger: warnings only (0) or progress lines (1, 2)."""
    level = logging.WARNING if verbosity <= 0 else logging.INFO
    logging.basicConfig(
        level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        force=True)


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.config is not None:
            config = ExperimentConfig.from_state_dict(args.config)
        else:
            config = ExperimentConfig()
        config.experiment = args.experiment
        config.override(eta=args.eta, spacing=args.spacing, field=args.field,
                        output=args.out, seed=args.seed,
                        verbosity=args.verbosity)
        configure_logging(config.logging_verbosity)
        config.validate()
    except (ConfigError, OSError, TypeError, ValueError) as e:
        # TypeError: unknown keys in the configuration file
        print(f'halfmoll: configuration error: {e}', file=sys.stderr)
        return EXIT_CONFIG
    return run(config, assertions=args.assertions)


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main())
