"""
## Overview

The experiment harness: configuration files, the experiments that
exercise the library end to end, and the `halfmoll` command.

Modules
-------
config
    Typed experiment configuration and its validation.
experiments
    Experiment registry, artifact files and the run manifest.
main
    Command line entry point.
"""
__all__ = []

from halfmoll.core.utils import import_submodules

import_submodules([
    'config',
    'experiments',
    'main',
], __name__, __all__, True)
