"""
## Overview

This module contains routines for data input/output.

It defines mixins that make kernels, fields and configurations
serializable, along with readers and writers for sampled fields and
convergence tables.

Modules
-------
loadable
    Serializable modules and dataclass states.
fields
    Binary/JSON and CSV formats of sampled fields.
reports
    Convergence tables (CSV + JSON metadata).
utils
    Import helpers.
"""
__all__ = []

from halfmoll.core.utils import import_submodules

import_submodules([
    'utils',
    'loadable',
    'fields',
    'reports',
], __name__, __all__, True)
