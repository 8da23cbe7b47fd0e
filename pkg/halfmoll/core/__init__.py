"""
## Overview

This contains core utilities that are mostly used internally, and
whose API may be less stable than the rest of the package.
Use at your own risk.

Modules
-------
typing
    Type hints shared across the package.
errors
    Exception hierarchy.
utils
    Small helpers (lists, vectors, dtypes, submodule imports).
"""
__all__ = []

from halfmoll.core.utils import import_submodules

import_submodules([
    'typing',
    'errors',
    'utils',
], __name__, __all__)
