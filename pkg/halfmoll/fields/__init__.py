"""
## Overview

Analytic velocity fields and scalar data with exact derivatives.

Fields are analytic descriptions, not samples: the distributional commutator
needs $\nabla b$ and $\mathrm{div}\, b$ exactly, and sampling them would
mix field interpolation error into kernel convergence measurements.

Modules
-------
base
    `VelocityFieldSpec`, `ScalarFunction`, `ScalarDataSpec`.
library
    Built-in velocity fields and the `builtin_field` registry.
scalars
    Built-in scalar data (initial data, boundary data, exact solutions).
norms
    Sobolev seminorms, normal traces and exponent checks.
"""
__all__ = []

from halfmoll.core.utils import import_submodules

import_submodules([
    'base',
    'library',
    'scalars',
    'norms',
], __name__, __all__, True)
