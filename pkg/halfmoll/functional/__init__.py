"""
## Overview

This module contains low-level numerical routines: closed-form kernel
profiles, quadrature stencils built from them, and the fixed-step
integrator used to trace characteristics. They operate on plain
tensors and do not form an object-oriented API like the rest of the
package.

Modules
-------
kernels
    Mollifier profiles, tensor kernels, gradients and moments.
stencils
    Normalized quadrature stencils for mollification sums.
ode
    Runge-Kutta step and crossing bisection.
"""
__all__ = []

from halfmoll.core.utils import import_submodules

import_submodules([
    'kernels',
    'stencils',
    'ode',
], __name__, __all__, True)
