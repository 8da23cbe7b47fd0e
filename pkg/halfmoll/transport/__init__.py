"""
## Overview

Transport problems with inflow Dirichlet data: classical solutions by
backward characteristics, the weak-form residual, relabelings and
renormalized solutions, $L^p$ energy bounds, and uniqueness checks.

!!! note "Outflow"
    Backward characteristics only exit through the inflow part of the
    boundary, so boundary data given where $b \cdot \nu \geq 0$ never
    reach the solver.

Modules
-------
characteristics
    Backward characteristic tracing and the classical solver.
weak
    Test functions and the weak-form residual.
relabel
    Relabeling functions and renormalization.
energy
    Gronwall bound and energy balance.
uniqueness
    Mollification-scale stability and outflow insensitivity.
"""
__all__ = []

from halfmoll.core.utils import import_submodules

import_submodules([
    'characteristics',
    'weak',
    'relabel',
    'energy',
    'uniqueness',
], __name__, __all__, True)
