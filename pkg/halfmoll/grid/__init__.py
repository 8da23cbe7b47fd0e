"""
## Overview

Uniform tensor grids on a truncated half-space strip
$[-A, A]^{d-1} \times [0, L]$, its flat boundary and a time axis,
together with sampled fields, trapezoidal quadrature, $L^p$ norms and
the two mollification convolutions.

!!! note "Truncation"
    The strip emulates the unbounded half-space only for compactly
    supported data whose support, transported for the whole horizon
    and widened by the largest kernel, stays inside the strip.

Modules
-------
grids
    `StripGrid`, `BoundaryGrid`, `TimeAxis`.
fields
    `SampledField` and point evaluation.
quadrature
    Integrals and $L^p$ norms.
convolution
    Half-space and boundary space-time mollification.
"""
__all__ = []

from halfmoll.core.utils import import_submodules

import_submodules([
    'grids',
    'fields',
    'quadrature',
    'convolution',
], __name__, __all__, True)
