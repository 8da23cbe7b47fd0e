"""
## Overview

The approximation engine: approximate solutions $u_\eta$, mollified
data $(b_\eta, h_\eta, u_{0,\eta})$, the commutator $r_\eta(u, b)$ in
distributional form, the interchange identities, and the boundary and
initial trace formulas.

!!! note "One-sidedness"
    Every integral over $y$ respects $y_d > 0$ and every time integral
    looks forward ($s \geq t$). Nothing is ever extended below the
    boundary or beyond the horizon.

Modules
-------
commutator
    Commutator, adjoint commutator, pairing and convergence sweeps.
approximate
    `ApproximateSolution` and mollified data.
interchange
    Interchange identities.
traces
    Boundary and initial trace residuals, mollifier defect.
"""
__all__ = []

from halfmoll.core.utils import import_submodules

import_submodules([
    'commutator',
    'approximate',
    'interchange',
    'traces',
], __name__, __all__, True)
