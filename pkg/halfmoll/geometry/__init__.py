"""
## Overview

Curved boundaries in two dimensions: analytic domains with closed-form
signed distance, projection and curvature, the area element of
tubular coordinates, and one-sided mollification along the normal
direction of a curved boundary.

!!! note "Sign conventions"
    The signed distance is negative inside the domain and the curvature
    of a disk of radius $R$ is $1/R$, so that the area element of
    tubular coordinates is $J = 1 + \kappa d$.

Modules
-------
domains
    Disk, annulus and half-plane.
tubular
    Band integrals, tubular mollification and curved trace residuals.
"""
__all__ = []

from halfmoll.core.utils import import_submodules

import_submodules([
    'domains',
    'tubular',
], __name__, __all__, True)
