"""
## Overview

Mollifier objects: the symmetric bump $\rho_\eta$, the one-sided bump
$\omega_\eta$, the half-space kernel $\hat\rho^d_\eta$ and the boundary
space-time kernel $\tilde\rho^d_\eta$. They are immutable
[`nn.Module`][torch.nn.Module]s whose `forward` evaluates the kernel,
built on the closed-form profiles of
[`halfmoll.functional.kernels`][halfmoll.functional.kernels].

Modules
-------
mollifiers
    Kernel modules with exact support bookkeeping.
"""
__all__ = []

from halfmoll.core.utils import import_submodules

import_submodules([
    'mollifiers',
], __name__, __all__, True)
