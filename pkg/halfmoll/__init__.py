"""
This package is a numerical laboratory for transport equations with
inflow boundary data on the half-space.

It provides one-sided mollifiers that only look inside the domain (and
forward in time), the commutator between mollification and transport,
the boundary and initial trace formulas of mollified solutions, a
classical solver by backward characteristics, and checks of the weak,
renormalized and energy formulations. A harness turns each property
into a reproducible experiment with CSV output.

Modules
-------
kernels
    One-dimensional, half-space and boundary-time mollifiers.
grid
    Strip grids, sampled fields, quadrature and discrete convolution.
fields
    Velocity fields, scalar data and their norms.
mollify
    Commutators, interchange identities and trace residuals.
transport
    Characteristics, weak residuals, relabelings, energy and uniqueness.
geometry
    Curved boundaries in tubular coordinates.
cli
    Experiment configuration and command line.
functional
    Lower-level functional utilities.
io
    Input/output.
core
    Core utilities, mostly intended for internal use.
"""

from . import core              # noqa: F401
from . import io                # noqa: F401
from . import functional        # noqa: F401
from . import kernels           # noqa: F401
from . import grid              # noqa: F401
from . import fields            # noqa: F401
from . import mollify           # noqa: F401
from . import transport         # noqa: F401
from . import geometry          # noqa: F401
from . import cli               # noqa: F401

from ._version import __version__  # noqa: F401
