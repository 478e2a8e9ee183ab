"""Numerical toolkit for generated Jacobian equations.

Generating functions and their dual, the induced maps (Y, Z) and the
Monge-Ampere coefficients, A3w/A4w scans, g-segments and height functions,
g*-transforms and g-Monge-Ampere measures, and a two-dimensional strict
convexity probe.
"""

__version__ = "0.1.0"

from .errors import GJEError  # noqa: E402
from .genfun import GeneratingFunction, builtin, validate_assumptions  # noqa: E402
from .potentials import GridPotential, SemiDiscretePotential, grid_axes, preset  # noqa: E402

__all__ = ["GJEError", "GeneratingFunction", "GridPotential", "SemiDiscretePotential",
           "__version__", "builtin", "grid_axes", "preset", "validate_assumptions"]
