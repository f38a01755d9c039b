"""High-order DG solver for the 2D shallow water equations.

Free-surface elevation is the prognostic variable (h = zeta + z_b), with
quadtree adaptive mesh refinement, IMEX Runge-Kutta time integration with
implicit Manning friction, quadrature-point bathymetry handling and a
consistent tracer transport option.
"""

__version__ = "1.0.0"

from .discretization import SpatialOperator, transfer_field
from .errors import (ConfigError, IOFailure, MeshError, NegativeDepthError,
                     SwedgError)
from .mesh import Mesh, adapt, build_cartesian, mark_elements
from .physics import BoundaryCondition, Physics, tracer_diffusion
from .stepping import (AMRControls, State, TimeControls, explicit_step,
                       imex_step, rk_step, run)
from .tableaux import (ButcherTableau, IMEXTableau, get_tableau,
                       make_imex_tableau, make_rk44, make_ssp33)

__all__ = [
    "SpatialOperator", "transfer_field", "Mesh", "adapt", "build_cartesian",
    "mark_elements", "BoundaryCondition", "Physics", "tracer_diffusion",
    "AMRControls", "State", "TimeControls", "explicit_step", "imex_step",
    "rk_step", "run", "ButcherTableau", "IMEXTableau", "get_tableau",
    "make_imex_tableau", "make_rk44", "make_ssp33", "SwedgError",
    "ConfigError", "MeshError", "NegativeDepthError", "IOFailure",
    "__version__",
]
