"""Finite element solver for variable-density incompressible flow.

The density is carried through its square root ``sigma`` so that
``rho = sigma ** 2`` stays nonnegative; time stepping is a linearized BDF2
scheme with Taylor-Hood P2/P1 velocity/pressure and P2 ``sigma``.
"""
__version__ = "0.1.0"

from .mesh import Mesh, build_unit_square_mesh  # noqa: E402
from .mms import AnalyticCase, case_ex41, case_ex42, case_stokes, get_case  # noqa: E402
from .scheme import (Discretization, SchemeConfig, SimulationError, StepReport,  # noqa: E402
                     TimeState, discrete_energy, run_simulation)

__all__ = [
    "AnalyticCase", "Discretization", "Mesh", "SchemeConfig", "SimulationError", "StepReport",
    "TimeState", "__version__", "build_unit_square_mesh", "case_ex41", "case_ex42",
    "case_stokes", "discrete_energy", "get_case", "run_simulation",
]
