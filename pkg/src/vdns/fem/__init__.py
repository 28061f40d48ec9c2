from .assembly import (Basis, QuadPoints, assemble_form, assemble_vector, element_geometry,
                       mass_kernel, quad_points, source_kernel, stiffness_kernel)
from .basis import eval_reference_basis, reference_nodes
from .operators import (h1_seminorm_error, interpolate_lagrange, l2_error, l2_norm, mass_matrix,
                        project_l2)
from .quadrature import QuadratureRule, triangle_quadrature
from .space import AnalyticEvaluator, Field, FunctionSpace, build_space, scalar_space
from .vtk import refined_p1_mesh, write_vtk_fields

__all__ = [
    "AnalyticEvaluator", "Basis", "Field", "FunctionSpace", "QuadPoints", "QuadratureRule",
    "assemble_form", "assemble_vector", "build_space", "element_geometry",
    "eval_reference_basis", "h1_seminorm_error", "interpolate_lagrange", "l2_error", "l2_norm",
    "mass_kernel", "mass_matrix", "project_l2", "quad_points", "reference_nodes",
    "refined_p1_mesh", "scalar_space", "source_kernel", "stiffness_kernel",
    "triangle_quadrature", "write_vtk_fields",
]
