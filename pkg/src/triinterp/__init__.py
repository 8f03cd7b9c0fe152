"""Lagrange interpolation error on triangles under the circumradius condition."""
from .geometry import (DegenerateTriangleError, Triangle, equilateral_triangle, metrics, squeezed_triangle,
                       standard_form, standard_triangle, unit_right_triangle)
from .interpolation import LagrangeBasis, error_poly, interpolate, interpolate_poly, nodes
from .norms import FieldWithDerivatives, PolyField, quad_rule, sobolev_seminorm
from .polynomial import Poly2
from .bconst import BEstimate, b_poly_lower, b_sample_lower, bound_ratio

__version__ = "0.1.0"

__all__ = [
    "DegenerateTriangleError", "Triangle", "equilateral_triangle", "metrics", "squeezed_triangle",
    "standard_form", "standard_triangle", "unit_right_triangle", "LagrangeBasis", "error_poly",
    "interpolate", "interpolate_poly", "nodes", "FieldWithDerivatives", "PolyField", "quad_rule",
    "sobolev_seminorm", "Poly2", "BEstimate", "b_poly_lower", "b_sample_lower", "bound_ratio",
]
