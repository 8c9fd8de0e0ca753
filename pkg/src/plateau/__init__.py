"""Simple planar curves of prescribed geodesic curvature joining (a, 0) and (-a, 0)."""

__version__ = "0.1.0"

from .arcs import AnalyticArc, ShootingVars, arc_shooting_vars, make_arc, sample_arc
from .field import CurvatureExpr, FieldBounds, check_pinching, estimate_bounds, eval_field, grad_field, parse_expr
from .geometry import Curve, classify, curvatures, is_simple_closed, lift_tangent, rotation_angle
from .solver import SolutionRecord, continue_homotopy, integrate_ivp, shoot

__all__ = [
    "AnalyticArc",
    "CurvatureExpr",
    "Curve",
    "FieldBounds",
    "ShootingVars",
    "SolutionRecord",
    "arc_shooting_vars",
    "check_pinching",
    "classify",
    "continue_homotopy",
    "curvatures",
    "estimate_bounds",
    "eval_field",
    "grad_field",
    "integrate_ivp",
    "is_simple_closed",
    "lift_tangent",
    "make_arc",
    "parse_expr",
    "rotation_angle",
    "sample_arc",
    "shoot",
]
