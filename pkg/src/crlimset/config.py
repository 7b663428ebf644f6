"""Numerical tolerances shared by every module.

Exact algebraic arithmetic is replaced by double precision throughout; each
comparison below names the quantity it bounds.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    form: float = 1e-9  # ||M* H M - H||_inf relative to ||H||_inf
    null: float = 1e-9  # |<v,v>| relative to ||v||^2 for boundary points
    trace: float = 1e-8  # Goldman f sign, tr^3 = 27, trace targets
    projective: float = 1e-8  # ||M - w N||_inf for relator checks
    determinant: float = 1e-10  # |det M - 1| for det-normalized elements
    degenerate: float = 1e-12  # |det H| below which a Gram form is degenerate
    eigen_gap: float = 1e-10  # relative gap between the top two eigenvalue moduli


DEFAULT = Tolerances()
