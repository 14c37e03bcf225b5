"""Semi-Lagrangian duality tools for quadratic programs over the nonnegative orthant."""

__version__ = "0.1.0"

from .model import (HQPInstance, MixedIntegerQP, QPInstance, QuadFunc, RobustMIQP,  # noqa: F401
                    UniformQPInstance, quad, validate)
from .copositivity import check_copositive  # noqa: F401
from .orthant_qp import min_quadratic_orthant  # noqa: F401
from .dual import eval_theta, gap_report, maximize_dual  # noqa: F401
