"""Mutual control problems x' + Ax = f(x, y), y' + By = g(x, y), y(0) = beta,
x(T) = k y(T): regime classification, Picard solution and verification."""

from .demos import DEMO_NAMES, demo
from .estimator import MutualControlSolver
from .exceptions import (BlowUpError, ConfigurationError, DomainError,
                         ExpressionEvaluationError, ExpressionSyntaxError, MutualControlError,
                         PreconditionError, SemigroupOverflowError)
from .matops import expm_semigroup, growth_bound, operator_norm, spectral_radius
from .model import (Constants, MutualControlProblem, RegimeReport, Trajectory,
                    TrajectoryPair, bielecki_norm, classify, schauder_radii)
from .problemfile import parse_problem, read_problem
from .solver import picard_solve, recover_x0
from .verify import residual_report, rk4_integrate
from .vexpr import VectorField, estimate_growth, estimate_lipschitz, parse
from .zeromat import (Classification, CoefficientSet, build_M, find_theta, h,
                      is_zero_convergent, lambert_w0, theta1_tilde)

__version__ = "0.1.0"
