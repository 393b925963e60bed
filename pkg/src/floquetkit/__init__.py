"""Floquet multipliers of periodic planar linear systems, cross-validated
three ways (numerical monodromy, semianalytic formulas through a certified
periodic Riccati solution, explicit formulas), with numeric certification
of every route's hypotheses and an application to the stability of the
disease-free equilibrium of a seasonal cholera model."""

__version__ = "0.1.0"

from .expressions import (Expr, ExprError, ExprEvalError, ExprSyntaxError,
                          UnknownIdentifierError, evaluate, parse, to_source)
from .periodic import (NonFiniteSampleError, PeriodicFn, PeriodicityError,
                       TrigInterp)
from .ivp import (DivergenceError, IvpSpec, StepLimitError, Trajectory,
                  fundamental_matrix, integrate)
from .conditions import ConditionCheck, ConditionLedger
from .floquet import (MultiplierPair, PlanarPeriodicSystem, Stability,
                      StabilityVerdict, classify_nonlinear_dfe,
                      classify_stability, eigenvalues_2x2,
                      liouville_product_check, monodromy_matrix,
                      monodromy_multipliers, normal_solution_from_sigma,
                      stability_from_monodromy, swap_orientation)
from .riccati import (GreenKernel, HypothesisError, KernelUndefinedError,
                      NonConvergenceError, PeriodicSolutionCertificate,
                      RiccatiProblem, SchauderData, check_ball_conditions,
                      check_explicit_conditions, check_fixed_point_conditions,
                      explicit_multipliers, green_kernel,
                      multipliers_from_solution, picard_solve,
                      poincare_displacement, riccati_from_planar,
                      schauder_constants, shooting_solve)
from .cholera import (CholeraParams, DfeStabilityReport, NegativeStateError,
                      SimulationResult, check_seasonal_conditions,
                      dfe_stability, full_monodromy, linearization_matrix,
                      rhs_full, simulate, subsystem)

__all__ = [name for name in dir() if not name.startswith("_")]
