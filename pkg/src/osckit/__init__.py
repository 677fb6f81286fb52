"""osckit: qualitative analysis of second-order linear ODEs.

Classifies solutions of g'' + K g = 0 and of weighted problems
(v z')' + A v z = 0 as positive, nonoscillatory, oscillatory, or as
having a first zero with a position bound, using critical-curve
comparison criteria, weight shifts for sign-changing potentials, and
iterated nested-log refinements; every verdict is cross-validated by an
independent adaptive ODE oracle. Includes a compactness certifier that
converts first-zero bounds for radial curvature profiles into diameter
bounds.
"""

from .criteria import (CertificateReport, CertificateStrategy,
                       DivergenceProtocol, EulerLowerBound, PolyLowerBound,
                       SearchGrid, Verdict, ZeroBound, calabi_finite_form,
                       check_first_zero, check_nonoscillation,
                       check_oscillation, check_positivity,
                       compactness_certificate, generalized_calabi,
                       hille_nehari, moore, mrv_first_zero,
                       refined_nonoscillation, solve_position_bound)
from .errors import (BracketFailure, DivergentTail, EnvelopeViolated,
                     EvaluationError, FamilyMismatch, InvalidRange,
                     InvalidWeight, LadderStall, NegativeShiftedPotential,
                     OsckitError, Overflow, ParseError, WeightTailMismatch,
                     WeightVanishes)
from .expr import Expression, parse_expression
from .oracle import (AgreementRecord, ZeroReport, cross_validate,
                     growth_envelope_fit, integrate_cp, integrate_weighted)
from .problems import PotentialSpec
from .specialfn import (ShiftWeight, bessel_I, euler_solution, log_bessel_I,
                        shift_solution_negative_part)
from .transforms import (TransformedProblem, VarMap, invert_var_map,
                         refine_ladder, to_weighted, weight_shift)
from .weights import (ChiOrdering, ConditionReport, CriticalCurve, Weight,
                      builtin_weight, compare_critical_curves, critical_curve,
                      euler_squared_weight, ladder_weight, power_weight,
                      sinh_squared_weight, tail_integral, unit_weight,
                      validate_weight, weight_from_expression)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
