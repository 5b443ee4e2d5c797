"""Formal solutions of ``dt u = a(z) dz^2 u`` and their Gevrey and summability analysis."""

from .series import (BivariateSeries, Mode, ModeError, TSeries, ZSeries, dt, dt_inv, dz,
                     dz2, dz_inv, dz_inv2)
from .parsing import ExpansionError, ParseError, default_radius, parse_rational, parse_series
from .heat import (DiffusivityClass, HeatProblem, SolverError, StaircaseSeries, apply_D,
                   counterexample_oracle, fixed_point_terms, reconstruct, solve, solve_neumann,
                   traces)
from .gevrey import (GevreyEstimate, check_nagumo_derivative, check_nagumo_product,
                     gevrey_order, majorant_sequence, nagumo_norm)
from .resum import (BorelSeries, InsufficientCoefficients, LaplaceError, Pade, PadeError,
                    QuadratureError, SummabilityVerdict, borel, check_trace_family,
                    direction_scan, equispaced, laplace_sum, pade, robust_pade,
                    singularities)
from .transforms import (HalfIntegerSeries, capF_const_a, criterion_report, g_hat_bz,
                         sqrt_substitute, traces_bz, traces_const_a, two_laplace)

__version__ = "0.1.0"
