"""geospline: linear and cubic variational spline interpolation of curves on
Riemannian manifolds, with empirical convergence studies."""

__version__ = "0.1.0"

from .errors import (ConfigurationError, ContractViolation, DomainError,
                     GeosplineError, SolverError)
from .manifolds import (Manifold, ManifoldPoint, TangentVector, curvature,
                        dist, exp, from_id, inner, log, project_tangent,
                        transport_geodesic)
from .curves import (DiscreteCurve, VectorFieldAlongCurve, accel,
                     covariant_derivative, cubic_energy, curve_from_csv,
                     curve_to_csv, el_residual, lp_error, path_energy,
                     velocity)
from .solvers import (InterpolationProblem, SolveStats, SolverOptions,
                      cubic_spline, default_substeps, initial_guess,
                      linear_spline, minimize_energy)
from .bspline import (BSplineCoefficients, bspline_basis, euclidean_cubic_spline,
                      evaluate, evaluate_d2, galerkin_check)
from .jacobi import KnotValues, jacobi_interpolate, jacobi_residual
from .harness import (ConvergenceReport, TestCurve, builtin_curve, diagnostics,
                      fit_order, list_curves, run_study)

__all__ = [name for name in dir() if not name.startswith("_")]
