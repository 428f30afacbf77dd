"""Projective-space geometry of (non-)Hermitian quantum dynamics.

Chart geometry of the Fubini-Study state space, the flow induced by a complex
Hamiltonian ``K = H - i Gamma``, finite-difference checkers for the Killing and
holomorphically projective identities, the quadratic Euclidean embedding and
parameter scans across exceptional points.
"""

from .chart import (ChartPoint, KahlerData, TensorFrame, change_chart, chart_embed, chart_lift,
                    christoffel_from_coords, kahler_data, metric_from_coords, random_chart_points,
                    riemann_closed_form, tensor_frame)
from .calculus import ScalarField, covariant_grad, covariant_hessian, covariant_third, laplace_beltrami, vector_jet
from .embed import EMBEDDING_METRIC_SCALE, EmbeddedPoint, induced_metric_check, mannoury_embed
from .errors import (BracketError, ChartError, ConditioningError, DimensionError, DomainError,
                     EvaluationError, HoloprojError, IntegrationError, PreconditionError)
from .flow import (GRADIENT_COEFF, FlowSpec, fixed_points, integrate_flow, integrate_planar_curve,
                   xi_field)
from .hilbert import (SIGMA_X, SIGMA_Y, SIGMA_Z, eigen_fixed_points, evolve_hilbert, expectation,
                      fs_distance, hermitian_split, modified_rhs, planarity_defect, projectively_equal,
                      propagate_exact, transition_probability)
from .ptscan import HamiltonianFamily, ScanResult, pt2_family, pt3_family, polynomial_family, refine_exceptional, scan
from .verify import (VerificationReport, analyticity_check, hpp_check, killing_check, laplacian_eigen_check,
                     lie_christoffel, matsushima_decompose, phi_structure_check, recover_generator,
                     third_derivative_check)

__version__ = "0.1.0"
