"""Perturbation-series engine for metric pairs gbar + eps * gper.

Coordinate-chart Riemannian quantities (inverse metric, Christoffel
symbols, scalar curvature, Laplacians), the fourth-order spectral density
built from two probe functions, volume-ratio coefficients, and the
integrated density functional — all expanded as truncated series in the
perturbation parameter eps, with independent finite-difference oracles
and a cross-check of the hand-typeset coefficient formulas.
"""

__version__ = "0.1.0"

from .appendix import (COEFFICIENTS, TranscriptionDiscrepancy, appendix_eval,
                       crosscheck_appendix, engine_value,
                       summarize_discrepancies)
from .connes import (a4_density_series, bimetric_invariant_grid,
                     conformal_covariance_residual, gradient_pairing_series,
                     hessian_pairing_series, laplacian_of_pairing_series,
                     laplacian_product_series)
from .errors import (BimetricError, ConfigError, NumericDomainError,
                     SingularityError, SPDError)
from .exprs import Expr, parse_expr
from .functional import (QuadratureGrid, WresVariationReport,
                         hochschild_residual, wres_variations)
from .geometry import (christoffel_series, inverse_metric_series,
                       metric_series, perturbation_ratio_matrix,
                       scalar_curvature_series,
                       volume_coefficients_closed_form,
                       volume_density_series)
from .jets import Jet, jet_einsum, jet_gradient
from .operators import (CONVENTIONS, conformal_coupling,
                        conformal_laplacian_series_apply,
                        intertwining_residuals, laplacian_series_apply)
from .oracle import (QUANTITIES, exact_at_eps, extract_series_fd,
                     series_evaluator, spatial_fd_check)
from .scene import (ChartPoint, MetricScene, builtin_scene,
                    builtin_scene_names, load_scene, save_scene)
from .series import EpsSeries

__all__ = [
    "__version__",
    "BimetricError", "ConfigError", "NumericDomainError",
    "SingularityError", "SPDError",
    "Expr", "parse_expr", "Jet", "jet_einsum", "jet_gradient", "EpsSeries",
    "ChartPoint", "MetricScene", "builtin_scene", "builtin_scene_names",
    "load_scene", "save_scene",
    "metric_series", "inverse_metric_series", "christoffel_series",
    "scalar_curvature_series", "perturbation_ratio_matrix",
    "volume_coefficients_closed_form", "volume_density_series",
    "CONVENTIONS", "conformal_coupling", "laplacian_series_apply",
    "conformal_laplacian_series_apply", "intertwining_residuals",
    "gradient_pairing_series", "laplacian_of_pairing_series",
    "hessian_pairing_series", "laplacian_product_series",
    "a4_density_series", "conformal_covariance_residual",
    "bimetric_invariant_grid",
    "QuadratureGrid", "WresVariationReport", "wres_variations",
    "hochschild_residual",
    "QUANTITIES", "exact_at_eps", "series_evaluator", "extract_series_fd",
    "spatial_fd_check",
    "COEFFICIENTS", "TranscriptionDiscrepancy", "appendix_eval",
    "engine_value", "crosscheck_appendix", "summarize_discrepancies",
]
