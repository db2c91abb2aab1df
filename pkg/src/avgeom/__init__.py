"""Averaging of Finsler metrics, connections and operator families over the
indicatrix, with the ODE-averaging and fiber-integration instances."""

__version__ = "0.1.0"

from .averaging import (
    ChartMap,
    DeviationReport,
    OperatorFamily,
    average_connection,
    average_metric,
    average_operator_family,
    covariance_check,
    deviation_tensors,
    homotopy_check,
)
from .errors import (
    AvgeomError,
    ConfigError,
    DegenerateMeasureError,
    DomainError,
    EvaluationError,
    IntegrationError,
    SingularMetricError,
    TruncationError,
)
from .finsler import (
    FinslerStructure,
    cartan_tensor,
    check_strong_convexity,
    chern_coefficients,
    fundamental_tensor,
    levi_civita,
    make_structure,
    spray,
)
from .indicatrix import IndicatrixQuadrature, build_quadrature, indicatrix_point, integrate_scalar, integrate_tensor
from .jets import Jet, evaluate_jet, partial

__all__ = [
    "AvgeomError",
    "ChartMap",
    "ConfigError",
    "DegenerateMeasureError",
    "DeviationReport",
    "DomainError",
    "EvaluationError",
    "FinslerStructure",
    "IndicatrixQuadrature",
    "IntegrationError",
    "Jet",
    "OperatorFamily",
    "SingularMetricError",
    "TruncationError",
    "average_connection",
    "average_metric",
    "average_operator_family",
    "build_quadrature",
    "cartan_tensor",
    "check_strong_convexity",
    "chern_coefficients",
    "covariance_check",
    "deviation_tensors",
    "evaluate_jet",
    "fundamental_tensor",
    "homotopy_check",
    "indicatrix_point",
    "integrate_scalar",
    "integrate_tensor",
    "levi_civita",
    "make_structure",
    "partial",
    "spray",
]
