"""Accelerated one-step least squares estimation for ODE models."""

from .accel import (AccelConfig, EstimateReport, fit, one_step,
                    preliminary_estimate, select_bandwidth)
from .errors import (AccelodeError, AllBandwidthsFailed, ConfigError,
                     DimensionMismatch, MaxIterationsExceeded,
                     NonFiniteState, NonFiniteUpdate, OptimizerDiverged,
                     SingularFisher, SingularJacobian, SingularLocalDesign,
                     SingularNormalMatrix, StepSizeUnderflow, StudyAborted,
                     UnknownModel)
from .inference import (FisherMatrix, asymptotic_variances,
                        confidence_intervals, fisher_info, sigma2_hat)
from .mc import (McSummary, PRESETS, ScenarioSpec, get_preset, run_study,
                 simulate_dataset)
from .models import CATALOG, catalog_get, theta_linear_model
from .nls import NlsConfig, nls_fit
from .ode_core import (Dataset, OdeModel, ParameterVector, ToleranceSpec,
                       Trajectory, integrate)
from .preliminary import derivative_sme, integral_sme
from .sensitivity import estimating_function, solve_sensitivities
from .smoothing import (EPANECHNIKOV, Kernel, SmootherConfig, bandwidth_set,
                        local_poly_fit)

__version__ = "0.1.0"

__all__ = [
    "AccelConfig", "AccelodeError", "AllBandwidthsFailed", "CATALOG",
    "ConfigError", "Dataset", "DimensionMismatch", "EPANECHNIKOV",
    "EstimateReport", "FisherMatrix", "Kernel", "MaxIterationsExceeded",
    "McSummary", "NlsConfig", "NonFiniteState", "NonFiniteUpdate",
    "OdeModel", "OptimizerDiverged", "PRESETS", "ParameterVector",
    "ScenarioSpec", "SingularFisher", "SingularJacobian",
    "SingularLocalDesign", "SingularNormalMatrix", "SmootherConfig",
    "StepSizeUnderflow", "StudyAborted", "ToleranceSpec", "Trajectory",
    "UnknownModel", "asymptotic_variances", "bandwidth_set", "catalog_get",
    "confidence_intervals", "derivative_sme", "estimating_function",
    "fisher_info", "fit", "get_preset", "integral_sme", "integrate",
    "local_poly_fit", "nls_fit", "one_step", "preliminary_estimate",
    "run_study", "select_bandwidth", "sigma2_hat", "simulate_dataset",
    "solve_sensitivities", "theta_linear_model",
]
