"""Weighted potential theory and Fekete-point rate experiments on model surfaces."""

__version__ = "0.1.0"

from . import backend  # noqa: E402
from .config import WeightedSet, load_weighted_set  # noqa: E402
from .envelope import extremal_function, min_energy, verify_solmin  # noqa: E402
from .errors import (CalibrationError, ConditioningError, ConvergenceError,  # noqa: E402
                     FeketeRateError, InfeasibleError, InvalidInput, PerturbationError,
                     PoleError)
from .geometry import ModelSurface, Region, distance, quadrature_grid  # noqa: E402
from .green import GreenKernel, green, verify_green  # noqa: E402
from .optimizer import minimize_Km  # noqa: E402
from .potentials import (Configuration, discrete_energy, functional_J,  # noqa: E402
                         functional_Km)
from .sections import build_basis, det_norm, fekete_configuration  # noqa: E402
from .theta import ThetaContext  # noqa: E402
from .volume import bergman, gram_matrix, mass_density_check  # noqa: E402

__all__ = [
    "__version__", "backend", "WeightedSet", "load_weighted_set", "extremal_function",
    "min_energy", "verify_solmin", "CalibrationError", "ConditioningError", "ConvergenceError",
    "FeketeRateError", "InfeasibleError", "InvalidInput", "PerturbationError", "PoleError",
    "ModelSurface", "Region", "distance", "quadrature_grid", "GreenKernel", "green",
    "verify_green", "minimize_Km", "Configuration", "discrete_energy", "functional_J",
    "functional_Km", "build_basis", "det_norm", "fekete_configuration", "ThetaContext",
    "bergman", "gram_matrix", "mass_density_check",
]
